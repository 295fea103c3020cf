#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ranctl/telemetry.hpp"

namespace ranctl {

// phase ("normal", "emergency", "recovery", "all") -> metric -> value
using Summary = std::map<std::string, std::map<std::string, double>>;

inline const std::vector<double> kOutageThresholdsMbps{0.10, 0.45, 0.50};

// Per-phase DL percentiles (p05..p90) over all UE samples, outage fractions,
// p90/p10 ratio (inf when p10 is 0), incident-cell share of cell DL, dwell
// p90/p99 and handover counts by cause.
Summary summarize(const std::vector<KpiSample>& samples, const std::set<CellId>& incident_cells);

// Long format: phase,metric,value
void write_summary_csv(const Summary& s, const std::filesystem::path& file);
Summary read_summary_csv(const std::filesystem::path& file);

struct MetricDelta {
    std::string phase;
    std::string metric;
    double a{0.0};
    double b{0.0};
    double delta{0.0};  // b - a
};

std::vector<MetricDelta> compare_summaries(const Summary& a, const Summary& b);

}  // namespace ranctl
