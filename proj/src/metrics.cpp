#include "ranctl/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace ranctl {

namespace {

struct Slice {
    std::vector<double> dl;
    std::vector<double> dwell;
    double incident_dl{0.0};
    double total_dl{0.0};
    std::map<HoCause, int> hos;
};

void fill(std::map<std::string, double>& m, const Slice& s) {
    static const std::vector<std::pair<const char*, double>> qs{
        {"dl_p05", 0.05}, {"dl_p10", 0.10}, {"dl_p20", 0.20}, {"dl_p50", 0.50}, {"dl_p90", 0.90}};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [name, q] : qs) m[name] = s.dl.empty() ? nan : percentile(s.dl, q);
    for (double thr : kOutageThresholdsMbps) {
        std::size_t below = 0;
        for (double v : s.dl)
            if (v < thr) ++below;
        m[fmt::format("outage_{:.2f}", thr)] = s.dl.empty() ? nan : static_cast<double>(below) / s.dl.size();
    }
    if (s.dl.empty())
        m["p90_p10_ratio"] = nan;
    else
        m["p90_p10_ratio"] = m["dl_p10"] == 0.0 ? std::numeric_limits<double>::infinity() : m["dl_p90"] / m["dl_p10"];
    m["incident_dl_share"] = s.total_dl > 0.0 ? s.incident_dl / s.total_dl : 0.0;
    m["dwell_p90_s"] = s.dwell.empty() ? nan : percentile(s.dwell, 0.90);
    m["dwell_p99_s"] = s.dwell.empty() ? nan : percentile(s.dwell, 0.99);
    int total = 0;
    for (HoCause c : {HoCause::Native, HoCause::XApp, HoCause::Reattach}) {
        auto it = s.hos.find(c);
        const int n = it == s.hos.end() ? 0 : it->second;
        m[fmt::format("ho_{}", to_string(c))] = n;
        total += n;
    }
    m["ho_total"] = total;
}

}  // namespace

Summary summarize(const std::vector<KpiSample>& samples, const std::set<CellId>& incident_cells) {
    std::map<std::string, Slice> slices;
    for (const char* p : {"normal", "emergency", "recovery", "all"}) slices[p];
    for (const auto& s : samples) {
        for (Slice* slice : {&slices[std::string(to_string(s.phase))], &slices["all"]}) {
            if (s.ue_id) {
                slice->dl.push_back(s.pdcp_dl_mbps);
                slice->dwell.push_back(s.dwell_s);
                if (s.ho_event) ++slice->hos[s.ho_event->cause];
            } else {
                slice->total_dl += s.pdcp_dl_mbps;
                if (incident_cells.contains(s.cell_id)) slice->incident_dl += s.pdcp_dl_mbps;
            }
        }
    }
    Summary out;
    for (const auto& [phase, slice] : slices) fill(out[phase], slice);
    return out;
}

void write_summary_csv(const Summary& s, const std::filesystem::path& file) {
    std::ofstream out(file);
    out << "phase,metric,value\n";
    for (const char* phase : {"normal", "emergency", "recovery", "all"}) {
        auto it = s.find(phase);
        if (it == s.end()) continue;
        for (const auto& [metric, v] : it->second) fmt::print(out, "{},{},{}\n", phase, metric, v);
    }
    if (!out) throw StorageError("cannot write " + file.string());
}

Summary read_summary_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw StorageError("cannot read " + file.string());
    Summary s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        if (++lineno == 1 || line.empty()) continue;
        const auto a = line.find(','), b = line.find(',', a + 1);
        if (a == std::string::npos || b == std::string::npos)
            throw ParseError(fmt::format("{}:{}: expected phase,metric,value", file.string(), lineno));
        const std::string value = line.substr(b + 1);
        double v = 0.0;
        try {
            v = std::stod(value);
        } catch (const std::exception&) {
            throw ParseError(fmt::format("{}:{}: bad value '{}'", file.string(), lineno, value));
        }
        s[line.substr(0, a)][line.substr(a + 1, b - a - 1)] = v;
    }
    return s;
}

std::vector<MetricDelta> compare_summaries(const Summary& a, const Summary& b) {
    std::vector<MetricDelta> out;
    for (const char* phase : {"normal", "emergency", "recovery", "all"}) {
        auto pa = a.find(phase), pb = b.find(phase);
        if (pa == a.end() || pb == b.end()) continue;
        for (const auto& [metric, va] : pa->second) {
            auto vb = pb->second.find(metric);
            if (vb == pb->second.end()) continue;
            // inf - inf and nan compare as no change when both sides agree.
            const bool same = va == vb->second || (std::isnan(va) && std::isnan(vb->second));
            out.push_back({phase, metric, va, vb->second, same ? 0.0 : vb->second - va});
        }
    }
    return out;
}

}  // namespace ranctl
