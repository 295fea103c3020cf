#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ranctl/actions.hpp"
#include "ranctl/common.hpp"

namespace ranctl {

using Json = nlohmann::ordered_json;

enum class AuditSource { RApp, XAppQoe, XAppLoad, XAppEnergy, Apt, Sim, Dispatcher };
enum class AuditKind {
    RunMeta,
    Publish,
    Refuse,
    Propose,
    MergeDecision,
    Dispatch,
    Actuation,
    AptEdit,
    TtlRevert,
};

std::string_view to_string(AuditSource s);
std::string_view to_string(AuditKind k);
AuditSource audit_source_for(Agent agent);

struct AuditRecord {
    std::uint64_t seq{0};
    Seconds t{0.0};
    AuditSource source{AuditSource::RApp};
    AuditKind kind{AuditKind::Publish};
    Json payload = Json::object();
    std::string reason;

    // One line, no trailing newline. Key order: seq, t, source, kind, payload, reason.
    std::string serialize() const;
    static AuditRecord parse(std::string_view line);
};

// Append-only record stream. When a file is attached every append is written
// and flushed before returning; a failed write throws StorageError.
class AuditLog {
public:
    AuditLog() = default;
    explicit AuditLog(const std::filesystem::path& file);

    AuditLog(const AuditLog&) = delete;
    AuditLog& operator=(const AuditLog&) = delete;
    AuditLog(AuditLog&&) = default;
    AuditLog& operator=(AuditLog&&) = default;

    // Assigns the next sequence number. Rejects records whose payload is not
    // an object, whose time is not finite, or whose time runs backwards.
    std::uint64_t append(AuditRecord record);

    // Convenience for the common case.
    std::uint64_t append(Seconds t, AuditSource source, AuditKind kind, Json payload, std::string reason = {});

    const std::vector<AuditRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

    static std::vector<AuditRecord> load(const std::filesystem::path& file);

private:
    std::vector<AuditRecord> records_;
    std::ofstream out_;
    bool to_file_{false};
};

// Action payloads as they appear in propose/refuse/dispatch/actuation records.
// Only the fields meaningful for the kind are written.
Json action_to_json(const ActionProposal& a);
ActionProposal action_from_json(const Json& j);

// Chronological decision trace for a UE ("ue5"), a cell ("cell7") or a policy
// field ("cio_step_db"). Unknown subjects yield an empty trace.
std::vector<std::string> explain(std::span<const AuditRecord> log, std::string_view subject);

}  // namespace ranctl
