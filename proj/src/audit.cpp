#include "ranctl/audit.hpp"

#include <cmath>
#include <optional>

#include <fmt/format.h>

namespace ranctl {

namespace {

constexpr std::array<std::string_view, 7> kSourceNames{"rApp", "xApp-QoE", "xApp-Load", "xApp-Energy",
                                                       "APT",  "sim",      "dispatcher"};
constexpr std::array<std::string_view, 9> kKindNames{"run_meta", "publish",  "refuse",
                                                     "propose",  "merge_decision", "dispatch",
                                                     "actuation", "apt_edit", "ttl_revert"};

AuditSource source_from(std::string_view s) {
    for (std::size_t i = 0; i < kSourceNames.size(); ++i)
        if (kSourceNames[i] == s) return static_cast<AuditSource>(i);
    throw ParseError("audit: unknown source '" + std::string(s) + "'");
}

AuditKind kind_from(std::string_view s) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (kKindNames[i] == s) return static_cast<AuditKind>(i);
    throw ParseError("audit: unknown kind '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(AuditSource s) { return kSourceNames.at(static_cast<std::size_t>(s)); }
std::string_view to_string(AuditKind k) { return kKindNames.at(static_cast<std::size_t>(k)); }

AuditSource audit_source_for(Agent agent) {
    switch (agent) {
        case Agent::Qoe: return AuditSource::XAppQoe;
        case Agent::Load: return AuditSource::XAppLoad;
        case Agent::Energy: return AuditSource::XAppEnergy;
    }
    return AuditSource::RApp;
}

std::string AuditRecord::serialize() const {
    Json j;
    j["seq"] = seq;
    j["t"] = t;
    j["source"] = std::string(to_string(source));
    j["kind"] = std::string(to_string(kind));
    j["payload"] = payload;
    j["reason"] = reason;
    return j.dump();
}

AuditRecord AuditRecord::parse(std::string_view line) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("audit: malformed line: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("audit: record is not an object");
    for (const char* key : {"seq", "t", "source", "kind", "payload", "reason"})
        if (!j.contains(key)) throw ParseError(std::string("audit: missing key '") + key + "'");
    AuditRecord r;
    r.seq = j["seq"].get<std::uint64_t>();
    r.t = j["t"].get<double>();
    r.source = source_from(j["source"].get<std::string>());
    r.kind = kind_from(j["kind"].get<std::string>());
    r.payload = j["payload"];
    r.reason = j["reason"].get<std::string>();
    if (!r.payload.is_object()) throw ParseError("audit: payload is not an object");
    return r;
}

AuditLog::AuditLog(const std::filesystem::path& file) : out_(file, std::ios::out | std::ios::trunc), to_file_(true) {
    if (!out_) throw StorageError("audit: cannot open " + file.string());
}

std::uint64_t AuditLog::append(AuditRecord record) {
    if (!record.payload.is_object()) throw Error("audit: payload must be an object");
    if (!std::isfinite(record.t)) throw Error("audit: non-finite time");
    if (!records_.empty() && record.t < records_.back().t) throw Error("audit: time regression");
    record.seq = records_.size() + 1;
    if (to_file_) {
        out_ << record.serialize() << '\n';
        out_.flush();
        if (!out_) throw StorageError("audit: write failed");
    }
    records_.push_back(std::move(record));
    return records_.back().seq;
}

std::uint64_t AuditLog::append(Seconds t, AuditSource source, AuditKind kind, Json payload, std::string reason) {
    AuditRecord r;
    r.t = t;
    r.source = source;
    r.kind = kind;
    r.payload = std::move(payload);
    r.reason = std::move(reason);
    return append(std::move(r));
}

std::vector<AuditRecord> AuditLog::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw StorageError("audit: cannot read " + file.string());
    std::vector<AuditRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(AuditRecord::parse(line));
        } catch (const ParseError& e) {
            throw ParseError(fmt::format("{}:{}: {}", file.string(), lineno, e.what()));
        }
        if (out.back().seq != out.size())
            throw ParseError(fmt::format("{}:{}: sequence gap", file.string(), lineno));
    }
    return out;
}

Json action_to_json(const ActionProposal& a) {
    Json j;
    j["id"] = a.id;
    j["kind"] = std::string(to_string(a.kind));
    j["source"] = std::string(to_string(a.source));
    switch (a.kind) {
        case ActionKind::Ho:
            j["ue"] = a.ue;
            j["cell"] = a.cell;
            j["target"] = a.target;
            break;
        case ActionKind::OffsetStep:
            j["cell"] = a.cell;
            j["target"] = a.target;
            j["step_db"] = a.step_db;
            break;
        case ActionKind::Sleep:
        case ActionKind::Wake: j["cell"] = a.cell; break;
    }
    j["t"] = a.t_proposed;
    j["reason"] = a.reason;
    return j;
}

ActionProposal action_from_json(const Json& j) {
    try {
        ActionProposal a;
        a.id = j.value("id", std::uint64_t{0});
        a.kind = action_kind_from_string(j.at("kind").get<std::string>());
        auto src = agent_from_string(j.value("source", std::string("qoe")));
        if (!src) throw ParseError("action: unknown source");
        a.source = *src;
        a.ue = j.value("ue", -1);
        a.cell = j.value("cell", -1);
        a.target = j.value("target", -1);
        a.step_db = j.value("step_db", 0.0);
        a.t_proposed = j.value("t", 0.0);
        a.reason = j.value("reason", std::string());
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("action: ") + e.what());
    }
}

namespace {

struct Subject {
    enum class Type { Ue, Cell, Field } type;
    int id{-1};
    std::string field;
};

std::optional<Subject> parse_subject(std::string_view s) {
    auto numeric = [](std::string_view rest) -> std::optional<int> {
        if (rest.empty()) return std::nullopt;
        int v = 0;
        for (char c : rest) {
            if (c < '0' || c > '9') return std::nullopt;
            v = v * 10 + (c - '0');
        }
        return v;
    };
    if (s.starts_with("ue")) {
        if (auto v = numeric(s.substr(2))) return Subject{Subject::Type::Ue, *v, {}};
    }
    if (s.starts_with("cell")) {
        if (auto v = numeric(s.substr(4))) return Subject{Subject::Type::Cell, *v, {}};
    }
    if (!s.empty()) return Subject{Subject::Type::Field, -1, std::string(s)};
    return std::nullopt;
}

bool action_mentions(const Json& a, const Subject& s) {
    if (!a.is_object()) return false;
    auto val = [&](const char* k) { return a.contains(k) ? a[k].get<int>() : -1; };
    if (s.type == Subject::Type::Ue) return val("ue") == s.id;
    if (s.type == Subject::Type::Cell) return val("cell") == s.id || val("target") == s.id;
    return false;
}

std::string describe_action(const Json& a) {
    const std::string kind = a.value("kind", std::string("?"));
    if (kind == "ho")
        return fmt::format("ho ue{} cell{}->cell{}", a.value("ue", -1), a.value("cell", -1), a.value("target", -1));
    if (kind == "offset_step")
        return fmt::format("offset_step cell{}->cell{} {:+}dB", a.value("cell", -1), a.value("target", -1),
                           a.value("step_db", 0.0));
    return fmt::format("{} cell{}", kind, a.value("cell", -1));
}

}  // namespace

std::vector<std::string> explain(std::span<const AuditRecord> log, std::string_view subject_text) {
    std::vector<std::string> trace;
    auto subject = parse_subject(subject_text);
    if (!subject) return trace;
    auto line = [&](const AuditRecord& r, const std::string& body) {
        trace.push_back(fmt::format("[{}] t={} {} {}: {}", r.seq, r.t, to_string(r.source), to_string(r.kind), body));
    };

    for (const auto& r : log) {
        const Json& p = r.payload;
        switch (r.kind) {
            case AuditKind::Propose:
            case AuditKind::MergeDecision:
                if (action_mentions(p.value("action", Json::object()), *subject))
                    line(r, describe_action(p["action"]) + (r.kind == AuditKind::MergeDecision ? " accepted" : ""));
                break;
            case AuditKind::Refuse:
                if (p.contains("action")) {
                    if (action_mentions(p["action"], *subject))
                        line(r, describe_action(p["action"]) + " refuse{" + p.value("guard", std::string()) + "}");
                } else if (subject->type == Subject::Type::Field && p.contains("violations")) {
                    for (const auto& v : p["violations"])
                        if (v.value("field", std::string()) == subject->field)
                            line(r, fmt::format("publication refused: {}={} ({})", subject->field,
                                                v.value("value", 0.0), v.value("bound", std::string())));
                }
                break;
            case AuditKind::Dispatch:
                for (const char* plane : {"e2", "o1"})
                    if (p.contains(plane))
                        for (const auto& a : p[plane])
                            if (action_mentions(a, *subject))
                                line(r, std::string(plane) + " " + describe_action(a));
                break;
            case AuditKind::Actuation:
                if (action_mentions(p.value("action", Json::object()), *subject))
                    line(r, describe_action(p["action"]) + " " + p.value("result", std::string()) +
                                (p.contains("refused") ? "{" + p["refused"].get<std::string>() + "}" : ""));
                break;
            case AuditKind::Publish:
            case AuditKind::TtlRevert:
            case AuditKind::AptEdit:
                if (subject->type == Subject::Type::Field && p.contains("changes") &&
                    p["changes"].contains(subject->field)) {
                    const auto& c = p["changes"][subject->field];
                    line(r, fmt::format("{} {}->{} source={} ({})", subject->field, c[0].get<double>(),
                                        c[1].get<double>(), p.value("source", std::string()), r.reason));
                }
                break;
            case AuditKind::RunMeta: break;
        }
    }
    return trace;
}

}  // namespace ranctl
