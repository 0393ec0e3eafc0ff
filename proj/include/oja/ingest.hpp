#pragma once

#include <oja/csv.hpp>
#include <oja/datamodel.hpp>
#include <oja/digest.hpp>
#include <oja/errors.hpp>
#include <oja/timeutil.hpp>

#include <json.hpp>

#include <arpa/inet.h>

#include <array>
#include <charconv>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace oja::ingest {

using json = nlohmann::ordered_json;

enum class MemoryUnit { KB, MB, Bytes };
enum class TimeUnit { Ms, S };

/// Declarative mapping from one OJ export dialect onto the canonical log
/// schema. Profiles for the common open-source judges ship as JSON fixtures;
/// anything else can be described in user config.
struct SchemaProfile {
    std::string name;
    std::map<std::string, std::string> field_map; // canonical field -> source column
    std::map<std::string, Verdict> verdict_map;   // raw result value -> verdict
    bool verdict_canonical = false; // raw values are already canonical names
    std::string time_format = "%Y-%m-%d %H:%M:%S";
    MemoryUnit memory_unit = MemoryUnit::KB;
    TimeUnit time_unit = TimeUnit::Ms;
};

inline const std::vector<std::string>& mandatory_fields() {
    static const std::vector<std::string> f = {"id", "problem_id", "user_id", "in_time",
                                               "verdict"};
    return f;
}

/// Parses and validates a profile document. The verdict map accepts either a
/// JSON object or an array of [raw, verdict] pairs; the array form rejects a
/// raw value declared twice.
inline SchemaProfile load_profile(const json& doc) {
    SchemaProfile p;
    p.name = doc.value("name", std::string("unnamed"));
    if (doc.contains("field_map")) {
        for (auto it = doc.at("field_map").begin(); it != doc.at("field_map").end(); ++it)
            p.field_map[it.key()] = it.value().get<std::string>();
    }
    for (const auto& f : mandatory_fields())
        if (!p.field_map.count(f)) throw MissingFieldError(f);

    p.verdict_canonical = doc.value("verdict_canonical", false);
    if (doc.contains("verdict_map")) {
        const json& vm = doc.at("verdict_map");
        auto put = [&p](const std::string& raw, const std::string& name) {
            auto v = verdict_from_canonical(name);
            if (!v || v->kind == VerdictKind::Other)
                throw BadVerdictMapError(
                    "verdict map target must be a canonical verdict name, got: " + name);
            if (!p.verdict_map.emplace(raw, *v).second)
                throw BadVerdictMapError("verdict map declares raw value twice: " + raw);
        };
        if (vm.is_array()) {
            for (const auto& pair : vm) {
                if (!pair.is_array() || pair.size() != 2)
                    throw Error("verdict map array entries must be [raw, verdict] pairs");
                put(pair[0].get<std::string>(), pair[1].get<std::string>());
            }
        } else {
            for (auto it = vm.begin(); it != vm.end(); ++it)
                put(it.key(), it.value().get<std::string>());
        }
    }

    p.time_format = doc.value("time_format", std::string("%Y-%m-%d %H:%M:%S"));
    const std::string mu = doc.value("memory_unit", std::string("kb"));
    if (mu == "kb" || mu == "KB") p.memory_unit = MemoryUnit::KB;
    else if (mu == "mb" || mu == "MB") p.memory_unit = MemoryUnit::MB;
    else if (mu == "bytes" || mu == "b") p.memory_unit = MemoryUnit::Bytes;
    else throw Error("unknown memory_unit: " + mu);
    const std::string tu = doc.value("time_unit", std::string("ms"));
    if (tu == "ms") p.time_unit = TimeUnit::Ms;
    else if (tu == "s") p.time_unit = TimeUnit::S;
    else throw Error("unknown time_unit: " + tu);
    return p;
}

inline SchemaProfile load_profile(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw StreamError(std::string("profile is not valid JSON: ") + e.what());
    }
    return load_profile(doc);
}

inline SchemaProfile load_profile(const char* text) {
    return load_profile(std::string(text));
}

/// Raw result value -> verdict per the profile; anything undeclared becomes
/// Other with the source text preserved verbatim.
inline Verdict map_verdict(const std::string& raw, const SchemaProfile& profile) {
    if (profile.verdict_canonical) {
        if (auto v = verdict_from_canonical(raw)) return *v;
        return Verdict::other(raw);
    }
    auto it = profile.verdict_map.find(raw);
    if (it != profile.verdict_map.end()) return it->second;
    return Verdict::other(raw);
}

// ---------------------------------------------------------------------------
// Campus IP map
// ---------------------------------------------------------------------------

struct CidrBlock {
    bool v6 = false;
    std::array<unsigned char, 16> addr{};
    int prefix = 0;
    std::string location;
};

/// Ordered CIDR -> location table; first match wins, so operators control
/// overlaps by ordering the file.
struct CampusIpMap {
    std::vector<CidrBlock> blocks;
};

inline std::optional<std::pair<bool, std::array<unsigned char, 16>>> parse_ip(
    const std::string& ip) {
    std::array<unsigned char, 16> buf{};
    if (inet_pton(AF_INET, ip.c_str(), buf.data()) == 1) return {{false, buf}};
    if (inet_pton(AF_INET6, ip.c_str(), buf.data()) == 1) return {{true, buf}};
    return std::nullopt;
}

inline CampusIpMap load_ip_map(const json& doc) {
    CampusIpMap map;
    for (const auto& entry : doc) {
        const std::string cidr = entry.at("cidr").get<std::string>();
        CidrBlock block;
        block.location = entry.at("location").get<std::string>();
        const auto slash = cidr.find('/');
        if (slash == std::string::npos) throw Error("CIDR block missing prefix: " + cidr);
        const std::string base = cidr.substr(0, slash);
        auto parsed = parse_ip(base);
        if (!parsed) throw Error("CIDR base address invalid: " + cidr);
        block.v6 = parsed->first;
        block.addr = parsed->second;
        block.prefix = std::stoi(cidr.substr(slash + 1));
        const int max_prefix = block.v6 ? 128 : 32;
        if (block.prefix < 0 || block.prefix > max_prefix)
            throw Error("CIDR prefix out of range: " + cidr);
        map.blocks.push_back(std::move(block));
    }
    return map;
}

inline bool cidr_contains(const CidrBlock& block, bool v6,
                          const std::array<unsigned char, 16>& addr) {
    if (block.v6 != v6) return false;
    int bits = block.prefix;
    for (int i = 0; bits > 0; ++i, bits -= 8) {
        const unsigned char mask =
            bits >= 8 ? 0xff : static_cast<unsigned char>(0xff << (8 - bits));
        if ((block.addr[static_cast<std::size_t>(i)] & mask) !=
            (addr[static_cast<std::size_t>(i)] & mask))
            return false;
    }
    return true;
}

/// Label of the first matching block; "off-campus" when nothing matches;
/// "unknown" when the address is absent or unparseable.
inline std::string resolve_location(const std::string& ip, const CampusIpMap& map) {
    if (ip.empty()) return "unknown";
    auto parsed = parse_ip(ip);
    if (!parsed) return "unknown";
    for (const auto& block : map.blocks)
        if (cidr_contains(block, parsed->first, parsed->second)) return block.location;
    return "off-campus";
}

// ---------------------------------------------------------------------------
// Log parsing
// ---------------------------------------------------------------------------

struct ParseError {
    std::size_t line = 0;
    std::string reason;
};

enum class LogFormat { Csv, Jsonl };

namespace detail {

// "10ms", "1M", "428" -> numeric value + recognized suffix. An explicit
// suffix overrides the profile unit (Table-style exports mix them freely).
inline std::optional<std::pair<double, std::string>> split_number_suffix(std::string s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    if (s.empty()) return std::nullopt;
    std::size_t i = 0;
    if (s[i] == '-' || s[i] == '+') ++i;
    std::size_t digits = i;
    bool dot = false;
    while (digits < s.size() &&
           ((s[digits] >= '0' && s[digits] <= '9') || (!dot && s[digits] == '.'))) {
        if (s[digits] == '.') dot = true;
        ++digits;
    }
    if (digits == i) return std::nullopt;
    double value = 0.0;
    auto rc = std::from_chars(s.data() + (s[0] == '+' ? 1 : 0), s.data() + digits, value);
    if (rc.ec != std::errc()) return std::nullopt;
    std::string suffix = s.substr(digits);
    for (auto& c : suffix) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return {{value, suffix}};
}

inline std::optional<std::int64_t> parse_time_ms(const std::string& raw, TimeUnit unit) {
    auto split = split_number_suffix(raw);
    if (!split) return std::nullopt;
    auto [value, suffix] = *split;
    if (suffix == "ms") return static_cast<std::int64_t>(std::llround(value));
    if (suffix == "s") return static_cast<std::int64_t>(std::llround(value * 1000.0));
    if (!suffix.empty()) return std::nullopt;
    return static_cast<std::int64_t>(
        std::llround(unit == TimeUnit::S ? value * 1000.0 : value));
}

inline std::optional<std::int64_t> parse_memory_kb(const std::string& raw, MemoryUnit unit) {
    auto split = split_number_suffix(raw);
    if (!split) return std::nullopt;
    auto [value, suffix] = *split;
    MemoryUnit eff = unit;
    if (suffix == "k" || suffix == "kb") eff = MemoryUnit::KB;
    else if (suffix == "m" || suffix == "mb") eff = MemoryUnit::MB;
    else if (suffix == "b" || suffix == "bytes") eff = MemoryUnit::Bytes;
    else if (!suffix.empty()) return std::nullopt;
    switch (eff) {
        case MemoryUnit::KB: return static_cast<std::int64_t>(std::llround(value));
        case MemoryUnit::MB: return static_cast<std::int64_t>(std::llround(value * 1024.0));
        case MemoryUnit::Bytes: return static_cast<std::int64_t>(value / 1024.0);
    }
    return std::nullopt;
}

inline std::optional<std::int64_t> parse_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::int64_t v = 0;
    auto rc = std::from_chars(s.data(), s.data() + s.size(), v);
    if (rc.ec != std::errc() || rc.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

/// One source row as a name->text map, independent of CSV/JSONL origin.
using RawRow = std::map<std::string, std::string>;

inline std::optional<LogRecord> row_to_log(const RawRow& row, const SchemaProfile& profile,
                                           int tz_offset_min, std::string& why) {
    auto source = [&](const std::string& canonical) -> std::optional<std::string> {
        auto mapped = profile.field_map.find(canonical);
        if (mapped == profile.field_map.end()) return std::nullopt;
        auto cell = row.find(mapped->second);
        if (cell == row.end()) return std::nullopt;
        return cell->second;
    };

    LogRecord log;
    auto id_raw = source("id");
    if (!id_raw) { why = "missing column for field id"; return std::nullopt; }
    auto id = parse_int(*id_raw);
    if (!id || *id <= 0) { why = "id is not a positive integer: " + *id_raw; return std::nullopt; }
    log.id = *id;

    auto need = [&](const std::string& canonical, std::string& out) {
        auto v = source(canonical);
        if (!v || v->empty()) { why = "missing value for field " + canonical; return false; }
        out = *v;
        return true;
    };
    if (!need("problem_id", log.problem_id)) return std::nullopt;
    if (!need("user_id", log.user_id)) return std::nullopt;
    if (auto v = source("test_id")) log.test_id = *v; // optional; join via problems later

    auto time_raw = source("in_time");
    if (!time_raw) { why = "missing value for field in_time"; return std::nullopt; }
    auto t = timeutil::parse_datetime(*time_raw, profile.time_format, tz_offset_min);
    if (!t) { why = "unparseable in_time: " + *time_raw; return std::nullopt; }
    log.in_time = *t;

    auto verdict_raw = source("verdict");
    if (!verdict_raw) { why = "missing value for field verdict"; return std::nullopt; }
    log.verdict = map_verdict(*verdict_raw, profile);

    if (auto v = source("language")) log.language = *v;
    if (auto v = source("time_ms"); v && !v->empty()) {
        auto ms = parse_time_ms(*v, profile.time_unit);
        if (!ms || *ms < 0) { why = "unparseable time value: " + *v; return std::nullopt; }
        log.time_ms = *ms;
    }
    if (auto v = source("memory_kb"); v && !v->empty()) {
        auto kb = parse_memory_kb(*v, profile.memory_unit);
        if (!kb || *kb < 0) { why = "unparseable memory value: " + *v; return std::nullopt; }
        log.memory_kb = *kb;
    }
    if (auto v = source("code_length"); v && !v->empty()) {
        auto n = parse_int(*v);
        if (!n || *n < 0) { why = "unparseable code_length: " + *v; return std::nullopt; }
        log.code_length = *n;
    }
    // Raw code, when exported, is reduced to (length, digest) right here and
    // never stored.
    if (auto code = source("code"); code && !code->empty()) {
        log.code_hash = digest::sha256_hex(*code);
        if (log.code_length == 0) log.code_length = static_cast<std::int64_t>(code->size());
    } else if (auto v = source("code_hash"); v && !v->empty()) {
        log.code_hash = *v;
    }
    if (auto v = source("ip")) log.ip = *v;
    if (auto v = source("location")) log.location = *v;
    return log;
}

} // namespace detail

struct ParseResult {
    std::vector<LogRecord> logs;
    std::vector<ParseError> errors;
    std::size_t total_rows = 0;
};

/// Single-pass row parser: every well-formed row yields exactly one record,
/// malformed rows yield errors with their line number, and neither aborts the
/// stream. logs.size() + errors.size() == total_rows always.
inline ParseResult parse_logs(std::istream& in, LogFormat format, const SchemaProfile& profile,
                              int tz_offset_min = 480) {
    ParseResult result;
    if (format == LogFormat::Csv) {
        csv::Reader reader(in);
        csv::Row header;
        if (!reader.next(header))
            throw StreamError("CSV input is empty (expected a header row)");
        if (!header.fields.empty() && header.fields[0].size() >= 3 &&
            static_cast<unsigned char>(header.fields[0][0]) == 0xEF)
            header.fields[0].erase(0, 3); // strip UTF-8 BOM
        csv::Row row;
        while (reader.next(row)) {
            ++result.total_rows;
            detail::RawRow raw;
            for (std::size_t i = 0; i < row.fields.size() && i < header.fields.size(); ++i)
                raw[header.fields[i]] = row.fields[i];
            std::string why;
            if (row.fields.size() != header.fields.size()) {
                result.errors.push_back({row.line_no, "column count differs from header"});
                continue;
            }
            if (auto log = detail::row_to_log(raw, profile, tz_offset_min, why))
                result.logs.push_back(std::move(*log));
            else
                result.errors.push_back({row.line_no, why});
        }
    } else {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            ++result.total_rows;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) {
                result.errors.push_back({line_no, "line is not a JSON object"});
                continue;
            }
            detail::RawRow raw;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (it.value().is_string()) raw[it.key()] = it.value().get<std::string>();
                else if (it.value().is_null()) raw[it.key()] = "";
                else raw[it.key()] = it.value().dump();
            }
            std::string why;
            if (auto log = detail::row_to_log(raw, profile, tz_offset_min, why))
                result.logs.push_back(std::move(*log));
            else
                result.errors.push_back({line_no, why});
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Roster & scores (small header-first CSVs)
// ---------------------------------------------------------------------------

namespace detail {

inline std::map<std::string, std::size_t> header_index(const csv::Row& header) {
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < header.fields.size(); ++i) idx[header.fields[i]] = i;
    return idx;
}

} // namespace detail

/// user_id,roster_no[,username] with a header row.
inline std::vector<UserRecord> load_roster_csv(std::istream& in) {
    csv::Reader reader(in);
    csv::Row header;
    if (!reader.next(header)) throw StreamError("roster CSV is empty");
    auto idx = detail::header_index(header);
    if (!idx.count("user_id") || !idx.count("roster_no"))
        throw StreamError("roster CSV needs user_id and roster_no columns");
    std::vector<UserRecord> out;
    csv::Row row;
    while (reader.next(row)) {
        if (row.fields.size() < header.fields.size())
            throw StreamError("roster CSV row " + std::to_string(row.line_no) + " is short");
        UserRecord u;
        u.user_id = row.fields[idx["user_id"]];
        u.roster_no = row.fields[idx["roster_no"]];
        if (idx.count("username")) u.username = row.fields[idx["username"]];
        out.push_back(std::move(u));
    }
    return out;
}

/// user_id,msc,wsc with a header row.
inline std::vector<ExamScores> load_scores_csv(std::istream& in) {
    csv::Reader reader(in);
    csv::Row header;
    if (!reader.next(header)) throw StreamError("scores CSV is empty");
    auto idx = detail::header_index(header);
    for (const char* col : {"user_id", "msc", "wsc"})
        if (!idx.count(col))
            throw StreamError(std::string("scores CSV needs column ") + col);
    std::vector<ExamScores> out;
    csv::Row row;
    while (reader.next(row)) {
        if (row.fields.size() < header.fields.size())
            throw StreamError("scores CSV row " + std::to_string(row.line_no) + " is short");
        ExamScores s;
        s.user_id = row.fields[idx["user_id"]];
        try {
            s.msc = std::stod(row.fields[idx["msc"]]);
            s.wsc = std::stod(row.fields[idx["wsc"]]);
        } catch (const std::exception&) {
            throw StreamError("scores CSV row " + std::to_string(row.line_no) +
                              " has a non-numeric score");
        }
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset assembly
// ---------------------------------------------------------------------------

/// Assembles parsed parts into a validated dataset: sorts logs canonically,
/// fills missing per-log test ids from problem metadata, computes
/// semester_start and each problem's release_rank, then validates.
/// Throws ValidationFailedError carrying the full report on any violation.
inline CohortDataset build_dataset(std::vector<LogRecord> logs, std::vector<ProblemMeta> problems,
                                   std::vector<TestWindow> tests, std::vector<UserRecord> users,
                                   std::vector<ExamScores> scores, std::string label,
                                   int tz_offset_min = 480) {
    CohortDataset ds;
    ds.label = std::move(label);
    ds.tz_offset_min = tz_offset_min;
    ds.logs = std::move(logs);
    ds.problems = std::move(problems);
    ds.tests = std::move(tests);
    ds.users = std::move(users);
    ds.scores = std::move(scores);

    std::map<std::string, timeutil::Seconds> test_start;
    for (const auto& t : ds.tests) test_start[t.id] = t.start;

    std::map<std::string, std::string> problem_test;
    for (const auto& p : ds.problems) problem_test[p.id] = p.test_id;
    for (auto& log : ds.logs) {
        if (log.test_id.empty()) {
            auto it = problem_test.find(log.problem_id);
            if (it != problem_test.end()) log.test_id = it->second;
        }
    }

    // release_rank: 1-based, ordered by (test start, problem id)
    std::stable_sort(ds.problems.begin(), ds.problems.end(),
                     [&](const ProblemMeta& a, const ProblemMeta& b) {
                         auto sa = test_start.count(a.test_id) ? test_start[a.test_id] : 0;
                         auto sb = test_start.count(b.test_id) ? test_start[b.test_id] : 0;
                         if (sa != sb) return sa < sb;
                         return a.id < b.id;
                     });
    std::int64_t rank = 0;
    for (auto& p : ds.problems) p.release_rank = ++rank;

    if (!ds.tests.empty()) {
        ds.semester_start = ds.tests.front().start;
        for (const auto& t : ds.tests) ds.semester_start = std::min(ds.semester_start, t.start);
    }

    canonicalize(ds);
    auto report = validate(ds);
    if (!report.ok()) throw ValidationFailedError(std::move(report));
    return ds;
}

} // namespace oja::ingest
