#pragma once

#include <oja/datamodel.hpp>
#include <oja/digest.hpp>
#include <oja/errors.hpp>
#include <oja/timeutil.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace oja::io {

using json = nlohmann::ordered_json;

// The normalized dataset directory holds:
//   manifest.json  label, counts, time range, content digest
//   logs.jsonl     one object per log, canonical field names, (in_time, id) order
//   problems.json / tests.json / users.json / scores.json  JSON arrays
// Field order is fixed so identical content always yields identical bytes.

inline json log_to_json(const LogRecord& l) {
    json j;
    j["id"] = l.id;
    j["problem_id"] = l.problem_id;
    j["test_id"] = l.test_id;
    j["user_id"] = l.user_id;
    j["in_time"] = timeutil::format_utc(l.in_time);
    j["language"] = l.language;
    j["verdict"] = to_string(l.verdict);
    j["time_ms"] = l.time_ms;
    j["memory_kb"] = l.memory_kb;
    j["code_length"] = l.code_length;
    j["code_hash"] = l.code_hash;
    j["ip"] = l.ip;
    j["location"] = l.location;
    return j;
}

inline std::string logs_jsonl(const CohortDataset& ds) {
    std::string out;
    for (const auto& l : ds.logs) {
        out += log_to_json(l).dump();
        out += '\n';
    }
    return out;
}

inline std::string problems_json(const CohortDataset& ds) {
    json arr = json::array();
    for (const auto& p : ds.problems) {
        json j;
        j["id"] = p.id;
        j["title"] = p.title;
        j["test_id"] = p.test_id;
        j["release_rank"] = p.release_rank;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

inline std::string tests_json(const CohortDataset& ds) {
    json arr = json::array();
    for (const auto& t : ds.tests) {
        json j;
        j["id"] = t.id;
        j["title"] = t.title;
        j["start"] = timeutil::format_utc(t.start);
        j["end"] = timeutil::format_utc(t.end);
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

inline std::string users_json(const CohortDataset& ds) {
    json arr = json::array();
    for (const auto& u : ds.users) {
        json j;
        j["user_id"] = u.user_id;
        j["username"] = u.username;
        j["roster_no"] = u.roster_no;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

inline std::string scores_json(const CohortDataset& ds) {
    json arr = json::array();
    for (const auto& s : ds.scores) {
        json j;
        j["user_id"] = s.user_id;
        j["msc"] = s.msc;
        j["wsc"] = s.wsc;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

/// Digest over all content payloads; the manifest carries it so consumers can
/// detect corruption and compare datasets without byte-diffing every file.
inline std::string dataset_digest(const CohortDataset& ds) {
    std::string all;
    auto section = [&all](std::string_view name, const std::string& bytes) {
        all += name;
        all += '\0';
        all += bytes;
    };
    section("label", ds.label + "\n");
    section("tz", std::to_string(ds.tz_offset_min) + "\n");
    section("logs.jsonl", logs_jsonl(ds));
    section("problems.json", problems_json(ds));
    section("tests.json", tests_json(ds));
    section("users.json", users_json(ds));
    section("scores.json", scores_json(ds));
    return digest::sha256_hex(all);
}

inline std::string manifest_json(const CohortDataset& ds) {
    json m;
    m["label"] = ds.label;
    m["tz_offset_min"] = ds.tz_offset_min;
    m["semester_start"] = timeutil::format_utc(ds.semester_start);
    json counts;
    counts["logs"] = ds.logs.size();
    counts["problems"] = ds.problems.size();
    counts["tests"] = ds.tests.size();
    counts["users"] = ds.users.size();
    counts["scores"] = ds.scores.size();
    m["counts"] = std::move(counts);
    if (ds.logs.empty()) {
        m["time_range"] = nullptr;
    } else {
        json tr;
        tr["first"] = timeutil::format_utc(ds.logs.front().in_time);
        tr["last"] = timeutil::format_utc(ds.logs.back().in_time);
        m["time_range"] = std::move(tr);
    }
    m["content_digest"] = "sha256:" + dataset_digest(ds);
    return m.dump(2) + "\n";
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OutputUnwritableError("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw OutputUnwritableError("short write: " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StreamError("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void save_dataset(const CohortDataset& ds, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    write_file(dir / "logs.jsonl", logs_jsonl(ds));
    write_file(dir / "problems.json", problems_json(ds));
    write_file(dir / "tests.json", tests_json(ds));
    write_file(dir / "users.json", users_json(ds));
    write_file(dir / "scores.json", scores_json(ds));
    write_file(dir / "manifest.json", manifest_json(ds));
}

inline LogRecord log_from_json(const json& j) {
    LogRecord l;
    l.id = j.at("id").get<std::int64_t>();
    l.problem_id = j.at("problem_id").get<std::string>();
    l.test_id = j.at("test_id").get<std::string>();
    l.user_id = j.at("user_id").get<std::string>();
    auto t = timeutil::parse_datetime(j.at("in_time").get<std::string>(),
                                      "%Y-%m-%dT%H:%M:%S", 0);
    if (!t) throw StreamError("bad in_time in normalized log " + std::to_string(l.id));
    l.in_time = *t;
    l.language = j.at("language").get<std::string>();
    auto v = verdict_from_canonical(j.at("verdict").get<std::string>());
    l.verdict = v ? *v : Verdict::other(j.at("verdict").get<std::string>());
    l.time_ms = j.at("time_ms").get<std::int64_t>();
    l.memory_kb = j.at("memory_kb").get<std::int64_t>();
    l.code_length = j.at("code_length").get<std::int64_t>();
    l.code_hash = j.at("code_hash").get<std::string>();
    l.ip = j.at("ip").get<std::string>();
    l.location = j.at("location").get<std::string>();
    return l;
}

/// Loads a normalized dataset directory. With verify_digest, a manifest whose
/// content digest disagrees with the payload bytes is rejected.
inline std::vector<ProblemMeta> problems_from_json(const json& arr) {
    std::vector<ProblemMeta> out;
    for (const auto& j : arr) {
        ProblemMeta p;
        p.id = j.at("id").get<std::string>();
        p.title = j.value("title", p.id);
        p.test_id = j.value("test_id", std::string());
        p.release_rank = j.value("release_rank", std::int64_t{0});
        out.push_back(std::move(p));
    }
    return out;
}

/// Accepts both the normalized form (UTC, trailing Z) and plain local
/// timestamps, which is what hand-written course config files tend to hold.
inline std::vector<TestWindow> tests_from_json(const json& arr, int tz_offset_min = 0) {
    std::vector<TestWindow> out;
    for (const auto& j : arr) {
        TestWindow t;
        t.id = j.at("id").get<std::string>();
        t.title = j.value("title", t.id);
        auto s = timeutil::parse_datetime(j.at("start").get<std::string>(), "%Y-%m-%dT%H:%M:%S",
                                          tz_offset_min);
        auto e = timeutil::parse_datetime(j.at("end").get<std::string>(), "%Y-%m-%dT%H:%M:%S",
                                          tz_offset_min);
        if (!s || !e) throw StreamError("bad test window timestamps for " + t.id);
        t.start = *s;
        t.end = *e;
        out.push_back(std::move(t));
    }
    return out;
}

inline std::vector<UserRecord> users_from_json(const json& arr) {
    std::vector<UserRecord> out;
    for (const auto& j : arr) {
        UserRecord u;
        u.user_id = j.at("user_id").get<std::string>();
        u.username = j.value("username", std::string());
        u.roster_no = j.value("roster_no", std::string());
        out.push_back(std::move(u));
    }
    return out;
}

inline std::vector<ExamScores> scores_from_json(const json& arr) {
    std::vector<ExamScores> out;
    for (const auto& j : arr) {
        ExamScores s;
        s.user_id = j.at("user_id").get<std::string>();
        s.msc = j.at("msc").get<double>();
        s.wsc = j.at("wsc").get<double>();
        out.push_back(std::move(s));
    }
    return out;
}

inline CohortDataset load_dataset(const std::filesystem::path& dir, bool verify_digest = true) {
    CohortDataset ds;
    json manifest;
    try {
        manifest = json::parse(read_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw StreamError("bad manifest.json in " + dir.string() + ": " + e.what());
    }
    ds.label = manifest.at("label").get<std::string>();
    ds.tz_offset_min = manifest.at("tz_offset_min").get<int>();
    auto sem = timeutil::parse_datetime(manifest.at("semester_start").get<std::string>(),
                                        "%Y-%m-%dT%H:%M:%S", 0);
    if (!sem) throw StreamError("bad semester_start in manifest");
    ds.semester_start = *sem;

    try {
        std::istringstream lines(read_file(dir / "logs.jsonl"));
        std::string line;
        while (std::getline(lines, line)) {
            if (line.empty()) continue;
            ds.logs.push_back(log_from_json(json::parse(line)));
        }
        ds.problems = problems_from_json(json::parse(read_file(dir / "problems.json")));
        ds.tests = tests_from_json(json::parse(read_file(dir / "tests.json")));
        ds.users = users_from_json(json::parse(read_file(dir / "users.json")));
        ds.scores = scores_from_json(json::parse(read_file(dir / "scores.json")));
    } catch (const nlohmann::json::exception& e) {
        throw StreamError("bad dataset payload in " + dir.string() + ": " + e.what());
    }

    if (verify_digest) {
        const std::string expect = manifest.at("content_digest").get<std::string>();
        const std::string actual = "sha256:" + dataset_digest(ds);
        if (expect != actual)
            throw StreamError("dataset content digest mismatch in " + dir.string());
    }
    return ds;
}

} // namespace oja::io
