#pragma once

#include <oja/errors.hpp>
#include <oja/timeutil.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace oja {

using timeutil::Seconds;

// ---------------------------------------------------------------------------
// Verdict
// ---------------------------------------------------------------------------

enum class VerdictKind {
    Accepted,
    WrongAnswer,
    TimeLimitExceeded,
    MemoryLimitExceeded,
    RuntimeError,
    CompileError,
    PresentationError,
    Pending,
    Other,
};

/// Judge result for one submission. Accepted is the single "solved" state
/// (ACM pass/fail). Unmappable raw values become Other and keep the source
/// text verbatim; nothing is dropped at acquisition.
struct Verdict {
    VerdictKind kind = VerdictKind::Other;
    std::string raw; // only meaningful for Other

    bool accepted() const { return kind == VerdictKind::Accepted; }

    static Verdict of(VerdictKind k) { return Verdict{k, {}}; }
    static Verdict other(std::string r) { return Verdict{VerdictKind::Other, std::move(r)}; }

    friend bool operator==(const Verdict& a, const Verdict& b) {
        return a.kind == b.kind && (a.kind != VerdictKind::Other || a.raw == b.raw);
    }
};

inline std::string to_string(const Verdict& v) {
    switch (v.kind) {
        case VerdictKind::Accepted: return "Accepted";
        case VerdictKind::WrongAnswer: return "WrongAnswer";
        case VerdictKind::TimeLimitExceeded: return "TimeLimitExceeded";
        case VerdictKind::MemoryLimitExceeded: return "MemoryLimitExceeded";
        case VerdictKind::RuntimeError: return "RuntimeError";
        case VerdictKind::CompileError: return "CompileError";
        case VerdictKind::PresentationError: return "PresentationError";
        case VerdictKind::Pending: return "Pending";
        case VerdictKind::Other: return "Other:" + v.raw;
    }
    return "Other:";
}

/// Parses a canonical verdict name ("Accepted", ..., "Other:<raw>").
/// Returns nullopt for anything else so callers can apply their own fallback.
inline std::optional<Verdict> verdict_from_canonical(std::string_view s) {
    if (s == "Accepted") return Verdict::of(VerdictKind::Accepted);
    if (s == "WrongAnswer") return Verdict::of(VerdictKind::WrongAnswer);
    if (s == "TimeLimitExceeded") return Verdict::of(VerdictKind::TimeLimitExceeded);
    if (s == "MemoryLimitExceeded") return Verdict::of(VerdictKind::MemoryLimitExceeded);
    if (s == "RuntimeError") return Verdict::of(VerdictKind::RuntimeError);
    if (s == "CompileError") return Verdict::of(VerdictKind::CompileError);
    if (s == "PresentationError") return Verdict::of(VerdictKind::PresentationError);
    if (s == "Pending") return Verdict::of(VerdictKind::Pending);
    if (s.substr(0, 6) == "Other:") return Verdict::other(std::string(s.substr(6)));
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Entities
// ---------------------------------------------------------------------------

/// One submission row. Raw source text is never stored; it is reduced to
/// code_length + code_hash at ingest. Empty ip/location/code_hash mean absent.
struct LogRecord {
    std::int64_t id = 0;
    std::string problem_id;
    std::string test_id;
    std::string user_id;
    timeutil::Seconds in_time = 0; // UTC, second resolution
    std::string language;
    Verdict verdict;
    std::int64_t time_ms = 0;
    std::int64_t memory_kb = 0;
    std::int64_t code_length = 0;
    std::string code_hash; // sha-256 hex of raw code bytes, or empty
    std::string ip;
    std::string location;
};

/// Teacher-released, time-bounded set of problems.
struct TestWindow {
    std::string id;
    std::string title;
    timeutil::Seconds start = 0;
    timeutil::Seconds end = 0;
};

struct ProblemMeta {
    std::string id;
    std::string title;
    std::string test_id;
    std::int64_t release_rank = 0; // 1-based order within the course
};

struct UserRecord {
    std::string user_id;
    std::string username;
    std::string roster_no; // empty = not roster-matched
};

struct ExamScores {
    std::string user_id;
    double msc = 0.0; // machine-session (practical) score, 0..100
    double wsc = 0.0; // written score, 0..100
};

/// Validated, normalized collection for one course year. Logs are strictly
/// sorted by (in_time, id); all references resolve; semester_start is the
/// earliest test start. Values are immutable after construction by
/// convention: every pipeline stage returns a new dataset.
struct CohortDataset {
    std::string label;
    int tz_offset_min = 480; // local offset used for all day-boundary math
    std::vector<LogRecord> logs;
    std::vector<ProblemMeta> problems;
    std::vector<TestWindow> tests;
    std::vector<UserRecord> users;
    std::vector<ExamScores> scores;
    timeutil::Seconds semester_start = 0;
};

inline bool log_order_lt(const LogRecord& a, const LogRecord& b) {
    if (a.in_time != b.in_time) return a.in_time < b.in_time;
    return a.id < b.id;
}

/// Canonical ordering applied by dataset builders: logs by (in_time, id),
/// problems by release_rank, tests by (start, id), users/scores by user_id.
inline void canonicalize(CohortDataset& ds) {
    std::sort(ds.logs.begin(), ds.logs.end(), log_order_lt);
    std::sort(ds.problems.begin(), ds.problems.end(),
              [](const ProblemMeta& a, const ProblemMeta& b) {
                  if (a.release_rank != b.release_rank) return a.release_rank < b.release_rank;
                  return a.id < b.id;
              });
    std::sort(ds.tests.begin(), ds.tests.end(), [](const TestWindow& a, const TestWindow& b) {
        if (a.start != b.start) return a.start < b.start;
        return a.id < b.id;
    });
    std::sort(ds.users.begin(), ds.users.end(),
              [](const UserRecord& a, const UserRecord& b) { return a.user_id < b.user_id; });
    std::sort(ds.scores.begin(), ds.scores.end(),
              [](const ExamScores& a, const ExamScores& b) { return a.user_id < b.user_id; });
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string code;   // stable machine-readable tag
    std::string entity; // offending id, when one exists
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string describe() const {
        std::string s;
        for (const auto& v : violations) {
            s += v.code;
            if (!v.entity.empty()) s += " [" + v.entity + "]";
            s += ": " + v.message + "\n";
        }
        return s;
    }
};

class ValidationFailedError : public Error {
public:
    explicit ValidationFailedError(ValidationReport report)
        : Error("dataset validation failed:\n" + report.describe()), report_(std::move(report)) {}
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

/// Pure read-only check of every dataset invariant. Violations are data, not
/// failures: the report lists all of them, not just the first.
inline ValidationReport validate(const CohortDataset& ds) {
    ValidationReport rep;
    auto add = [&rep](std::string code, std::string entity, std::string message) {
        rep.violations.push_back({std::move(code), std::move(entity), std::move(message)});
    };

    std::set<std::string> problem_ids, test_ids, user_ids;
    for (const auto& t : ds.tests) {
        if (!test_ids.insert(t.id).second)
            add("duplicate_test_id", t.id, "test id appears twice");
        if (t.start >= t.end)
            add("test_window_invalid", t.id, "test start must precede end");
    }
    for (const auto& p : ds.problems) {
        if (!problem_ids.insert(p.id).second)
            add("duplicate_problem_id", p.id, "problem id appears twice");
        if (!test_ids.count(p.test_id))
            add("problem_unknown_test", p.id, "problem references unknown test " + p.test_id);
        if (p.release_rank < 0)
            add("release_rank_negative", p.id, "release_rank must be non-negative");
    }
    for (const auto& u : ds.users) {
        if (!user_ids.insert(u.user_id).second)
            add("duplicate_user_id", u.user_id, "user id appears twice");
    }
    for (const auto& s : ds.scores) {
        if (!user_ids.count(s.user_id))
            add("score_unknown_user", s.user_id, "exam scores reference unknown user");
        if (s.msc < 0.0 || s.msc > 100.0 || s.wsc < 0.0 || s.wsc > 100.0)
            add("score_out_of_range", s.user_id, "scores must lie in [0,100]");
    }

    std::set<std::int64_t> log_ids;
    const LogRecord* prev = nullptr;
    for (const auto& log : ds.logs) {
        const std::string id_str = std::to_string(log.id);
        if (log.id <= 0) add("log_id_not_positive", id_str, "log id must be a positive integer");
        if (!log_ids.insert(log.id).second)
            add("duplicate_log_id", id_str, "log id appears twice");
        if (!problem_ids.count(log.problem_id))
            add("unknown_problem", id_str, "log references unknown problem " + log.problem_id);
        if (!test_ids.count(log.test_id))
            add("unknown_test", id_str, "log references unknown test " + log.test_id);
        if (!user_ids.count(log.user_id))
            add("unknown_user", id_str, "log references unknown user " + log.user_id);
        if (log.time_ms < 0 || log.memory_kb < 0 || log.code_length < 0)
            add("negative_resource", id_str, "resource usage fields must be non-negative");
        if (prev && !log_order_lt(*prev, log))
            add("unsorted_logs", id_str, "logs must be strictly sorted by (in_time, id)");
        prev = &log;
    }

    if (!ds.tests.empty()) {
        timeutil::Seconds min_start = ds.tests.front().start;
        for (const auto& t : ds.tests) min_start = std::min(min_start, t.start);
        if (ds.semester_start != min_start)
            add("semester_start_mismatch", "",
                "semester_start must equal the earliest test start");
    }

    // release_rank must be a total order consistent with (test start, problem id)
    if (!ds.problems.empty()) {
        std::map<std::string, timeutil::Seconds> test_start;
        for (const auto& t : ds.tests) test_start[t.id] = t.start;
        std::vector<const ProblemMeta*> by_key;
        by_key.reserve(ds.problems.size());
        for (const auto& p : ds.problems) by_key.push_back(&p);
        std::stable_sort(by_key.begin(), by_key.end(),
                         [&](const ProblemMeta* a, const ProblemMeta* b) {
                             auto sa = test_start.count(a->test_id) ? test_start[a->test_id] : 0;
                             auto sb = test_start.count(b->test_id) ? test_start[b->test_id] : 0;
                             if (sa != sb) return sa < sb;
                             return a->id < b->id;
                         });
        std::int64_t prev_rank = 0;
        for (const ProblemMeta* p : by_key) {
            if (p->release_rank <= prev_rank) {
                add("release_rank_inconsistent", p->id,
                    "release_rank order disagrees with (test start, problem id) order");
                break;
            }
            prev_rank = p->release_rank;
        }
    }

    return rep;
}

// ---------------------------------------------------------------------------
// Lookup index
// ---------------------------------------------------------------------------

/// Read-only lookup structures shared by the analysis stages. Built once per
/// dataset; indices refer into the dataset's own vectors.
struct DatasetIndex {
    std::map<std::string, const TestWindow*> tests;
    std::map<std::string, const ProblemMeta*> problems;
    std::map<std::string, const UserRecord*> users;
    std::map<std::string, std::vector<const LogRecord*>> logs_by_user;

    explicit DatasetIndex(const CohortDataset& ds) {
        for (const auto& t : ds.tests) tests.emplace(t.id, &t);
        for (const auto& p : ds.problems) problems.emplace(p.id, &p);
        for (const auto& u : ds.users) {
            users.emplace(u.user_id, &u);
            logs_by_user.emplace(u.user_id, std::vector<const LogRecord*>{});
        }
        for (const auto& l : ds.logs) logs_by_user[l.user_id].push_back(&l);
    }

    bool in_window(const LogRecord& log) const {
        auto it = tests.find(log.test_id);
        if (it == tests.end()) return false;
        return it->second->start <= log.in_time && log.in_time <= it->second->end;
    }
};

} // namespace oja
