#pragma once

#include <oja/ingest.hpp>

#include <string>
#include <vector>

namespace oja::profiles {

// Built-in schema profiles for the judge dialects we see in practice. The
// same documents ship as profiles/*.json so they can serve as templates for
// site-local variants.

inline std::string hustoj_json() {
    return R"({
  "name": "hustoj",
  "field_map": {
    "id": "solution_id",
    "problem_id": "problem_id",
    "user_id": "user_id",
    "in_time": "in_date",
    "verdict": "result",
    "language": "language",
    "time_ms": "time",
    "memory_kb": "memory",
    "code_length": "code_length",
    "ip": "ip"
  },
  "verdict_map": {
    "4": "Accepted",
    "5": "PresentationError",
    "6": "WrongAnswer",
    "7": "TimeLimitExceeded",
    "8": "MemoryLimitExceeded",
    "10": "RuntimeError",
    "11": "CompileError"
  },
  "time_format": "%Y-%m-%d %H:%M:%S",
  "memory_unit": "kb",
  "time_unit": "ms"
})";
}

inline std::string qduoj_json() {
    return R"({
  "name": "qduoj",
  "field_map": {
    "id": "id",
    "problem_id": "problem",
    "user_id": "user_id",
    "in_time": "create_time",
    "verdict": "result",
    "language": "language",
    "time_ms": "time_cost",
    "memory_kb": "memory_cost",
    "ip": "ip"
  },
  "verdict_map": {
    "0": "Accepted",
    "-1": "WrongAnswer",
    "1": "TimeLimitExceeded",
    "2": "TimeLimitExceeded",
    "3": "MemoryLimitExceeded",
    "4": "RuntimeError",
    "-2": "CompileError",
    "6": "Pending",
    "7": "Pending"
  },
  "time_format": "%Y-%m-%dT%H:%M:%S",
  "memory_unit": "bytes",
  "time_unit": "ms"
})";
}

// Column names as they appear in generic spreadsheet exports (RunID/User/
// Result/Time/Memory/Length), including boolean-style results.
inline std::string generic_json() {
    return R"({
  "name": "generic",
  "field_map": {
    "id": "RunID",
    "problem_id": "Problem",
    "test_id": "Contest",
    "user_id": "User",
    "in_time": "SubmitTime",
    "verdict": "Result",
    "language": "Language",
    "time_ms": "Time",
    "memory_kb": "Memory",
    "code_length": "Length",
    "code": "Code",
    "ip": "IP"
  },
  "verdict_map": {
    "True": "Accepted",
    "False": "WrongAnswer",
    "Accepted": "Accepted",
    "Wrong Answer": "WrongAnswer",
    "Time Limit Exceeded": "TimeLimitExceeded",
    "Memory Limit Exceeded": "MemoryLimitExceeded",
    "Runtime Error": "RuntimeError",
    "Compile Error": "CompileError",
    "Presentation Error": "PresentationError"
  },
  "time_format": "%Y-%m-%d %H:%M:%S",
  "memory_unit": "kb",
  "time_unit": "ms"
})";
}

// Round-trips this toolkit's own normalized output (logs.jsonl).
inline std::string normalized_json() {
    return R"({
  "name": "normalized",
  "field_map": {
    "id": "id",
    "problem_id": "problem_id",
    "test_id": "test_id",
    "user_id": "user_id",
    "in_time": "in_time",
    "verdict": "verdict",
    "language": "language",
    "time_ms": "time_ms",
    "memory_kb": "memory_kb",
    "code_length": "code_length",
    "code_hash": "code_hash",
    "ip": "ip",
    "location": "location"
  },
  "verdict_canonical": true,
  "time_format": "%Y-%m-%dT%H:%M:%SZ",
  "memory_unit": "kb",
  "time_unit": "ms"
})";
}

inline std::vector<std::string> builtin_names() {
    return {"hustoj", "qduoj", "generic", "normalized"};
}

inline ingest::SchemaProfile builtin(const std::string& name) {
    if (name == "hustoj") return ingest::load_profile(hustoj_json());
    if (name == "qduoj") return ingest::load_profile(qduoj_json());
    if (name == "generic") return ingest::load_profile(generic_json());
    if (name == "normalized") return ingest::load_profile(normalized_json());
    throw Error("unknown built-in profile: " + name);
}

} // namespace oja::profiles
