#pragma once

#include <oja/datamodel.hpp>
#include <oja/errors.hpp>
#include <oja/stats.hpp>

#include <json.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace oja::clean {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Window filter
// ---------------------------------------------------------------------------

struct WindowResult {
    CohortDataset dataset;
    std::vector<std::int64_t> excluded_ids;
};

/// Keeps exactly the logs with test.start <= in_time <= test.end; logs whose
/// test is unknown count as out-of-window.
inline WindowResult window_filter(const CohortDataset& ds) {
    std::map<std::string, const TestWindow*> tests;
    for (const auto& t : ds.tests) tests[t.id] = &t;

    WindowResult out;
    out.dataset = ds;
    out.dataset.logs.clear();
    for (const auto& log : ds.logs) {
        auto it = tests.find(log.test_id);
        const bool in_window =
            it != tests.end() && it->second->start <= log.in_time && log.in_time <= it->second->end;
        if (in_window) out.dataset.logs.push_back(log);
        else out.excluded_ids.push_back(log.id);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dedup
// ---------------------------------------------------------------------------

struct DedupResult {
    CohortDataset dataset;
    std::size_t removed = 0;
};

/// Removes logs identical in (user_id, problem_id, in_time, code_hash),
/// keeping the lowest id of each group.
inline DedupResult dedup(const CohortDataset& ds) {
    using Key = std::tuple<std::string, std::string, Seconds, std::string>;
    std::map<Key, std::int64_t> keeper; // key -> lowest id seen
    for (const auto& log : ds.logs) {
        Key k{log.user_id, log.problem_id, log.in_time, log.code_hash};
        auto [it, fresh] = keeper.emplace(k, log.id);
        if (!fresh && log.id < it->second) it->second = log.id;
    }
    DedupResult out;
    out.dataset = ds;
    out.dataset.logs.clear();
    for (const auto& log : ds.logs) {
        Key k{log.user_id, log.problem_id, log.in_time, log.code_hash};
        if (keeper.at(k) == log.id) out.dataset.logs.push_back(log);
        else ++out.removed;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Alt-account detection
// ---------------------------------------------------------------------------

struct AltCluster {
    std::vector<std::string> members; // sorted user ids
    std::optional<std::string> primary;
    std::vector<std::pair<std::string, std::size_t>> evidence; // (code_hash, count)
};

struct AltParams {
    std::size_t min_shared_hashes = 3;
};

namespace detail {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a > b) std::swap(a, b); // deterministic root: smaller index wins
        parent[b] = a;
    }
};

} // namespace detail

/// Union-find over accounts linked when they share >= min_shared_hashes
/// distinct code_hash values. Users are keyed by sorted id, so the result is
/// independent of input ordering. Cluster primary = the unique roster-matched
/// member when exactly one exists.
inline std::vector<AltCluster> detect_alts(const CohortDataset& ds,
                                           const std::vector<UserRecord>& roster,
                                           const AltParams& params = {}) {
    std::set<std::string> rostered;
    for (const auto& u : roster)
        if (!u.roster_no.empty()) rostered.insert(u.user_id);

    // user -> set of code hashes; only hashed logs participate
    std::map<std::string, std::set<std::string>> hashes_by_user;
    for (const auto& log : ds.logs)
        if (!log.code_hash.empty()) hashes_by_user[log.user_id].insert(log.code_hash);

    std::vector<std::string> users;
    users.reserve(hashes_by_user.size());
    for (const auto& [uid, _] : hashes_by_user) users.push_back(uid);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < users.size(); ++i) index[users[i]] = i;

    // invert: hash -> users holding it
    std::map<std::string, std::vector<std::size_t>> holders;
    for (const auto& [uid, hs] : hashes_by_user)
        for (const auto& h : hs) holders[h].push_back(index[uid]);

    std::map<std::pair<std::size_t, std::size_t>, std::set<std::string>> shared;
    for (const auto& [hash, us] : holders)
        for (std::size_t i = 0; i < us.size(); ++i)
            for (std::size_t j = i + 1; j < us.size(); ++j) {
                auto key = std::minmax(us[i], us[j]);
                shared[{key.first, key.second}].insert(hash);
            }

    detail::UnionFind uf(users.size());
    for (const auto& [pair, hs] : shared)
        if (hs.size() >= params.min_shared_hashes) uf.unite(pair.first, pair.second);

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < users.size(); ++i) groups[uf.find(i)].push_back(i);

    std::vector<AltCluster> clusters;
    for (const auto& [root, members] : groups) {
        if (members.size() < 2) continue;
        AltCluster c;
        for (auto m : members) c.members.push_back(users[m]);
        std::sort(c.members.begin(), c.members.end());

        std::vector<std::string> primaries;
        for (const auto& uid : c.members)
            if (rostered.count(uid)) primaries.push_back(uid);
        if (primaries.size() == 1) c.primary = primaries.front();

        // evidence: hashes held by >= 2 members, with holder counts
        std::map<std::string, std::size_t> counts;
        for (const auto& uid : c.members)
            for (const auto& h : hashes_by_user.at(uid)) ++counts[h];
        for (const auto& [h, n] : counts)
            if (n >= 2) c.evidence.emplace_back(h, n);
        clusters.push_back(std::move(c));
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const AltCluster& a, const AltCluster& b) { return a.members < b.members; });
    return clusters;
}

enum class AltPolicy { Reassign, Delete };

struct AltApplyResult {
    CohortDataset dataset;
    std::size_t logs_reassigned = 0;
    std::size_t logs_deleted = 0;
    std::size_t users_removed = 0;
};

/// Reassign: member logs take the primary's user id (clusters without a
/// primary fall back to delete). Delete: non-primary members' logs removed.
/// Either way the non-primary UserRecords — and any score rows they might
/// have — are dropped.
inline AltApplyResult apply_alt_policy(const CohortDataset& ds,
                                       const std::vector<AltCluster>& clusters,
                                       AltPolicy policy) {
    std::map<std::string, std::string> reassign_to; // member -> primary
    std::set<std::string> doomed;                   // member whose logs are deleted
    std::set<std::string> drop_user;                // records to remove
    for (const auto& c : clusters) {
        for (const auto& uid : c.members) {
            if (c.primary && uid == *c.primary) continue;
            drop_user.insert(uid);
            if (policy == AltPolicy::Reassign && c.primary) reassign_to[uid] = *c.primary;
            else doomed.insert(uid);
        }
    }

    AltApplyResult out;
    out.dataset = ds;
    out.dataset.logs.clear();
    for (const auto& log : ds.logs) {
        if (doomed.count(log.user_id)) {
            ++out.logs_deleted;
            continue;
        }
        auto it = reassign_to.find(log.user_id);
        if (it != reassign_to.end()) {
            LogRecord moved = log;
            moved.user_id = it->second;
            out.dataset.logs.push_back(std::move(moved));
            ++out.logs_reassigned;
        } else {
            out.dataset.logs.push_back(log);
        }
    }

    out.dataset.users.clear();
    for (const auto& u : ds.users)
        if (!drop_user.count(u.user_id)) out.dataset.users.push_back(u);
    out.dataset.scores.clear();
    for (const auto& s : ds.scores)
        if (!drop_user.count(s.user_id)) out.dataset.scores.push_back(s);
    out.users_removed = drop_user.size();
    canonicalize(out.dataset);
    return out;
}

// ---------------------------------------------------------------------------
// Variable pruning (one-sample z-tests against a historical baseline)
// ---------------------------------------------------------------------------

enum class PruneVariable { TimeMs, MemoryKb };

inline std::string to_string(PruneVariable v) {
    return v == PruneVariable::TimeMs ? "time_ms" : "memory_kb";
}

struct ZTestConfig {
    PruneVariable variable = PruneVariable::TimeMs;
    double mu0 = 22.89; // historical run-time baseline, ms
    double alpha_prune = 0.05;
    bool two_sided = true;
};

inline ZTestConfig default_time_config() { return {PruneVariable::TimeMs, 22.89, 0.05, true}; }
inline ZTestConfig default_memory_config() {
    return {PruneVariable::MemoryKb, 2032.0, 0.05, true};
}

struct PruneRow {
    std::string variable;
    std::size_t n = 0;
    double mu0 = 0.0;
    double mean = 0.0;
    double z = 0.0;
    double p = 1.0;
    bool prune = false; // true: uninformative vs baseline, excluded from models
};

struct VariablePruneReport {
    std::vector<PruneRow> rows;
};

/// One-sample z-test of each configured variable's mean against its baseline.
/// decision = prune when p > alpha (cannot reject H0: the variable carries no
/// signal beyond the historical baseline). Data is never destroyed; models
/// read the report.
inline VariablePruneReport prune_variables(const CohortDataset& ds,
                                           const std::vector<ZTestConfig>& configs) {
    VariablePruneReport report;
    for (const auto& cfg : configs) {
        if (cfg.alpha_prune <= 0.0 || cfg.alpha_prune >= 1.0)
            throw ConfigInvalidError("alpha_prune must be in (0,1)");
        std::vector<double> sample;
        sample.reserve(ds.logs.size());
        for (const auto& log : ds.logs)
            sample.push_back(static_cast<double>(cfg.variable == PruneVariable::TimeMs
                                                     ? log.time_ms
                                                     : log.memory_kb));
        auto zt = stats::z_test(sample, cfg.mu0, cfg.two_sided);
        PruneRow row;
        row.variable = to_string(cfg.variable);
        row.n = zt.n;
        row.mu0 = cfg.mu0;
        row.mean = zt.mean;
        row.z = zt.z;
        row.p = zt.p;
        row.prune = zt.p > cfg.alpha_prune;
        report.rows.push_back(row);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Full stage
// ---------------------------------------------------------------------------

struct CleanReport {
    std::size_t input_logs = 0;
    std::size_t duplicates_removed = 0;
    std::size_t out_of_window = 0;
    std::size_t alt_clusters = 0;
    std::size_t logs_reassigned = 0;
    std::size_t logs_deleted = 0;
    std::size_t users_removed = 0;
    std::size_t output_logs = 0;
    VariablePruneReport prune;
    std::vector<std::string> notes;

    bool conserved() const {
        return input_logs == output_logs + duplicates_removed + out_of_window + logs_deleted;
    }
};

struct CleanOptions {
    AltPolicy alt_policy = AltPolicy::Reassign;
    AltParams alt_params{};
    std::vector<ZTestConfig> ztests{default_time_config(), default_memory_config()};
};

struct CleanResult {
    CohortDataset dataset;
    CleanReport report;
};

/// Fixed stage order: dedup -> window filter -> alt detection/merge -> prune.
/// Alts are merged on deduplicated in-window data; pruning is advisory and
/// happens last. Running the stage twice is a fixed point.
inline CleanResult run_clean(const CohortDataset& ds, const CleanOptions& opts = {}) {
    CleanResult out;
    out.report.input_logs = ds.logs.size();

    auto deduped = dedup(ds);
    out.report.duplicates_removed = deduped.removed;

    auto windowed = window_filter(deduped.dataset);
    out.report.out_of_window = windowed.excluded_ids.size();

    auto clusters = detect_alts(windowed.dataset, windowed.dataset.users, opts.alt_params);
    out.report.alt_clusters = clusters.size();
    auto applied = apply_alt_policy(windowed.dataset, clusters, opts.alt_policy);
    out.report.logs_reassigned = applied.logs_reassigned;
    out.report.logs_deleted = applied.logs_deleted;
    out.report.users_removed = applied.users_removed;

    out.dataset = std::move(applied.dataset);
    out.report.output_logs = out.dataset.logs.size();

    if (out.dataset.logs.size() >= 30) {
        out.report.prune = prune_variables(out.dataset, opts.ztests);
    } else if (!opts.ztests.empty()) {
        out.report.notes.push_back("variable pruning skipped: fewer than 30 logs");
    }
    return out;
}

inline json prune_report_json(const VariablePruneReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"variable", r.variable},
                        {"n", r.n},
                        {"mu0", r.mu0},
                        {"mean", r.mean},
                        {"z", r.z},
                        {"p", r.p},
                        {"decision", r.prune ? "prune" : "keep"}});
    }
    return rows;
}

inline json clean_report_json(const CleanReport& report) {
    json j;
    j["input_logs"] = report.input_logs;
    j["duplicates_removed"] = report.duplicates_removed;
    j["out_of_window"] = report.out_of_window;
    j["alt_clusters"] = report.alt_clusters;
    j["logs_reassigned"] = report.logs_reassigned;
    j["logs_deleted"] = report.logs_deleted;
    j["users_removed"] = report.users_removed;
    j["output_logs"] = report.output_logs;
    j["variable_prune"] = prune_report_json(report.prune);
    j["notes"] = report.notes;
    return j;
}

inline CleanReport clean_report_from_json(const json& j) {
    CleanReport r;
    r.input_logs = j.value("input_logs", std::size_t{0});
    r.duplicates_removed = j.value("duplicates_removed", std::size_t{0});
    r.out_of_window = j.value("out_of_window", std::size_t{0});
    r.alt_clusters = j.value("alt_clusters", std::size_t{0});
    r.logs_reassigned = j.value("logs_reassigned", std::size_t{0});
    r.logs_deleted = j.value("logs_deleted", std::size_t{0});
    r.users_removed = j.value("users_removed", std::size_t{0});
    r.output_logs = j.value("output_logs", std::size_t{0});
    if (j.contains("variable_prune"))
        for (const auto& row : j.at("variable_prune")) {
            PruneRow pr;
            pr.variable = row.value("variable", std::string());
            pr.n = row.value("n", std::size_t{0});
            pr.mu0 = row.value("mu0", 0.0);
            pr.mean = row.value("mean", 0.0);
            pr.z = row.value("z", 0.0);
            pr.p = row.value("p", 1.0);
            pr.prune = row.value("decision", std::string("keep")) == "prune";
            r.prune.rows.push_back(std::move(pr));
        }
    if (j.contains("notes"))
        for (const auto& n : j.at("notes")) r.notes.push_back(n.get<std::string>());
    return r;
}

} // namespace oja::clean
