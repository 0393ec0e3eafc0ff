#pragma once

#include <oja/datamodel.hpp>
#include <oja/errors.hpp>
#include <oja/stats.hpp>
#include <oja/timeutil.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oja::models {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// AC index
// ---------------------------------------------------------------------------

/// Solved-count per the ACM judging rule: a problem counts once, however many
/// accepts land on it; attempts carried separately (no penalty weighting).
struct AcEntry {
    std::string user_id;
    std::int64_t ac = 0;
    std::int64_t attempts = 0;
};

inline AcEntry ac_index(const CohortDataset& ds, const std::string& user_id) {
    bool known = false;
    for (const auto& u : ds.users)
        if (u.user_id == user_id) { known = true; break; }
    if (!known) throw UnknownUserError(user_id);

    AcEntry e;
    e.user_id = user_id;
    std::set<std::string> solved;
    for (const auto& log : ds.logs) {
        if (log.user_id != user_id) continue;
        ++e.attempts;
        if (log.verdict.accepted()) solved.insert(log.problem_id);
    }
    e.ac = static_cast<std::int64_t>(solved.size());
    return e;
}

// ---------------------------------------------------------------------------
// AC <-> exam-score correlation
// ---------------------------------------------------------------------------

enum class Band { Weak, Moderate, Strong };

inline std::string to_string(Band b) {
    switch (b) {
        case Band::Weak: return "weak";
        case Band::Moderate: return "moderate";
        case Band::Strong: return "strong";
    }
    return "weak";
}

struct BandEdges {
    double moderate = 0.4; // |rho| >= moderate -> at least moderate
    double strong = 0.8;   // |rho| >= strong -> strong
};

inline Band band_of(double rho, const BandEdges& edges = {}) {
    const double a = std::fabs(rho);
    if (a >= edges.strong) return Band::Strong;
    if (a >= edges.moderate) return Band::Moderate;
    return Band::Weak;
}

struct CorrelationRow {
    std::string label;
    double rho_ac_msc = 0.0;
    double rho_ac_wsc = 0.0;
    Band band_msc = Band::Weak;
    Band band_wsc = Band::Weak;
    std::size_t n_users = 0;
};

/// Pearson rho of AC against each exam score over the users that have score
/// rows. Errors from the correlation primitive (too few scored users,
/// constant inputs) propagate to the caller.
inline CorrelationRow ac_score_correlation(const CohortDataset& ds,
                                           const BandEdges& edges = {}) {
    std::map<std::string, std::int64_t> ac;
    std::map<std::string, std::int64_t> attempts;
    for (const auto& u : ds.users) ac[u.user_id] = 0;
    std::map<std::string, std::set<std::string>> solved;
    for (const auto& log : ds.logs)
        if (log.verdict.accepted()) solved[log.user_id].insert(log.problem_id);
    for (const auto& [uid, s] : solved) ac[uid] = static_cast<std::int64_t>(s.size());

    std::vector<double> xs, msc, wsc;
    for (const auto& s : ds.scores) {
        auto it = ac.find(s.user_id);
        if (it == ac.end()) continue;
        xs.push_back(static_cast<double>(it->second));
        msc.push_back(s.msc);
        wsc.push_back(s.wsc);
    }
    CorrelationRow row;
    row.label = ds.label;
    row.n_users = xs.size();
    row.rho_ac_msc = stats::pearson(xs, msc);
    row.rho_ac_wsc = stats::pearson(xs, wsc);
    row.band_msc = band_of(row.rho_ac_msc, edges);
    row.band_wsc = band_of(row.rho_ac_wsc, edges);
    return row;
}

// ---------------------------------------------------------------------------
// Participation curve
// ---------------------------------------------------------------------------

struct ParticipationPoint {
    std::int64_t release_rank = 0;
    std::int64_t participants = 0;
};

struct ParticipationFit {
    std::vector<ParticipationPoint> series;
    double n0 = 0.0;
    double lambda = 0.0; // decay rate per problem in release order
    double r2 = 0.0;
    std::size_t zero_entries_skipped = 0;
};

/// Distinct submitters per problem, in release order. Problems nobody touched
/// stay in the series with participants = 0.
inline std::vector<ParticipationPoint> participation_series(const CohortDataset& ds) {
    std::map<std::string, std::set<std::string>> users_by_problem;
    for (const auto& log : ds.logs) users_by_problem[log.problem_id].insert(log.user_id);

    std::vector<const ProblemMeta*> ordered;
    ordered.reserve(ds.problems.size());
    for (const auto& p : ds.problems) ordered.push_back(&p);
    std::sort(ordered.begin(), ordered.end(),
              [](const ProblemMeta* a, const ProblemMeta* b) {
                  return a->release_rank < b->release_rank;
              });

    std::vector<ParticipationPoint> series;
    series.reserve(ordered.size());
    for (const auto* p : ordered) {
        ParticipationPoint pt;
        pt.release_rank = p->release_rank;
        auto it = users_by_problem.find(p->id);
        pt.participants = it == users_by_problem.end()
                              ? 0
                              : static_cast<std::int64_t>(it->second.size());
        series.push_back(pt);
    }
    return series;
}

/// Log-linear decay fit: OLS of ln(participants) on release_rank over the
/// strictly positive entries. n0 = exp(intercept), lambda = -slope.
inline ParticipationFit fit_participation(std::vector<ParticipationPoint> series) {
    ParticipationFit fit;
    fit.series = std::move(series);
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : fit.series) {
        if (p.participants > 0)
            pts.emplace_back(static_cast<double>(p.release_rank),
                             std::log(static_cast<double>(p.participants)));
        else
            ++fit.zero_entries_skipped;
    }
    if (pts.size() < 3)
        throw TooFewPositiveError(
            "participation fit needs >= 3 problems with participants > 0, got " +
            std::to_string(pts.size()));
    auto ols = stats::ols(pts);
    fit.n0 = std::exp(ols.intercept);
    fit.lambda = -ols.slope;
    fit.r2 = ols.r2;
    return fit;
}

// ---------------------------------------------------------------------------
// Corrected cumulative series + Submit Line
// ---------------------------------------------------------------------------

struct CumPoint {
    std::int64_t day = 0; // 1-based local-calendar day since semester start
    double ln_day = 0.0;
    std::int64_t cum = 0;
};

struct CorrectionOptions {
    bool exclude_after_accept = true; // correction (b); (a) is always applied
};

/// The "corrected" per-student submission series: (a) in-window logs only,
/// (b) logs on a problem after that user's first Accepted on it are dropped —
/// each problem's record runs until it is passed or abandoned. Points are one
/// per active calendar day: (ln d, cumulative count through day d).
inline std::vector<CumPoint> corrected_cumulative(const CohortDataset& ds,
                                                  const std::string& user_id,
                                                  const CorrectionOptions& opts = {}) {
    bool known = false;
    for (const auto& u : ds.users)
        if (u.user_id == user_id) { known = true; break; }
    if (!known) throw UnknownUserError(user_id);

    std::map<std::string, const TestWindow*> tests;
    for (const auto& t : ds.tests) tests[t.id] = &t;

    std::vector<const LogRecord*> mine;
    for (const auto& log : ds.logs) {
        if (log.user_id != user_id) continue;
        auto it = tests.find(log.test_id);
        if (it == tests.end()) continue;
        if (log.in_time < it->second->start || log.in_time > it->second->end) continue;
        mine.push_back(&log);
    }
    // dataset order is already (in_time, id); the scan below relies on it

    std::set<std::string> passed;
    const std::int64_t day0 = timeutil::local_day(ds.semester_start, ds.tz_offset_min);
    std::map<std::int64_t, std::int64_t> per_day;
    for (const auto* log : mine) {
        if (opts.exclude_after_accept && passed.count(log->problem_id)) continue;
        if (opts.exclude_after_accept && log->verdict.accepted()) passed.insert(log->problem_id);
        const std::int64_t d = timeutil::local_day(log->in_time, ds.tz_offset_min) - day0 + 1;
        ++per_day[d];
    }

    std::vector<CumPoint> points;
    std::int64_t cum = 0;
    for (const auto& [d, n] : per_day) {
        cum += n;
        CumPoint p;
        p.day = d;
        p.ln_day = std::log(static_cast<double>(d));
        p.cum = cum;
        points.push_back(p);
    }
    return points;
}

enum class FitStatus { Ok, InsufficientData };

inline std::string to_string(FitStatus s) {
    return s == FitStatus::Ok ? "ok" : "insufficient_data";
}

struct SubmitLineFit {
    std::string user_id;
    double k_b = 0.0;  // slope of the Submit Line
    double st_b = 0.0; // R^2 of the fit
    std::vector<CumPoint> points;
    FitStatus status = FitStatus::InsufficientData;
};

/// OLS of a cumulative series against ln(day). Needs >= 3 points spanning
/// >= 2 distinct ln_day values; otherwise the fit is insufficient_data.
inline SubmitLineFit submit_line_points(std::string user_id, std::vector<CumPoint> points) {
    SubmitLineFit fit;
    fit.user_id = std::move(user_id);
    fit.points = std::move(points);
    if (fit.points.size() < 3) return fit;
    std::set<double> distinct;
    for (const auto& p : fit.points) distinct.insert(p.ln_day);
    if (distinct.size() < 2) return fit;
    std::vector<std::pair<double, double>> pts;
    pts.reserve(fit.points.size());
    for (const auto& p : fit.points) pts.emplace_back(p.ln_day, static_cast<double>(p.cum));
    auto ols = stats::ols(pts);
    fit.k_b = ols.slope;
    fit.st_b = ols.r2;
    fit.status = FitStatus::Ok;
    return fit;
}

/// Per-student Submit Line over the corrected cumulative series (one point
/// per active day, so the ln_day values are distinct automatically).
inline SubmitLineFit submit_line(const CohortDataset& ds, const std::string& user_id,
                                 const CorrectionOptions& opts = {}) {
    return submit_line_points(user_id, corrected_cumulative(ds, user_id, opts));
}

// ---------------------------------------------------------------------------
// Early warning
// ---------------------------------------------------------------------------

struct WarningRow {
    std::string user_id;
    std::vector<std::string> reasons;
};

struct EarlyWarningConfig {
    double pct = 20.0; // cohort percentile both metrics must fall strictly below
};

/// Percentile-AND fusion rule (a toolkit convention, not an established
/// instrument): flag a student when both the Submit Line slope and the AC
/// count sit strictly below the cohort percentile. Students without enough
/// activity for a Submit Line are flagged as inactive.
inline std::vector<WarningRow> early_warning(const std::vector<AcEntry>& ac,
                                             const std::vector<SubmitLineFit>& lines,
                                             const EarlyWarningConfig& cfg = {}) {
    std::map<std::string, double> kb_by_user;
    std::vector<double> kbs;
    for (const auto& l : lines)
        if (l.status == FitStatus::Ok) {
            kb_by_user[l.user_id] = l.k_b;
            kbs.push_back(l.k_b);
        }
    std::vector<double> acs;
    acs.reserve(ac.size());
    for (const auto& e : ac) acs.push_back(static_cast<double>(e.ac));

    std::optional<double> kb_cut, ac_cut;
    if (!kbs.empty()) kb_cut = stats::percentile(kbs, cfg.pct);
    if (!acs.empty()) ac_cut = stats::percentile(acs, cfg.pct);

    std::map<std::string, const SubmitLineFit*> line_by_user;
    for (const auto& l : lines) line_by_user[l.user_id] = &l;

    std::vector<WarningRow> rows;
    for (const auto& e : ac) {
        auto lit = line_by_user.find(e.user_id);
        const bool no_line = lit == line_by_user.end() ||
                             lit->second->status == FitStatus::InsufficientData;
        if (no_line) {
            rows.push_back({e.user_id, {"inactive"}});
            continue;
        }
        if (!kb_cut || !ac_cut) continue;
        const double kb = kb_by_user.at(e.user_id);
        if (kb < *kb_cut && static_cast<double>(e.ac) < *ac_cut)
            rows.push_back({e.user_id, {"low_submit_slope", "low_ac"}});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Cohort-level batch
// ---------------------------------------------------------------------------

struct AnalysisOptions {
    BandEdges bands{};
    EarlyWarningConfig warning{};
    CorrectionOptions corrections{};
};

struct AnalysisSet {
    std::string label;
    std::vector<AcEntry> ac;
    std::optional<CorrelationRow> correlation;
    std::optional<ParticipationFit> participation;
    std::vector<SubmitLineFit> submit_lines;
    std::vector<WarningRow> warnings;
    std::vector<std::string> notes;
};

/// Runs every model over one dataset. Cohort-level fits that cannot be
/// computed (no scores, too few active problems) become notes instead of
/// failures so a partial report is still possible.
inline AnalysisSet compute_analyses(const CohortDataset& ds, const AnalysisOptions& opts = {}) {
    AnalysisSet out;
    out.label = ds.label;

    std::map<std::string, AcEntry> ac;
    for (const auto& u : ds.users) {
        AcEntry e;
        e.user_id = u.user_id;
        ac[u.user_id] = e;
    }
    std::map<std::string, std::set<std::string>> solved;
    for (const auto& log : ds.logs) {
        auto it = ac.find(log.user_id);
        if (it == ac.end()) continue;
        ++it->second.attempts;
        if (log.verdict.accepted()) solved[log.user_id].insert(log.problem_id);
    }
    for (auto& [uid, e] : ac)
        if (auto it = solved.find(uid); it != solved.end())
            e.ac = static_cast<std::int64_t>(it->second.size());
    for (auto& [uid, e] : ac) out.ac.push_back(e);

    try {
        out.correlation = ac_score_correlation(ds, opts.bands);
    } catch (const Error& e) {
        out.notes.push_back(std::string("correlation unavailable: ") + e.what());
    }

    try {
        out.participation = fit_participation(participation_series(ds));
    } catch (const Error& e) {
        out.notes.push_back(std::string("participation fit unavailable: ") + e.what());
        auto series = participation_series(ds);
        if (!series.empty()) {
            ParticipationFit bare;
            bare.series = std::move(series);
            out.participation = std::move(bare); // series still plottable
        }
    }

    for (const auto& u : ds.users)
        out.submit_lines.push_back(submit_line(ds, u.user_id, opts.corrections));

    out.warnings = early_warning(out.ac, out.submit_lines, opts.warning);
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline json analyses_json(const AnalysisSet& a) {
    json j;
    j["label"] = a.label;
    json ac = json::array();
    for (const auto& e : a.ac)
        ac.push_back({{"user_id", e.user_id}, {"ac", e.ac}, {"attempts", e.attempts}});
    j["ac"] = std::move(ac);
    if (a.correlation) {
        const auto& c = *a.correlation;
        j["correlation"] = {{"label", c.label},
                            {"rho_ac_msc", c.rho_ac_msc},
                            {"band_msc", to_string(c.band_msc)},
                            {"rho_ac_wsc", c.rho_ac_wsc},
                            {"band_wsc", to_string(c.band_wsc)},
                            {"n_users", c.n_users}};
    } else {
        j["correlation"] = nullptr;
    }
    if (a.participation) {
        const auto& p = *a.participation;
        json series = json::array();
        for (const auto& pt : p.series)
            series.push_back({{"release_rank", pt.release_rank},
                              {"participants", pt.participants}});
        j["participation"] = {{"n0", p.n0},
                              {"lambda", p.lambda},
                              {"r2", p.r2},
                              {"zero_entries_skipped", p.zero_entries_skipped},
                              {"series", std::move(series)}};
    } else {
        j["participation"] = nullptr;
    }
    json lines = json::array();
    for (const auto& l : a.submit_lines) {
        json points = json::array();
        for (const auto& p : l.points)
            points.push_back({{"day", p.day}, {"ln_day", p.ln_day}, {"cum", p.cum}});
        lines.push_back({{"user_id", l.user_id},
                         {"status", to_string(l.status)},
                         {"k_b", l.k_b},
                         {"st_b", l.st_b},
                         {"points", std::move(points)}});
    }
    j["submit_lines"] = std::move(lines);
    json warnings = json::array();
    for (const auto& w : a.warnings)
        warnings.push_back({{"user_id", w.user_id}, {"reasons", w.reasons}});
    j["warnings"] = std::move(warnings);
    j["notes"] = a.notes;
    return j;
}

inline Band band_from_string(const std::string& s) {
    if (s == "strong") return Band::Strong;
    if (s == "moderate") return Band::Moderate;
    return Band::Weak;
}

inline AnalysisSet analyses_from_json(const json& j) {
    AnalysisSet a;
    a.label = j.value("label", std::string());
    for (const auto& e : j.at("ac")) {
        AcEntry entry;
        entry.user_id = e.at("user_id").get<std::string>();
        entry.ac = e.at("ac").get<std::int64_t>();
        entry.attempts = e.at("attempts").get<std::int64_t>();
        a.ac.push_back(std::move(entry));
    }
    if (j.contains("correlation") && !j.at("correlation").is_null()) {
        const auto& c = j.at("correlation");
        CorrelationRow row;
        row.label = c.value("label", std::string());
        row.rho_ac_msc = c.at("rho_ac_msc").get<double>();
        row.rho_ac_wsc = c.at("rho_ac_wsc").get<double>();
        row.band_msc = band_from_string(c.value("band_msc", std::string("weak")));
        row.band_wsc = band_from_string(c.value("band_wsc", std::string("weak")));
        row.n_users = c.value("n_users", std::size_t{0});
        a.correlation = std::move(row);
    }
    if (j.contains("participation") && !j.at("participation").is_null()) {
        const auto& p = j.at("participation");
        ParticipationFit fit;
        fit.n0 = p.value("n0", 0.0);
        fit.lambda = p.value("lambda", 0.0);
        fit.r2 = p.value("r2", 0.0);
        fit.zero_entries_skipped = p.value("zero_entries_skipped", std::size_t{0});
        for (const auto& pt : p.at("series")) {
            ParticipationPoint point;
            point.release_rank = pt.at("release_rank").get<std::int64_t>();
            point.participants = pt.at("participants").get<std::int64_t>();
            fit.series.push_back(point);
        }
        a.participation = std::move(fit);
    }
    for (const auto& l : j.at("submit_lines")) {
        SubmitLineFit fit;
        fit.user_id = l.at("user_id").get<std::string>();
        fit.status = l.value("status", std::string("insufficient_data")) == "ok"
                         ? FitStatus::Ok
                         : FitStatus::InsufficientData;
        fit.k_b = l.value("k_b", 0.0);
        fit.st_b = l.value("st_b", 0.0);
        for (const auto& pt : l.at("points")) {
            CumPoint point;
            point.day = pt.at("day").get<std::int64_t>();
            point.ln_day = pt.at("ln_day").get<double>();
            point.cum = pt.at("cum").get<std::int64_t>();
            fit.points.push_back(point);
        }
        a.submit_lines.push_back(std::move(fit));
    }
    if (j.contains("warnings"))
        for (const auto& w : j.at("warnings")) {
            WarningRow row;
            row.user_id = w.at("user_id").get<std::string>();
            for (const auto& r : w.at("reasons")) row.reasons.push_back(r.get<std::string>());
            a.warnings.push_back(std::move(row));
        }
    if (j.contains("notes"))
        for (const auto& n : j.at("notes")) a.notes.push_back(n.get<std::string>());
    return a;
}

} // namespace oja::models
