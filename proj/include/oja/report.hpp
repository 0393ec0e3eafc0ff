#pragma once

#include <oja/clean.hpp>
#include <oja/csv.hpp>
#include <oja/datamodel.hpp>
#include <oja/digest.hpp>
#include <oja/errors.hpp>
#include <oja/models.hpp>
#include <oja/stats.hpp>
#include <oja/svg.hpp>
#include <oja/timeutil.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace oja::report {

using json = nlohmann::ordered_json;

namespace detail {

inline std::string fmt4(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

// up to 4 decimals with trailing zeros trimmed: 22.89 stays "22.89",
// 2032.0 becomes "2032"
inline std::string fmt_trim(double v) {
    std::string s = fmt4(v);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s.empty() ? "0" : s;
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OutputUnwritableError(path.string());
    out << content;
    out.flush();
    if (!out) throw OutputUnwritableError(path.string());
}

} // namespace detail

/// Short symbol for a screened variable, as test reports conventionally
/// abbreviate them: run time t, memory m.
inline std::string variable_symbol(const std::string& variable) {
    if (variable == "time_ms") return "t";
    if (variable == "memory_kb") return "m";
    return variable;
}

/// One markdown row of the variable-screening table. The decision column
/// speaks in hypothesis terms: failing to reject H0 (p > alpha) is what
/// marks a variable uninformative.
inline std::string ztest_row_markdown(const clean::PruneRow& row) {
    std::string out = "| " + variable_symbol(row.variable) + " | " + std::to_string(row.n) +
                      " | " + detail::fmt_trim(row.mu0) + " | " + detail::fmt_trim(row.mean) +
                      " | " + detail::fmt4(row.z) + " | " + detail::fmt4(row.p) + " | " +
                      (row.prune ? "Accept H_0" : "Reject H_0") + " |";
    return out;
}

inline std::string correlation_row_markdown(const models::CorrelationRow& c) {
    return "| " + c.label + " | " + detail::fmt4(c.rho_ac_msc) + " | " +
           models::to_string(c.band_msc) + " | " + detail::fmt4(c.rho_ac_wsc) + " | " +
           models::to_string(c.band_wsc) + " |";
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

inline std::string ac_csv(const models::AnalysisSet& a) {
    std::string out = csv::row_string({"user_id", "ac", "attempts"});
    for (const auto& e : a.ac)
        out += csv::row_string({e.user_id, std::to_string(e.ac), std::to_string(e.attempts)});
    return out;
}

inline std::string submit_lines_csv(const models::AnalysisSet& a) {
    std::string out = csv::row_string({"user_id", "k_b", "st_b", "status", "n_points"});
    for (const auto& l : a.submit_lines) {
        const bool ok = l.status == models::FitStatus::Ok;
        out += csv::row_string({l.user_id, ok ? detail::fmt4(l.k_b) : "",
                                ok ? detail::fmt4(l.st_b) : "", models::to_string(l.status),
                                std::to_string(l.points.size())});
    }
    return out;
}

inline std::string participation_csv(const models::AnalysisSet& a) {
    std::string out = csv::row_string({"release_rank", "participants"});
    if (a.participation)
        for (const auto& p : a.participation->series)
            out += csv::row_string(
                {std::to_string(p.release_rank), std::to_string(p.participants)});
    return out;
}

inline std::string correlations_csv(const models::AnalysisSet& a) {
    std::string out = csv::row_string(
        {"label", "n_users", "rho_ac_msc", "band_msc", "rho_ac_wsc", "band_wsc"});
    if (a.correlation) {
        const auto& c = *a.correlation;
        out += csv::row_string({c.label, std::to_string(c.n_users), detail::fmt4(c.rho_ac_msc),
                                models::to_string(c.band_msc), detail::fmt4(c.rho_ac_wsc),
                                models::to_string(c.band_wsc)});
    }
    return out;
}

inline std::string ztests_csv(const clean::CleanReport& r) {
    std::string out =
        csv::row_string({"variable", "symbol", "n", "mu0", "mean", "z", "p", "decision"});
    for (const auto& row : r.prune.rows)
        out += csv::row_string({row.variable, variable_symbol(row.variable),
                                std::to_string(row.n), detail::fmt_trim(row.mu0),
                                detail::fmt4(row.mean), detail::fmt4(row.z), detail::fmt4(row.p),
                                row.prune ? "prune" : "keep"});
    return out;
}

inline std::string warnings_csv(const models::AnalysisSet& a) {
    std::string out = csv::row_string({"user_id", "reasons"});
    for (const auto& w : a.warnings) {
        std::string reasons;
        for (const auto& r : w.reasons) {
            if (!reasons.empty()) reasons += "; ";
            reasons += r;
        }
        out += csv::row_string({w.user_id, reasons});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Figures
// ---------------------------------------------------------------------------

inline std::string participation_figure(const models::ParticipationFit& fit,
                                        const std::string& label) {
    svg::FigureSpec spec;
    spec.title = "Participation curve — " + label;
    spec.x_label = "problem release rank";
    spec.y_label = "participants";
    svg::Series observed;
    observed.name = "participants";
    for (const auto& p : fit.series)
        observed.points.emplace_back(static_cast<double>(p.release_rank),
                                     static_cast<double>(p.participants));
    spec.lines.push_back(std::move(observed));
    if (fit.n0 > 0) {
        svg::Series model;
        model.name = "n0*exp(-lambda*k)";
        for (const auto& p : fit.series)
            model.points.emplace_back(
                static_cast<double>(p.release_rank),
                fit.n0 * std::exp(-fit.lambda * static_cast<double>(p.release_rank)));
        spec.lines.push_back(std::move(model));
    }
    return svg::render_svg(spec);
}

inline std::string submit_line_figure(const models::SubmitLineFit& fit) {
    svg::FigureSpec spec;
    spec.title = "Submit Line — " + fit.user_id;
    spec.x_label = "ln(day)";
    spec.y_label = "corrected cumulative submissions";
    svg::Series data;
    data.name = "cumulative";
    for (const auto& p : fit.points)
        data.points.emplace_back(p.ln_day, static_cast<double>(p.cum));
    spec.lines.push_back(std::move(data));
    if (fit.status == models::FitStatus::Ok && !fit.points.empty()) {
        svg::Series line;
        line.name = "fit k_b=" + detail::fmt_trim(fit.k_b);
        const double x0 = fit.points.front().ln_day, x1 = fit.points.back().ln_day;
        const double b =
            static_cast<double>(fit.points.back().cum) - fit.k_b * x1; // anchor via last point
        line.points.emplace_back(x0, fit.k_b * x0 + b);
        line.points.emplace_back(x1, fit.k_b * x1 + b);
        spec.lines.push_back(std::move(line));
    }
    svg::BarSeries daily;
    daily.name = "per-day";
    std::int64_t prev = 0;
    for (const auto& p : fit.points) {
        daily.values.emplace_back(p.ln_day, static_cast<double>(p.cum - prev));
        prev = p.cum;
    }
    spec.bars.push_back(std::move(daily));
    return svg::render_svg(spec);
}

inline std::string daily_figure(const models::SubmitLineFit& fit) {
    svg::FigureSpec spec;
    spec.title = "Daily submissions — " + fit.user_id;
    spec.x_label = "day of semester";
    spec.y_label = "submissions";
    svg::Series data;
    data.name = "per-day";
    std::int64_t prev = 0;
    for (const auto& p : fit.points) {
        data.points.emplace_back(static_cast<double>(p.day), static_cast<double>(p.cum - prev));
        prev = p.cum;
    }
    spec.lines.push_back(std::move(data));
    return svg::render_svg(spec);
}

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

struct BaselineCounts {
    std::string label;
    std::int64_t logs = 0;
};

struct ReportOptions {
    std::optional<BaselineCounts> baseline; // enables the year-on-year line
    std::size_t figure_users = 2;           // most-active students to plot
};

struct ReportBundle {
    std::filesystem::path dir;
    std::map<std::string, std::string> digests; // relative path -> sha256
};

namespace detail {

inline std::string overview_section(const CohortDataset& ds,
                                    const clean::CleanReport& cr,
                                    const std::optional<BaselineCounts>& baseline) {
    std::size_t rostered = 0;
    for (const auto& u : ds.users)
        if (!u.roster_no.empty()) ++rostered;
    std::ostringstream md;
    md << "## Cohort overview\n\n";
    md << "- cohort: " << ds.label << "\n";
    md << "- students: " << ds.users.size() << " (" << rostered << " roster-matched)\n";
    md << "- tests: " << ds.tests.size() << ", problems released: " << ds.problems.size() << "\n";
    md << "- submission logs after cleaning: " << ds.logs.size() << " (raw input "
       << cr.input_logs << ")\n";
    if (!ds.tests.empty())
        md << "- semester start: " << timeutil::format_local(ds.semester_start, ds.tz_offset_min)
           << " (UTC" << (ds.tz_offset_min >= 0 ? "+" : "-")
           << std::abs(ds.tz_offset_min) / 60 << ":"
       << (std::abs(ds.tz_offset_min) % 60 < 10 ? "0" : "")
           << std::abs(ds.tz_offset_min) % 60 << ")\n";
    if (baseline && baseline->logs > 0) {
        const double change =
            stats::yoy_change(baseline->logs, static_cast<std::int64_t>(ds.logs.size()));
        md << "- year-on-year: " << ds.logs.size() << " logs vs " << baseline->logs << " in "
           << baseline->label << " -> " << stats::format_percent_int(change) << "\n";
    }
    md << "\n";
    return md.str();
}

} // namespace detail

/// Writes the full bundle: summary.md, tables/, figures/, manifest.json.
/// Everything is rendered from already-computed inputs with stable ordering
/// and fixed number formats, so identical inputs give identical bytes.
inline ReportBundle render_report(const CohortDataset& ds, const clean::CleanReport& cr,
                                  const models::AnalysisSet& analyses,
                                  const std::filesystem::path& outdir,
                                  const ReportOptions& opts = {}) {
    namespace fs = std::filesystem;
    ReportBundle bundle;
    bundle.dir = outdir;
    std::error_code ec;
    fs::create_directories(outdir / "tables", ec);
    fs::create_directories(outdir / "figures", ec);
    if (ec) throw OutputUnwritableError(outdir.string() + ": " + ec.message());

    auto emit = [&bundle, &outdir](const std::string& rel, const std::string& content) {
        detail::write_text(outdir / rel, content);
        bundle.digests[rel] = digest::sha256_hex(content);
    };

    // tables
    emit("tables/clean_report.json", clean::clean_report_json(cr).dump(2) + "\n");
    emit("tables/ac.csv", ac_csv(analyses));
    emit("tables/submit_lines.csv", submit_lines_csv(analyses));
    emit("tables/participation.csv", participation_csv(analyses));
    emit("tables/correlations.csv", correlations_csv(analyses));
    emit("tables/ztests.csv", ztests_csv(cr));
    emit("tables/warnings.csv", warnings_csv(analyses));

    // figures: participation + the most active students' submit lines
    bool have_participation_figure = false;
    std::vector<std::string> student_figures;
    if (analyses.participation && !analyses.participation->series.empty()) {
        emit("figures/participation.svg",
             participation_figure(*analyses.participation, ds.label));
        have_participation_figure = true;
    }
    std::vector<const models::SubmitLineFit*> active;
    for (const auto& l : analyses.submit_lines)
        if (l.status == models::FitStatus::Ok && !l.points.empty()) active.push_back(&l);
    std::map<std::string, std::int64_t> attempts;
    for (const auto& e : analyses.ac) attempts[e.user_id] = e.attempts;
    std::sort(active.begin(), active.end(),
              [&attempts](const models::SubmitLineFit* a, const models::SubmitLineFit* b) {
                  const auto aa = attempts.count(a->user_id) ? attempts[a->user_id] : 0;
                  const auto ab = attempts.count(b->user_id) ? attempts[b->user_id] : 0;
                  if (aa != ab) return aa > ab;
                  return a->user_id < b->user_id;
              });
    for (std::size_t i = 0; i < active.size() && i < opts.figure_users; ++i) {
        const auto& fit = *active[i];
        emit("figures/submit_line_" + fit.user_id + ".svg", submit_line_figure(fit));
        emit("figures/daily_" + fit.user_id + ".svg", daily_figure(fit));
        student_figures.push_back("figures/submit_line_" + fit.user_id + ".svg");
        student_figures.push_back("figures/daily_" + fit.user_id + ".svg");
    }

    // summary
    std::ostringstream md;
    md << "# Course analytics report: " << ds.label << "\n\n";
    md << detail::overview_section(ds, cr, opts.baseline);

    md << "## Cleaning\n\n";
    md << "| Stage | Count |\n|---|---|\n";
    md << "| input logs | " << cr.input_logs << " |\n";
    md << "| exact duplicates removed | " << cr.duplicates_removed << " |\n";
    md << "| out-of-window excluded | " << cr.out_of_window << " |\n";
    md << "| alt clusters found | " << cr.alt_clusters << " |\n";
    md << "| logs reassigned to primary accounts | " << cr.logs_reassigned << " |\n";
    md << "| logs deleted with alt accounts | " << cr.logs_deleted << " |\n";
    md << "| accounts removed | " << cr.users_removed << " |\n";
    md << "| output logs | " << cr.output_logs << " |\n\n";
    md << "Count conservation: input = output + duplicates + out-of-window + deleted ("
       << (cr.conserved() ? "holds" : "VIOLATED") << "). Full table: "
       << "[tables/clean_report.json](tables/clean_report.json)\n\n";

    md << "## Variable screening (one-sample z-tests)\n\n";
    if (!cr.prune.rows.empty()) {
        md << "| Variable | n | mu_0 | Sample mean | z | P_value | Decision |\n";
        md << "|---|---|---|---|---|---|---|\n";
        for (const auto& row : cr.prune.rows) md << ztest_row_markdown(row) << "\n";
        md << "\nAccept H_0 means the variable's mean is indistinguishable from the"
              " historical baseline mu_0, so it is excluded from the behavioral models"
              " (the data itself is retained). CSV: [tables/ztests.csv](tables/ztests.csv)\n\n";
    } else {
        md << "Not run (sample below the large-sample threshold)."
              " CSV: [tables/ztests.csv](tables/ztests.csv)\n\n";
    }

    md << "## Participation\n\n";
    if (analyses.participation && analyses.participation->n0 > 0) {
        const auto& p = *analyses.participation;
        md << "Exponential decay fit over problems in release order: n0 = "
           << detail::fmt_trim(p.n0) << ", lambda = " << detail::fmt4(p.lambda)
           << " per problem, R^2 = " << detail::fmt4(p.r2);
        if (p.zero_entries_skipped > 0)
            md << " (" << p.zero_entries_skipped << " zero-participant problems skipped)";
        md << ".\n\n";
    } else {
        md << "Decay fit unavailable for this cohort.\n\n";
    }
    md << "Series: [tables/participation.csv](tables/participation.csv)";
    if (have_participation_figure)
        md << " — figure: [figures/participation.svg](figures/participation.svg)";
    md << "\n\n";

    md << "## AC vs exam scores\n\n";
    if (analyses.correlation) {
        md << "| Cohort | rho(AC, MSC) | Band | rho(AC, WSC) | Band |\n";
        md << "|---|---|---|---|---|\n";
        md << correlation_row_markdown(*analyses.correlation) << "\n\n";
        md << "Bands: weak < 0.4 <= moderate < 0.8 <= strong (|rho|). CSV: "
              "[tables/correlations.csv](tables/correlations.csv)\n\n";
    } else {
        md << "Correlation unavailable (needs at least three scored students with"
              " non-constant values). CSV: [tables/correlations.csv](tables/correlations.csv)\n\n";
    }

    md << "## Submit Lines\n\n";
    {
        std::size_t ok = 0;
        std::vector<double> kbs, stbs;
        for (const auto& l : analyses.submit_lines)
            if (l.status == models::FitStatus::Ok) {
                ++ok;
                kbs.push_back(l.k_b);
                stbs.push_back(l.st_b);
            }
        md << ok << " of " << analyses.submit_lines.size()
           << " students have enough active days for a fit";
        if (!kbs.empty())
            md << "; median k_b = " << detail::fmt4(stats::percentile(kbs, 50.0))
               << ", median st_b = " << detail::fmt4(stats::percentile(stbs, 50.0));
        md << ". Per-student table: [tables/submit_lines.csv](tables/submit_lines.csv)\n\n";
        for (const auto& f : student_figures) md << "![" << f << "](" << f << ")\n";
        if (!student_figures.empty()) md << "\n";
    }

    md << "## Early warnings\n\n";
    md << "Flag rule (a convention of this toolkit, not an established instrument):"
          " a student is flagged when both the AC count and the Submit-Line slope k_b"
          " fall strictly below the cohort's 20th percentile; students without enough"
          " activity for a fit are flagged as inactive. The post-accept exclusion used"
          " in the corrected series is likewise a toolkit convention.\n\n";
    if (analyses.warnings.empty()) {
        md << "No students flagged. CSV: [tables/warnings.csv](tables/warnings.csv)\n";
    } else {
        md << "| Student | Reasons |\n|---|---|\n";
        for (const auto& w : analyses.warnings) {
            std::string reasons;
            for (const auto& r : w.reasons) {
                if (!reasons.empty()) reasons += "; ";
                reasons += r;
            }
            md << "| " << w.user_id << " | " << reasons << " |\n";
        }
        md << "\nCSV: [tables/warnings.csv](tables/warnings.csv)\n";
    }
    if (!analyses.notes.empty()) {
        md << "\n## Notes\n\n";
        for (const auto& n : analyses.notes) md << "- " << n << "\n";
    }
    emit("summary.md", md.str());

    // manifest last: it digests everything else
    json manifest;
    manifest["label"] = ds.label;
    json files = json::object();
    for (const auto& [rel, dg] : bundle.digests) files[rel] = "sha256:" + dg;
    manifest["files"] = std::move(files);
    detail::write_text(outdir / "manifest.json", manifest.dump(2) + "\n");
    return bundle;
}

} // namespace oja::report
