// Acceptance gate for the toolkit: each criterion prints one PASS/FAIL line
// and the process exits nonzero if any fail. Oracles here are written from
// the textbook formulas, independently of the library implementations.

#include <oja/oja.hpp>

#include "helpers.hpp"
#include "xml_check.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

using namespace oja;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 3) {
    std::ostringstream ss;
    ss.precision(prec);
    ss << v;
    return ss.str();
}

// --- independent statistical oracles (long double, direct formulas) --------

struct OracleOls {
    long double slope = 0, intercept = 0, r2 = 0;
};

OracleOls oracle_ols(const std::vector<std::pair<double, double>>& pts) {
    const long double n = static_cast<long double>(pts.size());
    long double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += static_cast<long double>(x) * x;
        sxy += static_cast<long double>(x) * y;
    }
    OracleOls o;
    o.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    o.intercept = (sy - o.slope * sx) / n;
    long double ss_res = 0, ss_tot = 0;
    const long double ybar = sy / n;
    for (const auto& [x, y] : pts) {
        const long double e = y - (o.intercept + o.slope * x);
        ss_res += e * e;
        ss_tot += (y - ybar) * (y - ybar);
    }
    o.r2 = 1.0L - ss_res / ss_tot;
    return o;
}

long double oracle_pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    const long double n = static_cast<long double>(xs.size());
    long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += static_cast<long double>(xs[i]) * xs[i];
        syy += static_cast<long double>(ys[i]) * ys[i];
        sxy += static_cast<long double>(xs[i]) * ys[i];
    }
    return (n * sxy - sx * sy) / (sqrtl(n * sxx - sx * sx) * sqrtl(n * syy - sy * sy));
}

// Phi(z) by Simpson integration of the density from 0 to |z|; 4000 panels keep
// the quadrature error near 1e-12, far below the 1e-10 gate.
long double phi_quadrature(double z) {
    const long double a = 0.0L;
    const long double b = std::min(fabsl(static_cast<long double>(z)), 10.0L);
    const int panels = 4000;
    const long double h = (b - a) / panels;
    const long double inv_sqrt_2pi = 0.3989422804014326779399460599343818684759L;
    auto density = [&](long double x) { return inv_sqrt_2pi * expl(-0.5L * x * x); };
    long double sum = density(a) + density(b);
    for (int i = 1; i < panels; ++i) sum += density(a + h * i) * (i % 2 ? 4.0L : 2.0L);
    const long double half_mass = sum * h / 3.0L;
    return z >= 0 ? 0.5L + half_mass : 0.5L - half_mass;
}

struct OracleZ {
    long double z = 0, p = 1;
};

OracleZ oracle_z(const std::vector<double>& samples, double mu0) {
    const long double n = static_cast<long double>(samples.size());
    long double s = 0;
    for (double v : samples) s += v;
    const long double mean = s / n;
    long double ss = 0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    const long double sd = sqrtl(ss / (n - 1.0L));
    OracleZ o;
    o.z = (mean - mu0) / (sd / sqrtl(n));
    o.p = 2.0L * (1.0L - phi_quadrature(static_cast<double>(fabsl(o.z))));
    if (o.p > 1.0L) o.p = 1.0L;
    return o;
}

// --- criteria ---------------------------------------------------------------

Outcome criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    long double worst_ols = 0, worst_pe = 0, worst_z = 0, worst_p = 0, worst_cdf = 0;

    rng::Rng r(0x5EED0001);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = static_cast<int>(r.uniform_int(3, 60));
        std::vector<std::pair<double, double>> pts;
        const double a = r.uniform(-10, 10), b = r.uniform(-5, 5);
        for (int i = 0; i < n; ++i) {
            const double x = r.uniform(-50, 50);
            pts.emplace_back(x, a + b * x + r.normal(0.0, 3.0));
        }
        auto fit = stats::ols(pts);
        auto o = oracle_ols(pts);
        worst_ols = std::max({worst_ols, fabsl(fit.slope - o.slope),
                              fabsl(fit.intercept - o.intercept), fabsl(fit.r2 - o.r2)});
    }

    rng::Rng r2(0x5EED0002);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = static_cast<int>(r2.uniform_int(3, 80));
        std::vector<double> xs, ys;
        const double b = r2.uniform(-2, 2);
        for (int i = 0; i < n; ++i) {
            xs.push_back(r2.uniform(-30, 30));
            ys.push_back(b * xs.back() + r2.normal(0.0, 5.0));
        }
        worst_pe = std::max(worst_pe,
                            fabsl(stats::pearson(xs, ys) - oracle_pearson(xs, ys)));
    }

    rng::Rng r3(0x5EED0003);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = static_cast<int>(r3.uniform_int(30, 300));
        const double mu0 = r3.uniform(-5, 5);
        const double shift = r3.uniform(-0.5, 0.5);
        std::vector<double> samples;
        for (int i = 0; i < n; ++i) samples.push_back(mu0 + shift + r3.normal(0.0, 2.0));
        auto zt = stats::z_test(samples, mu0);
        auto o = oracle_z(samples, mu0);
        worst_z = std::max(worst_z, fabsl(zt.z - o.z));
        worst_p = std::max(worst_p, fabsl(zt.p - o.p));
    }

    for (double z = -8.0; z <= 8.0 + 1e-12; z += 0.25)
        worst_cdf = std::max(worst_cdf,
                             fabsl(static_cast<long double>(stats::std_normal_cdf(z)) -
                                   phi_quadrature(z)));

    const double elapsed = seconds_since(t0);
    const long double worst =
        std::max({worst_ols, worst_pe, worst_z, worst_p, worst_cdf});
    Outcome out;
    out.pass = worst <= 1e-10L && elapsed < 5.0;
    out.detail = "max deviations: ols " + fmt(static_cast<double>(worst_ols), 2) +
                 ", pearson " + fmt(static_cast<double>(worst_pe), 2) + ", z " +
                 fmt(static_cast<double>(worst_z), 2) + ", p " +
                 fmt(static_cast<double>(worst_p), 2) + ", cdf " +
                 fmt(static_cast<double>(worst_cdf), 2) + "; " + fmt(elapsed, 2) + "s";
    return out;
}

Outcome criterion2() {
    const double change = stats::yoy_change(10491, 8493);
    const std::string rendered = stats::format_percent_int(change);
    Outcome out;
    out.pass = rendered == "-19%";
    out.detail = "yoy_change(10491, 8493) = " + fmt(change, 6) + " rendered \"" + rendered +
                 "\"";
    return out;
}

Outcome criterion3() {
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = simulate::preset("y2017");
    cfg.dropout_lambda = 0.15;
    std::vector<double> rel_errs;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto sim = simulate::simulate_cohort(cfg, seed);
        auto cleaned = clean::run_clean(sim.dataset);
        auto fit = models::fit_participation(models::participation_series(cleaned.dataset));
        rel_errs.push_back(std::fabs(fit.lambda - cfg.dropout_lambda) / cfg.dropout_lambda);
    }
    const double median = stats::percentile(rel_errs, 50.0);

    simulate::SimConfig flat;
    flat.label = "flat";
    flat.students = 64;
    flat.tests = 8;
    flat.total_problems = 64;
    flat.semester_days = 56;
    flat.dropout_lambda = 0.0;
    flat.alt_fraction = 0.0;
    flat.late_fraction = 0.0;
    flat.duplicate_count = 0;
    flat.score_noise = 0.0;
    auto noiseless = simulate::simulate_cohort(flat, 1);
    auto nfit = models::fit_participation(models::participation_series(noiseless.dataset));
    const double lambda_err = std::fabs(nfit.lambda);
    const double n0_err = std::fabs(nfit.n0 - 64.0);

    const double elapsed = seconds_since(t0);
    Outcome out;
    out.pass = median <= 0.10 && lambda_err <= 1e-9 && n0_err <= 64.0 * 1e-9 && elapsed < 30.0;
    out.detail = "median lambda rel err " + fmt(median) + " over 20 seeds; noiseless |dλ| " +
                 fmt(lambda_err, 2) + ", |dn0| " + fmt(n0_err, 2) + "; " + fmt(elapsed, 2) +
                 "s";
    return out;
}

Outcome criterion4() {
    std::vector<models::CumPoint> pts;
    for (std::int64_t d = 1; d <= 14; ++d) {
        models::CumPoint p;
        p.day = d;
        p.ln_day = std::log(static_cast<double>(d));
        p.cum = std::llround(5.0 * p.ln_day + 3.0);
        pts.push_back(p);
    }
    auto fixture = models::submit_line_points("fixture", pts);
    const bool fixture_ok = fixture.status == models::FitStatus::Ok &&
                            std::fabs(fixture.k_b - 5.0) <= 0.1 && fixture.st_b >= 0.99;

    simulate::SimConfig cfg;
    cfg.label = "bulk";
    cfg.students = 500;
    cfg.tests = 4;
    cfg.total_problems = 16;
    cfg.semester_days = 28;
    cfg.dropout_lambda = 0.15;
    std::size_t users_checked = 0, ok_fits = 0, insufficient = 0;
    std::size_t negative_slopes = 0, gate_violations = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto sim = simulate::simulate_cohort(cfg, seed);
        auto cleaned = clean::run_clean(sim.dataset);
        for (const auto& u : cleaned.dataset.users) {
            auto fit = models::submit_line(cleaned.dataset, u.user_id);
            ++users_checked;
            if (fit.status == models::FitStatus::Ok) {
                ++ok_fits;
                if (fit.k_b < 0.0) ++negative_slopes;
                if (fit.points.size() < 3) ++gate_violations;
            } else {
                ++insufficient;
                std::set<double> distinct;
                for (const auto& p : fit.points) distinct.insert(p.ln_day);
                if (fit.points.size() >= 3 && distinct.size() >= 2) ++gate_violations;
            }
        }
    }

    Outcome out;
    out.pass = fixture_ok && users_checked >= 10000 && negative_slopes == 0 &&
               gate_violations == 0;
    out.detail = "fixture k_b " + fmt(fixture.k_b, 5) + ", st_b " + fmt(fixture.st_b, 5) +
                 "; " + std::to_string(users_checked) + " users (" + std::to_string(ok_fits) +
                 " ok, " + std::to_string(insufficient) + " insufficient), " +
                 std::to_string(negative_slopes) + " negative slopes, " +
                 std::to_string(gate_violations) + " gate violations";
    return out;
}

Outcome criterion5() {
    simulate::SimConfig cfg;
    cfg.label = "alts";
    cfg.students = 60;
    cfg.tests = 6;
    cfg.total_problems = 30;
    cfg.semester_days = 42;
    cfg.dropout_lambda = 0.10;
    cfg.alt_fraction = 0.10;

    std::size_t true_total = 0, found_total = 0, hits = 0;
    bool conserved = true;
    std::size_t planted_accounts = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto sim = simulate::simulate_cohort(cfg, seed);
        planted_accounts += sim.truth.alt_of.size();

        std::set<std::pair<std::string, std::string>> truth_pairs;
        std::map<std::string, std::vector<std::string>> family;
        for (const auto& [alt, owner] : sim.truth.alt_of) family[owner].push_back(alt);
        for (auto& [owner, alts] : family) {
            std::vector<std::string> members = alts;
            members.push_back(owner);
            std::sort(members.begin(), members.end());
            for (std::size_t i = 0; i < members.size(); ++i)
                for (std::size_t j = i + 1; j < members.size(); ++j)
                    truth_pairs.emplace(members[i], members[j]);
        }

        auto clusters = clean::detect_alts(sim.dataset, sim.dataset.users);
        std::set<std::pair<std::string, std::string>> found_pairs;
        for (const auto& c : clusters)
            for (std::size_t i = 0; i < c.members.size(); ++i)
                for (std::size_t j = i + 1; j < c.members.size(); ++j)
                    found_pairs.emplace(c.members[i], c.members[j]);

        true_total += truth_pairs.size();
        found_total += found_pairs.size();
        for (const auto& p : found_pairs)
            if (truth_pairs.count(p)) ++hits;

        auto applied =
            clean::apply_alt_policy(sim.dataset, clusters, clean::AltPolicy::Reassign);
        if (applied.dataset.logs.size() != sim.dataset.logs.size()) conserved = false;
    }

    const double precision =
        found_total == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(found_total);
    const double recall =
        true_total == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(true_total);
    Outcome out;
    out.pass = precision >= 0.95 && recall >= 0.90 && conserved && planted_accounts > 0;
    out.detail = "precision " + fmt(precision) + ", recall " + fmt(recall) + " over " +
                 std::to_string(true_total) + " planted pairs (20 seeds); reassign " +
                 (conserved ? "conserves log count" : "LOST LOGS");
    return out;
}

Outcome criterion6() {
    simulate::SimConfig cfg;
    cfg.label = "arith";
    cfg.students = 25;
    cfg.tests = 5;
    cfg.total_problems = 20;
    cfg.semester_days = 35;
    cfg.dropout_lambda = 0.12;
    cfg.alt_fraction = 0.15;
    cfg.late_fraction = 0.08;
    cfg.duplicate_count = 7;

    std::size_t datasets = 0, conserved = 0, fixed_points = 0;
    auto check = [&](const CohortDataset& ds, clean::AltPolicy policy) {
        ++datasets;
        clean::CleanOptions opts;
        opts.alt_policy = policy;
        auto first = clean::run_clean(ds, opts);
        if (first.report.conserved()) ++conserved;
        auto second = clean::run_clean(first.dataset, opts);
        const bool unchanged = second.report.duplicates_removed == 0 &&
                               second.report.out_of_window == 0 &&
                               second.report.logs_deleted == 0 &&
                               second.report.users_removed == 0 &&
                               second.report.logs_reassigned == 0 &&
                               io::dataset_digest(second.dataset) ==
                                   io::dataset_digest(first.dataset);
        if (unchanged && second.report.conserved()) ++fixed_points;
    };

    for (std::uint64_t seed = 1; seed <= 10; ++seed)
        check(simulate::simulate_cohort(cfg, seed).dataset, clean::AltPolicy::Reassign);
    check(simulate::simulate_cohort(cfg, 99).dataset, clean::AltPolicy::Delete);
    check(simulate::simulate_cohort(simulate::preset("y2019"), 3).dataset,
          clean::AltPolicy::Reassign);

    Outcome out;
    out.pass = conserved == datasets && fixed_points == datasets;
    out.detail = std::to_string(conserved) + "/" + std::to_string(datasets) +
                 " conserved, " + std::to_string(fixed_points) + "/" +
                 std::to_string(datasets) + " idempotent fixed points";
    return out;
}

Outcome criterion7() {
    const double values[] = {0.7131, 0.6074, 0.5440, 0.7265, 0.6697, 0.6922};
    std::size_t moderate = 0;
    for (double v : values)
        if (models::band_of(v) == models::Band::Moderate) ++moderate;
    Outcome out;
    out.pass = moderate == 6;
    out.detail = std::to_string(moderate) + "/6 published values classify moderate";
    return out;
}

struct ScaleRun {
    fs::path report_dir;
    bool ran = false;
};

ScaleRun g_scale;

Outcome criterion8(const fs::path& scratch) {
    auto cfg = simulate::preset("y2017");
    auto sim = simulate::simulate_cohort(cfg, 42);
    const std::size_t raw_logs = sim.dataset.logs.size();
    const fs::path data_dir = scratch / "y2017";
    io::save_dataset(sim.dataset, data_dir);

    const auto t0 = std::chrono::steady_clock::now();
    auto ds = io::load_dataset(data_dir);
    auto cleaned = clean::run_clean(ds);
    auto analyses = models::compute_analyses(cleaned.dataset);
    auto bundle = report::render_report(cleaned.dataset, cleaned.report, analyses,
                                        scratch / "report");
    const double elapsed = seconds_since(t0);

    struct rusage ru {};
    getrusage(RUSAGE_SELF, &ru);
    const double peak_mb = static_cast<double>(ru.ru_maxrss) / 1024.0;

    g_scale.report_dir = scratch / "report";
    g_scale.ran = true;

    const bool scale_ok = raw_logs >= 8900 && raw_logs <= 12100; // ~10.5k +/- 15%
    Outcome out;
    out.pass = scale_ok && elapsed < 10.0 && peak_mb < 500.0 && !bundle.digests.empty();
    out.detail = std::to_string(ds.users.size()) + " users, " + std::to_string(raw_logs) +
                 " raw logs, " + std::to_string(ds.problems.size()) + " problems; " +
                 fmt(elapsed, 2) + "s, peak rss " + fmt(peak_mb, 4) + " MB";
    return out;
}

Outcome criterion9(const fs::path& scratch) {
    using testutil::run_cli;
    using testutil::slurp;
    const fs::path d1 = scratch / "det1", d2 = scratch / "det2";
    auto s1 = run_cli({"simulate", "--preset", "y2019", "--seed", "42", "--out", d1.string()});
    auto s2 = run_cli({"simulate", "--preset", "y2019", "--seed", "42", "--out", d2.string()});
    bool sim_same = s1.exit_code == 0 && s2.exit_code == 0 &&
                    slurp(d1 / "manifest.json") == slurp(d2 / "manifest.json") &&
                    slurp(d1 / "logs.jsonl") == slurp(d2 / "logs.jsonl") &&
                    slurp(d1 / "truth.json") == slurp(d2 / "truth.json");

    const fs::path r1 = scratch / "run1", r2 = scratch / "run2";
    auto a1 = run_cli({"all", "--data", d1.string(), "--seed", "42", "--out", r1.string()});
    auto a2 = run_cli({"all", "--data", d1.string(), "--seed", "42", "--out", r2.string()});
    bool all_same = a1.exit_code == 0 && a2.exit_code == 0 &&
                    slurp(r1 / "report" / "manifest.json") ==
                        slurp(r2 / "report" / "manifest.json") &&
                    slurp(r1 / "report" / "summary.md") == slurp(r2 / "report" / "summary.md");

    Outcome out;
    out.pass = sim_same && all_same;
    out.detail = std::string("simulate ") + (sim_same ? "byte-identical" : "DIVERGED") +
                 "; report manifests " + (all_same ? "byte-identical" : "DIVERGED");
    return out;
}

Outcome criterion10() {
    Outcome out;
    if (!g_scale.ran) {
        out.detail = "scale run unavailable (criterion 8 did not produce a bundle)";
        return out;
    }
    const fs::path& dir = g_scale.report_dir;
    const char* tables[] = {"tables/clean_report.json", "tables/ac.csv",
                            "tables/submit_lines.csv", "tables/participation.csv",
                            "tables/correlations.csv", "tables/ztests.csv",
                            "tables/warnings.csv"};
    std::size_t tables_found = 0;
    for (const char* rel : tables)
        if (fs::exists(dir / rel)) ++tables_found;

    bool participation_fig = fs::exists(dir / "figures/participation.svg");
    std::size_t submit_figs = 0, svg_total = 0, svg_ok = 0;
    std::string first_error;
    if (fs::exists(dir / "figures"))
        for (const auto& e : fs::directory_iterator(dir / "figures")) {
            const std::string name = e.path().filename().string();
            if (name.size() < 4 || name.substr(name.size() - 4) != ".svg") continue;
            ++svg_total;
            if (name.rfind("submit_line_", 0) == 0) ++submit_figs;
            auto res = testutil::check_xml(testutil::slurp(e.path()));
            if (res.ok) ++svg_ok;
            else if (first_error.empty()) first_error = name + ": " + res.error;
        }

    out.pass = tables_found == 7 && participation_fig && submit_figs >= 1 &&
               svg_total >= 3 && svg_ok == svg_total;
    out.detail = std::to_string(tables_found) + "/7 tables; " + std::to_string(svg_total) +
                 " SVGs, " + std::to_string(svg_ok) + " well-formed" +
                 (first_error.empty() ? "" : " (" + first_error + ")");
    return out;
}

} // namespace

int main() {
    testutil::TempDir scratch;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"statistical primitives match independent oracles", criterion1},
        {"year-on-year fixture renders as a 19% decrease", criterion2},
        {"participation decay recovery", criterion3},
        {"submit-line fixture and slope non-negativity", criterion4},
        {"alt-account detection precision/recall", criterion5},
        {"cleaning arithmetic and idempotence", criterion6},
        {"published correlations classify moderate", criterion7},
        {"pipeline scale run", [&] { return criterion8(scratch.path()); }},
        {"end-to-end determinism", [&] { return criterion9(scratch.path()); }},
        {"report bundle completeness", criterion10},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        if (!out.pass) ++failures;
        std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << ": "
                  << criteria[i].first << " (" << out.detail << ")\n";
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/"
              << criteria.size() << " acceptance criteria passed\n";
    return failures == 0 ? 0 : 1;
}
