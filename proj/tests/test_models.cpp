#include <catch2/catch_amalgamated.hpp>

#include <oja/models.hpp>
#include <oja/rng.hpp>

#include "cohort_fixtures.hpp"

#include <cmath>

using namespace oja;
using testutil::kDay;
using testutil::kDay0Local;
using testutil::make_log;

TEST_CASE("ac index counts distinct accepted problems") {
    auto ds = testutil::small_cohort();
    auto a1 = models::ac_index(ds, "u001");
    REQUIRE(a1.ac == 3);
    REQUIRE(a1.attempts == 4);
    auto a2 = models::ac_index(ds, "u002");
    REQUIRE(a2.ac == 1);
    REQUIRE(a2.attempts == 2);
    auto a3 = models::ac_index(ds, "u003");
    REQUIRE(a3.ac == 0);
    REQUIRE(a3.attempts == 0);
    REQUIRE_THROWS_AS(models::ac_index(ds, "nobody"), UnknownUserError);

    // re-accepting the same problem does not raise ac
    ds.logs.push_back(make_log(800, "p001", "t01", "u002", ds.tests[0].start + 7200,
                               VerdictKind::Accepted));
    canonicalize(ds);
    REQUIRE(models::ac_index(ds, "u002").ac == 1);
}

TEST_CASE("correlation bands") {
    using models::Band;
    REQUIRE(models::band_of(0.0) == Band::Weak);
    REQUIRE(models::band_of(0.3999) == Band::Weak);
    REQUIRE(models::band_of(0.4) == Band::Moderate);
    REQUIRE(models::band_of(0.7999) == Band::Moderate);
    REQUIRE(models::band_of(0.8) == Band::Strong);
    REQUIRE(models::band_of(1.0) == Band::Strong);
    REQUIRE(models::band_of(-0.55) == Band::Moderate); // magnitude decides
    REQUIRE(models::to_string(Band::Weak) == "weak");
    REQUIRE(models::to_string(Band::Moderate) == "moderate");
    REQUIRE(models::to_string(Band::Strong) == "strong");

    // published correlation values all sit in the moderate band
    for (double rho : {0.7131, 0.6074, 0.5440, 0.7265, 0.6697, 0.6922})
        REQUIRE(models::band_of(rho) == Band::Moderate);

    models::BandEdges custom{0.5, 0.7};
    REQUIRE(models::band_of(0.55, custom) == Band::Moderate);
    REQUIRE(models::band_of(0.71, custom) == Band::Strong);
}

TEST_CASE("participation series and decay fit") {
    auto ds = testutil::small_cohort();
    auto series = models::participation_series(ds);
    REQUIRE(series.size() == 3);
    REQUIRE(series[0].release_rank == 1);
    REQUIRE(series[0].participants == 2); // p001: u001 + u002
    REQUIRE(series[1].participants == 2); // p002: u001 + u002
    REQUIRE(series[2].participants == 1); // p003: u001

    SECTION("hand-computed decay oracle") {
        std::vector<models::ParticipationPoint> pts = {
            {1, 100}, {2, 61}, {3, 37}, {4, 22}};
        auto fit = models::fit_participation(pts);
        REQUIRE_THAT(fit.lambda, Catch::Matchers::WithinAbs(0.5042339149, 1e-9));
        REQUIRE_THAT(fit.n0, Catch::Matchers::WithinAbs(166.5150825819, 1e-8));
        REQUIRE(fit.r2 > 0.999);
        REQUIRE(fit.zero_entries_skipped == 0);
    }
    SECTION("exact geometric series recovers exactly") {
        std::vector<models::ParticipationPoint> pts;
        for (std::int64_t k = 1; k <= 10; ++k)
            pts.push_back({k, static_cast<std::int64_t>(1 << (11 - k))});
        auto fit = models::fit_participation(pts);
        REQUIRE_THAT(fit.lambda, Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
        REQUIRE_THAT(fit.n0, Catch::Matchers::WithinAbs(2048.0, 1e-8));
        REQUIRE_THAT(fit.r2, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
    SECTION("zeros are skipped, not logged") {
        std::vector<models::ParticipationPoint> pts = {
            {1, 100}, {2, 0}, {3, 37}, {4, 22}};
        auto fit = models::fit_participation(pts);
        REQUIRE(fit.zero_entries_skipped == 1);
        REQUIRE(fit.series.size() == 4);
    }
    SECTION("too few positive entries") {
        REQUIRE_THROWS_AS(models::fit_participation({{1, 10}, {2, 8}, {3, 0}}),
                          TooFewPositiveError);
    }
}

TEST_CASE("corrected cumulative applies both corrections") {
    auto ds = testutil::small_cohort();
    auto day = [&](std::int64_t d) { return kDay0Local + (d - 1) * kDay + 11 * 3600; };
    // post-accept retry on p001 (accepted day 1) lands on day 3
    ds.logs.push_back(make_log(810, "p001", "t01", "u001", day(3), VerdictKind::WrongAnswer));
    // out-of-window log: after t01 ends but tagged t01
    ds.logs.push_back(
        make_log(811, "p002", "t01", "u001", ds.tests[0].end + 50, VerdictKind::WrongAnswer));
    canonicalize(ds);

    auto pts = models::corrected_cumulative(ds, "u001");
    REQUIRE(pts.size() == 3);
    REQUIRE(pts[0].day == 1);
    REQUIRE(pts[0].cum == 2); // WA + AC on day 1
    REQUIRE(pts[1].day == 2);
    REQUIRE(pts[1].cum == 3);
    REQUIRE(pts[2].day == 8);
    REQUIRE(pts[2].cum == 4);
    REQUIRE(pts[0].ln_day == 0.0);
    REQUIRE_THAT(pts[2].ln_day, Catch::Matchers::WithinAbs(std::log(8.0), 1e-15));

    models::CorrectionOptions keep;
    keep.exclude_after_accept = false;
    auto all = models::corrected_cumulative(ds, "u001", keep);
    REQUIRE(all.size() == 4); // the day-3 retry now counts
    REQUIRE(all[1].day == 2);
    REQUIRE(all[2].day == 3);
    REQUIRE(all[2].cum == 4);
    REQUIRE(all[3].cum == 5); // out-of-window log still excluded

    REQUIRE_THROWS_AS(models::corrected_cumulative(ds, "nobody"), UnknownUserError);
}

TEST_CASE("submit line on the constructed log-curve user") {
    // cum(d) = round(5 ln d + 3) sampled on every day 1..14
    std::vector<models::CumPoint> pts;
    for (std::int64_t d = 1; d <= 14; ++d) {
        models::CumPoint p;
        p.day = d;
        p.ln_day = std::log(static_cast<double>(d));
        p.cum = std::llround(5.0 * p.ln_day + 3.0);
        pts.push_back(p);
    }
    auto fit = models::submit_line_points("synthetic", pts);
    REQUIRE(fit.status == models::FitStatus::Ok);
    REQUIRE_THAT(fit.k_b, Catch::Matchers::WithinAbs(5.0, 0.1));
    REQUIRE(fit.st_b >= 0.99);
    REQUIRE_THAT(fit.k_b, Catch::Matchers::WithinAbs(5.0905681698, 1e-9));
    REQUIRE_THAT(fit.st_b, Catch::Matchers::WithinAbs(0.9947913382, 1e-9));
}

TEST_CASE("submit line insufficient-data gates") {
    auto ds = testutil::small_cohort();
    // u002 has two active days, u003 none
    REQUIRE(models::submit_line(ds, "u002").status == models::FitStatus::InsufficientData);
    REQUIRE(models::submit_line(ds, "u003").status == models::FitStatus::InsufficientData);
    REQUIRE(models::submit_line(ds, "u001").status == models::FitStatus::Ok);

    // three points on a single day (same ln_day) cannot anchor a slope
    std::vector<models::CumPoint> flat(3);
    for (int i = 0; i < 3; ++i) {
        flat[static_cast<std::size_t>(i)].day = 5;
        flat[static_cast<std::size_t>(i)].ln_day = std::log(5.0);
        flat[static_cast<std::size_t>(i)].cum = i + 1;
    }
    REQUIRE(models::submit_line_points("x", flat).status ==
            models::FitStatus::InsufficientData);
}

TEST_CASE("submit line slope is non-negative on cumulative input") {
    rng::Rng r(4242);
    for (int trial = 0; trial < 300; ++trial) {
        const int days = static_cast<int>(r.uniform_int(3, 40));
        std::vector<models::CumPoint> pts;
        std::int64_t cum = 0;
        std::int64_t d = 0;
        for (int i = 0; i < days; ++i) {
            d += r.uniform_int(1, 4);
            cum += r.uniform_int(0, 6) + (i == 0 ? 1 : 0);
            models::CumPoint p;
            p.day = d;
            p.ln_day = std::log(static_cast<double>(d));
            p.cum = cum;
            pts.push_back(p);
        }
        auto fit = models::submit_line_points("u", pts);
        if (fit.status == models::FitStatus::Ok) {
            REQUIRE(fit.k_b >= 0.0);
            REQUIRE(fit.st_b >= 0.0);
            REQUIRE(fit.st_b <= 1.0);
        }
    }
}

TEST_CASE("ac/score correlation over scored users") {
    auto ds = testutil::small_cohort();
    ds.users.push_back({"u004", "dave", "S4"});
    ds.users.push_back({"u005", "erin", "S5"});
    // craft ac counts: u001=3, u002=1, u004=2, u005=0 (u003 unscored)
    std::int64_t id = 600;
    ds.logs.push_back(make_log(++id, "p001", "t01", "u004", ds.tests[0].start + 100,
                               VerdictKind::Accepted));
    ds.logs.push_back(make_log(++id, "p002", "t01", "u004", ds.tests[0].start + 200,
                               VerdictKind::Accepted));
    ds.scores.push_back({"u004", 75, 70});
    ds.scores.push_back({"u005", 40, 45});
    canonicalize(ds);

    auto row = models::ac_score_correlation(ds);
    REQUIRE(row.n_users == 4);
    std::vector<double> ac = {3, 1, 2, 0};
    std::vector<double> msc = {88, 61, 75, 40};
    std::vector<double> wsc = {79, 55, 70, 45};
    REQUIRE_THAT(row.rho_ac_msc,
                 Catch::Matchers::WithinAbs(stats::pearson(ac, msc), 1e-12));
    REQUIRE_THAT(row.rho_ac_wsc,
                 Catch::Matchers::WithinAbs(stats::pearson(ac, wsc), 1e-12));
    REQUIRE(row.label == "mini");
    REQUIRE(models::to_string(row.band_msc) ==
            models::to_string(models::band_of(row.rho_ac_msc)));

    // fewer than three scored users cannot correlate
    auto tiny = testutil::small_cohort();
    REQUIRE_THROWS_AS(models::ac_score_correlation(tiny), TooFewPointsError);
}

TEST_CASE("early warning fusion rule") {
    using models::AcEntry;
    using models::FitStatus;
    using models::SubmitLineFit;

    auto line = [](const std::string& u, double kb, FitStatus st) {
        SubmitLineFit f;
        f.user_id = u;
        f.k_b = kb;
        f.st_b = 0.9;
        f.status = st;
        f.points.resize(st == FitStatus::Ok ? 5 : 1);
        return f;
    };

    SECTION("uniform cohort flags nobody") {
        std::vector<AcEntry> ac;
        std::vector<SubmitLineFit> lines;
        for (int i = 0; i < 10; ++i) {
            const std::string u = "u" + std::to_string(i);
            ac.push_back({u, 5, 9});
            lines.push_back(line(u, 2.0, FitStatus::Ok));
        }
        REQUIRE(models::early_warning(ac, lines).empty());
    }
    SECTION("student below both cuts is flagged with both reasons") {
        std::vector<AcEntry> ac;
        std::vector<SubmitLineFit> lines;
        for (int i = 0; i < 9; ++i) {
            const std::string u = "u" + std::to_string(i);
            ac.push_back({u, 10, 20});
            lines.push_back(line(u, 3.0, FitStatus::Ok));
        }
        ac.push_back({"weak", 0, 2});
        lines.push_back(line("weak", 0.1, FitStatus::Ok));
        auto rows = models::early_warning(ac, lines);
        REQUIRE(rows.size() == 1);
        REQUIRE(rows[0].user_id == "weak");
        REQUIRE(rows[0].reasons ==
                std::vector<std::string>{"low_submit_slope", "low_ac"});
    }
    SECTION("insufficient data means inactive") {
        std::vector<AcEntry> ac = {{"a", 4, 8}, {"b", 0, 1}, {"c", 5, 9}, {"d", 6, 11}};
        std::vector<SubmitLineFit> lines = {line("a", 2.0, FitStatus::Ok),
                                            line("b", 0.0, FitStatus::InsufficientData),
                                            line("c", 2.5, FitStatus::Ok),
                                            line("d", 3.0, FitStatus::Ok)};
        auto rows = models::early_warning(ac, lines);
        REQUIRE(rows.size() == 1);
        REQUIRE(rows[0].user_id == "b");
        REQUIRE(rows[0].reasons == std::vector<std::string>{"inactive"});
    }
    SECTION("one-sided weakness is not flagged") {
        std::vector<AcEntry> ac;
        std::vector<SubmitLineFit> lines;
        for (int i = 0; i < 9; ++i) {
            const std::string u = "u" + std::to_string(i);
            ac.push_back({u, 10, 20});
            lines.push_back(line(u, 3.0, FitStatus::Ok));
        }
        // low ac but healthy slope, and the mirror image
        ac.push_back({"half", 0, 25});
        lines.push_back(line("half", 50.0, FitStatus::Ok));
        ac.push_back({"slack", 25, 30});
        lines.push_back(line("slack", 0.1, FitStatus::Ok));
        REQUIRE(models::early_warning(ac, lines).empty());
    }
}

TEST_CASE("cohort batch analysis and JSON round trip") {
    auto ds = testutil::small_cohort();
    auto analyses = models::compute_analyses(ds);
    REQUIRE(analyses.label == "mini");
    REQUIRE(analyses.ac.size() == 3);
    REQUIRE(analyses.submit_lines.size() == 3);
    // two scored users only: correlation unavailable, noted
    REQUIRE(!analyses.correlation.has_value());
    REQUIRE(!analyses.notes.empty());
    REQUIRE(analyses.participation.has_value());
    REQUIRE(analyses.participation->series.size() == 3);
    // u002/u003 lack enough active days
    std::size_t inactive = 0;
    for (const auto& w : analyses.warnings)
        if (w.reasons == std::vector<std::string>{"inactive"}) ++inactive;
    REQUIRE(inactive == 2);

    auto j = models::analyses_json(analyses);
    auto back = models::analyses_from_json(j);
    REQUIRE(back.label == analyses.label);
    REQUIRE(back.ac.size() == analyses.ac.size());
    REQUIRE(back.submit_lines.size() == analyses.submit_lines.size());
    REQUIRE(back.warnings.size() == analyses.warnings.size());
    REQUIRE(back.participation.has_value() == analyses.participation.has_value());
    if (back.participation) {
        REQUIRE(back.participation->series.size() == analyses.participation->series.size());
        REQUIRE_THAT(back.participation->lambda,
                     Catch::Matchers::WithinAbs(analyses.participation->lambda, 1e-12));
    }
    for (std::size_t i = 0; i < back.submit_lines.size(); ++i) {
        REQUIRE(back.submit_lines[i].user_id == analyses.submit_lines[i].user_id);
        REQUIRE(back.submit_lines[i].status == analyses.submit_lines[i].status);
        if (back.submit_lines[i].status == models::FitStatus::Ok)
            REQUIRE_THAT(back.submit_lines[i].k_b,
                         Catch::Matchers::WithinAbs(analyses.submit_lines[i].k_b, 1e-12));
    }
    REQUIRE(models::analyses_json(back) == j);
}
