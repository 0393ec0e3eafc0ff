#pragma once

#include <oja/clean.hpp>
#include <oja/datamodel.hpp>
#include <oja/digest.hpp>
#include <oja/errors.hpp>
#include <oja/models.hpp>
#include <oja/rng.hpp>
#include <oja/stats.hpp>
#include <oja/timeutil.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oja::simulate {

using json = nlohmann::ordered_json;

struct SimConfig {
    std::string label = "sim";
    std::int64_t students = 40;
    std::int64_t tests = 8;
    std::int64_t problems_per_test_lo = 5;
    std::int64_t problems_per_test_hi = 7;
    std::int64_t total_problems = 0; // 0 = draw per-test counts from the range
    std::int64_t semester_days = 112;
    double dropout_lambda = 0.15;  // per-problem survival hazard
    double ability_spread = 0.5;   // width of the solve-probability band
    double procrastination_mix = 0.25; // fraction of deadline-bursters
    double alt_fraction = 0.10;    // fraction of students given a second account
    double late_fraction = 0.05;   // extra post-deadline logs as a fraction of base logs
    std::int64_t duplicate_count = 10; // exact re-submissions planted for dedup
    double score_noise = 3.0;      // stddev of exam-score noise
    std::int64_t attempt_cap = 4;  // retries before a problem is abandoned
    int tz_offset_min = 480;
    std::int64_t start_year = 2020, start_month = 2, start_day = 3;
};

/// Course-year presets sized to the reference cohorts: 96 students / 11 tests
/// / 76 problems about 10.5k logs, and 26 / 12 / 68 about 2.6k logs.
inline SimConfig preset(const std::string& name) {
    SimConfig c;
    if (name == "y2017") {
        c.label = "y2017";
        c.students = 96;
        c.tests = 11;
        c.total_problems = 76;
        c.semester_days = 126;
        c.dropout_lambda = 0.02;
        c.duplicate_count = 25;
        return c;
    }
    if (name == "y2019") {
        c.label = "y2019";
        c.students = 26;
        c.tests = 12;
        c.total_problems = 68;
        c.semester_days = 126;
        c.dropout_lambda = 0.025;
        c.duplicate_count = 8;
        return c;
    }
    throw ConfigInvalidError("unknown preset: " + name + " (available: y2017, y2019)");
}

inline void check_config(const SimConfig& c) {
    auto fail = [](const std::string& m) { throw ConfigInvalidError(m); };
    if (c.students < 0) fail("students must be >= 0");
    if (c.students > 0 && c.tests <= 0) fail("tests must be > 0 when students > 0");
    if (c.tests < 0) fail("tests must be >= 0");
    if (c.problems_per_test_lo < 1 || c.problems_per_test_hi < c.problems_per_test_lo)
        fail("problems_per_test range must satisfy 1 <= lo <= hi");
    if (c.total_problems < 0) fail("total_problems must be >= 0");
    if (c.tests > 0 && c.semester_days < c.tests) fail("semester_days must be >= tests");
    if (c.dropout_lambda < 0) fail("dropout_lambda must be >= 0");
    if (c.ability_spread < 0 || c.ability_spread > 1) fail("ability_spread must be in [0,1]");
    for (auto [v, name] : {std::pair{c.procrastination_mix, "procrastination_mix"},
                           std::pair{c.alt_fraction, "alt_fraction"},
                           std::pair{c.late_fraction, "late_fraction"}})
        if (v < 0 || v > 1) fail(std::string(name) + " must be in [0,1]");
    if (c.duplicate_count < 0) fail("duplicate_count must be >= 0");
    if (c.score_noise < 0) fail("score_noise must be >= 0");
    if (c.attempt_cap < 1) fail("attempt_cap must be >= 1");
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

struct StudentTruth {
    std::string user_id;
    double ability = 0.0;       // latent u in [0,1]
    double solve_prob = 0.0;    // q: chance a problem gets solved before abandonment
    bool burster = false;       // deadline-cluster submitter
    double dropout_rank = 0.0;  // attempts problems with release_rank <= this
    std::int64_t attempted_problems = 0;
    double expected_attempts = 0.0; // planted effort volume
    std::int64_t clean_log_count = 0; // logs owned after dedup+window+alt merge
};

struct GroundTruth {
    double dropout_lambda = 0.0;
    double rho_target_msc = 0.0;
    double rho_target_wsc = 0.0;
    std::vector<StudentTruth> students;
    std::map<std::string, std::string> alt_of; // alt account -> canonical student
    std::vector<std::int64_t> late_log_ids;
    std::vector<std::int64_t> duplicate_log_ids; // the planted higher-id clones
};

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

namespace detail {

enum class LogKind { Base, Late, Duplicate, AltCopy };

struct Staged {
    LogRecord rec;
    LogKind kind = LogKind::Base;
    std::string canonical_user;
    std::uint64_t gen_seq = 0;
};

inline std::string user_id_for(std::int64_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "u%03lld", static_cast<long long>(i + 1));
    return buf;
}

inline Verdict draw_fail_verdict(rng::Rng& r) {
    const double u = r.next_double();
    if (u < 0.60) return Verdict::of(VerdictKind::WrongAnswer);
    if (u < 0.80) return Verdict::of(VerdictKind::TimeLimitExceeded);
    if (u < 0.90) return Verdict::of(VerdictKind::RuntimeError);
    return Verdict::of(VerdictKind::CompileError);
}

inline std::int64_t draw_time_ms(rng::Rng& r) {
    const double v = 22.89 + 15.0 * r.normal();
    return std::max<std::int64_t>(0, static_cast<std::int64_t>(std::llround(v)));
}

inline std::int64_t draw_memory_kb(rng::Rng& r) {
    const double v = 2032.0 + 350.0 * r.normal();
    return std::max<std::int64_t>(128, static_cast<std::int64_t>(std::llround(v)));
}

} // namespace detail

struct SimResult {
    CohortDataset dataset;
    GroundTruth truth;
};

/// Deterministic synthetic cohort. Every stochastic choice comes from a
/// substream keyed on (seed, purpose, index), so generation order never
/// leaks into the output and identical (config, seed) give identical bytes.
///
/// The behavioral model, chosen so each analysis has a recoverable planted
/// parameter:
///  - dropout is absorbing: student s attempts exactly the problems with
///    release_rank <= X_s, where X_s is exponential(dropout_lambda) via a
///    stratified inverse-CDF draw (marginally exact, tail counts tight), so
///    the cohort participation curve decays at the planted rate;
///  - per attempted problem the student retries until accepted or the attempt
///    cap A runs out; per-attempt success is 1 - (1-q_s)^(1/A), making the
///    solve probability exactly q_s and attempt counts truncated-geometric;
///  - q_s is linear in a latent ability u_s ~ U(0,1);
///  - steady students submit across the whole test window, bursters inside
///    the final 15%;
///  - exam scores are affine in (u_s, steadiness) plus configured noise, so
///    the AC <-> score correlation target is computable in closed form;
///  - planted artifacts: exact duplicate rows (higher id), post-deadline
///    retries on abandoned problems, and alt accounts that re-submit several
///    of their owner's code hashes inside the window.
inline SimResult simulate_cohort(const SimConfig& cfg, std::uint64_t seed) {
    check_config(cfg);
    SimResult out;
    CohortDataset& ds = out.dataset;
    GroundTruth& truth = out.truth;
    ds.label = cfg.label;
    ds.tz_offset_min = cfg.tz_offset_min;
    truth.dropout_lambda = cfg.dropout_lambda;

    const Seconds local_shift = static_cast<Seconds>(cfg.tz_offset_min) * 60;
    const Seconds day0_utc_midnight =
        static_cast<Seconds>(timeutil::days_from_civil(cfg.start_year, cfg.start_month,
                                                       cfg.start_day)) *
            86400 -
        local_shift; // local midnight of the configured start date

    // --- course structure -------------------------------------------------
    std::vector<std::int64_t> per_test(static_cast<std::size_t>(cfg.tests), 0);
    if (cfg.tests > 0) {
        if (cfg.total_problems > 0) {
            const std::int64_t base = cfg.total_problems / cfg.tests;
            const std::int64_t rem = cfg.total_problems % cfg.tests;
            for (std::int64_t i = 0; i < cfg.tests; ++i)
                per_test[static_cast<std::size_t>(i)] = base + (i < rem ? 1 : 0);
        } else {
            rng::Rng structure(rng::substream_seed(seed, "structure", 0));
            for (std::int64_t i = 0; i < cfg.tests; ++i)
                per_test[static_cast<std::size_t>(i)] =
                    structure.uniform_int(cfg.problems_per_test_lo, cfg.problems_per_test_hi);
        }
    }

    const std::int64_t gap_days = cfg.tests > 0 ? std::max<std::int64_t>(1, cfg.semester_days / cfg.tests) : 0;
    const std::int64_t window_days = std::max<std::int64_t>(3, std::min<std::int64_t>(7, gap_days));
    std::int64_t problem_no = 0;
    for (std::int64_t t = 0; t < cfg.tests; ++t) {
        TestWindow w;
        char tid[32];
        std::snprintf(tid, sizeof tid, "t%02lld", static_cast<long long>(t + 1));
        w.id = tid;
        w.title = "Test " + std::to_string(t + 1);
        const Seconds day_start = day0_utc_midnight + t * gap_days * 86400;
        w.start = day_start + 8 * 3600;                          // 08:00 local
        w.end = day_start + (window_days - 1) * 86400 + 86399;   // 23:59:59 local
        ds.tests.push_back(w);
        for (std::int64_t k = 0; k < per_test[static_cast<std::size_t>(t)]; ++k) {
            ProblemMeta p;
            char pid[32];
            std::snprintf(pid, sizeof pid, "p%03lld", static_cast<long long>(++problem_no));
            p.id = pid;
            p.title = "Problem " + std::to_string(problem_no);
            p.test_id = w.id;
            p.release_rank = problem_no;
            ds.problems.push_back(p);
        }
    }
    if (!ds.tests.empty()) ds.semester_start = ds.tests.front().start;

    const std::int64_t n = cfg.students;
    if (n == 0) {
        canonicalize(ds);
        auto report = validate(ds);
        if (!report.ok()) throw ValidationFailedError(std::move(report));
        return out;
    }

    // --- latent student traits --------------------------------------------
    // Stratified dropout: a random permutation hands each student one slice
    // of [0,1); the inverse exponential CDF of a uniform draw inside that
    // slice is still marginally Exp(lambda), but the cohort's empirical
    // survival curve hugs n*exp(-lambda*k) to within one student.
    std::vector<std::int64_t> strata(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) strata[static_cast<std::size_t>(i)] = i;
    {
        rng::Rng shuffle(rng::substream_seed(seed, "strata", 0));
        for (std::int64_t i = n - 1; i > 0; --i) {
            const auto j = shuffle.uniform_int(0, i);
            std::swap(strata[static_cast<std::size_t>(i)], strata[static_cast<std::size_t>(j)]);
        }
    }

    const double cap = static_cast<double>(cfg.attempt_cap);
    truth.students.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        rng::Rng r(rng::substream_seed(seed, "traits", static_cast<std::uint64_t>(i)));
        StudentTruth& st = truth.students[static_cast<std::size_t>(i)];
        st.user_id = detail::user_id_for(i);
        st.ability = r.next_double();
        st.solve_prob =
            std::clamp(0.6 + cfg.ability_spread * (st.ability - 0.5), 0.02, 0.98);
        st.burster = r.next_double() < cfg.procrastination_mix;
        if (cfg.dropout_lambda == 0.0) {
            st.dropout_rank = std::numeric_limits<double>::infinity();
        } else {
            const double u01 =
                (static_cast<double>(strata[static_cast<std::size_t>(i)]) + r.next_double()) /
                static_cast<double>(n);
            st.dropout_rank = -std::log(1.0 - u01) / cfg.dropout_lambda;
        }

        UserRecord user;
        user.user_id = st.user_id;
        user.username = "student" + std::to_string(i + 1);
        user.roster_no = "S" + std::to_string(2017000 + i + 1);
        ds.users.push_back(user);
    }

    // --- submissions -------------------------------------------------------
    std::vector<detail::Staged> staged;
    std::uint64_t gen_seq = 0;
    const char* languages[] = {"C++", "C", "Java", "Python"};

    std::map<std::string, const TestWindow*> window_of;
    for (const auto& t : ds.tests) window_of[t.id] = &t;

    for (std::int64_t i = 0; i < n; ++i) {
        StudentTruth& st = truth.students[static_cast<std::size_t>(i)];
        rng::Rng r(rng::substream_seed(seed, "logs", static_cast<std::uint64_t>(i)));
        const std::string lang = languages[static_cast<std::size_t>(i) % 4];
        const std::string ip = "10.1." + std::to_string(1 + i / 200) + "." +
                               std::to_string(1 + i % 200);
        const double q = st.solve_prob;
        const double p_attempt = 1.0 - std::pow(1.0 - q, 1.0 / cap);

        for (const auto& prob : ds.problems) {
            if (static_cast<double>(prob.release_rank) > st.dropout_rank) continue;
            ++st.attempted_problems;
            const TestWindow* w = window_of.at(prob.test_id);

            const Seconds span = w->end - w->start;
            const Seconds reserve = cfg.attempt_cap * 1800;
            const Seconds usable = std::max<Seconds>(1, span - reserve);
            Seconds base;
            if (st.burster)
                base = w->start + static_cast<Seconds>((0.85 + 0.15 * r.next_double()) *
                                                       static_cast<double>(usable));
            else
                base = w->start + static_cast<Seconds>(0.80 * r.next_double() *
                                                       static_cast<double>(usable));

            const std::uint64_t trials_to_pass = r.geometric_trials(p_attempt);
            const bool solved = trials_to_pass <= static_cast<std::uint64_t>(cfg.attempt_cap);
            const std::int64_t attempts =
                solved ? static_cast<std::int64_t>(trials_to_pass) : cfg.attempt_cap;

            Seconds t = base;
            for (std::int64_t a = 0; a < attempts; ++a) {
                if (a > 0) t += r.uniform_int(60, 1800);
                t = std::min(t, w->end);
                detail::Staged s;
                s.kind = detail::LogKind::Base;
                s.canonical_user = st.user_id;
                s.gen_seq = ++gen_seq;
                LogRecord& rec = s.rec;
                rec.problem_id = prob.id;
                rec.test_id = prob.test_id;
                rec.user_id = st.user_id;
                rec.in_time = t;
                rec.language = lang;
                const bool is_last = a + 1 == attempts;
                rec.verdict = (solved && is_last) ? Verdict::of(VerdictKind::Accepted)
                                                  : detail::draw_fail_verdict(r);
                rec.time_ms = detail::draw_time_ms(r);
                rec.memory_kb = detail::draw_memory_kb(r);
                rec.code_length = 200 + static_cast<std::int64_t>(800.0 * r.next_double());
                rec.code_hash = digest::sha256_hex(ds.label + ":" + st.user_id + ":" + prob.id +
                                                   ":" + std::to_string(a));
                rec.ip = ip;
                staged.push_back(std::move(s));
                t += 1; // next attempt strictly later even after the min() clamp
            }
        }
        st.expected_attempts = static_cast<double>(st.attempted_problems) * q / p_attempt;
    }

    const std::size_t base_count = staged.size();

    // --- planted late submissions: extra retries on abandoned problems ----
    {
        std::vector<std::size_t> abandoned_last; // index of last base log of an unsolved run
        std::map<std::pair<std::string, std::string>, std::size_t> last_of;
        std::map<std::pair<std::string, std::string>, bool> solved_of;
        for (std::size_t idx = 0; idx < base_count; ++idx) {
            const auto& s = staged[idx];
            std::pair<std::string, std::string> key{s.rec.user_id, s.rec.problem_id};
            last_of[key] = idx;
            if (s.rec.verdict.accepted()) solved_of[key] = true;
        }
        for (const auto& [key, idx] : last_of)
            if (!solved_of.count(key)) abandoned_last.push_back(idx);
        std::sort(abandoned_last.begin(), abandoned_last.end());

        const auto n_late = static_cast<std::size_t>(
            std::llround(cfg.late_fraction * static_cast<double>(base_count)));
        rng::Rng r(rng::substream_seed(seed, "late", 0));
        for (std::size_t j = 0; j < n_late && !abandoned_last.empty(); ++j) {
            const auto& origin = staged[abandoned_last[j % abandoned_last.size()]];
            const TestWindow* w = window_of.at(origin.rec.test_id);
            detail::Staged s;
            s.kind = detail::LogKind::Late;
            s.canonical_user = origin.canonical_user;
            s.gen_seq = ++gen_seq;
            s.rec = origin.rec;
            s.rec.in_time = w->end + r.uniform_int(3600, 14 * 86400);
            s.rec.verdict = detail::draw_fail_verdict(r);
            s.rec.time_ms = detail::draw_time_ms(r);
            s.rec.memory_kb = detail::draw_memory_kb(r);
            s.rec.code_hash = digest::sha256_hex(ds.label + ":" + s.rec.user_id + ":" +
                                                 s.rec.problem_id + ":late:" + std::to_string(j));
            staged.push_back(std::move(s));
        }
    }

    // --- planted exact duplicates (same user/problem/time/hash, new id) ---
    {
        const std::size_t want = std::min<std::size_t>(
            static_cast<std::size_t>(cfg.duplicate_count), base_count);
        const std::size_t stride = want == 0 ? 1 : std::max<std::size_t>(1, base_count / want);
        for (std::size_t j = 0, taken = 0; taken < want && j < base_count; j += stride, ++taken) {
            detail::Staged s;
            s.kind = detail::LogKind::Duplicate;
            s.canonical_user = staged[j].canonical_user;
            s.gen_seq = ++gen_seq;
            s.rec = staged[j].rec;
            staged.push_back(std::move(s));
        }
    }

    // --- planted alt accounts: a second login re-submitting owner hashes --
    {
        const auto n_alts =
            static_cast<std::int64_t>(std::llround(cfg.alt_fraction * static_cast<double>(n)));
        rng::Rng r(rng::substream_seed(seed, "alts", 0));
        for (std::int64_t a = 0; a < n_alts; ++a) {
            const std::int64_t owner_idx = a * n / std::max<std::int64_t>(1, n_alts);
            const StudentTruth& owner = truth.students[static_cast<std::size_t>(owner_idx)];
            const std::string alt_id = "a" + owner.user_id;

            // distinct problems first, so shared-hash evidence spans >= 4 hashes
            std::vector<std::size_t> pool;
            std::set<std::string> seen_problem;
            for (std::size_t idx = 0; idx < base_count; ++idx) {
                const auto& s = staged[idx];
                if (s.rec.user_id != owner.user_id) continue;
                if (!seen_problem.insert(s.rec.problem_id).second) continue;
                pool.push_back(idx);
            }
            if (pool.size() < 4) continue; // owner too inactive to alias

            UserRecord alt;
            alt.user_id = alt_id;
            alt.username = "guest" + std::to_string(owner_idx + 1);
            ds.users.push_back(alt);
            truth.alt_of[alt_id] = owner.user_id;

            const std::size_t copies = std::min<std::size_t>(
                pool.size(), 4 + static_cast<std::size_t>(r.uniform_int(0, 2)));
            for (std::size_t c = 0; c < copies; ++c) {
                const auto& origin = staged[pool[c]];
                const TestWindow* w = window_of.at(origin.rec.test_id);
                detail::Staged s;
                s.kind = detail::LogKind::AltCopy;
                s.canonical_user = owner.user_id;
                s.gen_seq = ++gen_seq;
                s.rec = origin.rec;
                s.rec.user_id = alt_id;
                s.rec.in_time = std::clamp<Seconds>(
                    origin.rec.in_time + r.uniform_int(600, 7200), w->start, w->end);
                s.rec.time_ms = detail::draw_time_ms(r);
                s.rec.memory_kb = detail::draw_memory_kb(r);
                s.rec.ip = "10.2.0." + std::to_string(1 + owner_idx % 200);
                staged.push_back(std::move(s));
            }
        }
    }

    // --- exam scores + analytic correlation target -------------------------
    {
        std::vector<double> a_mean, a_var, m_mean, w_mean;
        for (std::int64_t i = 0; i < n; ++i) {
            rng::Rng r(rng::substream_seed(seed, "score", static_cast<std::uint64_t>(i)));
            StudentTruth& st = truth.students[static_cast<std::size_t>(i)];
            const double habit = st.burster ? 0.0 : 1.0;
            const double msc_clean = 35.0 + 55.0 * st.ability + 5.0 * habit;
            const double wsc_clean = 40.0 + 40.0 * st.ability + 10.0 * habit;
            ExamScores sc;
            sc.user_id = st.user_id;
            sc.msc = std::clamp(msc_clean + cfg.score_noise * r.normal(), 0.0, 100.0);
            sc.wsc = std::clamp(wsc_clean + cfg.score_noise * r.normal(), 0.0, 100.0);
            ds.scores.push_back(sc);

            const double m = static_cast<double>(st.attempted_problems);
            a_mean.push_back(m * st.solve_prob);
            a_var.push_back(m * st.solve_prob * (1.0 - st.solve_prob));
            m_mean.push_back(msc_clean);
            w_mean.push_back(wsc_clean);
        }
        auto avg = [](const std::vector<double>& v) {
            double s = 0;
            for (double x : v) s += x;
            return v.empty() ? 0.0 : s / static_cast<double>(v.size());
        };
        const double abar = avg(a_mean);
        double cov_m = 0, cov_w = 0, var_a = 0, var_m = 0, var_w = 0;
        const double mbar = avg(m_mean), wbar = avg(w_mean);
        for (std::size_t i = 0; i < a_mean.size(); ++i) {
            cov_m += (a_mean[i] - abar) * (m_mean[i] - mbar);
            cov_w += (a_mean[i] - abar) * (w_mean[i] - wbar);
            var_a += (a_mean[i] - abar) * (a_mean[i] - abar) + a_var[i];
            var_m += (m_mean[i] - mbar) * (m_mean[i] - mbar);
            var_w += (w_mean[i] - wbar) * (w_mean[i] - wbar);
        }
        const double nn = static_cast<double>(a_mean.size());
        const double noise_var = cfg.score_noise * cfg.score_noise * nn;
        auto rho = [&](double cov, double var_score) {
            const double denom = std::sqrt(var_a * (var_score + noise_var));
            return denom > 0 ? cov / denom : 0.0;
        };
        truth.rho_target_msc = rho(cov_m, var_m);
        truth.rho_target_wsc = rho(cov_w, var_w);
    }

    // --- id assignment & bookkeeping ---------------------------------------
    std::stable_sort(staged.begin(), staged.end(),
                     [](const detail::Staged& a, const detail::Staged& b) {
                         if (a.rec.in_time != b.rec.in_time) return a.rec.in_time < b.rec.in_time;
                         return a.gen_seq < b.gen_seq;
                     });
    std::int64_t next_id = 0;
    std::map<std::string, std::int64_t> clean_count;
    for (auto& s : staged) {
        s.rec.id = ++next_id;
        switch (s.kind) {
            case detail::LogKind::Late: truth.late_log_ids.push_back(s.rec.id); break;
            case detail::LogKind::Duplicate: truth.duplicate_log_ids.push_back(s.rec.id); break;
            case detail::LogKind::Base:
            case detail::LogKind::AltCopy: ++clean_count[s.canonical_user]; break;
        }
        ds.logs.push_back(s.rec);
    }
    for (auto& st : truth.students)
        if (auto it = clean_count.find(st.user_id); it != clean_count.end())
            st.clean_log_count = it->second;

    canonicalize(ds);
    auto report = validate(ds);
    if (!report.ok()) throw ValidationFailedError(std::move(report));
    return out;
}

// ---------------------------------------------------------------------------
// Truth serialization
// ---------------------------------------------------------------------------

inline json truth_json(const GroundTruth& t) {
    json j;
    j["dropout_lambda"] = t.dropout_lambda;
    j["rho_target_msc"] = t.rho_target_msc;
    j["rho_target_wsc"] = t.rho_target_wsc;
    json students = json::array();
    for (const auto& s : t.students) {
        students.push_back(
            {{"user_id", s.user_id},
             {"ability", s.ability},
             {"solve_prob", s.solve_prob},
             {"burster", s.burster},
             {"dropout_rank", std::isinf(s.dropout_rank) ? json(nullptr) : json(s.dropout_rank)},
             {"attempted_problems", s.attempted_problems},
             {"expected_attempts", s.expected_attempts},
             {"clean_log_count", s.clean_log_count}});
    }
    j["students"] = std::move(students);
    j["alt_of"] = t.alt_of;
    j["late_log_ids"] = t.late_log_ids;
    j["duplicate_log_ids"] = t.duplicate_log_ids;
    return j;
}

inline GroundTruth truth_from_json(const json& j) {
    GroundTruth t;
    t.dropout_lambda = j.value("dropout_lambda", 0.0);
    t.rho_target_msc = j.value("rho_target_msc", 0.0);
    t.rho_target_wsc = j.value("rho_target_wsc", 0.0);
    for (const auto& s : j.at("students")) {
        StudentTruth st;
        st.user_id = s.at("user_id").get<std::string>();
        st.ability = s.value("ability", 0.0);
        st.solve_prob = s.value("solve_prob", 0.0);
        st.burster = s.value("burster", false);
        st.dropout_rank = s.at("dropout_rank").is_null()
                              ? std::numeric_limits<double>::infinity()
                              : s.at("dropout_rank").get<double>();
        st.attempted_problems = s.value("attempted_problems", std::int64_t{0});
        st.expected_attempts = s.value("expected_attempts", 0.0);
        st.clean_log_count = s.value("clean_log_count", std::int64_t{0});
        t.students.push_back(std::move(st));
    }
    if (j.contains("alt_of"))
        for (auto it = j.at("alt_of").begin(); it != j.at("alt_of").end(); ++it)
            t.alt_of[it.key()] = it.value().get<std::string>();
    if (j.contains("late_log_ids"))
        for (const auto& id : j.at("late_log_ids")) t.late_log_ids.push_back(id.get<std::int64_t>());
    if (j.contains("duplicate_log_ids"))
        for (const auto& id : j.at("duplicate_log_ids"))
            t.duplicate_log_ids.push_back(id.get<std::int64_t>());
    return t;
}

// ---------------------------------------------------------------------------
// Recovery report
// ---------------------------------------------------------------------------

struct RecoveryReport {
    bool lambda_defined = false;
    double lambda_true = 0.0;
    double lambda_est = 0.0;
    double lambda_rel_err = 0.0; // absolute error when lambda_true == 0
    double kb_effort_corr = 0.0; // planted effort volume vs fitted slope
    std::size_t alt_pairs_true = 0;
    std::size_t alt_pairs_found = 0;
    double alt_precision = 1.0;
    double alt_recall = 1.0;
    double rho_msc_target = 0.0;
    double rho_msc_est = 0.0;
    bool rho_defined = false;
    bool rho_sign_match = true;
};

/// Compares recovered metrics against the planted values. `raw` should be the
/// dataset exactly as simulated (alt detection needs the un-merged accounts);
/// `analyses` the models output on its cleaned counterpart.
inline RecoveryReport truth_check(const CohortDataset& raw, const GroundTruth& truth,
                                  const models::AnalysisSet& analyses) {
    RecoveryReport rep;
    rep.lambda_true = truth.dropout_lambda;
    if (analyses.participation && analyses.participation->r2 >= 0.0 &&
        !analyses.participation->series.empty()) {
        rep.lambda_defined = true;
        rep.lambda_est = analyses.participation->lambda;
        rep.lambda_rel_err = rep.lambda_true > 0
                                 ? std::fabs(rep.lambda_est - rep.lambda_true) / rep.lambda_true
                                 : std::fabs(rep.lambda_est);
    }

    {
        std::map<std::string, double> effort;
        for (const auto& s : truth.students) effort[s.user_id] = s.expected_attempts;
        std::vector<double> xs, ys;
        for (const auto& line : analyses.submit_lines) {
            if (line.status != models::FitStatus::Ok) continue;
            auto it = effort.find(line.user_id);
            if (it == effort.end()) continue;
            xs.push_back(it->second);
            ys.push_back(line.k_b);
        }
        try {
            rep.kb_effort_corr = stats::pearson(xs, ys);
        } catch (const Error&) {
            rep.kb_effort_corr = 0.0;
        }
    }

    {
        std::set<std::pair<std::string, std::string>> true_pairs;
        std::map<std::string, std::vector<std::string>> family; // canonical -> members
        for (const auto& [alt, owner] : truth.alt_of) {
            family[owner].push_back(alt);
        }
        for (auto& [owner, alts] : family) {
            std::vector<std::string> members = alts;
            members.push_back(owner);
            std::sort(members.begin(), members.end());
            for (std::size_t i = 0; i < members.size(); ++i)
                for (std::size_t j = i + 1; j < members.size(); ++j)
                    true_pairs.emplace(members[i], members[j]);
        }
        std::set<std::pair<std::string, std::string>> found_pairs;
        for (const auto& cluster : clean::detect_alts(raw, raw.users))
            for (std::size_t i = 0; i < cluster.members.size(); ++i)
                for (std::size_t j = i + 1; j < cluster.members.size(); ++j)
                    found_pairs.emplace(cluster.members[i], cluster.members[j]);
        rep.alt_pairs_true = true_pairs.size();
        rep.alt_pairs_found = found_pairs.size();
        std::size_t hit = 0;
        for (const auto& p : found_pairs)
            if (true_pairs.count(p)) ++hit;
        rep.alt_precision = found_pairs.empty()
                                ? 1.0
                                : static_cast<double>(hit) / static_cast<double>(found_pairs.size());
        rep.alt_recall = true_pairs.empty()
                             ? 1.0
                             : static_cast<double>(hit) / static_cast<double>(true_pairs.size());
    }

    if (analyses.correlation) {
        rep.rho_defined = true;
        rep.rho_msc_target = truth.rho_target_msc;
        rep.rho_msc_est = analyses.correlation->rho_ac_msc;
        auto sgn = [](double v) { return v > 0 ? 1 : v < 0 ? -1 : 0; };
        rep.rho_sign_match = sgn(rep.rho_msc_target) == sgn(rep.rho_msc_est);
    }
    return rep;
}

inline json recovery_json(const RecoveryReport& r) {
    json j;
    j["lambda"] = {{"defined", r.lambda_defined},
                   {"true", r.lambda_true},
                   {"estimate", r.lambda_est},
                   {"rel_err", r.lambda_rel_err}};
    j["kb_effort_corr"] = r.kb_effort_corr;
    j["alts"] = {{"pairs_true", r.alt_pairs_true},
                 {"pairs_found", r.alt_pairs_found},
                 {"precision", r.alt_precision},
                 {"recall", r.alt_recall}};
    j["rho_msc"] = {{"defined", r.rho_defined},
                    {"target", r.rho_msc_target},
                    {"estimate", r.rho_msc_est},
                    {"sign_match", r.rho_sign_match}};
    return j;
}

// ---------------------------------------------------------------------------
// Config serialization (CLI config files)
// ---------------------------------------------------------------------------

inline json sim_config_json(const SimConfig& c) {
    json j;
    j["label"] = c.label;
    j["students"] = c.students;
    j["tests"] = c.tests;
    j["problems_per_test"] = {c.problems_per_test_lo, c.problems_per_test_hi};
    j["total_problems"] = c.total_problems;
    j["semester_days"] = c.semester_days;
    j["dropout_lambda"] = c.dropout_lambda;
    j["ability_spread"] = c.ability_spread;
    j["procrastination_mix"] = c.procrastination_mix;
    j["alt_fraction"] = c.alt_fraction;
    j["late_fraction"] = c.late_fraction;
    j["duplicate_count"] = c.duplicate_count;
    j["score_noise"] = c.score_noise;
    j["attempt_cap"] = c.attempt_cap;
    j["tz_offset_min"] = c.tz_offset_min;
    j["start_date"] = {c.start_year, c.start_month, c.start_day};
    return j;
}

inline SimConfig sim_config_from_json(const json& j, SimConfig c = {}) {
    c.label = j.value("label", c.label);
    c.students = j.value("students", c.students);
    c.tests = j.value("tests", c.tests);
    if (j.contains("problems_per_test")) {
        c.problems_per_test_lo = j.at("problems_per_test").at(0).get<std::int64_t>();
        c.problems_per_test_hi = j.at("problems_per_test").at(1).get<std::int64_t>();
    }
    c.total_problems = j.value("total_problems", c.total_problems);
    c.semester_days = j.value("semester_days", c.semester_days);
    c.dropout_lambda = j.value("dropout_lambda", c.dropout_lambda);
    c.ability_spread = j.value("ability_spread", c.ability_spread);
    c.procrastination_mix = j.value("procrastination_mix", c.procrastination_mix);
    c.alt_fraction = j.value("alt_fraction", c.alt_fraction);
    c.late_fraction = j.value("late_fraction", c.late_fraction);
    c.duplicate_count = j.value("duplicate_count", c.duplicate_count);
    c.score_noise = j.value("score_noise", c.score_noise);
    c.attempt_cap = j.value("attempt_cap", c.attempt_cap);
    c.tz_offset_min = j.value("tz_offset_min", c.tz_offset_min);
    if (j.contains("start_date")) {
        c.start_year = j.at("start_date").at(0).get<std::int64_t>();
        c.start_month = j.at("start_date").at(1).get<std::int64_t>();
        c.start_day = j.at("start_date").at(2).get<std::int64_t>();
    }
    check_config(c);
    return c;
}

} // namespace oja::simulate
