#pragma once

#include <oja/clean.hpp>
#include <oja/datamodel.hpp>
#include <oja/dataset_io.hpp>
#include <oja/errors.hpp>
#include <oja/ingest.hpp>
#include <oja/models.hpp>
#include <oja/profiles.hpp>
#include <oja/report.hpp>
#include <oja/simulate.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oja::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitValidation = 3;

namespace detail {

struct CleanFlags {
    std::string alt_policy = "reassign";
    double alpha = 0.05;
    std::int64_t min_shared_hashes = 3;
    double mu0_time = 22.89;
    double mu0_memory = 2032.0;
};

struct AnalyzeFlags {
    std::string bands = "0.4,0.8";
    double warn_percentile = 20.0;
    bool no_post_accept_exclusion = false;
};

inline clean::CleanOptions clean_options(const CleanFlags& f) {
    clean::CleanOptions opts;
    if (f.alt_policy == "reassign") opts.alt_policy = clean::AltPolicy::Reassign;
    else if (f.alt_policy == "delete") opts.alt_policy = clean::AltPolicy::Delete;
    else throw ConfigInvalidError("--alt-policy must be reassign or delete");
    if (f.min_shared_hashes < 1) throw ConfigInvalidError("--min-shared-hashes must be >= 1");
    opts.alt_params.min_shared_hashes = static_cast<std::size_t>(f.min_shared_hashes);
    opts.ztests = {clean::ZTestConfig{clean::PruneVariable::TimeMs, f.mu0_time, f.alpha, true},
                   clean::ZTestConfig{clean::PruneVariable::MemoryKb, f.mu0_memory, f.alpha,
                                      true}};
    return opts;
}

inline models::AnalysisOptions analysis_options(const AnalyzeFlags& f) {
    models::AnalysisOptions opts;
    const auto comma = f.bands.find(',');
    if (comma == std::string::npos)
        throw ConfigInvalidError("--bands expects two comma-separated edges, e.g. 0.4,0.8");
    try {
        opts.bands.moderate = std::stod(f.bands.substr(0, comma));
        opts.bands.strong = std::stod(f.bands.substr(comma + 1));
    } catch (const std::exception&) {
        throw ConfigInvalidError("--bands expects numeric edges");
    }
    if (!(opts.bands.moderate > 0 && opts.bands.moderate < opts.bands.strong &&
          opts.bands.strong <= 1.0))
        throw ConfigInvalidError("--bands edges must satisfy 0 < moderate < strong <= 1");
    if (f.warn_percentile < 0 || f.warn_percentile > 100)
        throw ConfigInvalidError("--warn-percentile must be in [0,100]");
    opts.warning.pct = f.warn_percentile;
    opts.corrections.exclude_after_accept = !f.no_post_accept_exclusion;
    return opts;
}

inline ingest::LogFormat parse_format(std::string format, const fs::path& input) {
    if (format.empty()) {
        const auto ext = input.extension().string();
        format = (ext == ".jsonl" || ext == ".ndjson") ? "jsonl" : "csv";
    }
    if (format == "csv") return ingest::LogFormat::Csv;
    if (format == "jsonl") return ingest::LogFormat::Jsonl;
    throw ConfigInvalidError("--format must be csv or jsonl");
}

inline ingest::SchemaProfile resolve_profile(const std::string& name_or_path) {
    for (const auto& n : profiles::builtin_names())
        if (n == name_or_path) return profiles::builtin(n);
    return ingest::load_profile(io::read_file(name_or_path));
}

inline json parse_json_file(const fs::path& path) {
    try {
        return json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw StreamError(path.string() + " is not valid JSON: " + e.what());
    }
}

struct IngestFlags {
    std::string input;
    std::string format; // empty = infer from extension
    std::string profile;
    std::string tests;
    std::string problems;
    std::string roster;
    std::string scores;
    std::string ip_map;
    std::string label;
    int tz = 480;
};

inline CohortDataset run_ingest(const IngestFlags& f, std::ostream& err) {
    std::ifstream in(f.input, std::ios::binary);
    if (!in) throw StreamError("cannot open input: " + f.input);
    auto profile = resolve_profile(f.profile);
    auto parsed = ingest::parse_logs(in, parse_format(f.format, f.input), profile, f.tz);
    if (!parsed.errors.empty()) {
        err << parsed.errors.size() << " of " << parsed.total_rows
            << " rows rejected during parsing:\n";
        for (const auto& e : parsed.errors)
            err << "  line " << e.line << ": " << e.reason << "\n";
    }

    if (!f.ip_map.empty()) {
        auto map = ingest::load_ip_map(parse_json_file(f.ip_map));
        for (auto& log : parsed.logs)
            if (log.location.empty()) log.location = ingest::resolve_location(log.ip, map);
    }

    auto tests = io::tests_from_json(parse_json_file(f.tests), f.tz);

    std::vector<ProblemMeta> problems;
    if (!f.problems.empty()) {
        problems = io::problems_from_json(parse_json_file(f.problems));
    } else {
        // derive skeleton metadata from the logs themselves: first sighting
        // wins, test from the log's test id or the window containing it
        std::map<std::string, std::size_t> seen;
        for (const auto& log : parsed.logs) {
            if (seen.count(log.problem_id)) continue;
            seen[log.problem_id] = problems.size();
            ProblemMeta p;
            p.id = log.problem_id;
            p.title = log.problem_id;
            p.test_id = log.test_id;
            if (p.test_id.empty())
                for (const auto& t : tests)
                    if (t.start <= log.in_time && log.in_time <= t.end) {
                        p.test_id = t.id;
                        break;
                    }
            problems.push_back(std::move(p));
        }
    }

    std::vector<UserRecord> users;
    {
        std::ifstream rin(f.roster, std::ios::binary);
        if (!rin) throw StreamError("cannot open roster: " + f.roster);
        users = ingest::load_roster_csv(rin);
    }
    // accounts that appear in the logs but not on the roster still need records
    {
        std::set<std::string> known;
        for (const auto& u : users) known.insert(u.user_id);
        for (const auto& log : parsed.logs)
            if (known.insert(log.user_id).second) {
                UserRecord u;
                u.user_id = log.user_id;
                users.push_back(std::move(u));
            }
    }

    std::vector<ExamScores> scores;
    if (!f.scores.empty()) {
        std::ifstream sin(f.scores, std::ios::binary);
        if (!sin) throw StreamError("cannot open scores: " + f.scores);
        scores = ingest::load_scores_csv(sin);
    }

    const std::string label = f.label.empty() ? fs::path(f.input).stem().string() : f.label;
    return ingest::build_dataset(std::move(parsed.logs), std::move(problems), std::move(tests),
                                 std::move(users), std::move(scores), label, f.tz);
}

struct CleanOutput {
    CohortDataset dataset;
    clean::CleanReport report;
};

inline CleanOutput run_clean_stage(const CohortDataset& ds, const CleanFlags& flags,
                                   const fs::path& outdir) {
    auto result = clean::run_clean(ds, clean_options(flags));
    io::save_dataset(result.dataset, outdir);
    io::write_file(outdir / "clean_report.json",
                   clean::clean_report_json(result.report).dump(2) + "\n");
    return {std::move(result.dataset), std::move(result.report)};
}

inline models::AnalysisSet run_analyze_stage(const CohortDataset& ds, const AnalyzeFlags& flags,
                                             const fs::path& outdir) {
    auto analyses = models::compute_analyses(ds, analysis_options(flags));
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) throw StreamError("cannot create " + outdir.string() + ": " + ec.message());
    io::write_file(outdir / "analyses.json", models::analyses_json(analyses).dump(2) + "\n");
    return analyses;
}

inline std::optional<report::BaselineCounts> load_baseline(const std::string& dir) {
    if (dir.empty()) return std::nullopt;
    const json manifest = parse_json_file(fs::path(dir) / "manifest.json");
    report::BaselineCounts b;
    b.label = manifest.at("label").get<std::string>();
    b.logs = manifest.at("counts").at("logs").get<std::int64_t>();
    return b;
}

} // namespace detail

/// Full pipeline driver behind the `oja` binary. Returns process exit codes:
/// 0 ok, 1 usage/config error, 2 input or I/O error, 3 dataset validation
/// failure.
inline int run_pipeline(int argc, const char* const* argv) {
    CLI::App app{"course analytics for online-judge submission logs"};
    app.require_subcommand(1);
    std::ostream& err = std::cerr;

    // --- simulate ----------------------------------------------------------
    auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic cohort with ground truth");
    std::string sim_preset, sim_config_file, sim_label, sim_out;
    std::uint64_t sim_seed = 42;
    std::int64_t sim_students = -1;
    double sim_lambda = -1.0;
    sim_cmd->add_option("--preset", sim_preset, "y2017 or y2019");
    sim_cmd->add_option("--config", sim_config_file, "simulation config JSON");
    sim_cmd->add_option("--seed", sim_seed, "random seed")->capture_default_str();
    sim_cmd->add_option("--students", sim_students, "override student count");
    sim_cmd->add_option("--dropout-lambda", sim_lambda, "override dropout hazard");
    sim_cmd->add_option("--label", sim_label, "override cohort label");
    sim_cmd->add_option("--out", sim_out, "output dataset directory")->required();

    // --- ingest --------------------------------------------------------------
    auto* ing_cmd = app.add_subcommand("ingest", "normalize an OJ export into a dataset");
    detail::IngestFlags ing;
    std::string ing_out;
    ing_cmd->add_option("--input", ing.input, "log export (CSV or JSON-Lines)")->required();
    ing_cmd->add_option("--format", ing.format, "csv or jsonl (default: by extension)");
    ing_cmd->add_option("--profile", ing.profile, "built-in profile name or profile JSON path")
        ->required();
    ing_cmd->add_option("--tests", ing.tests, "test windows JSON")->required();
    ing_cmd->add_option("--problems", ing.problems, "problem metadata JSON (default: derived)");
    ing_cmd->add_option("--roster", ing.roster, "roster CSV (user_id,roster_no[,username])")
        ->required();
    ing_cmd->add_option("--scores", ing.scores, "exam scores CSV (user_id,msc,wsc)");
    ing_cmd->add_option("--ip-map", ing.ip_map, "campus CIDR map JSON");
    ing_cmd->add_option("--label", ing.label, "cohort label (default: input stem)");
    ing_cmd->add_option("--tz", ing.tz, "local UTC offset in minutes")->capture_default_str();
    ing_cmd->add_option("--out", ing_out, "output dataset directory")->required();

    // --- clean ---------------------------------------------------------------
    auto* cln_cmd = app.add_subcommand("clean", "dedup, window-filter, merge alts, screen variables");
    detail::CleanFlags cln;
    std::string cln_data, cln_out;
    cln_cmd->add_option("--data", cln_data, "normalized dataset directory")->required();
    cln_cmd->add_option("--alt-policy", cln.alt_policy, "reassign or delete")
        ->capture_default_str();
    cln_cmd->add_option("--alpha", cln.alpha, "z-test prune threshold")->capture_default_str();
    cln_cmd->add_option("--min-shared-hashes", cln.min_shared_hashes,
                        "shared code hashes linking two accounts")
        ->capture_default_str();
    cln_cmd->add_option("--mu0-time", cln.mu0_time, "baseline mean run time (ms)")
        ->capture_default_str();
    cln_cmd->add_option("--mu0-memory", cln.mu0_memory, "baseline mean memory (KB)")
        ->capture_default_str();
    cln_cmd->add_option("--out", cln_out, "cleaned dataset directory")->required();

    // --- analyze ---------------------------------------------------------------
    auto* ana_cmd = app.add_subcommand("analyze", "compute behavioral models");
    detail::AnalyzeFlags ana;
    std::string ana_data, ana_out;
    ana_cmd->add_option("--data", ana_data, "cleaned dataset directory")->required();
    ana_cmd->add_option("--bands", ana.bands, "correlation band edges, e.g. 0.4,0.8")
        ->capture_default_str();
    ana_cmd->add_option("--warn-percentile", ana.warn_percentile, "early-warning percentile")
        ->capture_default_str();
    ana_cmd->add_flag("--no-post-accept-exclusion", ana.no_post_accept_exclusion,
                      "keep logs made after a problem was already accepted");
    ana_cmd->add_option("--out", ana_out, "directory for analyses.json")->required();

    // --- report ----------------------------------------------------------------
    auto* rep_cmd = app.add_subcommand("report", "render the report bundle");
    std::string rep_data, rep_analyses, rep_clean_report, rep_baseline, rep_out;
    rep_cmd->add_option("--data", rep_data, "cleaned dataset directory")->required();
    rep_cmd->add_option("--analyses", rep_analyses,
                        "analyses.json (default: <data>/analyses.json)");
    rep_cmd->add_option("--clean-report", rep_clean_report,
                        "clean_report.json (default: <data>/clean_report.json)");
    rep_cmd->add_option("--baseline", rep_baseline,
                        "previous-year dataset directory for the year-on-year line");
    rep_cmd->add_option("--out", rep_out, "report bundle directory")->required();

    // --- all ---------------------------------------------------------------------
    auto* all_cmd = app.add_subcommand("all", "clean + analyze + report in one go");
    detail::CleanFlags all_cln;
    detail::AnalyzeFlags all_ana;
    detail::IngestFlags all_ing;
    std::string all_data, all_baseline, all_out;
    std::uint64_t all_seed = 42; // accepted for symmetry; later stages are deterministic
    all_cmd->add_option("--data", all_data, "normalized dataset directory");
    all_cmd->add_option("--input", all_ing.input, "raw log export (alternative to --data)");
    all_cmd->add_option("--format", all_ing.format, "csv or jsonl");
    all_cmd->add_option("--profile", all_ing.profile, "ingest profile");
    all_cmd->add_option("--tests", all_ing.tests, "test windows JSON");
    all_cmd->add_option("--problems", all_ing.problems, "problem metadata JSON");
    all_cmd->add_option("--roster", all_ing.roster, "roster CSV");
    all_cmd->add_option("--scores", all_ing.scores, "scores CSV");
    all_cmd->add_option("--ip-map", all_ing.ip_map, "campus CIDR map JSON");
    all_cmd->add_option("--label", all_ing.label, "cohort label");
    all_cmd->add_option("--tz", all_ing.tz, "local UTC offset in minutes");
    all_cmd->add_option("--seed", all_seed, "random seed");
    all_cmd->add_option("--alt-policy", all_cln.alt_policy, "reassign or delete");
    all_cmd->add_option("--alpha", all_cln.alpha, "z-test prune threshold");
    all_cmd->add_option("--min-shared-hashes", all_cln.min_shared_hashes,
                        "shared code hashes linking two accounts");
    all_cmd->add_option("--bands", all_ana.bands, "correlation band edges");
    all_cmd->add_option("--warn-percentile", all_ana.warn_percentile,
                        "early-warning percentile");
    all_cmd->add_flag("--no-post-accept-exclusion", all_ana.no_post_accept_exclusion,
                      "keep logs made after a problem was already accepted");
    all_cmd->add_option("--baseline", all_baseline, "previous-year dataset directory");
    all_cmd->add_option("--out", all_out, "pipeline output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim_cmd->parsed()) {
            simulate::SimConfig cfg;
            if (!sim_preset.empty()) cfg = simulate::preset(sim_preset);
            if (!sim_config_file.empty())
                cfg = simulate::sim_config_from_json(detail::parse_json_file(sim_config_file),
                                                     cfg);
            if (sim_students >= 0) cfg.students = sim_students;
            if (sim_lambda >= 0) cfg.dropout_lambda = sim_lambda;
            if (!sim_label.empty()) cfg.label = sim_label;
            auto result = simulate::simulate_cohort(cfg, sim_seed);
            io::save_dataset(result.dataset, sim_out);
            io::write_file(fs::path(sim_out) / "truth.json",
                           simulate::truth_json(result.truth).dump(2) + "\n");
            std::cout << "simulated " << result.dataset.label << ": "
                      << result.dataset.users.size() << " users, "
                      << result.dataset.logs.size() << " logs -> " << sim_out << "\n";
            std::cout << "dataset digest sha256:" << io::dataset_digest(result.dataset) << "\n";
            return kExitOk;
        }

        if (ing_cmd->parsed()) {
            auto ds = detail::run_ingest(ing, err);
            io::save_dataset(ds, ing_out);
            std::cout << "ingested " << ds.label << ": " << ds.logs.size() << " logs, "
                      << ds.users.size() << " users -> " << ing_out << "\n";
            return kExitOk;
        }

        if (cln_cmd->parsed()) {
            auto ds = io::load_dataset(cln_data);
            auto result = detail::run_clean_stage(ds, cln, cln_out);
            std::cout << "cleaned " << ds.label << ": " << result.report.input_logs << " -> "
                      << result.report.output_logs << " logs (dups "
                      << result.report.duplicates_removed << ", out-of-window "
                      << result.report.out_of_window << ", alt clusters "
                      << result.report.alt_clusters << ") -> " << cln_out << "\n";
            return kExitOk;
        }

        if (ana_cmd->parsed()) {
            auto ds = io::load_dataset(ana_data);
            auto analyses = detail::run_analyze_stage(ds, ana, ana_out);
            std::cout << "analyzed " << ds.label << ": " << analyses.ac.size() << " students, "
                      << analyses.warnings.size() << " warnings -> " << ana_out
                      << "/analyses.json\n";
            return kExitOk;
        }

        if (rep_cmd->parsed()) {
            auto ds = io::load_dataset(rep_data);
            const fs::path analyses_path = rep_analyses.empty()
                                               ? fs::path(rep_data) / "analyses.json"
                                               : fs::path(rep_analyses);
            const fs::path clean_path = rep_clean_report.empty()
                                            ? fs::path(rep_data) / "clean_report.json"
                                            : fs::path(rep_clean_report);
            auto analyses = models::analyses_from_json(detail::parse_json_file(analyses_path));
            auto creport = clean::clean_report_from_json(detail::parse_json_file(clean_path));
            report::ReportOptions opts;
            opts.baseline = detail::load_baseline(rep_baseline);
            auto bundle = report::render_report(ds, creport, analyses, rep_out, opts);
            std::cout << "report bundle: " << bundle.digests.size() + 1 << " files -> " << rep_out
                      << "\n";
            return kExitOk;
        }

        if (all_cmd->parsed()) {
            (void)all_seed;
            if (all_data.empty() == all_ing.input.empty())
                throw ConfigInvalidError("all: give exactly one of --data or --input");
            const fs::path out(all_out);
            CohortDataset ds;
            if (!all_data.empty()) {
                ds = io::load_dataset(all_data);
            } else {
                if (all_ing.profile.empty() || all_ing.tests.empty() || all_ing.roster.empty())
                    throw ConfigInvalidError(
                        "all --input needs --profile, --tests and --roster too");
                ds = detail::run_ingest(all_ing, err);
                io::save_dataset(ds, out / "ingested");
            }
            auto cleaned = detail::run_clean_stage(ds, all_cln, out / "cleaned");
            auto analyses = detail::run_analyze_stage(cleaned.dataset, all_ana, out / "cleaned");
            report::ReportOptions ropts;
            ropts.baseline = detail::load_baseline(all_baseline);
            auto bundle = report::render_report(cleaned.dataset, cleaned.report, analyses,
                                                out / "report", ropts);
            std::cout << "pipeline done: " << cleaned.report.input_logs << " -> "
                      << cleaned.report.output_logs << " logs; report in "
                      << (out / "report").string() << "\n";
            (void)bundle;
            return kExitOk;
        }
    } catch (const ValidationFailedError& e) {
        err << "validation failed:\n";
        for (const auto& v : e.report().violations) err << "  " << v.message << "\n";
        return kExitValidation;
    } catch (const ConfigInvalidError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitParse;
    }
    return kExitUsage;
}

inline int run_pipeline(const std::vector<std::string>& args) {
    std::vector<std::string> owned;
    owned.reserve(args.size() + 1);
    owned.push_back("oja");
    owned.insert(owned.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(owned.size());
    for (const auto& a : owned) argv.push_back(a.c_str());
    return run_pipeline(static_cast<int>(argv.size()), argv.data());
}

} // namespace oja::cli
