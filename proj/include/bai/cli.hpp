#pragma once

// Command-line front end. Kept out of bai.hpp so library users do not pull in CLI11.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bai.hpp"

namespace bai::cli {

inline constexpr std::uint64_t kDefaultSeed = 20240607;

/// Exit status for an error code: 2 config, 3 I/O, 4 anything raised by the modules.
inline int exit_code(ErrorCode c) {
    switch (c) {
        case ErrorCode::ConfigParse: return 2;
        case ErrorCode::IoFailure: return 3;
        default: return 4;
    }
}

inline void report(std::ostream& err, ErrorCode code, const std::string& message) {
    err << nlohmann::json{{"code", to_string(code)}, {"message", message}}.dump() << '\n';
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ConfigParse, "cannot open config '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigParse, "'" + path + "': " + e.what());
    }
}

/// Accepts either a literal instance {means, family} or a generator spec.
inline BanditInstance load_instance(const std::string& path) {
    const auto j = read_json_file(path);
    if (j.is_object() && (j.contains("generator") || j.contains("mu_star")))
        return generate_instance(instance_spec_from_json(j));
    return instance_from_json(j);
}

/// Writes `text` to `path`, or to `out` when path is empty or "-".
inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::IoFailure, "cannot write '" + path + "'");
    f << text;
    if (!f) fail(ErrorCode::IoFailure, "write to '" + path + "' failed");
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

inline std::string arm_label(ArmIndex a) { return std::to_string(a + 1); }

// -- subcommands --------------------------------------------------------------

inline std::string groups_csv(std::size_t k) {
    const auto code = construct_groups(k);
    std::ostringstream os;
    os << "group,size,members,dummies\n";
    for (std::size_t g = 0; g < code.group_count; ++g) {
        std::string members;
        std::string dummies;
        for (ArmIndex a : code.groups[g]) {
            auto& dst = code.is_dummy(a) ? dummies : members;
            if (!dst.empty()) dst += ' ';
            dst += arm_label(a);
        }
        os << 'G' << g + 1 << ',' << code.groups[g].size() << ',' << members << ',' << dummies << '\n';
    }
    return os.str();
}

inline std::string hardness_csv(const BanditInstance& instance) {
    const auto h = hardness(gap_profile(instance));
    const double kd = static_cast<double>(h.arm_count);
    std::ostringstream os;
    os << "K,best_arm,H1,H1_suboptimal,H2,H3,H4,H4_tilde,four_K_H4,separability_margin,eta\n";
    os << h.arm_count << ',' << arm_label(instance.best_arm()) << ',' << format_number(h.H1) << ','
       << format_number(h.H1_suboptimal) << ',' << format_number(h.H2) << ',' << format_number(h.H3) << ','
       << format_number(h.H4) << ',' << format_number(h.H4_tilde) << ',' << format_number(4.0 * kd * h.H4) << ','
       << format_number(h.separability_margin) << ',' << (h.eta ? format_number(*h.eta) : std::string()) << '\n';
    return os.str();
}

inline std::string bounds_csv(const BanditInstance& instance, const std::vector<double>& budgets) {
    std::ostringstream os;
    os << "T,algorithm,bound,bound_clipped\n";
    for (const std::string name : {"UE", "SR", "SH", "RE"}) {
        for (double t : budgets) {
            const auto tt = static_cast<std::int64_t>(std::llround(t));
            const auto algo = parse_algorithm(name);
            const auto clipped = applicable_bound(instance, algo, tt);
            std::string raw;
            if (clipped) {
                const auto h = hardness(gap_profile(instance));
                const auto fam = bound_family(instance.family());
                const double s2 = instance.family().sigma2;
                const auto k = instance.arm_count();
                const double td = static_cast<double>(tt);
                BoundValue b;
                switch (algo.algorithm) {
                    case Algorithm::UE: b = bound_ue(fam, k, td, h.H3, s2); break;
                    case Algorithm::SR: b = bound_sr(fam, k, td, h.H2, s2); break;
                    case Algorithm::SH: b = bound_sh(fam, k, td, h.H2, s2); break;
                    case Algorithm::RE: b = bound_re(fam, k, td, h.H4, h.eta, s2); break;
                }
                raw = format_number(b.raw());
            }
            os << tt << ',' << name << ',' << raw << ',' << (clipped ? format_number(*clipped) : std::string())
               << '\n';
        }
    }
    return os.str();
}

/// Diagnostics of the first trial of every RE cell, replayed on that trial's stream.
inline nlohmann::json re_diagnostics(const ExperimentConfig& c) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t idx = 0; idx < c.instances.size(); ++idx) {
        const auto instance = generate_instance(c.instances[idx]);
        const InstanceEnvironment env(instance);
        for (const auto& name : c.algorithms) {
            const auto algo = algorithm_for(c, name);
            if (algo.algorithm != Algorithm::RE) continue;
            for (const auto t : c.budgets) {
                nlohmann::json entry{{"instance_id", c.instances[idx].id}, {"algorithm", name}, {"T", t}, {"trial", 0}};
                try {
                    RngStream rng(derive_seed(c.seed, idx), 0);
                    const auto run = run_re(env, t, rng, algo.re);
                    entry["recommended_arm"] = arm_label(run.recommended_arm);
                    entry["correct"] = run.correct;
                    entry["diagnostics"] = to_json(*run.diagnostics);
                    entry["diagnostics"]["decoded_arm"] = arm_label(run.diagnostics->decoded_arm);
                } catch (const Error& e) {
                    entry["failure"] = to_string(e.code());
                }
                out.push_back(std::move(entry));
            }
        }
    }
    return out;
}

/// Runs the CLI on `args` (without the program name). Returns the exit status.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Fixed-budget best-arm identification: group-testing exploration and baselines", "bai_cli"};
    app.require_subcommand(1);
    app.fallthrough();
    std::uint64_t seed = kDefaultSeed;
    app.add_option("--seed", seed, "Master seed")->capture_default_str();
    std::string out_path;

    auto* groups = app.add_subcommand("groups", "Print the binary group code for K arms");
    std::size_t k = 8;
    groups->add_option("--K", k, "Number of arms")->required();
    groups->add_option("--out", out_path, "Output CSV (default stdout)");

    auto* hard = app.add_subcommand("hardness", "Hardness terms of an instance");
    std::string instance_path;
    hard->add_option("--instance", instance_path, "Instance JSON")->required();
    hard->add_option("--out", out_path, "Output CSV (default stdout)");

    auto* bounds = app.add_subcommand("bounds", "Error-probability upper bounds over a budget grid");
    std::string budget_grid = "64:4096:x2";
    bounds->add_option("--instance", instance_path, "Instance JSON")->required();
    bounds->add_option("--budgets", budget_grid, "a:b:step or a:b:xF")->capture_default_str();
    bounds->add_option("--out", out_path, "Output CSV (default stdout)");

    auto* sim = app.add_subcommand("simulate", "Monte-Carlo error rates for an experiment config");
    std::string config_path;
    std::string diagnostics_path;
    bool with_bounds = false;
    sim->add_option("--config", config_path, "Experiment JSON")->required();
    sim->add_option("--out", out_path, "Results CSV (default stdout)");
    sim->add_option("--diagnostics", diagnostics_path, "Write RE per-group diagnostics (first trial) as JSON");
    sim->add_flag("--with-bounds", with_bounds, "Append the applicable theoretical bound to every row");

    auto* cs = app.add_subcommand("case", "Application case studies");
    cs->require_subcommand(1);
    std::int64_t budget = 64;
    std::int64_t trials = 500;
    std::string algorithms;

    auto* jam = cs->add_subcommand("jammer", "Jammer waveform selection over a noise-variance grid");
    std::size_t jam_k = 16;
    std::string noise_grid = "0.001:0.01:0.001";
    jam->add_option("--K", jam_k, "Number of waveforms (power of two)")->capture_default_str();
    jam->add_option("--noise-grid", noise_grid, "a:b:step or a:b:xF")->capture_default_str();
    jam->add_option("--T", budget, "Budget")->capture_default_str();
    jam->add_option("--trials", trials, "Trials per point")->capture_default_str();
    jam->add_option("--algorithms", algorithms, "Comma-separated (default UE,SR,SH,RE)");
    jam->add_option("--out", out_path, "Output CSV (default stdout)");

    auto* radar = cs->add_subcommand("radar", "Active radar channel detection by energy");
    std::string plays = "1200,3000,6000";
    std::string iq_path;
    RadarScenario scenario;
    scenario.noise_var = 40.0;
    double dwell_us = 30.0;
    double alpha = 0.1;
    radar->add_option("--plays", plays, "Comma-separated play budgets")->capture_default_str();
    radar->add_option("--trials", trials, "Trials per budget")->capture_default_str();
    radar->add_option("--iq", iq_path, "CSV (n,i,q) replacing the synthetic active channel");
    radar->add_option("--noise-var", scenario.noise_var, "Per-sample complex noise variance")->capture_default_str();
    radar->add_option("--dwell-us", dwell_us, "Dwell per play in microseconds")->capture_default_str();
    radar->add_option("--alpha", alpha, "Initial exploration share for RE-plugin")->capture_default_str();
    radar->add_option("--algorithms", algorithms, "Comma-separated (default SR,SH,RE-oracle,RE-plugin)");
    radar->add_option("--out", out_path, "Output CSV (default stdout)");

    auto* gmd = app.add_subcommand("group-mean-dist", "Histograms of group means under random gaps");
    std::size_t gmd_k = 16;
    double dmin = 0.1;
    double dmax = 0.5;
    std::int64_t samples = 100000;
    std::size_t bins = 50;
    std::string summary_path;
    gmd->add_option("--K", gmd_k, "Number of arms")->capture_default_str();
    gmd->add_option("--delta-min", dmin, "Smallest gap")->capture_default_str();
    gmd->add_option("--delta-max", dmax, "Largest gap")->capture_default_str();
    gmd->add_option("--samples", samples, "Number of draws")->capture_default_str();
    gmd->add_option("--bins", bins, "Histogram bins")->capture_default_str();
    gmd->add_option("--summary", summary_path, "Write moments as JSON");
    gmd->add_option("--out", out_path, "Output CSV (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        report(err, ErrorCode::ConfigParse, e.what());
        return exit_code(ErrorCode::ConfigParse);
    }

    try {
        if (*groups) {
            emit(out_path, groups_csv(k), out);
        } else if (*hard) {
            emit(out_path, hardness_csv(load_instance(instance_path)), out);
        } else if (*bounds) {
            emit(out_path, bounds_csv(load_instance(instance_path), parse_grid(budget_grid)), out);
        } else if (*sim) {
            auto config = experiment_config_from_json(read_json_file(config_path));
            if (app.count("--seed") > 0) config.seed = seed;
            std::ostringstream os;
            if (with_bounds)
                write_bound_csv(os, bound_vs_empirical(config));
            else
                write_results_csv(os, run_experiment(config));
            emit(out_path, os.str(), out);
            if (!diagnostics_path.empty()) emit(diagnostics_path, re_diagnostics(config).dump(2) + "\n", out);
        } else if (*jam) {
            std::vector<AlgorithmSpec> algos;
            for (const auto& name : split_list(algorithms.empty() ? "UE,SR,SH,RE" : algorithms))
                algos.push_back(parse_algorithm(name));
            std::ostringstream os;
            write_sweep_csv(os, run_jammer_experiment(jam_k, parse_grid(noise_grid), algos, budget, trials, seed));
            emit(out_path, os.str(), out);
        } else if (*radar) {
            std::vector<std::int64_t> budgets;
            for (const auto& p : split_list(plays)) {
                try {
                    budgets.push_back(std::stoll(p));
                } catch (const std::exception&) {
                    fail(ErrorCode::ConfigParse, "bad play count '" + p + "'");
                }
            }
            ReOptions re;
            re.alpha = alpha;
            std::vector<AlgorithmSpec> algos;
            for (const auto& name : split_list(algorithms.empty() ? "SR,SH,RE-oracle,RE-plugin" : algorithms))
                algos.push_back(parse_algorithm(name, name == "RE-plugin" ? re : ReOptions{}));
            scenario.dwell_s = dwell_us * 1e-6;
            std::optional<IqRecord> iq;
            if (!iq_path.empty()) iq = read_iq_file(iq_path);
            std::ostringstream os;
            write_results_csv(os, run_radar_experiment(scenario, budgets, algos, trials, seed,
                                                       iq ? &*iq : nullptr));
            emit(out_path, os.str(), out);
        } else if (*gmd) {
            const auto study = group_mean_distribution(gmd_k, dmin, dmax, samples, seed);
            std::ostringstream os;
            write_group_mean_csv(os, study, bins);
            emit(out_path, os.str(), out);
            if (!summary_path.empty()) {
                const nlohmann::json j{{"K", gmd_k},
                                       {"samples", samples},
                                       {"mu_H", {{"mean", study.high.mean},
                                                 {"variance", study.high.variance},
                                                 {"expected_mean", study.expected_high},
                                                 {"expected_variance", study.variance_high}}},
                                       {"mu_L", {{"mean", study.low.mean},
                                                 {"variance", study.low.variance},
                                                 {"expected_mean", study.expected_low},
                                                 {"expected_variance", study.variance_low}}}};
                emit(summary_path, j.dump(2) + "\n", out);
            }
        }
    } catch (const Error& e) {
        report(err, e.code(), e.what());
        return exit_code(e.code());
    } catch (const std::exception& e) {
        report(err, ErrorCode::InvalidArgument, e.what());
        return exit_code(ErrorCode::InvalidArgument);
    }
    return 0;
}

}  // namespace bai::cli
