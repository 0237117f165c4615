#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "errors.hpp"
#include "hardness.hpp"
#include "policies.hpp"
#include "rng.hpp"

namespace bai {

// -- instance generators ---------------------------------------------------------

enum class Generator { Arithmetic, OneRealCompetitor, TwoGroups, SingleGap, Explicit };

inline std::string to_string(Generator g) {
    switch (g) {
        case Generator::Arithmetic: return "arithmetic";
        case Generator::OneRealCompetitor: return "one_real_competitor";
        case Generator::TwoGroups: return "two_groups";
        case Generator::SingleGap: return "single_gap";
        case Generator::Explicit: return "explicit";
    }
    return "?";
}

inline Generator generator_from_string(const std::string& s) {
    for (auto g : {Generator::Arithmetic, Generator::OneRealCompetitor, Generator::TwoGroups, Generator::SingleGap,
                   Generator::Explicit})
        if (to_string(g) == s) return g;
    fail(ErrorCode::ConfigParse, "unknown generator '" + s + "'");
}

struct InstanceSpec {
    std::string id = "instance";
    RewardFamily family = RewardFamily::gaussian(1.0);
    std::size_t k = 2;
    Generator generator = Generator::SingleGap;
    double mu_star = 1.0;
    double delta_min = 0.5;
    double delta_max = 0.5;
    std::uint64_t seed = 0;     // drives the placement of the best arm
    std::vector<double> means;  // Explicit only
};

/// Sub-optimal means before shuffling; the best arm is prepended by the caller.
inline std::vector<double> suboptimal_means(const InstanceSpec& s) {
    const std::size_t n = s.k - 1;
    std::vector<double> out(n);
    switch (s.generator) {
        case Generator::Arithmetic:
            for (std::size_t i = 0; i < n; ++i) {
                const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
                out[i] = s.mu_star - (s.delta_min + t * (s.delta_max - s.delta_min));
            }
            break;
        case Generator::OneRealCompetitor:
            out.assign(n, s.mu_star - s.delta_max);
            out[0] = s.mu_star - s.delta_min;
            break;
        case Generator::TwoGroups: {
            const std::size_t close = (n + 1) / 2;
            for (std::size_t i = 0; i < n; ++i) out[i] = s.mu_star - (i < close ? s.delta_min : s.delta_max);
            break;
        }
        case Generator::SingleGap: out.assign(n, s.mu_star - s.delta_min); break;
        case Generator::Explicit: break;
    }
    return out;
}

inline BanditInstance generate_instance(const InstanceSpec& s) {
    if (s.generator == Generator::Explicit) {
        if (!s.means.empty() && s.k != s.means.size() && s.k != 0)
            fail(ErrorCode::InvalidInstance, "K does not match the explicit means");
        return BanditInstance(s.means, s.family);
    }
    if (s.k < 2) fail(ErrorCode::InvalidK, "need K >= 2");
    if (!(s.delta_min > 0.0) || !(s.delta_min <= s.delta_max))
        fail(ErrorCode::InvalidInstance, "need 0 < delta_min <= delta_max");
    if (s.generator == Generator::SingleGap && s.delta_min != s.delta_max)
        fail(ErrorCode::InvalidInstance, "single-gap instances need delta_min == delta_max");
    if (s.family.is_bounded() && (s.mu_star > 1.0 || s.mu_star - s.delta_max < 0.0))
        fail(ErrorCode::SupportViolation, "means fall outside [0,1]");

    std::vector<double> means{s.mu_star};
    const auto rest = suboptimal_means(s);
    means.insert(means.end(), rest.begin(), rest.end());
    RngStream rng(s.seed, 0x706c6163ULL);
    std::shuffle(means.begin(), means.end(), rng.engine());
    return BanditInstance(std::move(means), s.family);
}

inline InstanceSpec instance_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorCode::ConfigParse, "instance spec must be an object");
    static const std::vector<std::string> keys{"id",        "family",    "K",    "generator", "mu_star",
                                               "delta_min", "delta_max", "delta", "seed",     "means"};
    for (const auto& [key, _] : j.items())
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            fail(ErrorCode::ConfigParse, "unknown instance key '" + key + "'");
    try {
        InstanceSpec s;
        s.id = j.value("id", s.id);
        if (!j.contains("family")) fail(ErrorCode::ConfigParse, "instance spec needs a \"family\"");
        s.family = family_from_json(j.at("family"));
        s.generator = generator_from_string(j.value("generator", std::string("single_gap")));
        if (s.generator == Generator::Explicit) {
            s.means = j.at("means").get<std::vector<double>>();
            s.k = j.value("K", s.means.size());
        } else {
            if (j.contains("means")) fail(ErrorCode::ConfigParse, "\"means\" is only valid with generator explicit");
            s.k = j.at("K").get<std::size_t>();
            s.mu_star = j.at("mu_star").get<double>();
            if (j.contains("delta")) {
                s.delta_min = s.delta_max = j.at("delta").get<double>();
            } else {
                s.delta_min = j.at("delta_min").get<double>();
                s.delta_max = j.value("delta_max", s.delta_min);
            }
        }
        s.seed = j.value("seed", std::uint64_t{0});
        return s;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigParse, std::string("instance spec: ") + e.what());
    }
}

// -- statistics ------------------------------------------------------------------

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

inline constexpr double kZ95 = 1.959963984540054;

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z = kZ95) {
    if (trials <= 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {successes == 0 ? 0.0 : std::max(0.0, centre - half), successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

// -- parallel trial runner ---------------------------------------------------------

/// Worker count: BAI_THREADS if set to a positive integer, else the hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("BAI_THREADS")) {
        unsigned v = 0;
        const auto* end = env + std::char_traits<char>::length(env);
        if (auto [p, ec] = std::from_chars(env, end, v); ec == std::errc{} && p == end && v > 0) return v;
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

/**
 * Runs `trial(i)` for i in [0, trials) and counts how many return true.
 * Each trial must derive its randomness from i alone, so the count does not
 * depend on the number of workers. The exception of the lowest failing trial
 * is rethrown.
 */
template <class Trial>
std::int64_t count_trials(std::int64_t trials, Trial&& trial, unsigned threads = worker_count()) {
    std::atomic<std::int64_t> next{0};
    std::atomic<std::int64_t> hits{0};
    std::mutex error_mutex;
    std::int64_t error_index = trials;
    std::exception_ptr error;

    auto work = [&] {
        std::int64_t local = 0;
        for (std::int64_t i; (i = next.fetch_add(1)) < trials;) {
            try {
                if (trial(i)) ++local;
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
                next.store(trials);
            }
        }
        hits += local;
    };

    const auto n = static_cast<unsigned>(std::clamp<std::int64_t>(trials, 1, std::max(1U, threads)));
    if (n == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n; ++t) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
    return hits.load();
}

// -- experiment tables ---------------------------------------------------------------

struct CellResult {
    std::string instance_id;
    std::string algorithm;
    std::int64_t budget = 0;
    std::int64_t trials = 0;
    std::int64_t errors = 0;
    double wall_time_s = 0.0;
    std::optional<ErrorCode> failure;  // set when the cell is undefined (e.g. budget too small)

    bool present() const noexcept { return !failure.has_value(); }
    double p_hat() const { return trials > 0 ? static_cast<double>(errors) / static_cast<double>(trials) : 0.0; }
    Interval ci95() const { return wilson_interval(errors, trials); }
    double ci_halfwidth() const {
        const auto ci = ci95();
        return (ci.hi - ci.lo) / 2.0;
    }
};

/**
 * Monte-Carlo error rate of one algorithm in one environment family. `make_env`
 * receives the trial stream first, so per-trial hidden state (e.g. which
 * channel is active) is drawn before the policy runs.
 */
template <class MakeEnv>
CellResult run_cell(const std::string& instance_id, const AlgorithmSpec& algo, std::int64_t budget,
                    std::int64_t trials, std::uint64_t seed, MakeEnv&& make_env, unsigned threads = worker_count()) {
    CellResult cell{instance_id, algo.label, budget, trials, 0, 0.0, std::nullopt};
    const auto start = std::chrono::steady_clock::now();
    try {
        cell.errors = count_trials(
            trials,
            [&](std::int64_t i) {
                RngStream rng(seed, static_cast<std::uint64_t>(i));
                const auto env = make_env(rng);
                return !run_policy(algo, env, budget, rng).correct;
            },
            threads);
    } catch (const Error& e) {
        cell.failure = e.code();
        cell.errors = 0;
        cell.trials = 0;
    }
    cell.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return cell;
}

struct ExperimentConfig {
    std::uint64_t seed = 20240607;
    std::int64_t trials = 500;
    std::vector<std::string> algorithms{"UE", "SR", "SH", "RE"};
    std::vector<std::int64_t> budgets;
    double alpha = 0.0;          // RE / RE-oracle
    double plugin_alpha = 0.1;   // RE-plugin
    std::vector<InstanceSpec> instances;
};

/// Geometric grid lo, lo*f, lo*f^2, ... (rounded, deduplicated) up to hi.
inline std::vector<std::int64_t> geometric_budgets(std::int64_t lo, std::int64_t hi, double factor) {
    if (lo < 1 || hi < lo || !(factor > 1.0))
        fail(ErrorCode::InvalidArgument, "geometric grid needs 1 <= lo <= hi and factor > 1");
    std::vector<std::int64_t> out;
    for (double t = static_cast<double>(lo); t <= static_cast<double>(hi) * (1.0 + 1e-12); t *= factor) {
        const auto v = static_cast<std::int64_t>(std::llround(t));
        if (out.empty() || v != out.back()) out.push_back(v);
    }
    return out;
}

/**
 * Parses "a:b:step" (arithmetic) or "a:b:xF" (geometric with ratio F).
 */
inline std::vector<double> parse_grid(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    auto number = [&](const std::string& s) {
        double v = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            fail(ErrorCode::ConfigParse, "bad number '" + s + "' in grid '" + text + "'");
        return v;
    };
    if (parts.size() != 3) fail(ErrorCode::ConfigParse, "grid must look like a:b:step or a:b:xF");
    const double a = number(parts[0]);
    const double b = number(parts[1]);
    std::vector<double> out;
    if (!parts[2].empty() && parts[2][0] == 'x') {
        const double f = number(parts[2].substr(1));
        if (!(a > 0.0) || !(f > 1.0) || b < a) fail(ErrorCode::ConfigParse, "bad geometric grid '" + text + "'");
        for (int i = 0;; ++i) {
            const double v = a * std::pow(f, i);
            if (v > b * (1.0 + 1e-9)) break;
            out.push_back(v);
        }
    } else {
        const double step = number(parts[2]);
        if (!(step > 0.0) || b < a) fail(ErrorCode::ConfigParse, "bad arithmetic grid '" + text + "'");
        for (int i = 0;; ++i) {
            const double v = a + step * i;
            if (v > b + step * 1e-9) break;
            out.push_back(v);
        }
    }
    return out;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorCode::ConfigParse, "experiment config must be an object");
    static const std::vector<std::string> keys{"seed", "trials", "algorithms", "budgets", "alpha", "plugin_alpha",
                                               "instances"};
    for (const auto& [key, _] : j.items())
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            fail(ErrorCode::ConfigParse, "unknown config key '" + key + "'");
    try {
        ExperimentConfig c;
        c.seed = j.value("seed", c.seed);
        c.trials = j.value("trials", c.trials);
        if (j.contains("algorithms")) c.algorithms = j.at("algorithms").get<std::vector<std::string>>();
        c.alpha = j.value("alpha", c.alpha);
        c.plugin_alpha = j.value("plugin_alpha", c.plugin_alpha);
        if (!j.contains("budgets")) fail(ErrorCode::ConfigParse, "config needs \"budgets\"");
        const auto& b = j.at("budgets");
        if (b.is_array()) {
            c.budgets = b.get<std::vector<std::int64_t>>();
        } else if (b.is_object()) {
            for (const auto& [key, _] : b.items())
                if (key != "from" && key != "to" && key != "factor")
                    fail(ErrorCode::ConfigParse, "unknown budgets key '" + key + "'");
            c.budgets = geometric_budgets(b.at("from").get<std::int64_t>(), b.at("to").get<std::int64_t>(),
                                          b.value("factor", 2.0));
        } else {
            fail(ErrorCode::ConfigParse, "\"budgets\" must be an array or {from,to,factor}");
        }
        if (!j.contains("instances") || !j.at("instances").is_array())
            fail(ErrorCode::ConfigParse, "config needs an \"instances\" array");
        for (const auto& s : j.at("instances")) c.instances.push_back(instance_spec_from_json(s));
        if (c.trials < 1) fail(ErrorCode::ConfigParse, "trials must be >= 1");
        if (c.budgets.empty()) fail(ErrorCode::ConfigParse, "budget grid is empty");
        for (const auto& a : c.algorithms) (void)parse_algorithm(a);
        return c;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigParse, std::string("experiment config: ") + e.what());
    }
}

inline AlgorithmSpec algorithm_for(const ExperimentConfig& c, const std::string& name) {
    ReOptions re;
    re.alpha = name == "RE-plugin" ? c.plugin_alpha : c.alpha;
    return parse_algorithm(name, re);
}

/// Every (instance, algorithm, T) cell of the config. Trials share streams across algorithms and budgets.
inline std::vector<CellResult> run_experiment(const ExperimentConfig& c, unsigned threads = worker_count()) {
    std::vector<CellResult> out;
    for (std::size_t idx = 0; idx < c.instances.size(); ++idx) {
        const auto& spec = c.instances[idx];
        const BanditInstance instance = generate_instance(spec);
        const std::uint64_t seed = derive_seed(c.seed, idx);
        for (const auto& name : c.algorithms) {
            const auto algo = algorithm_for(c, name);
            for (const auto t : c.budgets)
                out.push_back(run_cell(spec.id, algo, t, c.trials, seed,
                                       [&](RngStream&) { return InstanceEnvironment(instance); }, threads));
        }
    }
    return out;
}

// -- CSV ----------------------------------------------------------------------------

/// Shortest round-trip decimal form; independent of the locale.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline void write_cell_fields(std::ostream& os, const CellResult& c) {
    os << c.algorithm << ',' << c.budget << ',';
    if (!c.present()) {
        os << "0,,,,";
        return;
    }
    const auto ci = c.ci95();
    os << c.trials << ',' << c.errors << ',' << format_number(c.p_hat()) << ',' << format_number(ci.lo) << ','
       << format_number(ci.hi);
}

inline void write_results_csv(std::ostream& os, const std::vector<CellResult>& cells) {
    os << "instance_id,algorithm,T,trials,errors,p_hat,ci_lo,ci_hi\n";
    for (const auto& c : cells) {
        os << c.instance_id << ',';
        write_cell_fields(os, c);
        os << '\n';
    }
}

// -- bounds next to measurements ---------------------------------------------------------

/// The clipped theoretical bound that applies to `algo` on `instance` at budget t, if any.
inline std::optional<double> applicable_bound(const BanditInstance& instance, const AlgorithmSpec& algo,
                                              std::int64_t t) {
    const auto h = hardness(gap_profile(instance));
    const auto fam = bound_family(instance.family());
    const double s2 = instance.family().sigma2;
    const std::size_t k = instance.arm_count();
    const double td = static_cast<double>(t);
    try {
        switch (algo.algorithm) {
            case Algorithm::UE: return bound_ue(fam, k, td, h.H3, s2).clipped();
            case Algorithm::SR:
                if (t <= static_cast<std::int64_t>(k)) return std::nullopt;
                return bound_sr(fam, k, td, h.H2, s2).clipped();
            case Algorithm::SH: return bound_sh(fam, k, td, h.H2, s2).clipped();
            case Algorithm::RE: {
                if (algo.re.prior_mode != PriorMode::OracleGaps || algo.re.alpha != 0.0) return std::nullopt;
                const auto eta = algo.re.eta_override ? algo.re.eta_override : h.eta;
                return bound_re(fam, k, td, h.H4, eta, s2).clipped();
            }
        }
    } catch (const Error&) {
    }
    return std::nullopt;
}

struct BoundComparisonRow {
    CellResult cell;
    std::optional<double> bound;
};

inline std::vector<BoundComparisonRow> bound_vs_empirical(const ExperimentConfig& c,
                                                          unsigned threads = worker_count()) {
    std::vector<BoundComparisonRow> rows;
    const auto cells = run_experiment(c, threads);
    std::size_t next = 0;
    for (const auto& spec : c.instances) {
        const auto instance = generate_instance(spec);
        for (const auto& name : c.algorithms) {
            const auto algo = algorithm_for(c, name);
            for (const auto t : c.budgets) rows.push_back({cells[next++], applicable_bound(instance, algo, t)});
        }
    }
    return rows;
}

inline void write_bound_csv(std::ostream& os, const std::vector<BoundComparisonRow>& rows) {
    os << "instance_id,algorithm,T,trials,errors,p_hat,ci_lo,ci_hi,bound\n";
    for (const auto& r : rows) {
        os << r.cell.instance_id << ',';
        write_cell_fields(os, r.cell);
        os << ',' << (r.bound ? format_number(*r.bound) : std::string()) << '\n';
    }
}

// -- group-mean distribution -------------------------------------------------------------

struct MomentSummary {
    double mean = 0.0;
    double variance = 0.0;  // unbiased sample variance
};

struct GroupMeanStudy {
    std::size_t k = 0;
    double top_mean = 1.0;
    double delta_min = 0.0;
    double delta_max = 0.0;
    std::vector<double> mu_high;  // group holding the best arm
    std::vector<double> mu_low;   // group without it
    MomentSummary high;
    MomentSummary low;
    double expected_high = 0.0;
    double expected_low = 0.0;
    double variance_high = 0.0;  // (K/2 - 1) w^2 / (3 K^2) with w = Delta_max - Delta_min
    double variance_low = 0.0;   // w^2 / (6K)
};

inline MomentSummary moments(const std::vector<double>& xs) {
    MomentSummary m;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) m.mean += x;
    m.mean /= n;
    for (double x : xs) m.variance += (x - m.mean) * (x - m.mean);
    m.variance = xs.size() > 1 ? m.variance / (n - 1.0) : 0.0;
    return m;
}

/**
 * Samples group means when every sub-optimal gap is drawn i.i.d. uniform in
 * [delta_min, delta_max]; the high group is the best arm plus K/2-1 others.
 */
inline GroupMeanStudy group_mean_distribution(std::size_t k, double delta_min, double delta_max,
                                              std::int64_t samples, std::uint64_t seed, double top_mean = 1.0) {
    if (k < 4 || k % 2 != 0) fail(ErrorCode::InvalidK, "need an even K >= 4");
    if (samples < 1000) fail(ErrorCode::InvalidArgument, "need at least 1000 samples");
    if (!(delta_min <= delta_max)) fail(ErrorCode::InvalidArgument, "need delta_min <= delta_max");
    GroupMeanStudy s{k, top_mean, delta_min, delta_max, {}, {}, {}, {}, 0.0, 0.0, 0.0, 0.0};
    const std::size_t half = k / 2;
    s.mu_high.resize(static_cast<std::size_t>(samples));
    s.mu_low.resize(static_cast<std::size_t>(samples));
    RngStream rng(seed, 0x676d64ULL);
    for (std::size_t i = 0; i < s.mu_high.size(); ++i) {
        double high = top_mean;
        for (std::size_t j = 0; j + 1 < half; ++j) high += top_mean - rng.uniform(delta_min, delta_max);
        double low = 0.0;
        for (std::size_t j = 0; j < half; ++j) low += top_mean - rng.uniform(delta_min, delta_max);
        s.mu_high[i] = high / static_cast<double>(half);
        s.mu_low[i] = low / static_cast<double>(half);
    }
    s.high = moments(s.mu_high);
    s.low = moments(s.mu_low);
    const double kd = static_cast<double>(k);
    const double centre = (delta_min + delta_max) / 2.0;
    const double w2 = (delta_max - delta_min) * (delta_max - delta_min);
    s.expected_high = top_mean - (1.0 - 2.0 / kd) * centre;
    s.expected_low = top_mean - centre;
    s.variance_high = (kd / 2.0 - 1.0) * w2 / (3.0 * kd * kd);
    s.variance_low = w2 / (6.0 * kd);
    return s;
}

/// Histogram rows for both groups with a Gaussian overlay at the analytic moments.
inline void write_group_mean_csv(std::ostream& os, const GroupMeanStudy& s, std::size_t bins = 50) {
    os << "group,bin_lo,bin_hi,count,density,clt_density\n";
    auto emit = [&](const char* name, const std::vector<double>& xs, double mean, double var) {
        const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
        double lo = *lo_it;
        double hi = *hi_it;
        if (hi <= lo) hi = lo + 1e-12;
        const double width = (hi - lo) / static_cast<double>(bins);
        std::vector<std::int64_t> counts(bins, 0);
        for (double x : xs)
            ++counts[std::min(bins - 1, static_cast<std::size_t>((x - lo) / width))];
        for (std::size_t b = 0; b < bins; ++b) {
            const double a = lo + width * static_cast<double>(b);
            const double mid = a + width / 2.0;
            const double density = static_cast<double>(counts[b]) / (static_cast<double>(xs.size()) * width);
            const double clt = var > 0.0 ? std::exp(-(mid - mean) * (mid - mean) / (2.0 * var)) /
                                               std::sqrt(2.0 * std::numbers::pi * var)
                                         : 0.0;
            os << name << ',' << format_number(a) << ',' << format_number(a + width) << ',' << counts[b] << ','
               << format_number(density) << ',' << format_number(clt) << '\n';
        }
    };
    emit("mu_H", s.mu_high, s.expected_high, s.variance_high);
    emit("mu_L", s.mu_low, s.expected_low, s.variance_low);
}

}  // namespace bai
