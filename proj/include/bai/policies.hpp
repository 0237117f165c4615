#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "errors.hpp"
#include "grouping.hpp"
#include "rng.hpp"

namespace bai {

/// What a policy may be told about its environment when it runs with oracle knowledge.
struct OracleInfo {
    std::vector<double> means;     // real arms only
    double dummy_mean = 0.0;       // reward of a padding arm
    double reward_variance = 0.0;  // variance of one single-arm reward
    bool gaussian_test = true;     // false: bounded rewards, use the midpoint rule
};

/**
 * Something a policy can pull. Groups are given over the padded index set; an
 * environment decides what a dummy member contributes.
 */
template <class E>
concept Environment = requires(const E& env, ArmIndex arm, std::span<const ArmIndex> group, RngStream& rng) {
    { env.arm_count() } -> std::convertible_to<std::size_t>;
    { env.best_arm() } -> std::convertible_to<ArmIndex>;
    { env.pull_arm(arm, rng) } -> std::convertible_to<double>;
    { env.pull_group(group, rng) } -> std::convertible_to<double>;
    { env.oracle() } -> std::convertible_to<OracleInfo>;
};

/// Adapts a BanditInstance to the Environment concept.
class InstanceEnvironment {
public:
    explicit InstanceEnvironment(const BanditInstance& instance) : instance_(&instance) {}

    std::size_t arm_count() const noexcept { return instance_->arm_count(); }
    ArmIndex best_arm() const noexcept { return instance_->best_arm(); }
    double pull_arm(ArmIndex arm, RngStream& rng) const { return sample_arm(*instance_, arm, rng); }
    double pull_group(std::span<const ArmIndex> members, RngStream& rng) const {
        return sample_group(*instance_, members, rng);
    }
    OracleInfo oracle() const {
        const auto& fam = instance_->family();
        return {std::vector<double>(instance_->means().begin(), instance_->means().end()),
                dummy_mean(*instance_), fam.is_gaussian() ? fam.sigma2 : 0.25, fam.is_gaussian()};
    }

    const BanditInstance& instance() const noexcept { return *instance_; }

private:
    const BanditInstance* instance_;
};

enum class Algorithm { UE, SR, SH, RE };

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::UE: return "UE";
        case Algorithm::SR: return "SR";
        case Algorithm::SH: return "SH";
        case Algorithm::RE: return "RE";
    }
    return "?";
}

enum class PriorMode { OracleGaps, PluginEstimates };

struct ReOptions {
    double alpha = 0.0;  // share of the budget spent pulling single arms first
    PriorMode prior_mode = PriorMode::OracleGaps;
    std::optional<double> eta_override;  // only consulted when evaluating the RE bound
    double gap_floor = 1e-6;             // lower clamp on the estimated Delta_min

    static ReOptions oracle() { return {}; }
    static ReOptions plugin(double alpha = 0.1) { return {alpha, PriorMode::PluginEstimates, {}, 1e-6}; }
};

struct Priors {
    double pi0 = 0.5;
    double pi1 = 0.5;
    double log_odds = 0.0;  // ln(pi0 / pi1), kept separately so extreme priors stay finite
};

/// Worst-case simple hypotheses for one group: sup of Lambda_0 and inf of Lambda_1.
struct GroupHypothesis {
    double mu_H_star = 0.0;
    double mu_L_star = 0.0;
    Priors priors;
};

struct GroupDiagnostics {
    double prior_mean = 0.0;     // group-mean estimate fed to the priors
    double observed_mean = 0.0;  // average of the group pulls
    double pi0 = 0.5;
    double pi1 = 0.5;
    double tau = 0.0;
    bool detected = false;
};

struct ReDiagnostics {
    double mu_H_star = 0.0;
    double mu_L_star = 0.0;
    double sigma2 = 0.0;
    std::int64_t pulls_per_arm_initial = 0;
    std::int64_t pulls_per_group = 0;
    bool separability_violated = false;
    bool degenerate_priors = false;
    bool used_fallback = false;
    ArmIndex decoded_arm = 0;
    std::vector<GroupDiagnostics> groups;
};

struct PolicyRun {
    Algorithm algorithm = Algorithm::UE;
    std::int64_t budget = 0;
    ArmIndex recommended_arm = 0;
    bool correct = false;
    std::int64_t pulls_used = 0;
    std::optional<ReDiagnostics> diagnostics;
};

// -- shared helpers ----------------------------------------------------------

namespace detail {

// Index of the largest value, lowest index on ties.
inline ArmIndex argmax_lowest(std::span<const double> v) {
    ArmIndex best = 0;
    for (ArmIndex i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

template <Environment Env>
double average_pulls(const Env& env, ArmIndex arm, std::int64_t n, RngStream& rng) {
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i) s += env.pull_arm(arm, rng);
    return s;
}

inline void require_budget(bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::BudgetTooSmall, what);
}

// log of the logistic function, stable in both tails.
inline double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

}  // namespace detail

// -- Uniform exploration -------------------------------------------------------

template <Environment Env>
PolicyRun run_ue(const Env& env, std::int64_t budget, RngStream& rng) {
    const auto k = static_cast<std::int64_t>(env.arm_count());
    detail::require_budget(budget >= k, "UE needs T >= K");
    const std::int64_t n = budget / k;
    std::vector<double> means(static_cast<std::size_t>(k));
    for (ArmIndex a = 0; a < means.size(); ++a)
        means[a] = detail::average_pulls(env, a, n, rng) / static_cast<double>(n);
    PolicyRun run{Algorithm::UE, budget, detail::argmax_lowest(means), false, n * k, {}};
    run.correct = run.recommended_arm == env.best_arm();
    return run;
}

// -- Successive Rejects --------------------------------------------------------

/// Cumulative per-arm pull counts n_1..n_{K-1} of the rejection phases.
inline std::vector<std::int64_t> sr_schedule(std::size_t k, std::int64_t budget) {
    double log_bar = 0.5;
    for (std::size_t i = 2; i <= k; ++i) log_bar += 1.0 / static_cast<double>(i);
    std::vector<std::int64_t> n(k - 1);
    const double spare = static_cast<double>(budget - static_cast<std::int64_t>(k));
    for (std::size_t phase = 1; phase < k; ++phase)
        n[phase - 1] = static_cast<std::int64_t>(
            std::ceil(spare / (log_bar * static_cast<double>(k + 1 - phase))));
    return n;
}

template <Environment Env>
PolicyRun run_sr(const Env& env, std::int64_t budget, RngStream& rng) {
    const std::size_t k = env.arm_count();
    detail::require_budget(budget >= static_cast<std::int64_t>(k), "SR needs T >= K");
    const auto schedule = sr_schedule(k, budget);

    std::vector<ArmIndex> alive(k);
    std::iota(alive.begin(), alive.end(), ArmIndex{0});
    std::vector<double> sums(k, 0.0);
    std::int64_t previous = 0;
    std::int64_t pulls = 0;

    for (const std::int64_t nk : schedule) {
        const std::int64_t extra = nk - previous;
        for (ArmIndex a : alive) sums[a] += detail::average_pulls(env, a, extra, rng);
        pulls += extra * static_cast<std::int64_t>(alive.size());
        previous = nk;

        std::size_t worst = 0;
        if (nk == 0) {
            // Nothing observed yet: every survivor is tied.
            worst = rng.index(alive.size());
        } else {
            for (std::size_t i = 1; i < alive.size(); ++i)
                if (sums[alive[i]] <= sums[alive[worst]]) worst = i;
        }
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(worst));
    }

    PolicyRun run{Algorithm::SR, budget, alive.front(), false, pulls, {}};
    run.correct = run.recommended_arm == env.best_arm();
    return run;
}

// -- Sequential Halving --------------------------------------------------------

inline std::size_t sh_rounds(std::size_t k) { return static_cast<std::size_t>(std::bit_width(k - 1)); }

template <Environment Env>
PolicyRun run_sh(const Env& env, std::int64_t budget, RngStream& rng) {
    const std::size_t k = env.arm_count();
    const std::size_t rounds = sh_rounds(k);
    std::vector<ArmIndex> alive(k);
    std::iota(alive.begin(), alive.end(), ArmIndex{0});
    std::int64_t pulls = 0;

    for (std::size_t r = 0; r < rounds && alive.size() > 1; ++r) {
        const auto size = static_cast<std::int64_t>(alive.size());
        const std::int64_t per_arm = budget / (size * static_cast<std::int64_t>(rounds));
        const std::size_t keep = (alive.size() + 1) / 2;
        if (per_arm == 0) {
            std::shuffle(alive.begin(), alive.end(), rng.engine());
            alive.resize(keep);
            std::sort(alive.begin(), alive.end());
            continue;
        }
        std::vector<std::pair<double, ArmIndex>> scored;
        scored.reserve(alive.size());
        for (ArmIndex a : alive) scored.emplace_back(detail::average_pulls(env, a, per_arm, rng), a);
        pulls += per_arm * size;
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& x, const auto& y) { return x.first > y.first; });
        alive.clear();
        for (std::size_t i = 0; i < keep; ++i) alive.push_back(scored[i].second);
        std::sort(alive.begin(), alive.end());
    }

    PolicyRun run{Algorithm::SH, budget, alive.front(), false, pulls, {}};
    run.correct = run.recommended_arm == env.best_arm();
    return run;
}

// -- Group detection (RE) ------------------------------------------------------

/**
 * Sigmoid-shaped priors for the presence (pi1) or absence (pi0) of the best
 * arm in a group whose mean is estimated as `group_mean`. Each sigmoid is
 * centred on the typical group mean under its hypothesis and scaled by the
 * width of that hypothesis' interval.
 */
inline Priors compute_priors(double group_mean, double expected_high, double expected_low, double width_high,
                             double width_low) {
    if (!(width_high > 0.0) || !(width_low > 0.0))
        fail(ErrorCode::DegenerateInterval, "prior sigmoids need intervals of positive width");
    const double log_in = detail::log_sigmoid((group_mean - expected_high) / width_high);
    const double log_out = detail::log_sigmoid(-(group_mean - expected_low) / width_low);
    Priors p;
    p.log_odds = log_out - log_in;
    p.pi1 = 1.0 / (1.0 + std::exp(p.log_odds));
    p.pi0 = 1.0 / (1.0 + std::exp(-p.log_odds));
    return p;
}

/// Centres and widths of the prior sigmoids for an arm set with the given top mean and gap range.
struct PriorShape {
    double expected_high = 0.0;
    double expected_low = 0.0;
    double width_high = 0.0;
    double width_low = 0.0;
};

inline PriorShape prior_shape(double top_mean, double delta_min, double delta_max, std::size_t k) {
    const double shrink = 1.0 - 2.0 / static_cast<double>(k);
    const double centre = (delta_min + delta_max) / 2.0;
    return {top_mean - shrink * centre, top_mean - centre, shrink * (delta_max - delta_min),
            delta_max - delta_min};
}

inline Priors compute_priors(double group_mean, const PriorShape& s) {
    return compute_priors(group_mean, s.expected_high, s.expected_low, s.width_high, s.width_low);
}

/**
 * Bayes threshold on a group's average reward after (1-alpha)T/log2(K) Gaussian
 * group pulls; the best arm is declared present above it.
 */
inline double lrt_threshold_gaussian(double mu_h, double mu_l, const Priors& priors, std::size_t k, double budget,
                                     double alpha, double sigma2) {
    if (!(mu_h > mu_l))
        fail(ErrorCode::SeparabilityViolated, "need mu_H* > mu_L* for the group test");
    const double kd = static_cast<double>(k);
    const double shift = 2.0 * sigma2 * priors.log_odds * std::log2(kd) / ((1.0 - alpha) * budget * kd * (mu_h - mu_l));
    return (mu_h + mu_l) / 2.0 + shift;
}

inline double lrt_threshold_gaussian(const GroupHypothesis& h, std::size_t k, double budget, double alpha,
                                     double sigma2) {
    return lrt_threshold_gaussian(h.mu_H_star, h.mu_L_star, h.priors, k, budget, alpha, sigma2);
}

/**
 * Likelihood-ratio decision between N(mu_h, v) and N(mu_l, v) for an observed
 * mean, written directly in terms of the log-likelihoods. Returns true for
 * "best arm present".
 */
inline bool gaussian_lrt_decision(double observed, double mean_variance, double mu_h, double mu_l,
                                  double log_prior_odds) {
    const double log_h = -(observed - mu_h) * (observed - mu_h) / (2.0 * mean_variance);
    const double log_l = -(observed - mu_l) * (observed - mu_l) / (2.0 * mean_variance);
    return log_h - log_l > log_prior_odds;
}

/// Variance of a group's average after the RE phase, under the Gaussian model.
inline double group_mean_variance(std::size_t k, double budget, double alpha, double sigma2) {
    const double kd = static_cast<double>(k);
    return 2.0 * sigma2 * std::log2(kd) / ((1.0 - alpha) * budget * kd);
}

template <Environment Env>
PolicyRun run_re(const Env& env, std::int64_t budget, RngStream& rng, const ReOptions& options = {}) {
    if (!(options.alpha >= 0.0 && options.alpha < 1.0))
        fail(ErrorCode::InvalidArgument, "alpha must lie in [0,1)");
    const bool plugin = options.prior_mode == PriorMode::PluginEstimates;
    if (plugin && options.alpha <= 0.0)
        fail(ErrorCode::InvalidArgument, "plug-in priors need an initial exploration phase (alpha > 0)");

    const std::size_t k = env.arm_count();
    const GroupCode code = construct_groups(k);
    const std::size_t padded = code.padded_count;
    const auto groups = static_cast<std::int64_t>(code.group_count);
    const auto kk = static_cast<std::int64_t>(k);

    const auto initial = static_cast<std::int64_t>(std::floor(options.alpha * static_cast<double>(budget) /
                                                              static_cast<double>(k)));
    const auto per_group = static_cast<std::int64_t>(
        std::floor((1.0 - options.alpha) * static_cast<double>(budget) / static_cast<double>(groups)));
    detail::require_budget(per_group >= 1, "RE needs at least one pull per group");
    if (plugin) detail::require_budget(initial >= 1, "plug-in RE needs alpha*T >= K");

    const OracleInfo oracle = env.oracle();

    ReDiagnostics diag;
    diag.pulls_per_arm_initial = initial;
    diag.pulls_per_group = per_group;
    diag.sigma2 = oracle.reward_variance;
    std::int64_t pulls = 0;

    // Initial exploration: single-arm estimates.
    std::vector<double> estimates;
    if (initial > 0) {
        estimates.resize(k);
        for (ArmIndex a = 0; a < k; ++a)
            estimates[a] = detail::average_pulls(env, a, initial, rng) / static_cast<double>(initial);
        pulls += initial * kk;
    }

    // Reference means over the padded arm set.
    std::vector<double> reference(padded, oracle.dummy_mean);
    const auto& source = plugin ? estimates : oracle.means;
    std::copy(source.begin(), source.end(), reference.begin());
    std::vector<double> ordered = reference;
    std::sort(ordered.begin(), ordered.end(), std::greater<>());
    const double top = ordered[0];
    double delta_min = top - ordered[1];
    if (plugin) delta_min = std::max(delta_min, options.gap_floor);
    const double delta_max = std::max(top - ordered.back(), delta_min);
    const double pd = static_cast<double>(padded);

    diag.mu_H_star = top - (1.0 - 2.0 / pd) * delta_max;
    diag.mu_L_star = top - delta_min;
    diag.separability_violated = !(diag.mu_H_star > diag.mu_L_star);
    const PriorShape shape = prior_shape(top, delta_min, delta_max, padded);
    diag.degenerate_priors = !(shape.width_high > 0.0 && shape.width_low > 0.0);

    // Estimated group means from the initial phase (dummy arms are known constants).
    std::vector<double> padded_estimates;
    if (initial > 0) {
        padded_estimates.assign(padded, oracle.dummy_mean);
        std::copy(estimates.begin(), estimates.end(), padded_estimates.begin());
    }

    DetectionVector detections(code.group_count);
    diag.groups.resize(code.group_count);
    for (std::size_t g = 0; g < code.group_count; ++g) {
        const auto& members = code.groups[g];
        double sum = 0.0;
        for (std::int64_t i = 0; i < per_group; ++i) sum += env.pull_group(members, rng);
        pulls += per_group;

        auto& gd = diag.groups[g];
        gd.observed_mean = sum / static_cast<double>(per_group);
        if (initial > 0) {
            double s = 0.0;
            for (ArmIndex a : members) s += padded_estimates[a];
            gd.prior_mean = s / static_cast<double>(members.size());
        } else {
            gd.prior_mean = gd.observed_mean;
        }

        Priors priors;
        if (!diag.degenerate_priors) priors = compute_priors(gd.prior_mean, shape);
        gd.pi0 = priors.pi0;
        gd.pi1 = priors.pi1;

        const double midpoint = (diag.mu_H_star + diag.mu_L_star) / 2.0;
        if (diag.separability_violated || !oracle.gaussian_test)
            gd.tau = midpoint;
        else
            gd.tau = lrt_threshold_gaussian(diag.mu_H_star, diag.mu_L_star, priors, padded,
                                            static_cast<double>(budget), options.alpha, oracle.reward_variance);
        gd.detected = gd.observed_mean > gd.tau;
        detections[g] = gd.detected;
    }

    diag.decoded_arm = decode_pattern(code, detections);
    ArmIndex recommended = diag.decoded_arm;
    if (code.is_dummy(recommended) || diag.separability_violated) {
        diag.used_fallback = true;
        recommended = initial > 0 ? detail::argmax_lowest(estimates) : diag.decoded_arm % k;
    }

    PolicyRun run{Algorithm::RE, budget, recommended, recommended == env.best_arm(), pulls, std::move(diag)};
    return run;
}

/// A named policy with its options, e.g. "RE-plugin".
struct AlgorithmSpec {
    std::string label;
    Algorithm algorithm = Algorithm::UE;
    ReOptions re;
};

/// Accepts UE, SR, SH, RE (with `re_defaults`), RE-oracle and RE-plugin.
inline AlgorithmSpec parse_algorithm(const std::string& name, const ReOptions& re_defaults = {}) {
    if (name == "UE") return {name, Algorithm::UE, {}};
    if (name == "SR") return {name, Algorithm::SR, {}};
    if (name == "SH") return {name, Algorithm::SH, {}};
    if (name == "RE") return {name, Algorithm::RE, re_defaults};
    if (name == "RE-oracle") {
        ReOptions o = re_defaults;
        o.prior_mode = PriorMode::OracleGaps;
        return {name, Algorithm::RE, o};
    }
    if (name == "RE-plugin") {
        ReOptions o = re_defaults;
        o.prior_mode = PriorMode::PluginEstimates;
        if (o.alpha <= 0.0) o.alpha = 0.1;
        return {name, Algorithm::RE, o};
    }
    fail(ErrorCode::ConfigParse, "unknown algorithm '" + name + "'");
}

template <Environment Env>
PolicyRun run_policy(const AlgorithmSpec& spec, const Env& env, std::int64_t budget, RngStream& rng) {
    switch (spec.algorithm) {
        case Algorithm::UE: return run_ue(env, budget, rng);
        case Algorithm::SR: return run_sr(env, budget, rng);
        case Algorithm::SH: return run_sh(env, budget, rng);
        case Algorithm::RE: return run_re(env, budget, rng, spec.re);
    }
    fail(ErrorCode::InvalidArgument, "unknown algorithm");
}

inline nlohmann::json to_json(const ReDiagnostics& d) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : d.groups)
        groups.push_back({{"prior_mean", g.prior_mean},
                          {"observed_mean", g.observed_mean},
                          {"pi0", g.pi0},
                          {"pi1", g.pi1},
                          {"tau", g.tau},
                          {"detected", g.detected}});
    return {{"mu_H_star", d.mu_H_star},
            {"mu_L_star", d.mu_L_star},
            {"sigma2", d.sigma2},
            {"pulls_per_arm_initial", d.pulls_per_arm_initial},
            {"pulls_per_group", d.pulls_per_group},
            {"separability_violated", d.separability_violated},
            {"degenerate_priors", d.degenerate_priors},
            {"used_fallback", d.used_fallback},
            {"decoded_arm", d.decoded_arm},
            {"groups", groups}};
}

}  // namespace bai
