#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "core.hpp"
#include "errors.hpp"

namespace bai {

/// Hardness terms of an instance plus the group-separability margin.
struct HardnessProfile {
    std::size_t arm_count = 0;
    double H1 = 0.0;             // sum over all K arms, best arm weighted by Delta_min
    double H1_suboptimal = 0.0;  // same sum over the K-1 sub-optimal arms only
    double H2 = 0.0;
    double H3 = 0.0;
    double H4 = 0.0;
    double H4_tilde = 0.0;  // K * H4
    double separability_margin = 0.0;
    std::optional<double> eta;  // absent when the margin is negative
};

inline HardnessProfile hardness(const GapProfile& profile) {
    const std::size_t k = profile.arm_count();
    const double kd = static_cast<double>(k);
    HardnessProfile h;
    h.arm_count = k;
    for (ArmIndex a = 0; a < k; ++a) {
        const double inv = 1.0 / (profile.arm_gaps[a] * profile.arm_gaps[a]);
        h.H1 += inv;
        if (a != profile.best_arm) h.H1_suboptimal += inv;
    }
    const double top = profile.sorted_means.front();
    for (std::size_t i = 2; i <= k; ++i) {
        const double gap = top - profile.sorted_means[i - 1];
        h.H2 = std::max(h.H2, static_cast<double>(i) / (gap * gap));
    }
    const double dmin = profile.gaps.front();
    const double dmax = profile.gaps.back();
    h.H3 = kd / (dmin * dmin);
    h.H4 = 1.0 / ((dmin + dmax) * (dmin + dmax));
    h.H4_tilde = kd * h.H4;
    h.separability_margin = profile.gaps[1] - (1.0 - 2.0 / kd) * dmax;
    if (h.separability_margin >= 0.0)
        h.eta = std::min(1.0, kd * kd * h.H4 * h.separability_margin * h.separability_margin);
    return h;
}

/// Which of the ordering relations between hardness terms hold (relative slack 1e-12).
struct HardnessOrdering {
    bool h2_le_h1 = false;
    bool h1_le_log2k_h2 = false;
    bool h1_le_h3 = false;
    bool four_h4_le_h1 = false;
    bool h1_le_4k_h4 = false;

    bool all() const noexcept {
        return h2_le_h1 && h1_le_log2k_h2 && h1_le_h3 && four_h4_le_h1 && h1_le_4k_h4;
    }
};

inline HardnessOrdering check_ordering(const HardnessProfile& h) {
    auto le = [](double a, double b) { return a <= b * (1.0 + 1e-12); };
    const double kd = static_cast<double>(h.arm_count);
    HardnessOrdering o;
    o.h2_le_h1 = le(h.H2, h.H1);
    o.h1_le_log2k_h2 = le(h.H1, std::log(2.0 * kd) * h.H2);
    o.h1_le_h3 = le(h.H1, h.H3);
    o.four_h4_le_h1 = le(4.0 * h.H4, h.H1);
    o.h1_le_4k_h4 = le(h.H1, 4.0 * kd * h.H4);
    return o;
}

// -- Gaussian tail -----------------------------------------------------------

/// Standard Gaussian upper tail Q(x) = P(Z > x).
inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Lower Mills-ratio bound, valid for x > 0.
inline double q_lower(double x) {
    return x / ((1.0 + x * x) * std::sqrt(2.0 * std::numbers::pi)) * std::exp(-0.5 * x * x);
}

/// Upper Mills-ratio bound, valid for x > 0.
inline double q_upper(double x) {
    return 1.0 / (x * std::sqrt(2.0 * std::numbers::pi)) * std::exp(-0.5 * x * x);
}

// -- error-probability upper bounds --------------------------------------------

/**
 * A bound kept in log space so large budgets do not underflow.
 * clipped() is what gets plotted; raw() may exceed one.
 */
struct BoundValue {
    double log_value = 0.0;

    double raw() const { return std::exp(log_value); }
    double clipped() const { return std::min(1.0, raw()); }
};

enum class BoundFamily { Bounded, Gaussian };

inline BoundFamily bound_family(const RewardFamily& f) {
    return f.is_gaussian() ? BoundFamily::Gaussian : BoundFamily::Bounded;
}

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double log2d(std::size_t k) { return std::log2(static_cast<double>(k)); }

// log(sqrt(num/den)) that tolerates num == 0.
inline double half_log_ratio(double num, double den) { return 0.5 * (std::log(num) - std::log(den)); }

// -T/c with c == 0 meaning an infinitely fast decay.
inline double decay(double t, double c) { return c > 0.0 ? -t / c : -kInf; }

}  // namespace detail

/// Uniform exploration.
inline BoundValue bound_ue(BoundFamily family, std::size_t k, double t, double h3, double sigma2 = 0.0) {
    if (t <= 0.0) return {detail::kInf};
    const double lead = std::log(static_cast<double>(k) - 1.0);
    if (family == BoundFamily::Bounded) return {lead + detail::decay(t, 2.0 * h3)};
    return {lead + detail::half_log_ratio(h3 * sigma2, std::numbers::pi * t) +
            detail::decay(t, 4.0 * h3 * sigma2)};
}

/// Successive Rejects; requires T > K.
inline BoundValue bound_sr(BoundFamily family, std::size_t k, double t, double h2, double sigma2 = 0.0) {
    const double kd = static_cast<double>(k);
    if (t <= kd)
        fail(ErrorCode::BudgetTooSmall, "SR bound needs T > K (T=" + std::to_string(t) + ")");
    const double lead = std::log(kd * (kd - 1.0) / 2.0);
    const double lk = std::log(kd);
    if (family == BoundFamily::Bounded) return {lead + detail::decay(t - kd, lk * h2)};
    return {lead + detail::half_log_ratio(h2 * sigma2 * lk, 2.0 * std::numbers::pi * (t - kd)) +
            detail::decay(t - kd, 2.0 * h2 * sigma2 * lk)};
}

/// Sequential Halving.
inline BoundValue bound_sh(BoundFamily family, std::size_t k, double t, double h2, double sigma2 = 0.0) {
    if (t <= 0.0) return {detail::kInf};
    const double l2 = detail::log2d(k);
    const double lead = std::log(3.0 * l2);
    if (family == BoundFamily::Bounded) return {lead + detail::decay(t, 8.0 * h2 * l2)};
    return {lead + detail::half_log_ratio(2.0 * h2 * sigma2 * l2, std::numbers::pi * t) +
            detail::decay(t, 8.0 * h2 * sigma2 * l2)};
}

/// Group-testing exploration (oracle gaps, no initial exploration); K must be a power of two.
inline BoundValue bound_re(BoundFamily family, std::size_t k, double t, double h4, std::optional<double> eta,
                           double sigma2 = 0.0) {
    if (!eta || !(*eta > 0.0))
        fail(ErrorCode::SeparabilityViolated, "RE bound needs a positive separability constant eta");
    if (k < 2 || !std::has_single_bit(k))
        fail(ErrorCode::InvalidK, "RE bound needs K to be a power of two");
    if (t <= 0.0) return {detail::kInf};
    const double kd = static_cast<double>(k);
    const double l2 = detail::log2d(k);
    const double e = *eta;
    if (family == BoundFamily::Bounded) {
        const double c = 8.0 * h4 * kd * l2 * (0.5 + 1.0 / (6.0 * std::sqrt(h4))) / e;
        return {std::log(l2) + detail::decay(t, c)};
    }
    return {detail::half_log_ratio(4.0 * h4 * sigma2 * kd * l2 * l2 * l2, std::numbers::pi * e * t) +
            detail::decay(t, 16.0 * h4 * sigma2 * kd * l2 / e)};
}

/**
 * Probability that some arm estimate from m initial pulls per arm misses its
 * mean by more than epsilon: 2K Q(epsilon sqrt(m) / sigma).
 */
inline BoundValue bound_exploration_failure(std::size_t k, double m, double epsilon, double sigma2) {
    const double x = sigma2 > 0.0 ? epsilon * std::sqrt(m) / std::sqrt(sigma2) : detail::kInf;
    return {std::log(2.0 * static_cast<double>(k)) + std::log(q_function(x))};
}

}  // namespace bai
