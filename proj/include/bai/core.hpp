#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace bai {

/// Arms are indexed from zero throughout the library.
using ArmIndex = std::size_t;

enum class FamilyKind { Gaussian, Bernoulli, BoundedUnit };

/**
 * Reward distribution shared by every arm of an instance.
 *
 * BoundedUnit rewards are drawn as Bernoulli(mu); any [0,1] law with the same
 * mean satisfies the bounded analysis, and Bernoulli is the extreme case.
 */
struct RewardFamily {
    FamilyKind kind = FamilyKind::Gaussian;
    double sigma2 = 1.0;  // only meaningful for Gaussian

    static RewardFamily gaussian(double sigma2) { return {FamilyKind::Gaussian, sigma2}; }
    static RewardFamily bernoulli() { return {FamilyKind::Bernoulli, 0.0}; }
    static RewardFamily bounded() { return {FamilyKind::BoundedUnit, 0.0}; }

    bool is_gaussian() const noexcept { return kind == FamilyKind::Gaussian; }
    bool is_bounded() const noexcept { return !is_gaussian(); }

    friend bool operator==(const RewardFamily&, const RewardFamily&) = default;
};

inline std::string to_string(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::Gaussian: return "gaussian";
        case FamilyKind::Bernoulli: return "bernoulli";
        case FamilyKind::BoundedUnit: return "bounded";
    }
    return "unknown";
}

namespace detail {

/// Index of the unique maximum; throws DuplicateBestArm on a tie.
inline ArmIndex unique_argmax(std::span<const double> means) {
    if (means.empty()) fail(ErrorCode::InvalidInstance, "instance has no arms");
    ArmIndex best = 0;
    for (ArmIndex i = 1; i < means.size(); ++i)
        if (means[i] > means[best]) best = i;
    for (ArmIndex i = 0; i < means.size(); ++i)
        if (i != best && means[i] == means[best])
            fail(ErrorCode::DuplicateBestArm,
                 "arms " + std::to_string(best) + " and " + std::to_string(i) +
                     " share the maximal mean");
    return best;
}

}  // namespace detail

class BanditInstance {
public:
    BanditInstance(std::vector<double> means, RewardFamily family)
        : means_(std::move(means)), family_(family) {
        if (means_.size() < 2)
            fail(ErrorCode::InvalidInstance, "an instance needs at least two arms");
        for (double m : means_)
            if (!std::isfinite(m)) fail(ErrorCode::InvalidInstance, "arm means must be finite");
        if (family_.is_gaussian()) {
            // sigma2 == 0 is accepted as the noiseless limit.
            if (!(family_.sigma2 >= 0.0) || !std::isfinite(family_.sigma2))
                fail(ErrorCode::InvalidInstance, "Gaussian variance must be finite and >= 0");
        } else {
            for (double m : means_)
                if (m < 0.0 || m > 1.0)
                    fail(ErrorCode::SupportViolation,
                         "bounded/Bernoulli means must lie in [0,1]");
        }
        best_ = detail::unique_argmax(means_);
    }

    std::size_t arm_count() const noexcept { return means_.size(); }
    std::span<const double> means() const noexcept { return means_; }
    double mean(ArmIndex arm) const { return means_.at(arm); }
    const RewardFamily& family() const noexcept { return family_; }
    ArmIndex best_arm() const noexcept { return best_; }

private:
    std::vector<double> means_;
    RewardFamily family_;
    ArmIndex best_ = 0;
};

/// Ordered means and sub-optimality gaps of an instance.
struct GapProfile {
    ArmIndex best_arm = 0;
    std::vector<double> sorted_means;  // decreasing
    std::vector<double> arm_gaps;      // per arm, the best arm carries the smallest gap
    std::vector<double> gaps;          // nondecreasing; gaps[0] == gaps[1]
    double delta_min = 0.0;
    double delta_max = 0.0;

    std::size_t arm_count() const noexcept { return sorted_means.size(); }
};

inline GapProfile gap_profile(std::span<const double> means) {
    GapProfile p;
    p.best_arm = detail::unique_argmax(means);
    if (means.size() < 2) fail(ErrorCode::InvalidInstance, "gap profile needs two arms");

    p.sorted_means.assign(means.begin(), means.end());
    std::sort(p.sorted_means.begin(), p.sorted_means.end(), std::greater<>());
    const double top = p.sorted_means.front();

    p.arm_gaps.resize(means.size());
    for (ArmIndex a = 0; a < means.size(); ++a) p.arm_gaps[a] = top - means[a];
    p.arm_gaps[p.best_arm] = top - p.sorted_means[1];

    p.gaps = p.arm_gaps;
    std::sort(p.gaps.begin(), p.gaps.end());
    p.delta_min = p.gaps.front();
    p.delta_max = p.gaps.back();
    return p;
}

inline GapProfile gap_profile(const BanditInstance& instance) {
    return gap_profile(instance.means());
}

/// Smallest power of two that is >= k.
inline std::size_t padded_arm_count(std::size_t k) { return std::bit_ceil(k); }

/**
 * Mean of the constant-reward arms used to pad the arm set to a power of two.
 *
 * Placed one full Delta_max below the worst arm and clipped to [0,1] for the
 * bounded families.
 */
inline double dummy_mean(const BanditInstance& instance) {
    const auto means = instance.means();
    const double lo = *std::min_element(means.begin(), means.end());
    const double hi = means[instance.best_arm()];
    const double value = lo - (hi - lo);
    return instance.family().is_bounded() ? std::max(0.0, value) : value;
}

inline double sample_arm(const BanditInstance& instance, ArmIndex arm, RngStream& rng) {
    if (arm >= instance.arm_count())
        fail(ErrorCode::IndexOutOfRange, "arm " + std::to_string(arm) + " out of range");
    const double mu = instance.mean(arm);
    const auto& fam = instance.family();
    if (fam.is_gaussian()) return fam.sigma2 == 0.0 ? mu : rng.normal(mu, std::sqrt(fam.sigma2));
    return rng.bernoulli(mu) ? 1.0 : 0.0;
}

/**
 * Average of one fresh draw from every member.
 *
 * Members index the padded arm set: indices in [K, bit_ceil(K)) are dummy arms
 * that always return dummy_mean(). Gaussian groups are drawn in one step from
 * N(mean of member means, sigma2 * real_members / |G|^2), which is the exact
 * law of the average.
 */
inline double sample_group(const BanditInstance& instance, std::span<const ArmIndex> members,
                           RngStream& rng) {
    if (members.empty()) fail(ErrorCode::EmptyGroup, "group has no members");
    const std::size_t k = instance.arm_count();
    const std::size_t padded = padded_arm_count(k);
    const double dummy = padded > k ? dummy_mean(instance) : 0.0;
    const auto& fam = instance.family();

    double sum_means = 0.0;
    std::size_t real = 0;
    for (ArmIndex a : members) {
        if (a >= padded)
            fail(ErrorCode::IndexOutOfRange, "group member " + std::to_string(a) + " out of range");
        if (a < k) {
            ++real;
            sum_means += instance.mean(a);
        } else {
            sum_means += dummy;
        }
    }
    const double n = static_cast<double>(members.size());

    if (fam.is_gaussian()) {
        const double mean = sum_means / n;
        if (fam.sigma2 == 0.0 || real == 0) return mean;
        return rng.normal(mean, std::sqrt(fam.sigma2 * static_cast<double>(real)) / n);
    }

    double total = 0.0;
    for (ArmIndex a : members) total += a < k ? (rng.bernoulli(instance.mean(a)) ? 1.0 : 0.0) : dummy;
    return total / n;
}

// -- serialization -----------------------------------------------------------

inline nlohmann::json family_to_json(const RewardFamily& f) {
    switch (f.kind) {
        case FamilyKind::Gaussian: return {{"gaussian", {{"sigma2", f.sigma2}}}};
        case FamilyKind::Bernoulli: return "bernoulli";
        case FamilyKind::BoundedUnit: return "bounded";
    }
    return nullptr;
}

inline RewardFamily family_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "bernoulli") return RewardFamily::bernoulli();
        if (s == "bounded") return RewardFamily::bounded();
        fail(ErrorCode::ConfigParse, "unknown reward family '" + s + "'");
    }
    if (j.is_object() && j.size() == 1 && j.contains("gaussian")) {
        const auto& g = j.at("gaussian");
        if (!g.is_object() || g.size() != 1 || !g.contains("sigma2") || !g.at("sigma2").is_number())
            fail(ErrorCode::ConfigParse, "gaussian family needs exactly {\"sigma2\": number}");
        return RewardFamily::gaussian(g.at("sigma2").get<double>());
    }
    fail(ErrorCode::ConfigParse, "family must be \"bernoulli\", \"bounded\" or {\"gaussian\":{...}}");
}

inline nlohmann::json to_json(const BanditInstance& instance) {
    return {{"K", instance.arm_count()},
            {"means", std::vector<double>(instance.means().begin(), instance.means().end())},
            {"family", family_to_json(instance.family())}};
}

inline BanditInstance instance_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorCode::ConfigParse, "instance must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (key != "K" && key != "means" && key != "family")
            fail(ErrorCode::ConfigParse, "unknown instance key '" + key + "'");
    if (!j.contains("means") || !j.at("means").is_array())
        fail(ErrorCode::ConfigParse, "instance needs a \"means\" array");
    if (!j.contains("family")) fail(ErrorCode::ConfigParse, "instance needs a \"family\"");
    std::vector<double> means;
    for (const auto& v : j.at("means")) {
        if (!v.is_number()) fail(ErrorCode::ConfigParse, "means must be numbers");
        means.push_back(v.get<double>());
    }
    if (j.contains("K")) {
        if (!j.at("K").is_number_unsigned() || j.at("K").get<std::size_t>() != means.size())
            fail(ErrorCode::ConfigParse, "\"K\" must equal the length of \"means\"");
    }
    return BanditInstance(std::move(means), family_from_json(j.at("family")));
}

}  // namespace bai
