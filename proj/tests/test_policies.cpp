#include <catch_amalgamated.hpp>

#include <bai/policies.hpp>
#include <bai/hardness.hpp>

#include <cmath>
#include <iostream>
#include <random>

using namespace bai;
using Catch::Approx;

namespace {

template <class Run>
double error_rate(Run&& run, int trials, std::uint64_t seed) {
    int errors = 0;
    for (int i = 0; i < trials; ++i) {
        RngStream rng(seed, static_cast<std::uint64_t>(i));
        errors += !run(rng).correct;
    }
    return static_cast<double>(errors) / trials;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a bai::Error");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("noiseless baselines always find the best arm") {
    const BanditInstance inst({0.3, 0.1, 0.9, 0.5, 0.45}, RewardFamily::gaussian(0.0));
    const InstanceEnvironment env(inst);
    RngStream rng(1, 0);
    for (std::int64_t t : {5, 17, 60, 200}) {
        CHECK(run_ue(env, t, rng).correct);
        if (t > 5) CHECK(run_sr(env, t, rng).correct);  // at T = K every SR phase is empty
    }
    CHECK(run_sh(env, 15, rng).correct);  // every round gets at least one pull
    CHECK(run_sh(env, 300, rng).correct);
}

TEST_CASE("UE on two Bernoulli arms matches exhaustive enumeration") {
    for (const auto& means : {std::vector<double>{0.9, 0.1}, std::vector<double>{0.1, 0.9}}) {
        const BanditInstance inst(means, RewardFamily::bernoulli());
        const ArmIndex best = inst.best_arm();
        // Enumerate the four single-draw outcomes; ties go to arm 0.
        double exact = 0.0;
        for (int x0 = 0; x0 <= 1; ++x0)
            for (int x1 = 0; x1 <= 1; ++x1) {
                const double p = (x0 ? means[0] : 1 - means[0]) * (x1 ? means[1] : 1 - means[1]);
                const ArmIndex pick = x1 > x0 ? 1 : 0;
                if (pick != best) exact += p;
            }
        const int n = 100000;
        const double got = error_rate([&](RngStream& r) { return run_ue(InstanceEnvironment(inst), 2, r); }, n, 2);
        CHECK(std::abs(got - exact) <= 3 * std::sqrt(exact * (1 - exact) / n));
    }
    const BanditInstance det({1.0, 0.0}, RewardFamily::bernoulli());
    CHECK(error_rate([&](RngStream& r) { return run_ue(InstanceEnvironment(det), 2, r); }, 1000, 3) == 0.0);
}

TEST_CASE("UE on two Gaussian arms matches the closed form") {
    const double delta = 0.5;
    const std::int64_t t = 8;
    const BanditInstance inst({delta, 0.0}, RewardFamily::gaussian(1.0));
    const double exact = q_function(delta * std::sqrt(t / 4.0));
    const int n = 100000;
    const double got = error_rate([&](RngStream& r) { return run_ue(InstanceEnvironment(inst), t, r); }, n, 4);
    CHECK(std::abs(got - exact) <= 3 * std::sqrt(exact * (1 - exact) / n));
}

TEST_CASE("SR phase schedule") {
    // (T-K)/(logbar(4) (K+1-k)) with logbar(4) = 1/2 + 1/2 + 1/3 + 1/4 = 19/12.
    CHECK(sr_schedule(4, 100) == std::vector<std::int64_t>{16, 21, 31});
    CHECK(sr_schedule(2, 10) == std::vector<std::int64_t>{4});

    const BanditInstance two({0.6, 0.5}, RewardFamily::gaussian(1.0));
    RngStream rng(5, 0);
    CHECK(run_sr(InstanceEnvironment(two), 10, rng).pulls_used == 8);
}

TEST_CASE("SH halving schedule") {
    CHECK(sh_rounds(8) == 3);
    CHECK(sh_rounds(6) == 3);
    CHECK(sh_rounds(2) == 1);
    const BanditInstance inst({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}, RewardFamily::gaussian(0.0));
    RngStream rng(6, 0);
    const auto run = run_sh(InstanceEnvironment(inst), 240, rng);
    CHECK(run.pulls_used == 8 * 10 + 4 * 20 + 2 * 40);
    CHECK(run.correct);
}

TEST_CASE("SH with no budget in any round eliminates at random") {
    const BanditInstance inst({0.9, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, RewardFamily::gaussian(0.0));
    const int n = 20000;
    const double got = error_rate([&](RngStream& r) { return run_sh(InstanceEnvironment(inst), 5, r); }, n, 7);
    const double expect = 1.0 - 1.0 / 8.0;
    CHECK(std::abs(got - expect) <= 3 * std::sqrt(expect * (1 - expect) / n));
}

TEST_CASE("budget accounting") {
    std::mt19937_64 gen(8);
    for (int i = 0; i < 200; ++i) {
        const std::size_t k = 2 + gen() % 20;
        std::vector<double> means(k);
        for (auto& m : means) m = std::uniform_real_distribution<double>(0, 1)(gen);
        means[gen() % k] = 1.5;
        const BanditInstance inst(means, RewardFamily::gaussian(0.3));
        const InstanceEnvironment env(inst);
        const std::int64_t t = static_cast<std::int64_t>(k + gen() % 500);
        RngStream rng(8, static_cast<std::uint64_t>(i));
        CHECK(run_ue(env, t, rng).pulls_used <= t);
        CHECK(run_sr(env, t, rng).pulls_used <= t);
        CHECK(run_sh(env, t, rng).pulls_used <= t);
        const auto re = run_re(env, t, rng);
        CHECK(re.pulls_used <= t);
        CHECK(re.recommended_arm < k);
        if (t >= 2 * static_cast<std::int64_t>(k)) CHECK(run_re(env, t, rng, ReOptions::plugin(0.5)).pulls_used <= t);
    }
}

TEST_CASE("budget preconditions") {
    const BanditInstance inst({0.9, 0.1, 0.2, 0.3}, RewardFamily::gaussian(1.0));
    const InstanceEnvironment env(inst);
    RngStream rng(9, 0);
    CHECK(code_of([&] { run_ue(env, 3, rng); }) == ErrorCode::BudgetTooSmall);
    CHECK(code_of([&] { run_sr(env, 3, rng); }) == ErrorCode::BudgetTooSmall);
    CHECK(code_of([&] { run_re(env, 1, rng); }) == ErrorCode::BudgetTooSmall);
    CHECK(code_of([&] { run_re(env, 10, rng, ReOptions::plugin(0.2)); }) == ErrorCode::BudgetTooSmall);
    CHECK(code_of([&] { run_re(env, 100, rng, ReOptions{0.0, PriorMode::PluginEstimates, {}, 1e-6}); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([&] { run_re(env, 100, rng, ReOptions{1.0, PriorMode::OracleGaps, {}, 1e-6}); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([] { parse_algorithm("UCB"); }) == ErrorCode::ConfigParse);
}

TEST_CASE("priors") {
    const double eh = 0.7, el = 0.5, l1 = 0.2, l0 = 0.3;
    const Priors at_high = compute_priors(eh, eh, el, l1, l0);
    const double s_out = 1.0 / (1.0 + std::exp((eh - el) / l0));
    CHECK(at_high.pi1 == Approx(0.5 / (0.5 + s_out)).epsilon(1e-12));
    CHECK(at_high.pi0 + at_high.pi1 == Approx(1.0).epsilon(1e-15));
    CHECK(compute_priors(1e6, eh, el, l1, l0).pi1 == Approx(1.0));
    CHECK(compute_priors(-1e6, eh, el, l1, l0).pi0 == Approx(1.0));
    CHECK(code_of([] { compute_priors(0.5, 0.6, 0.4, 0.0, 0.1); }) == ErrorCode::DegenerateInterval);

    const auto shape = prior_shape(1.0, 0.1, 0.5, 8);
    CHECK(shape.expected_high == Approx(1.0 - 0.75 * 0.3));
    CHECK(shape.expected_low == Approx(0.7));
    CHECK(shape.width_high == Approx(0.75 * 0.4));
    CHECK(shape.width_low == Approx(0.4));
}

TEST_CASE("LRT threshold") {
    Priors p;
    p.log_odds = 1.0;
    CHECK(lrt_threshold_gaussian(0.6, 0.4, p, 8, 300, 0.0, 1.0) == Approx(0.5125).epsilon(1e-12));
    CHECK(lrt_threshold_gaussian(0.6, 0.4, Priors{}, 8, 300, 0.0, 1.0) == 0.5);
    CHECK(lrt_threshold_gaussian(0.6, 0.4, p, 8, 300, 0.3, 1.0) > 0.5);
    CHECK(code_of([] { lrt_threshold_gaussian(0.4, 0.4, Priors{}, 8, 300, 0.0, 1.0); }) ==
          ErrorCode::SeparabilityViolated);
}

TEST_CASE("composite test reduces to the endpoint test") {
    std::mt19937_64 gen(10);
    std::uniform_real_distribution<double> u(0, 1);
    std::size_t literal_disagreements = 0;
    const int cases = 2000;
    for (int c = 0; c < cases; ++c) {
        // Lambda_1 = [mu_h, top], Lambda_0 = [bottom, mu_l] with mu_l < mu_h.
        const double top = 1.0;
        const double mu_h = top - 0.5 * u(gen);
        const double mu_l = mu_h - 0.01 - 0.3 * u(gen);
        const double bottom = mu_l - 0.5 * u(gen);
        const std::size_t k = std::size_t{1} << (2 + gen() % 6);
        const double t = 50 + 2000 * u(gen), alpha = 0.5 * u(gen), s2 = 0.05 + u(gen);
        Priors pr = compute_priors(bottom + (top - bottom) * u(gen), mu_h, mu_l, 0.1 + u(gen), 0.1 + u(gen));
        const double v = group_mean_variance(k, t, alpha, s2);

        // Least favourable pair by brute force: the closest pair across the two intervals.
        const int grid = 64;
        double best_gap = 1e300, theta1 = 0, theta0 = 0;
        for (int i = 0; i <= grid; ++i)
            for (int j = 0; j <= grid; ++j) {
                const double a = mu_h + (top - mu_h) * i / grid;
                const double b = bottom + (mu_l - bottom) * j / grid;
                if (a - b < best_gap) best_gap = a - b, theta1 = a, theta0 = b;
            }
        REQUIRE(theta1 == mu_h);
        REQUIRE(theta0 == mu_l);

        const double tau = lrt_threshold_gaussian(mu_h, mu_l, pr, k, t, alpha, s2);
        for (int r = 0; r < 20; ++r) {
            const double obs = bottom - 0.2 + (top - bottom + 0.4) * u(gen);
            if (std::abs(obs - tau) < 1e-9) continue;
            CHECK(gaussian_lrt_decision(obs, v, theta1, theta0, pr.log_odds) == (obs > tau));

            // Literal worst-case ratio: least likely point of Lambda_1 over most likely point of Lambda_0.
            auto loglik = [&](double m) { return -(obs - m) * (obs - m) / (2 * v); };
            const double num = std::min(loglik(mu_h), loglik(top));
            const double den = obs <= bottom ? loglik(bottom) : obs >= mu_l ? loglik(mu_l) : 0.0;
            const bool literal = num - den > pr.log_odds;
            literal_disagreements += literal != (obs > tau);
        }
    }
    std::cout << "literal min/max composite ratio disagrees with the endpoint test in " << literal_disagreements
              << " of " << cases * 20 << " draws\n";
}

TEST_CASE("forced ground-truth detections decode to the best arm") {
    for (std::size_t k : {2, 4, 8, 16, 32, 64}) {
        const auto code = construct_groups(k);
        for (ArmIndex a = 0; a < k; ++a) CHECK(decode_best_arm(code, detection_pattern(code, a)) == a);
    }
}

TEST_CASE("noiseless RE on separable instances") {
    for (std::size_t k : {4, 8, 16}) {
        for (ArmIndex best = 0; best < k; ++best) {
            std::vector<double> means(k, 0.6);
            means[(best + 1) % k] = 0.62;
            means[best] = 1.0;
            const BanditInstance inst(means, RewardFamily::gaussian(0.0));
            REQUIRE(hardness(gap_profile(inst)).separability_margin > 0);
            RngStream rng(11, best);
            const auto run = run_re(InstanceEnvironment(inst), 64, rng);
            CHECK(run.correct);
            CHECK_FALSE(run.diagnostics->used_fallback);
        }
    }
}

TEST_CASE("RE on a small single-gap Gaussian instance") {
    std::vector<double> means(8, 0.5);
    means[5] = 1.0;
    const BanditInstance inst(means, RewardFamily::gaussian(0.1));
    const auto h = hardness(gap_profile(inst));
    const double bound = bound_re(BoundFamily::Gaussian, 8, 300, h.H4, h.eta, 0.1).clipped();
    int errors = 0, decoded = 0;
    const int n = 500;
    for (int i = 0; i < n; ++i) {
        RngStream rng(12, static_cast<std::uint64_t>(i));
        const auto run = run_re(InstanceEnvironment(inst), 300, rng);
        errors += !run.correct;
        decoded += run.diagnostics->decoded_arm == 5;
    }
    const double p = static_cast<double>(errors) / n;
    CHECK(p <= bound + 3 * std::sqrt(std::max(p, 1.0 / n) / n));
    CHECK(decoded >= 0.95 * n);
}

TEST_CASE("non-separable instances are flagged") {
    const BanditInstance inst({1.0, 0.95, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1}, RewardFamily::gaussian(0.01));
    RngStream rng(13, 0);
    const auto run = run_re(InstanceEnvironment(inst), 600, rng);
    REQUIRE(run.diagnostics);
    CHECK(run.diagnostics->separability_violated);
    CHECK(run.diagnostics->used_fallback);
    const auto j = to_json(*run.diagnostics);
    CHECK(j.at("groups").size() == 3);
    CHECK(j.at("separability_violated").get<bool>());
}

TEST_CASE("RE pads arm sets that are not a power of two") {
    const BanditInstance inst({0.2, 0.9, 0.4, 0.3, 0.1}, RewardFamily::gaussian(0.05));
    for (std::uint64_t s = 0; s < 50; ++s) {
        RngStream rng(14, s);
        const auto oracle = run_re(InstanceEnvironment(inst), 300, rng);
        CHECK(oracle.recommended_arm < 5);
        const auto plugin = run_re(InstanceEnvironment(inst), 300, rng, ReOptions::plugin());
        CHECK(plugin.recommended_arm < 5);
        CHECK(plugin.diagnostics->pulls_per_arm_initial == 6);
    }
}

TEST_CASE("bounded rewards use the midpoint rule") {
    const BanditInstance inst({0.9, 0.1, 0.1, 0.1}, RewardFamily::bernoulli());
    RngStream rng(15, 0);
    const auto run = run_re(InstanceEnvironment(inst), 200, rng);
    for (const auto& g : run.diagnostics->groups)
        CHECK(g.tau == Approx((run.diagnostics->mu_H_star + run.diagnostics->mu_L_star) / 2));
}
