#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "policies.hpp"
#include "rng.hpp"

namespace bai {

// -- jammer waveform selection -----------------------------------------------------

/**
 * Orthogonal-codebook jammer reduced to its scalar reward: probing a subset S
 * returns (1/m) 1{j* in S} plus N(0, noise_var) noise. With subset_size == 0
 * the divisor is |S|, so single waveforms have mean 1 and halves have 2/K.
 */
struct JammerScenario {
    std::size_t k = 16;
    ArmIndex j_star = 0;
    double noise_var = 0.0;
    std::size_t subset_size = 0;
};

inline double jammer_reward(const JammerScenario& s, std::span<const ArmIndex> subset, RngStream& rng) {
    if (subset.empty()) fail(ErrorCode::EmptySubset, "jammer probe needs at least one waveform");
    bool hit = false;
    for (ArmIndex a : subset) {
        if (a >= s.k) fail(ErrorCode::IndexOutOfRange, "waveform " + std::to_string(a) + " out of range");
        hit = hit || a == s.j_star;
    }
    const double m = static_cast<double>(s.subset_size > 0 ? s.subset_size : subset.size());
    const double mean = hit ? 1.0 / m : 0.0;
    return s.noise_var > 0.0 ? rng.normal(mean, std::sqrt(s.noise_var)) : mean;
}

/// Single-waveform means as a bandit instance: 1 for j*, 0 elsewhere.
inline BanditInstance jammer_instance(const JammerScenario& s) {
    std::vector<double> means(s.k, 0.0);
    means.at(s.j_star) = 1.0;
    return BanditInstance(std::move(means), RewardFamily::gaussian(s.noise_var));
}

class JammerEnvironment {
public:
    explicit JammerEnvironment(JammerScenario s) : s_(s) {
        if (s_.k < 2 || s_.j_star >= s_.k) fail(ErrorCode::InvalidArgument, "bad jammer scenario");
    }

    std::size_t arm_count() const noexcept { return s_.k; }
    ArmIndex best_arm() const noexcept { return s_.j_star; }
    double pull_arm(ArmIndex a, RngStream& rng) const {
        const ArmIndex one[1] = {a};
        return jammer_reward(s_, one, rng);
    }
    double pull_group(std::span<const ArmIndex> members, RngStream& rng) const {
        return jammer_reward(s_, members, rng);
    }
    OracleInfo oracle() const {
        std::vector<double> means(s_.k, 0.0);
        means[s_.j_star] = 1.0;
        return {std::move(means), 0.0, s_.noise_var, true};
    }

private:
    JammerScenario s_;
};

struct SweepRow {
    double noise_var = 0.0;
    CellResult cell;
};

/**
 * Error rates over a noise-variance grid with K waveforms and budget T. The
 * hidden target is redrawn per trial; trial streams are shared across noise
 * levels and algorithms.
 */
inline std::vector<SweepRow> run_jammer_experiment(std::size_t k, const std::vector<double>& noise_grid,
                                                   const std::vector<AlgorithmSpec>& algorithms, std::int64_t budget,
                                                   std::int64_t trials, std::uint64_t seed,
                                                   unsigned threads = worker_count()) {
    if (k < 2 || !std::has_single_bit(k)) fail(ErrorCode::InvalidK, "jammer study needs K a power of two");
    std::vector<SweepRow> rows;
    for (const double nv : noise_grid) {
        if (!(nv >= 0.0)) fail(ErrorCode::InvalidArgument, "noise variance must be >= 0");
        for (const auto& algo : algorithms) {
            auto make = [&](RngStream& rng) { return JammerEnvironment({k, rng.index(k), nv, 0}); };
            rows.push_back({nv, run_cell("jammer", algo, budget, trials, seed, make, threads)});
        }
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "noise_var,algorithm,T,trials,errors,p_hat,ci_lo,ci_hi\n";
    for (const auto& r : rows) {
        os << format_number(r.noise_var) << ',';
        write_cell_fields(os, r.cell);
        os << '\n';
    }
}

// -- radar channel detection -------------------------------------------------------

struct UniformRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct RadarScenario {
    std::size_t k = 8;
    double fs = 3.2e6;        // Hz
    double dwell_s = 30e-6;   // duration of one play
    double noise_var = 1.0;   // per complex sample, split evenly over I and Q
    ArmIndex active_channel = 0;
    int min_pulses = 2;
    int max_pulses = 6;
    UniformRange width_s{10e-6, 16e-6};
    UniformRange pri_s{17e-6, 23e-6};
    UniformRange delay_s{1e-6, 10e-6};

    std::size_t samples() const { return static_cast<std::size_t>(std::llround(dwell_s * fs)); }
};

struct PulseParams {
    int n_pulses = 0;
    double width_s = 0.0;
    double pri_s = 0.0;
    double delay_s = 0.0;
};

inline PulseParams draw_pulse_params(const RadarScenario& s, RngStream& rng) {
    PulseParams p;
    p.n_pulses = static_cast<int>(rng.integer(s.min_pulses, s.max_pulses));
    p.width_s = rng.uniform(s.width_s.lo, s.width_s.hi);
    p.pri_s = rng.uniform(s.pri_s.lo, s.pri_s.hi);
    p.delay_s = rng.uniform(s.delay_s.lo, s.delay_s.hi);
    return p;
}

namespace detail {

// First sample index at or after time t.
inline std::int64_t sample_at(double t, double fs) { return static_cast<std::int64_t>(std::ceil(t * fs - 1e-9)); }

// Calls f(begin, end) for every pulse clipped to [0, n).
template <class F>
void for_each_pulse(const PulseParams& p, double fs, std::size_t n, F&& f) {
    const auto limit = static_cast<std::int64_t>(n);
    for (int i = 0; i < p.n_pulses; ++i) {
        const double start = p.delay_s + i * p.pri_s;
        const std::int64_t b = std::clamp<std::int64_t>(sample_at(start, fs), 0, limit);
        const std::int64_t e = std::clamp<std::int64_t>(sample_at(start + p.width_s, fs), 0, limit);
        if (e > b) f(b, e);
    }
}

}  // namespace detail

/// Number of samples covered by at least one pulse.
inline std::size_t pulse_sample_count(const PulseParams& p, double fs, std::size_t n) {
    std::int64_t covered = 0;
    std::int64_t reach = 0;  // pulses start in increasing order, so overlap only extends the previous run
    detail::for_each_pulse(p, fs, n, [&](std::int64_t b, std::int64_t e) {
        b = std::max(b, reach);
        if (e > b) covered += e - b;
        reach = std::max(reach, e);
    });
    return static_cast<std::size_t>(covered);
}

using IqBlock = std::vector<std::complex<double>>;

/// One dwell of a channel with the given pulse train (or none) plus complex noise.
inline IqBlock radar_synthesize(const RadarScenario& s, const std::optional<PulseParams>& pulses, RngStream& rng) {
    const std::size_t n = s.samples();
    IqBlock block(n);
    if (pulses)
        detail::for_each_pulse(*pulses, s.fs, n, [&](std::int64_t b, std::int64_t e) {
            for (auto i = b; i < e; ++i) block[static_cast<std::size_t>(i)] = {1.0, 0.0};
        });
    if (s.noise_var > 0.0) {
        const double sd = std::sqrt(s.noise_var / 2.0);
        for (auto& x : block) x += std::complex<double>(rng.normal(0.0, sd), rng.normal(0.0, sd));
    }
    return block;
}

inline IqBlock radar_synthesize(const RadarScenario& s, ArmIndex channel, RngStream& rng) {
    if (channel >= s.k) fail(ErrorCode::IndexOutOfRange, "channel " + std::to_string(channel) + " out of range");
    std::optional<PulseParams> pulses;
    if (channel == s.active_channel) pulses = draw_pulse_params(s, rng);
    return radar_synthesize(s, pulses, rng);
}

inline double radar_energy(std::span<const std::complex<double>> block) {
    if (block.empty()) fail(ErrorCode::InvalidArgument, "energy of an empty block");
    double e = 0.0;
    for (const auto& x : block) e += std::norm(x);
    return e;
}

/**
 * Expected number of pulse-covered samples per dwell, averaged over the pulse
 * parameter ranges with a midpoint rule of `grid` nodes per continuous axis.
 */
inline double expected_pulse_energy(const RadarScenario& s, int grid = 48) {
    const std::size_t n = s.samples();
    double total = 0.0;
    auto node = [&](const UniformRange& r, int i) { return r.lo + (r.hi - r.lo) * (i + 0.5) / grid; };
    for (int np = s.min_pulses; np <= s.max_pulses; ++np)
        for (int a = 0; a < grid; ++a)
            for (int b = 0; b < grid; ++b)
                for (int c = 0; c < grid; ++c)
                    total += static_cast<double>(
                        pulse_sample_count({np, node(s.width_s, a), node(s.pri_s, b), node(s.delay_s, c)}, s.fs, n));
    return total / (static_cast<double>(s.max_pulses - s.min_pulses + 1) * grid * grid * grid);
}

/**
 * Energy of an active dwell drawn without synthesizing samples. Rotating the
 * `covered` unit-amplitude samples onto one axis leaves one noncentral term
 * plus 2N-1 central real components of variance noise_var/2, which is exactly
 * radar_energy(radar_synthesize(...)) in law.
 */
inline double active_energy(const RadarScenario& s, std::size_t covered, RngStream& rng) {
    const double n = static_cast<double>(s.samples());
    const double c = static_cast<double>(covered);
    if (!(s.noise_var > 0.0)) return c;
    const double lead = std::sqrt(c) + std::sqrt(s.noise_var / 2.0) * rng.normal();
    return lead * lead + s.noise_var * rng.gamma(n - 0.5);
}

// -- recorded I/Q --------------------------------------------------------------------

struct IqRecord {
    IqBlock samples;

    double mean_power() const {
        double e = 0.0;
        for (const auto& x : samples) e += std::norm(x);
        return e / static_cast<double>(samples.size());
    }
};

/// Reads a CSV with header "n,i,q" and one sample per row.
inline IqRecord read_iq_csv(std::istream& in) {
    auto trim = [](std::string s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
        std::size_t b = 0;
        while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        return s.substr(b);
    };
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::CsvFormatError, "I/Q file is empty");
    std::string header = trim(line);
    std::transform(header.begin(), header.end(), header.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (header != "n,i,q") fail(ErrorCode::CsvFormatError, "I/Q header must be n,i,q (got '" + header + "')");

    IqRecord rec;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        line = trim(line);
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cols.push_back(trim(c));
        if (cols.size() != 3) fail(ErrorCode::CsvFormatError, "row " + std::to_string(row) + " needs 3 columns");
        double v[3];
        for (int i = 0; i < 3; ++i) {
            const auto& c = cols[static_cast<std::size_t>(i)];
            auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v[i]);
            if (ec != std::errc{} || p != c.data() + c.size() || !std::isfinite(v[i]))
                fail(ErrorCode::CsvFormatError, "row " + std::to_string(row) + ": bad number '" + c + "'");
        }
        rec.samples.emplace_back(v[1], v[2]);
    }
    if (rec.samples.empty()) fail(ErrorCode::CsvFormatError, "I/Q file has no samples");
    return rec;
}

inline IqRecord read_iq_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoFailure, "cannot open '" + path + "'");
    return read_iq_csv(in);
}

// -- radar environment ---------------------------------------------------------------

/// Scenario-wide quantities shared by every trial.
struct RadarModel {
    RadarScenario scenario;
    double active_mean = 0.0;  // expected energy of the active channel per play
    const IqRecord* iq = nullptr;

    static RadarModel make(const RadarScenario& s, const IqRecord* iq = nullptr) {
        const double n = static_cast<double>(s.samples());
        const double active = iq ? n * iq->mean_power() : expected_pulse_energy(s) + n * s.noise_var;
        return {s, active, iq};
    }
};

/**
 * Channels as arms, dwell energy as reward. Idle channels are drawn directly as
 * noise_var * Gamma(N, 1), the exact law of the energy of N complex Gaussian
 * samples. A group play averages the member energies.
 */
class RadarEnvironment {
public:
    RadarEnvironment(const RadarModel& model, ArmIndex active) : model_(&model), active_(active) {
        if (active >= model.scenario.k) fail(ErrorCode::IndexOutOfRange, "active channel out of range");
    }

    std::size_t arm_count() const noexcept { return model_->scenario.k; }
    ArmIndex best_arm() const noexcept { return active_; }

    double pull_arm(ArmIndex a, RngStream& rng) const {
        const auto& s = model_->scenario;
        if (a >= s.k) fail(ErrorCode::IndexOutOfRange, "channel " + std::to_string(a) + " out of range");
        const std::size_t n = s.samples();
        if (a != active_) return s.noise_var > 0.0 ? s.noise_var * rng.gamma(static_cast<double>(n)) : 0.0;
        if (model_->iq) {
            const auto& rec = model_->iq->samples;
            const std::size_t offset = rng.index(rec.size());
            double e = 0.0;
            for (std::size_t i = 0; i < n; ++i) e += std::norm(rec[(offset + i) % rec.size()]);
            return e;
        }
        return active_energy(s, pulse_sample_count(draw_pulse_params(s, rng), s.fs, n), rng);
    }

    double pull_group(std::span<const ArmIndex> members, RngStream& rng) const {
        if (members.empty()) fail(ErrorCode::EmptyGroup, "group has no members");
        double e = 0.0;
        for (ArmIndex a : members) e += pull_arm(a, rng);
        return e / static_cast<double>(members.size());
    }

    OracleInfo oracle() const {
        const auto& s = model_->scenario;
        const double n = static_cast<double>(s.samples());
        std::vector<double> means(s.k, n * s.noise_var);
        means[active_] = model_->active_mean;
        return {std::move(means), n * s.noise_var, n * s.noise_var * s.noise_var, true};
    }

private:
    const RadarModel* model_;
    ArmIndex active_;
};

/// Error rates per play budget; the active channel is redrawn per trial.
inline std::vector<CellResult> run_radar_experiment(const RadarScenario& scenario, const std::vector<std::int64_t>& plays,
                                                    const std::vector<AlgorithmSpec>& algorithms, std::int64_t trials,
                                                    std::uint64_t seed, const IqRecord* iq = nullptr,
                                                    unsigned threads = worker_count()) {
    const RadarModel model = RadarModel::make(scenario, iq);
    std::vector<CellResult> out;
    for (const auto& algo : algorithms)
        for (const auto t : plays) {
            auto make = [&](RngStream& rng) { return RadarEnvironment(model, rng.index(scenario.k)); };
            out.push_back(run_cell("radar", algo, t, trials, seed, make, threads));
        }
    return out;
}

}  // namespace bai
