#pragma once

// Seeded, chunked Monte Carlo engine. Work is split into fixed-size chunks;
// each chunk owns a random stream derived from (master seed, stream index,
// chunk path) and chunk results are folded in chunk order, so outputs depend
// only on the inputs and never on the worker count.

#include "iqsense/detection.hpp"
#include "iqsense/signal_model.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace iqsense {

struct SeedSpec {
    std::uint64_t master_seed = 1;
    std::uint64_t stream_index = 0;

    /// A distinct, reproducible sub-stream.
    SeedSpec child(std::uint64_t k) const;

    friend bool operator==(const SeedSpec &, const SeedSpec &) = default;
};

/// Engine for one chunk of one purpose.
RandomStream make_stream(const SeedSpec &seed, std::initializer_list<std::uint64_t> path);

struct RunOptions {
    unsigned workers = 0;                  ///< 0: hardware concurrency
    std::uint64_t chunk_size = 1u << 16;   ///< trials per chunk; part of the result contract
    std::uint64_t variance_samples = 1'000'000;

    unsigned resolved_workers() const;
};

/// Runs fn(chunk_index, first, count) over [0, total) and folds the chunk
/// results in chunk order.
template <class Result, class ChunkFn>
Result run_chunked(std::uint64_t total, const RunOptions &options, Result init, ChunkFn fn) {
    const std::uint64_t chunk = std::max<std::uint64_t>(options.chunk_size, 1);
    const std::uint64_t chunks = (total + chunk - 1) / chunk;
    std::vector<std::optional<Result>> partial(chunks);
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (std::uint64_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
            const std::uint64_t first = c * chunk;
            partial[c].emplace(fn(c, first, std::min(chunk, total - first)));
        }
    };
    const unsigned workers =
        static_cast<unsigned>(std::min<std::uint64_t>(options.resolved_workers(), chunks));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }
    for (auto &p : partial) {
        init += *p;
    }
    return init;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Wilson score interval for k successes in n trials.
Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054);

inline constexpr double kZ95 = 1.959963984540054;

struct SensingScenario {
    SubcarrierPairConfig pair;
    IqMismatch tx_mismatch;
    std::optional<IqMismatch> rx_mismatch;
    GammaShape n_packets{1};
    DetectorMode mode = DetectorMode::four_level();
    double snr1_db = 0.0;
    double snr2_db = -10.0;
    bool block_fading = false;
    double merge_tol = kDefaultMergeTolerance;

    /// Sets the pair powers from the SNRs (unit-modulus symbols).
    void apply_snr();
    /// Throws std::invalid_argument when the powers disagree with the SNRs.
    void validate() const;

    double delta_snr_db() const { return snr1_db - snr2_db; }
    bool joint() const { return rx_mismatch.has_value(); }
    MismatchCoefficients tx() const { return mismatch_coefficients(tx_mismatch); }
};

/// Draws received samples for a mirrored pair under a given ground truth.
class PairSampler {
public:
    explicit PairSampler(const SensingScenario &sc);

    /// Receiver-side samples on (k, -k) for one packet with fresh symbols
    /// and noise; channels come from `channel` (k, -k).
    std::pair<Complex, Complex> packet(bool active_k, bool active_mk,
                                       std::pair<Complex, Complex> channel, RandomStream &rng);

    std::pair<Complex, Complex> draw_channels(RandomStream &rng);

    /// Sample on k only, one packet.
    Complex sample_k(Hypothesis truth, RandomStream &rng);

    /// Periodogram statistic on k over N packets.
    double statistic(Hypothesis truth, RandomStream &rng);

private:
    SensingScenario sc_;
    MismatchCoefficients tx_;
    MismatchCoefficients rx_;
    SubcarrierPairConfig mirror_;
    PskAlphabet psk_;
    ComplexGaussian channel_k_;
    ComplexGaussian channel_mk_;
    ComplexGaussian noise_;
};

class TallyMatrix {
public:
    using Counts = std::array<std::array<std::uint64_t, 4>, 4>;

    void add(Hypothesis truth, Hypothesis decided, std::uint64_t n = 1) {
        counts_[index_of(truth)][index_of(decided)] += n;
    }

    std::uint64_t count(Hypothesis truth, Hypothesis decided) const {
        return counts_[index_of(truth)][index_of(decided)];
    }
    std::uint64_t trials(Hypothesis truth) const;
    double frequency(Hypothesis truth, Hypothesis decided) const;
    /// Count of decisions in {H2, H3} for the given truth.
    std::uint64_t busy(Hypothesis truth) const;
    const Counts &counts() const noexcept { return counts_; }

    TallyMatrix &operator+=(const TallyMatrix &other);
    friend bool operator==(const TallyMatrix &, const TallyMatrix &) = default;

private:
    Counts counts_{};
};

/// Tallies for several rules evaluated on the same simulated statistics.
struct MultiTally {
    std::vector<TallyMatrix> per_rule;
    /// busy_patterns[truth][mask]: bit r of mask set when rule r said busy.
    std::array<std::vector<std::uint64_t>, 4> busy_patterns;

    explicit MultiTally(std::size_t rules = 0);
    MultiTally &operator+=(const MultiTally &other);
};

/// Closed-form variances for Tx-only scenarios, empirical estimates for
/// the joint Tx-Rx model.
HypothesisVariances model_variances(const SensingScenario &sc, const SeedSpec &seed,
                                    const RunOptions &options = {});

MultiTally run_trials_multi(const SensingScenario &sc, std::span<const DecisionRule> rules,
                            std::uint64_t per_hypothesis, const SeedSpec &seed,
                            const RunOptions &options = {});

/// Stratified trials (equal count per true hypothesis) with the scenario's
/// own detector mode.
TallyMatrix run_trials(const SensingScenario &sc, std::uint64_t per_hypothesis,
                       const SeedSpec &seed, const RunOptions &options = {});

struct Estimate {
    double value = 0.0;
    double half_width = 0.0; ///< 95 % normal-approximation half width
};

struct MetricTerm {
    std::string label; ///< e.g. "P(H2|H0)" or "P(busy|H1)"
    double frequency = 0.0;
    Interval wilson;
};

struct EmpiricalMetrics {
    Estimate p_fa;
    Estimate p_d;
    std::vector<MetricTerm> terms;
};

EmpiricalMetrics empirical_metrics(const TallyMatrix &t, MetricConvention convention);

/// PriorWeighted false-alarm difference p_fa(a) - p_fa(b) estimated on
/// common samples, with its paired 95 % half width.
Estimate paired_false_alarm_difference(const MultiTally &t, std::size_t a, std::size_t b);

/// Per-hypothesis sample variance of the real part of the received sample,
/// projected onto nondecreasing order H0..H3 (pool-adjacent-violators).
HypothesisVariances estimate_component_variances(const SensingScenario &sc,
                                                 std::uint64_t samples, const SeedSpec &seed,
                                                 const RunOptions &options = {});

enum class SweepAxis { IrrDb, DeltaSnrDb, Snr1Db };

std::string_view axis_name(SweepAxis axis);

struct SweepSpec {
    SweepAxis axis = SweepAxis::IrrDb;
    std::vector<double> grid;
    std::vector<DetectorMode> modes{DetectorMode::four_level()};
    /// Receiver mismatch tracks the transmitter IRR (A_T = A_R).
    bool rx_follows_tx = false;
    /// Snr1Db axis: keep SNR1 - SNR2 fixed at this value.
    std::optional<double> lock_delta_snr_db;
};

struct SweepRow {
    double axis_value = 0.0;
    DetectorMode mode = DetectorMode::four_level();
    double snr1_db = 0.0;
    double snr2_db = 0.0;
    double irr_db = 0.0;
    HypothesisVariances variances{1, 1, 1, 1};
    DecisionRule rule{{0, 0, 0}, {}, GammaShape{1}};
    double analytic_pfa_paper = 0.0;
    double analytic_pfa_weighted = 0.0;
    double analytic_pd_paper = 0.0;
    double analytic_pd_weighted = 0.0;
    EmpiricalMetrics empirical_paper;
    EmpiricalMetrics empirical_weighted;
    TallyMatrix tally;
};

/// Builds the scenario for one grid value of a sweep.
SensingScenario sweep_point(const SensingScenario &tmpl, const SweepSpec &spec, double value);

std::vector<SweepRow> sweep(const SensingScenario &tmpl, const SweepSpec &spec,
                            std::uint64_t per_hypothesis, const SeedSpec &seed,
                            const RunOptions &options = {});

} // namespace iqsense
