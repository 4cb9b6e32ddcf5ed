#include "iqsense/montecarlo.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace iqsense {

namespace {

enum StreamPurpose : std::uint64_t {
    kTrialStream = 0x747269616c,   // "trial"
    kVarianceStream = 0x766172,    // "var"
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct Moments {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }

    Moments &operator+=(const Moments &o) {
        if (o.n == 0) {
            return *this;
        }
        const auto na = static_cast<double>(n);
        const auto nb = static_cast<double>(o.n);
        const double delta = o.mean - mean;
        const double total = na + nb;
        mean += delta * nb / total;
        m2 += o.m2 + delta * delta * na * nb / total;
        n += o.n;
        return *this;
    }

    double variance() const { return m2 / static_cast<double>(n - 1); }
};

// Pool-adjacent-violators with equal weights.
std::array<double, 4> nondecreasing_projection(const std::array<double, 4> &x) {
    struct Block {
        double sum;
        int count;
    };
    std::vector<Block> blocks;
    for (double v : x) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1) {
            const Block &b = blocks.back();
            const Block &a = blocks[blocks.size() - 2];
            if (a.sum / a.count <= b.sum / b.count) {
                break;
            }
            const Block merged{a.sum + b.sum, a.count + b.count};
            blocks.pop_back();
            blocks.back() = merged;
        }
    }
    std::array<double, 4> out{};
    std::size_t i = 0;
    for (const Block &b : blocks) {
        for (int k = 0; k < b.count; ++k) {
            out[i++] = b.sum / b.count;
        }
    }
    return out;
}

double row_variance(double p, std::uint64_t n) { return p * (1.0 - p) / static_cast<double>(n); }

} // namespace

SeedSpec SeedSpec::child(std::uint64_t k) const {
    return {master_seed, splitmix64(stream_index ^ splitmix64(k + 0x51ed27))};
}

RandomStream make_stream(const SeedSpec &seed, std::initializer_list<std::uint64_t> path) {
    std::vector<std::uint32_t> words;
    words.reserve(4 + 2 * path.size());
    auto push = [&](std::uint64_t w) {
        words.push_back(static_cast<std::uint32_t>(w));
        words.push_back(static_cast<std::uint32_t>(w >> 32));
    };
    push(seed.master_seed);
    push(seed.stream_index);
    for (std::uint64_t w : path) {
        push(w);
    }
    std::seed_seq seq(words.begin(), words.end());
    return RandomStream(seq);
}

unsigned RunOptions::resolved_workers() const {
    if (workers != 0) {
        return workers;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
    if (n == 0) {
        throw std::domain_error("wilson_interval: no trials");
    }
    const auto nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    // The bounds are exactly 0 and 1 at the extremes; rounding would miss them.
    const double lo = k == 0 ? 0.0 : std::max(0.0, center - half);
    const double hi = k == n ? 1.0 : std::min(1.0, center + half);
    return {lo, hi};
}

void SensingScenario::apply_snr() {
    pair.power_k = from_db(snr1_db) * pair.noise_var;
    pair.power_mk = from_db(snr2_db) * pair.noise_var;
}

void SensingScenario::validate() const {
    pair.validate();
    auto consistent = [&](double power, double snr_db) {
        const double expected = from_db(snr_db) * pair.noise_var;
        return std::abs(power - expected) <= 1e-12 * std::max(1.0, expected);
    };
    if (!consistent(pair.power_k, snr1_db) || !consistent(pair.power_mk, snr2_db)) {
        throw std::invalid_argument("scenario powers disagree with SNR1/SNR2");
    }
    if (!(merge_tol >= 0.0)) {
        throw std::invalid_argument("merge tolerance must be >= 0");
    }
}

PairSampler::PairSampler(const SensingScenario &sc)
    : sc_(sc), tx_(sc.tx()),
      rx_(sc.rx_mismatch ? mismatch_coefficients(*sc.rx_mismatch) : MismatchCoefficients{}),
      mirror_(sc.pair.mirrored()), psk_(sc.pair.psk_order), channel_k_(sc.pair.channel_var),
      channel_mk_(sc.pair.channel_var_mirror), noise_(sc.pair.noise_var) {
    sc_.validate();
}

std::pair<Complex, Complex> PairSampler::draw_channels(RandomStream &rng) {
    const Complex h_k = channel_k_(rng);
    const Complex h_mk = channel_mk_(rng);
    return {h_k, h_mk};
}

std::pair<Complex, Complex> PairSampler::packet(bool active_k, bool active_mk,
                                                std::pair<Complex, Complex> channel,
                                                RandomStream &rng) {
    const Complex s_k = active_k ? psk_.draw(rng) : Complex{};
    const Complex s_mk = active_mk ? psk_.draw(rng) : Complex{};
    const Complex w_k = noise_(rng);
    const Complex w_mk = noise_(rng);
    const Complex y_k = receive(s_k, s_mk, channel.first, w_k, sc_.pair, tx_);
    const Complex y_mk = receive(s_mk, s_k, channel.second, w_mk, mirror_, tx_);
    if (!sc_.joint()) {
        return {y_k, y_mk};
    }
    return {receive_joint(y_k, y_mk, rx_), receive_joint(y_mk, y_k, rx_)};
}

Complex PairSampler::sample_k(Hypothesis truth, RandomStream &rng) {
    const bool active_k = carries_k(truth);
    const bool active_mk = carries_mirror(truth);
    if (sc_.joint()) {
        return packet(active_k, active_mk, draw_channels(rng), rng).first;
    }
    const Complex h_k = channel_k_(rng);
    const Complex s_k = active_k ? psk_.draw(rng) : Complex{};
    const Complex s_mk = active_mk ? psk_.draw(rng) : Complex{};
    return receive(s_k, s_mk, h_k, noise_(rng), sc_.pair, tx_);
}

double PairSampler::statistic(Hypothesis truth, RandomStream &rng) {
    const std::int64_t n = sc_.n_packets.value();
    if (!sc_.block_fading) {
        double energy = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            energy += std::norm(sample_k(truth, rng));
        }
        return energy / static_cast<double>(n);
    }

    const bool active_k = carries_k(truth);
    const bool active_mk = carries_mirror(truth);
    const auto channels = draw_channels(rng);
    double energy = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        energy += std::norm(packet(active_k, active_mk, channels, rng).first);
    }
    return energy / static_cast<double>(n);
}

std::uint64_t TallyMatrix::trials(Hypothesis truth) const {
    std::uint64_t total = 0;
    for (std::uint64_t c : counts_[index_of(truth)]) {
        total += c;
    }
    return total;
}

double TallyMatrix::frequency(Hypothesis truth, Hypothesis decided) const {
    const std::uint64_t n = trials(truth);
    if (n == 0) {
        throw std::domain_error("tally row " + std::string(name(truth)) + " is empty");
    }
    return static_cast<double>(count(truth, decided)) / static_cast<double>(n);
}

std::uint64_t TallyMatrix::busy(Hypothesis truth) const {
    return count(truth, Hypothesis::H2) + count(truth, Hypothesis::H3);
}

TallyMatrix &TallyMatrix::operator+=(const TallyMatrix &other) {
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            counts_[i][j] += other.counts_[i][j];
        }
    }
    return *this;
}

MultiTally::MultiTally(std::size_t rules) : per_rule(rules) {
    for (auto &row : busy_patterns) {
        row.assign(std::size_t{1} << rules, 0);
    }
}

MultiTally &MultiTally::operator+=(const MultiTally &other) {
    if (per_rule.empty() && !other.per_rule.empty()) {
        *this = MultiTally(other.per_rule.size());
    }
    if (other.per_rule.size() != per_rule.size()) {
        throw std::invalid_argument("MultiTally: rule count mismatch");
    }
    for (std::size_t r = 0; r < per_rule.size(); ++r) {
        per_rule[r] += other.per_rule[r];
    }
    for (std::size_t h = 0; h < 4; ++h) {
        for (std::size_t m = 0; m < busy_patterns[h].size(); ++m) {
            busy_patterns[h][m] += other.busy_patterns[h][m];
        }
    }
    return *this;
}

HypothesisVariances model_variances(const SensingScenario &sc, const SeedSpec &seed,
                                    const RunOptions &options) {
    if (sc.joint()) {
        return estimate_component_variances(sc, options.variance_samples, seed, options);
    }
    return hypothesis_variances(sc.pair, sc.tx());
}

MultiTally run_trials_multi(const SensingScenario &sc, std::span<const DecisionRule> rules,
                            std::uint64_t per_hypothesis, const SeedSpec &seed,
                            const RunOptions &options) {
    if (per_hypothesis == 0) {
        throw std::invalid_argument("run_trials: per-hypothesis trial count must be >= 1");
    }
    if (rules.empty() || rules.size() > 16) {
        throw std::invalid_argument("run_trials: between 1 and 16 rules are supported");
    }
    sc.validate();
    const std::vector<DecisionRule> shared(rules.begin(), rules.end());

    MultiTally total(rules.size());
    for (Hypothesis truth : kHypotheses) {
        auto chunk = [&](std::uint64_t c, std::uint64_t, std::uint64_t count) {
            RandomStream rng = make_stream(seed, {kTrialStream, index_of(truth), c});
            PairSampler sampler(sc);
            MultiTally part(shared.size());
            auto &patterns = part.busy_patterns[index_of(truth)];
            for (std::uint64_t i = 0; i < count; ++i) {
                const double z = sampler.statistic(truth, rng);
                std::size_t mask = 0;
                for (std::size_t r = 0; r < shared.size(); ++r) {
                    const Hypothesis decided = shared[r].classify(z);
                    part.per_rule[r].add(truth, decided);
                    if (carries_k(decided)) {
                        mask |= std::size_t{1} << r;
                    }
                }
                ++patterns[mask];
            }
            return part;
        };
        total += run_chunked(per_hypothesis, options, MultiTally(shared.size()), chunk);
    }
    return total;
}

TallyMatrix run_trials(const SensingScenario &sc, std::uint64_t per_hypothesis,
                       const SeedSpec &seed, const RunOptions &options) {
    const HypothesisVariances v = model_variances(sc, seed, options);
    const DecisionRule rule = make_rule(v, sc.n_packets, sc.mode, sc.merge_tol);
    return run_trials_multi(sc, std::span(&rule, 1), per_hypothesis, seed, options).per_rule[0];
}

EmpiricalMetrics empirical_metrics(const TallyMatrix &t, MetricConvention convention) {
    for (Hypothesis h : kHypotheses) {
        if (t.trials(h) == 0) {
            throw std::domain_error("empirical_metrics: undefined metric, row " +
                                    std::string(name(h)) + " has no trials");
        }
    }
    using enum Hypothesis;
    EmpiricalMetrics out;
    auto term = [&](std::string label, std::uint64_t k, Hypothesis row) {
        const std::uint64_t n = t.trials(row);
        out.terms.push_back(
            {std::move(label), static_cast<double>(k) / static_cast<double>(n), wilson_interval(k, n)});
    };
    auto busy_freq = [&](Hypothesis h) { return static_cast<double>(t.busy(h)) / static_cast<double>(t.trials(h)); };

    const double b0 = busy_freq(H0);
    const double b1 = busy_freq(H1);
    const double b2 = busy_freq(H2);
    const double b3 = busy_freq(H3);

    if (convention == MetricConvention::PaperSum) {
        term("P(H2|H1)", t.count(H1, H2), H1);
        term("P(H2|H0)", t.count(H0, H2), H0);
        term("P(H3|H1)", t.count(H1, H3), H1);
        term("P(H3|H0)", t.count(H0, H3), H0);
        term("P(H2|H2)", t.count(H2, H2), H2);
        term("P(H3|H3)", t.count(H3, H3), H3);
        const double d2 = t.frequency(H2, H2);
        const double d3 = t.frequency(H3, H3);
        out.p_fa = {b0 + b1, kZ95 * std::sqrt(row_variance(b0, t.trials(H0)) +
                                              row_variance(b1, t.trials(H1)))};
        out.p_d = {d2 + d3, kZ95 * std::sqrt(row_variance(d2, t.trials(H2)) +
                                             row_variance(d3, t.trials(H3)))};
    } else {
        term("P(busy|H0)", t.busy(H0), H0);
        term("P(busy|H1)", t.busy(H1), H1);
        term("P(busy|H2)", t.busy(H2), H2);
        term("P(busy|H3)", t.busy(H3), H3);
        out.p_fa = {0.5 * (b0 + b1), 0.5 * kZ95 * std::sqrt(row_variance(b0, t.trials(H0)) +
                                                            row_variance(b1, t.trials(H1)))};
        out.p_d = {0.5 * (b2 + b3), 0.5 * kZ95 * std::sqrt(row_variance(b2, t.trials(H2)) +
                                                           row_variance(b3, t.trials(H3)))};
    }
    return out;
}

Estimate paired_false_alarm_difference(const MultiTally &t, std::size_t a, std::size_t b) {
    if (a >= t.per_rule.size() || b >= t.per_rule.size()) {
        throw std::out_of_range("paired_false_alarm_difference: rule index");
    }
    double diff = 0.0;
    double var = 0.0;
    for (Hypothesis h : {Hypothesis::H0, Hypothesis::H1}) {
        const auto &patterns = t.busy_patterns[index_of(h)];
        std::uint64_t only_a = 0;
        std::uint64_t only_b = 0;
        std::uint64_t n = 0;
        for (std::size_t mask = 0; mask < patterns.size(); ++mask) {
            const bool busy_a = (mask >> a) & 1U;
            const bool busy_b = (mask >> b) & 1U;
            n += patterns[mask];
            if (busy_a && !busy_b) {
                only_a += patterns[mask];
            } else if (busy_b && !busy_a) {
                only_b += patterns[mask];
            }
        }
        if (n == 0) {
            throw std::domain_error("paired_false_alarm_difference: empty row");
        }
        const auto nn = static_cast<double>(n);
        const double d = (static_cast<double>(only_a) - static_cast<double>(only_b)) / nn;
        const double second = (static_cast<double>(only_a) + static_cast<double>(only_b)) / nn;
        diff += 0.5 * d;
        var += 0.25 * (second - d * d) / nn;
    }
    return {diff, kZ95 * std::sqrt(var)};
}

HypothesisVariances estimate_component_variances(const SensingScenario &sc,
                                                 std::uint64_t samples, const SeedSpec &seed,
                                                 const RunOptions &options) {
    if (samples < 10'000) {
        throw std::invalid_argument("estimate_component_variances: need >= 1e4 samples");
    }
    sc.validate();
    std::array<double, 4> raw{};
    for (Hypothesis truth : kHypotheses) {
        auto chunk = [&](std::uint64_t c, std::uint64_t, std::uint64_t count) {
            RandomStream rng = make_stream(seed, {kVarianceStream, index_of(truth), c});
            PairSampler sampler(sc);
            Moments m;
            for (std::uint64_t i = 0; i < count; ++i) {
                m.push(sampler.sample_k(truth, rng).real());
            }
            return m;
        };
        raw[index_of(truth)] = run_chunked(samples, options, Moments{}, chunk).variance();
    }
    const auto v = nondecreasing_projection(raw);
    return {v[0], v[1], v[2], v[3]};
}

std::string_view axis_name(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::IrrDb:
        return "irr_db";
    case SweepAxis::DeltaSnrDb:
        return "delta_snr_db";
    case SweepAxis::Snr1Db:
        return "snr1_db";
    }
    return "?";
}

SensingScenario sweep_point(const SensingScenario &tmpl, const SweepSpec &spec, double value) {
    SensingScenario sc = tmpl;
    switch (spec.axis) {
    case SweepAxis::IrrDb:
        sc.tx_mismatch = irr_to_mismatch(value);
        break;
    case SweepAxis::DeltaSnrDb:
        sc.snr2_db = sc.snr1_db - value;
        break;
    case SweepAxis::Snr1Db:
        sc.snr1_db = value;
        if (spec.lock_delta_snr_db) {
            sc.snr2_db = value - *spec.lock_delta_snr_db;
        }
        break;
    }
    if (spec.rx_follows_tx) {
        sc.rx_mismatch = sc.tx_mismatch;
    }
    sc.apply_snr();
    return sc;
}

std::vector<SweepRow> sweep(const SensingScenario &tmpl, const SweepSpec &spec,
                            std::uint64_t per_hypothesis, const SeedSpec &seed,
                            const RunOptions &options) {
    if (spec.grid.empty()) {
        throw std::invalid_argument("sweep: grid must be nonempty");
    }
    if (spec.modes.empty()) {
        throw std::invalid_argument("sweep: at least one detector mode is required");
    }
    std::vector<SweepRow> rows;
    for (std::size_t j = 0; j < spec.grid.size(); ++j) {
        const SensingScenario sc = sweep_point(tmpl, spec, spec.grid[j]);
        const SeedSpec point_seed = seed.child(j);
        const HypothesisVariances v = model_variances(sc, point_seed, options);
        std::vector<DecisionRule> rules;
        for (const DetectorMode &mode : spec.modes) {
            rules.push_back(make_rule(v, sc.n_packets, mode, sc.merge_tol));
        }
        const MultiTally tally = run_trials_multi(sc, rules, per_hypothesis, point_seed, options);
        const MismatchCoefficients tx = sc.tx();
        const double irr = std::norm(tx.beta) == 0.0 ? -std::numeric_limits<double>::infinity()
                                                     : to_db(image_rejection_ratio(tx));
        for (std::size_t r = 0; r < rules.size(); ++r) {
            SweepRow row{.axis_value = spec.grid[j],
                         .mode = spec.modes[r],
                         .snr1_db = sc.snr1_db,
                         .snr2_db = sc.snr2_db,
                         .irr_db = irr,
                         .variances = v,
                         .rule = rules[r],
                         .analytic_pfa_paper =
                             analytic_false_alarm(v, rules[r], MetricConvention::PaperSum),
                         .analytic_pfa_weighted =
                             analytic_false_alarm(v, rules[r], MetricConvention::PriorWeighted),
                         .analytic_pd_paper =
                             analytic_detection(v, rules[r], MetricConvention::PaperSum),
                         .analytic_pd_weighted =
                             analytic_detection(v, rules[r], MetricConvention::PriorWeighted),
                         .empirical_paper =
                             empirical_metrics(tally.per_rule[r], MetricConvention::PaperSum),
                         .empirical_weighted =
                             empirical_metrics(tally.per_rule[r], MetricConvention::PriorWeighted),
                         .tally = tally.per_rule[r]};
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

} // namespace iqsense
