#include "iqsense/outage.hpp"

#include <cmath>
#include <stdexcept>

namespace iqsense {

namespace {

constexpr std::uint64_t kOutageStream = 0x6f7574;        // "out"
constexpr std::uint64_t kOutageSampleStream = 0x6f757473; // "outs"

struct Counts {
    std::uint64_t events = 0;
    std::uint64_t trials = 0;

    Counts &operator+=(const Counts &o) {
        events += o.events;
        trials += o.trials;
        return *this;
    }
};

OutageEstimate finish(const Counts &c) {
    OutageEstimate e;
    e.outages = c.events;
    e.trials = c.trials;
    e.probability = static_cast<double>(c.events) / static_cast<double>(c.trials);
    e.ci = wilson_interval(c.events, c.trials);
    e.standard_error =
        std::sqrt(e.probability * (1.0 - e.probability) / static_cast<double>(c.trials));
    return e;
}

} // namespace

void OutageScenario::validate() const {
    for (double v : {p_mk, p0, beta_sq_sec, rate_p}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("outage scenario: powers, |beta|^2 and rate must be >= 0");
        }
    }
    for (double v : {noise_p, var_g, var_h}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("outage scenario: noise and channel variances must be > 0");
        }
    }
}

double OutageScenario::gamma_th() const { return std::exp2(rate_p) - 1.0; }

double OutageScenario::mean_signal() const { return p_mk / noise_p * var_g; }

double OutageScenario::mean_interference() const { return beta_sq_sec * p0 / noise_p * var_h; }

double sinr(double signal_gain_sq, double interference_gain_sq, const OutageScenario &sc) {
    if (!(signal_gain_sq >= 0.0) || !(interference_gain_sq >= 0.0)) {
        throw std::invalid_argument("sinr: gains must be >= 0");
    }
    return sc.p_mk * signal_gain_sq /
           (sc.noise_p + sc.beta_sq_sec * sc.p0 * interference_gain_sq);
}

double analytic_outage(const OutageScenario &sc) {
    sc.validate();
    const double g = sc.gamma_th();
    const double m1 = sc.mean_signal();
    const double m2 = sc.mean_interference();
    if (g == 0.0) {
        return 0.0;
    }
    if (m1 == 0.0) {
        return 1.0;
    }
    return -std::expm1(-g / m1) + (1.0 - m1 / (m1 + g * m2)) * std::exp(-g / m1);
}

double paper_verbatim_outage(const OutageScenario &sc) {
    sc.validate();
    const double g = sc.gamma_th();
    const double m1 = sc.mean_signal();
    const double m2 = sc.mean_interference();
    if (m1 == 0.0) {
        return g > 0.0 ? 1.0 : 0.0;
    }
    return 1.0 - m1 / (m1 + m2) * std::exp(-sc.noise_p / m1 * g);
}

OutageEstimate mc_outage(const OutageScenario &sc, std::uint64_t trials, const SeedSpec &seed,
                         const RunOptions &options) {
    sc.validate();
    if (trials == 0) {
        throw std::invalid_argument("mc_outage: trials must be >= 1");
    }
    const double g = sc.gamma_th();
    const double m1 = sc.mean_signal();
    const double m2 = sc.mean_interference();
    auto chunk = [&](std::uint64_t c, std::uint64_t, std::uint64_t count) {
        RandomStream rng = make_stream(seed, {kOutageStream, c});
        std::exponential_distribution<double> unit(1.0);
        Counts part;
        for (std::uint64_t i = 0; i < count; ++i) {
            const double x1 = m1 * unit(rng);
            const double x2 = m2 * unit(rng);
            part.events += (x1 / (1.0 + x2) < g) ? 1 : 0;
        }
        part.trials = count;
        return part;
    };
    return finish(run_chunked(trials, options, Counts{}, chunk));
}

OutageEstimate mc_outage_sample_level(const OutageScenario &sc, std::uint64_t trials,
                                      const SeedSpec &seed, const RunOptions &options) {
    sc.validate();
    if (trials == 0) {
        throw std::invalid_argument("mc_outage_sample_level: trials must be >= 1");
    }
    const double g = sc.gamma_th();
    const MismatchCoefficients sec_tx{{1.0, 0.0}, {std::sqrt(sc.beta_sq_sec), 0.0}};
    auto chunk = [&](std::uint64_t c, std::uint64_t, std::uint64_t count) {
        RandomStream rng = make_stream(seed, {kOutageSampleStream, c});
        ComplexGaussian draw_g(sc.var_g);
        ComplexGaussian draw_h(sc.var_h);
        PskAlphabet psk(4);
        Counts part;
        const Complex zero{};
        for (std::uint64_t i = 0; i < count; ++i) {
            const Complex g_mk = draw_g(rng);
            const Complex h_mk = draw_h(rng);
            const Complex s_mk = psk.draw(rng);
            const Complex s_sk = psk.draw(rng);
            // Split the noiseless primary sample into its desired and
            // leaked components.
            const Complex desired = primary_rx(s_mk, g_mk, s_sk, h_mk, zero, sc.p_mk, 0.0, sec_tx);
            const Complex leaked = primary_rx(s_mk, g_mk, s_sk, h_mk, zero, 0.0, sc.p0, sec_tx);
            const double gamma = std::norm(desired) / (sc.noise_p + std::norm(leaked));
            part.events += (gamma < g) ? 1 : 0;
        }
        part.trials = count;
        return part;
    };
    return finish(run_chunked(trials, options, Counts{}, chunk));
}

} // namespace iqsense
