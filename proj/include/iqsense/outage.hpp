#pragma once

// Primary-link outage on subcarrier -k when a secondary transmitter with
// I/Q imbalance uses subcarrier k.

#include "iqsense/montecarlo.hpp"

#include <cstdint>

namespace iqsense {

struct OutageScenario {
    double p_mk = 10.0;       ///< primary power on -k
    double p0 = 10.0;         ///< secondary transmit power on k
    double beta_sq_sec = 0.0; ///< |beta_{T,s}|^2
    double noise_p = 1.0;     ///< primary receiver noise variance
    double var_g = 1.0;       ///< primary link channel variance
    double var_h = 1.0;       ///< secondary-to-primary channel variance
    double rate_p = 1.0;      ///< bits/s/Hz

    void validate() const;

    double gamma_th() const;
    /// Mean of the exponential signal term X1.
    double mean_signal() const;
    /// Mean of the exponential interference term X2.
    double mean_interference() const;
};

/// SINR P_{-k}|g|^2 / (N_p + |beta|^2 P0 |h|^2).
double sinr(double signal_gain_sq, double interference_gain_sq, const OutageScenario &sc);

/// 1 - m1 / (m1 + gamma_th m2) * exp(-gamma_th / m1).
double analytic_outage(const OutageScenario &sc);

/// The printed closed form: 1 - m1 / (m1 + m2) * exp(-N_p gamma_th / m1).
double paper_verbatim_outage(const OutageScenario &sc);

struct OutageEstimate {
    std::uint64_t outages = 0;
    std::uint64_t trials = 0;
    double probability = 0.0;
    Interval ci;
    double standard_error = 0.0;
};

/// Counts X1 / (1 + X2) < gamma_th with X1, X2 exponential.
OutageEstimate mc_outage(const OutageScenario &sc, std::uint64_t trials, const SeedSpec &seed,
                         const RunOptions &options = {});

/// Same event computed from sample-level channel draws through primary_rx.
OutageEstimate mc_outage_sample_level(const OutageScenario &sc, std::uint64_t trials,
                                      const SeedSpec &seed, const RunOptions &options = {});

} // namespace iqsense
