#pragma once

// Experiment front ends behind the command-line tool. Each command turns a
// validated configuration into a Report; rendering and file handling are
// left to the caller.

#include "iqsense/config.hpp"
#include "iqsense/csv.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace iqsense {

/// Ground truth of a K-subcarrier frame on indices [-K/2, K/2] without DC.
class OccupancyMap {
public:
    explicit OccupancyMap(int subcarriers);

    int subcarriers() const noexcept { return k_; }
    /// Throws std::out_of_range for 0 or |k| > K/2.
    bool active(int k) const;
    void set(int k, bool on);

    /// Truth on subcarrier k given activity on k and -k.
    Hypothesis truth(int k) const;

    /// All indices in ascending order, DC excluded.
    std::vector<int> indices() const;

    /// Users own contiguous blocks of K/U subcarriers in index order.
    int user_of(int k, int users) const;

    static OccupancyMap from_config(const FrameConfig &frame, RandomStream &rng);

private:
    std::size_t slot(int k) const;

    int k_;
    std::vector<bool> active_;
};

struct CommandOptions {
    RunOptions run;
    bool verify = false;
};

/// Closed-form variances, thresholds and error probabilities.
Report cmd_analytic(const ExperimentConfig &cfg);

/// One Monte Carlo point with analytic columns and an optional closure check.
Report cmd_sense(const ExperimentConfig &cfg, const CommandOptions &opts);

/// The configured sweep.
Report cmd_sweep(const ExperimentConfig &cfg, const CommandOptions &opts);

/// Data behind figure 3, 4, 5 or 6; throws std::invalid_argument otherwise.
Report cmd_figure(const ExperimentConfig &cfg, int id, const CommandOptions &opts);

/// One simulated frame, detected subcarrier by subcarrier.
Report cmd_frame(const ExperimentConfig &cfg, const CommandOptions &opts);

/// Outage of the primary link under secondary image leakage.
Report cmd_outage(const ExperimentConfig &cfg, const CommandOptions &opts);

void write_report(std::ostream &out, const Report &report, OutputFormat format);

/// Default figure grids.
std::vector<double> default_irr_grid();
std::vector<double> default_snr1_grid();
std::vector<double> default_delta_snr_grid();

} // namespace iqsense
