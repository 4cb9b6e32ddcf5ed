#pragma once

// JSON experiment configuration. Every object rejects unknown keys; errors
// carry the JSON path and the source line of the offending entry.

#include "iqsense/montecarlo.hpp"
#include "iqsense/outage.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace iqsense {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string &what, int line = 0) : std::runtime_error(what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// How a mismatch was written in the config; kept so that serialization
/// reproduces the input form.
struct MismatchSpec {
    struct Ideal {
        friend bool operator==(const Ideal &, const Ideal &) = default;
    };
    struct Irr {
        double db;
        friend bool operator==(const Irr &, const Irr &) = default;
    };
    struct Explicit {
        double epsilon;
        double theta;
        friend bool operator==(const Explicit &, const Explicit &) = default;
    };
    std::variant<Ideal, Irr, Explicit> form = Ideal{};

    IqMismatch resolve() const;
    friend bool operator==(const MismatchSpec &, const MismatchSpec &) = default;
};

struct SweepConfig {
    SweepAxis axis = SweepAxis::IrrDb;
    std::vector<double> grid;
    std::vector<DetectorMode> modes{DetectorMode::four_level()};
    bool rx_follows_tx = false;
    std::optional<double> lock_delta_snr_db;

    friend bool operator==(const SweepConfig &, const SweepConfig &) = default;
};

struct OutageConfig {
    double p_mk = 10.0;
    double p0 = 10.0;
    double noise_p = 1.0;
    double var_g = 1.0;
    double var_h = 1.0;
    double rate_p = 1.0;
    MismatchSpec sec_mismatch{MismatchSpec::Irr{-15.0}};
    std::vector<double> irr_grid;

    OutageScenario scenario() const;
    OutageScenario scenario_at_irr(double irr_db) const;
    friend bool operator==(const OutageConfig &, const OutageConfig &) = default;
};

struct FrameConfig {
    int subcarriers = 512;
    int users = 4;
    double snr_db = 20.0;
    /// "random", "all-idle", "all-busy", "fig2" or "list" (uses `active`)
    std::string pattern = "random";
    double activity = 0.5;
    std::vector<int> active;

    friend bool operator==(const FrameConfig &, const FrameConfig &) = default;
};

struct FigureConfig {
    std::vector<double> irr_grid;
    std::vector<double> snr1_grid;
    std::vector<double> delta_snr_db;

    friend bool operator==(const FigureConfig &, const FigureConfig &) = default;
};

enum class OutputFormat { Csv, Json };

struct ExperimentConfig {
    int psk_order = 16;
    double noise_var = 1.0;
    double channel_var = 1.0;
    double channel_var_mirror = 1.0;
    double snr1_db = 0.0;
    double snr2_db = -10.0;
    std::int64_t n_packets = 1;
    MismatchSpec tx_mismatch{MismatchSpec::Irr{-15.0}};
    std::optional<MismatchSpec> rx_mismatch;
    DetectorMode mode = DetectorMode::four_level();
    /// Target false-alarm probability of every two-cfar detector in the run.
    double cfar_pfa = 0.1;
    double merge_tol = kDefaultMergeTolerance;
    bool block_fading = false;

    std::uint64_t trials = 1'000'000;
    std::uint64_t seed = 1;
    std::uint64_t variance_samples = 1'000'000;

    std::optional<SweepConfig> sweep;
    std::optional<OutageConfig> outage;
    std::optional<FrameConfig> frame;
    std::optional<FigureConfig> figure;

    std::optional<std::string> output_path;
    OutputFormat output_format = OutputFormat::Csv;

    SensingScenario scenario() const;

    friend bool operator==(const ExperimentConfig &, const ExperimentConfig &) = default;
};

DetectorMode parse_mode(const std::string &tag, double cfar_pfa = 0.1);

ExperimentConfig parse_config(const std::string &text);
ExperimentConfig load_config(const std::string &path);

nlohmann::ordered_json to_json(const ExperimentConfig &cfg);
std::string serialize_config(const ExperimentConfig &cfg);

/// FNV-1a 64-bit hash of the canonical serialization, as 16 hex digits.
std::string config_hash(const ExperimentConfig &cfg);

} // namespace iqsense
