#pragma once

// Periodogram statistic, four-level minimum-average-cost detector, two-level
// baselines and the closed-form error probabilities built from Gamma tails.
//
// Parameterization: Z | H_i ~ Gamma(N, 2 sigma_i^2 / N), so E[Z | H_i] =
// 2 sigma_i^2 for every N. Pairwise thresholds are the crossing points of
// these densities and do not depend on N. The literal textbook expressions
// (scale N sigma_i^2, N^2 in the threshold) are available separately as the
// "paper_verbatim_*" family for side-by-side reporting.

#include "iqsense/numerics.hpp"
#include "iqsense/signal_model.hpp"

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <variant>

namespace iqsense {

enum class Hypothesis : int {
    H0 = 0, ///< noise only
    H1 = 1, ///< image leakage + noise
    H2 = 2, ///< primary signal + noise
    H3 = 3, ///< primary signal + image leakage + noise
};

inline constexpr std::array<Hypothesis, 4> kHypotheses = {Hypothesis::H0, Hypothesis::H1,
                                                          Hypothesis::H2, Hypothesis::H3};

constexpr std::size_t index_of(Hypothesis h) { return static_cast<std::size_t>(h); }

std::string_view name(Hypothesis h);        // "H0"...
std::string_view description(Hypothesis h); // "Only Noise"...

/// Whether subcarrier k and its mirror -k carry primary data under h.
constexpr bool carries_k(Hypothesis h) { return h == Hypothesis::H2 || h == Hypothesis::H3; }
constexpr bool carries_mirror(Hypothesis h) { return h == Hypothesis::H1 || h == Hypothesis::H3; }

inline constexpr double kDefaultMergeTolerance = 1e-9;

/// Per-component (real or imaginary) variance of y_k under H0..H3.
class HypothesisVariances {
public:
    HypothesisVariances(double s0, double s1, double s2, double s3);

    double operator[](std::size_t i) const { return values_[i]; }
    double operator[](Hypothesis h) const { return values_[index_of(h)]; }
    const std::array<double, 4> &values() const noexcept { return values_; }

    /// Nondecreasing up to the relative merge tolerance.
    bool is_ordered(double merge_tol = kDefaultMergeTolerance) const;

    HypothesisVariances scaled(double c) const;

private:
    std::array<double, 4> values_;
};

struct AveragedSymbols {};
struct ConditionedSymbols {
    Complex s_k;
    Complex s_mk;
};
using SymbolMode = std::variant<AveragedSymbols, ConditionedSymbols>;

HypothesisVariances hypothesis_variances(const SubcarrierPairConfig &cfg,
                                         const MismatchCoefficients &tx,
                                         const SymbolMode &mode = AveragedSymbols{});

double periodogram(std::span<const Complex> samples, GammaShape n);

/// Gamma scale 2 sigma^2 / N of the statistic under a hypothesis.
GammaScale scale_of(double variance, GammaShape shape);

bool nearly_equal_variances(double a, double b, double merge_tol);

/// Crossing point of the two conditional densities of Z. Empty when the
/// variances coincide within merge_tol.
std::optional<double> pairwise_threshold(double var_i, double var_j,
                                         double merge_tol = kDefaultMergeTolerance);

class DetectorMode {
public:
    enum class Kind { FourLevel, TwoLevelBayes, TwoLevelCfar };

    static DetectorMode four_level() { return DetectorMode(Kind::FourLevel, 0.0); }
    static DetectorMode two_level_bayes() { return DetectorMode(Kind::TwoLevelBayes, 0.0); }
    static DetectorMode two_level_cfar(double target_pfa);

    Kind kind() const noexcept { return kind_; }
    double target_pfa() const noexcept { return target_pfa_; }
    bool is_two_level() const noexcept { return kind_ != Kind::FourLevel; }

    /// "four", "two-bayes", "two-cfar"
    std::string_view tag() const;

    friend bool operator==(const DetectorMode &, const DetectorMode &) = default;

private:
    DetectorMode(Kind kind, double pfa) : kind_(kind), target_pfa_(pfa) {}

    Kind kind_;
    double target_pfa_;
};

/// Ordered region boundaries s01 <= s12 <= s23 on the statistic axis.
///
/// Regions are half-open, [s_i, s_{i+1}), so a boundary value belongs to the
/// higher hypothesis. A merged adjacent pair (i, i+1) has an empty region for
/// H_{i+1}, so its values map to the lower index; a merged top pair has
/// s23 = +inf. Two-level rules are the special case s01 = s12 = t, s23 = inf.
class DecisionRule {
public:
    DecisionRule(std::array<double, 3> thresholds, std::array<bool, 3> merged, GammaShape shape);

    double s01() const noexcept { return thresholds_[0]; }
    double s12() const noexcept { return thresholds_[1]; }
    double s23() const noexcept { return thresholds_[2]; }
    const std::array<double, 3> &thresholds() const noexcept { return thresholds_; }

    /// merged()[i] is set when H_i and H_{i+1} were collapsed.
    const std::array<bool, 3> &merged() const noexcept { return merged_; }
    bool any_merged() const noexcept { return merged_[0] || merged_[1] || merged_[2]; }
    GammaShape shape() const noexcept { return shape_; }

    /// Lower and upper boundary of the region assigned to h.
    std::pair<double, double> region(Hypothesis h) const;

    Hypothesis classify(double z) const {
        if (z < thresholds_[0]) {
            return Hypothesis::H0;
        }
        if (z < thresholds_[1]) {
            return Hypothesis::H1;
        }
        if (z < thresholds_[2]) {
            return Hypothesis::H2;
        }
        return Hypothesis::H3;
    }

private:
    std::array<double, 3> thresholds_;
    std::array<bool, 3> merged_;
    GammaShape shape_;
};

DecisionRule decision_rule(const HypothesisVariances &v, GammaShape shape,
                           double merge_tol = kDefaultMergeTolerance);

Hypothesis classify(double z, const DecisionRule &rule);

/// Busy iff the decided state carries primary data on k.
bool busy_decision(Hypothesis h, const DetectorMode &mode);

DecisionRule two_level_rule(const HypothesisVariances &v, GammaShape shape,
                            const DetectorMode &mode);

/// decision_rule or two_level_rule depending on mode.
DecisionRule make_rule(const HypothesisVariances &v, GammaShape shape, const DetectorMode &mode,
                       double merge_tol = kDefaultMergeTolerance);

enum class MetricConvention { PaperSum, PriorWeighted };

/// P(decide `decided` | truth `truth`) from Gamma tail differences.
double conditional_probability(const HypothesisVariances &v, const DecisionRule &rule,
                               Hypothesis truth, Hypothesis decided);

/// [truth][decided]
using ProbabilityMatrix = std::array<std::array<double, 4>, 4>;
ProbabilityMatrix conditional_matrix(const HypothesisVariances &v, const DecisionRule &rule);

/// PaperSum: P(H2|H1) + P(H2|H0) + P(H3|H1) + P(H3|H0) in its two-term
/// telescoped form. PriorWeighted: (P(busy|H0) + P(busy|H1)) / 2.
double analytic_false_alarm(const HypothesisVariances &v, const DecisionRule &rule,
                            MetricConvention convention);

/// The four-term form of the PaperSum false-alarm sum, before telescoping.
double analytic_false_alarm_long_form(const HypothesisVariances &v, const DecisionRule &rule);

/// PaperSum: P(H2|H2) + P(H3|H3). PriorWeighted: (P(busy|H2) + P(busy|H3)) / 2.
double analytic_detection(const HypothesisVariances &v, const DecisionRule &rule,
                          MetricConvention convention);

/// Literal textbook forms: threshold N^2 ln(vi/vj) / (1/vj - 1/vi) and
/// tails Q(N, S / (N sigma^2)). Thresholds are in different units from Z.
struct PaperVerbatim {
    std::array<double, 3> thresholds;
    double false_alarm;
    double detection;
};

std::optional<double> paper_verbatim_threshold(double var_i, double var_j, GammaShape shape,
                                               double merge_tol = kDefaultMergeTolerance);

/// Empty when any adjacent pair is degenerate.
std::optional<PaperVerbatim> paper_verbatim(const HypothesisVariances &v, GammaShape shape,
                                            double merge_tol = kDefaultMergeTolerance);

} // namespace iqsense
