#include "iqsense/detection.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace iqsense {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double tail(const HypothesisVariances &v, Hypothesis truth, GammaShape shape, double threshold) {
    return gamma_sf(shape, scale_of(v[truth], shape), threshold);
}

} // namespace

std::string_view name(Hypothesis h) {
    static constexpr std::string_view names[] = {"H0", "H1", "H2", "H3"};
    return names[index_of(h)];
}

std::string_view description(Hypothesis h) {
    static constexpr std::string_view text[] = {
        "Only Noise", "I/Q Imbalance+Noise", "Primary user signal+Noise",
        "Primary user signal+I/Q Imbalance+Noise"};
    return text[index_of(h)];
}

HypothesisVariances::HypothesisVariances(double s0, double s1, double s2, double s3)
    : values_{s0, s1, s2, s3} {
    for (double v : values_) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("hypothesis variances must be positive and finite");
        }
    }
}

bool HypothesisVariances::is_ordered(double merge_tol) const {
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
        if (values_[i + 1] < values_[i] &&
            !nearly_equal_variances(values_[i], values_[i + 1], merge_tol)) {
            return false;
        }
    }
    return true;
}

HypothesisVariances HypothesisVariances::scaled(double c) const {
    return {c * values_[0], c * values_[1], c * values_[2], c * values_[3]};
}

HypothesisVariances hypothesis_variances(const SubcarrierPairConfig &cfg,
                                         const MismatchCoefficients &tx, const SymbolMode &mode) {
    cfg.validate();
    const double sigma0 = 0.5 * cfg.noise_var;
    const double direct = std::norm(tx.alpha) * cfg.power_k * cfg.channel_var;
    const double image = std::norm(tx.beta) * cfg.power_mk * cfg.channel_var;

    if (std::holds_alternative<AveragedSymbols>(mode)) {
        // Unit-modulus symbols; the cross term vanishes in expectation.
        const double sigma1 = 0.5 * image + sigma0;
        const double sigma2 = 0.5 * direct + sigma0;
        return {sigma0, sigma1, sigma2, sigma2 + sigma1 - sigma0};
    }

    const auto &sym = std::get<ConditionedSymbols>(mode);
    const double sk2 = std::norm(sym.s_k);
    const double smk2 = std::norm(sym.s_mk);
    const double sigma1 = 0.5 * image * smk2 + sigma0;
    const double sigma2 = 0.5 * direct * sk2 + sigma0;
    // |a + b|^2 with a = alpha sqrt(Pk) s_k, b = beta sqrt(P-k) conj(s_-k).
    const double cross = 2.0 *
                         std::real(tx.alpha * std::conj(tx.beta) *
                                   std::sqrt(cfg.power_k * cfg.power_mk) * sym.s_k * sym.s_mk) *
                         cfg.channel_var;
    return {sigma0, sigma1, sigma2, 0.5 * (direct * sk2 + cross) + sigma1};
}

double periodogram(std::span<const Complex> samples, GammaShape n) {
    if (samples.size() != static_cast<std::size_t>(n.value())) {
        throw std::invalid_argument("periodogram: expected " + std::to_string(n.value()) +
                                    " samples, got " + std::to_string(samples.size()));
    }
    double energy = 0.0;
    for (const Complex &y : samples) {
        energy += std::norm(y);
    }
    return energy / static_cast<double>(n.value());
}

GammaScale scale_of(double variance, GammaShape shape) {
    return GammaScale(2.0 * variance / static_cast<double>(shape.value()));
}

bool nearly_equal_variances(double a, double b, double merge_tol) {
    return std::abs(a - b) < merge_tol * std::min(a, b);
}

std::optional<double> pairwise_threshold(double var_i, double var_j, double merge_tol) {
    if (!(var_i > 0.0) || !(var_j > 0.0)) {
        throw std::invalid_argument("pairwise_threshold: variances must be positive");
    }
    if (nearly_equal_variances(var_i, var_j, merge_tol)) {
        return std::nullopt;
    }
    const double hi = std::max(var_i, var_j);
    const double lo = std::min(var_i, var_j);
    // 2 ln(hi/lo) / (1/lo - 1/hi) = 2 hi log1p(r) / r with r = (hi - lo) / lo
    const double r = (hi - lo) / lo;
    return 2.0 * hi * std::log1p(r) / r;
}

DetectorMode DetectorMode::two_level_cfar(double target_pfa) {
    if (!(target_pfa > 0.0) || target_pfa > 1.0) {
        throw std::invalid_argument("CFAR target false-alarm probability must be in (0, 1]");
    }
    return DetectorMode(Kind::TwoLevelCfar, target_pfa);
}

std::string_view DetectorMode::tag() const {
    switch (kind_) {
    case Kind::FourLevel:
        return "four";
    case Kind::TwoLevelBayes:
        return "two-bayes";
    case Kind::TwoLevelCfar:
        return "two-cfar";
    }
    return "?";
}

DecisionRule::DecisionRule(std::array<double, 3> thresholds, std::array<bool, 3> merged,
                           GammaShape shape)
    : thresholds_(thresholds), merged_(merged), shape_(shape) {
    if (!(thresholds_[0] >= 0.0) || !(thresholds_[0] <= thresholds_[1]) ||
        !(thresholds_[1] <= thresholds_[2])) {
        throw std::invalid_argument("decision thresholds must satisfy 0 <= s01 <= s12 <= s23");
    }
}

std::pair<double, double> DecisionRule::region(Hypothesis h) const {
    switch (h) {
    case Hypothesis::H0:
        return {0.0, thresholds_[0]};
    case Hypothesis::H1:
        return {thresholds_[0], thresholds_[1]};
    case Hypothesis::H2:
        return {thresholds_[1], thresholds_[2]};
    case Hypothesis::H3:
        return {thresholds_[2], kInf};
    }
    return {0.0, 0.0};
}

DecisionRule decision_rule(const HypothesisVariances &v, GammaShape shape, double merge_tol) {
    if (!v.is_ordered(merge_tol)) {
        throw std::invalid_argument(
            "decision_rule: hypothesis variances must be nondecreasing H0..H3");
    }
    std::array<bool, 3> merged{};
    for (std::size_t i = 0; i < 3; ++i) {
        merged[i] = nearly_equal_variances(v[i], v[i + 1], merge_tol);
    }

    // A merged pair gets an empty upper region by inheriting the next
    // boundary up.
    std::array<double, 3> s{};
    double next = kInf;
    for (std::size_t i = 3; i-- > 0;) {
        s[i] = merged[i] ? next : *pairwise_threshold(v[i], v[i + 1], merge_tol);
        next = s[i];
    }

    if (!merged[0] && !merged[1] && !merged[2]) {
        auto t = [&](std::size_t i, std::size_t j) { return *pairwise_threshold(v[i], v[j], merge_tol); };
        const bool chains = t(0, 1) < t(0, 2) && t(0, 2) < t(0, 3) && t(0, 2) < t(1, 2) &&
                            t(1, 2) < t(1, 3) && t(0, 3) < t(1, 3) && t(1, 3) < t(2, 3);
        if (!chains) {
            throw std::logic_error("decision_rule: pairwise threshold chains out of order");
        }
    }
    return DecisionRule(s, merged, shape);
}

Hypothesis classify(double z, const DecisionRule &rule) {
    if (!(z >= 0.0)) {
        throw std::domain_error("classify: statistic must be >= 0");
    }
    return rule.classify(z);
}

bool busy_decision(Hypothesis h, const DetectorMode & /*mode*/) {
    // Two-level rules only ever emit H0 (idle) or H2 (busy), so one
    // predicate serves every mode.
    return carries_k(h);
}

DecisionRule two_level_rule(const HypothesisVariances &v, GammaShape shape,
                            const DetectorMode &mode) {
    double t = kInf;
    switch (mode.kind()) {
    case DetectorMode::Kind::FourLevel:
        throw std::invalid_argument("two_level_rule: four-level mode has no binary rule");
    case DetectorMode::Kind::TwoLevelBayes:
        t = pairwise_threshold(v[Hypothesis::H2], v[Hypothesis::H0]).value_or(kInf);
        break;
    case DetectorMode::Kind::TwoLevelCfar:
        t = gamma_sf_inverse(shape, scale_of(v[Hypothesis::H0], shape), mode.target_pfa());
        break;
    }
    return DecisionRule({t, t, kInf}, {true, false, true}, shape);
}

DecisionRule make_rule(const HypothesisVariances &v, GammaShape shape, const DetectorMode &mode,
                       double merge_tol) {
    if (mode.kind() == DetectorMode::Kind::FourLevel) {
        return decision_rule(v, shape, merge_tol);
    }
    return two_level_rule(v, shape, mode);
}

double conditional_probability(const HypothesisVariances &v, const DecisionRule &rule,
                               Hypothesis truth, Hypothesis decided) {
    const auto [lo, hi] = rule.region(decided);
    if (!(lo < hi)) {
        return 0.0;
    }
    return tail(v, truth, rule.shape(), lo) - tail(v, truth, rule.shape(), hi);
}

ProbabilityMatrix conditional_matrix(const HypothesisVariances &v, const DecisionRule &rule) {
    ProbabilityMatrix m{};
    for (Hypothesis truth : kHypotheses) {
        for (Hypothesis decided : kHypotheses) {
            m[index_of(truth)][index_of(decided)] =
                conditional_probability(v, rule, truth, decided);
        }
    }
    return m;
}

double analytic_false_alarm(const HypothesisVariances &v, const DecisionRule &rule,
                            MetricConvention convention) {
    const GammaShape n = rule.shape();
    const double busy0 = tail(v, Hypothesis::H0, n, rule.s12());
    const double busy1 = tail(v, Hypothesis::H1, n, rule.s12());
    return convention == MetricConvention::PaperSum ? busy1 + busy0 : 0.5 * (busy0 + busy1);
}

double analytic_false_alarm_long_form(const HypothesisVariances &v, const DecisionRule &rule) {
    const GammaShape n = rule.shape();
    auto q = [&](Hypothesis h, double s) { return tail(v, h, n, s); };
    using enum Hypothesis;
    return (q(H1, rule.s12()) - q(H1, rule.s23())) + (q(H0, rule.s12()) - q(H0, rule.s23())) +
           q(H1, rule.s23()) + q(H0, rule.s23());
}

double analytic_detection(const HypothesisVariances &v, const DecisionRule &rule,
                          MetricConvention convention) {
    const GammaShape n = rule.shape();
    auto q = [&](Hypothesis h, double s) { return tail(v, h, n, s); };
    using enum Hypothesis;
    if (convention == MetricConvention::PaperSum) {
        return q(H2, rule.s12()) - q(H2, rule.s23()) + q(H3, rule.s23());
    }
    return 0.5 * (q(H2, rule.s12()) + q(H3, rule.s12()));
}

std::optional<double> paper_verbatim_threshold(double var_i, double var_j, GammaShape shape,
                                               double merge_tol) {
    if (nearly_equal_variances(var_i, var_j, merge_tol)) {
        return std::nullopt;
    }
    const auto n = static_cast<double>(shape.value());
    return n * n * std::log(var_i / var_j) / (1.0 / var_j - 1.0 / var_i);
}

std::optional<PaperVerbatim> paper_verbatim(const HypothesisVariances &v, GammaShape shape,
                                            double merge_tol) {
    std::array<double, 3> s{};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto t = paper_verbatim_threshold(v[i], v[i + 1], shape, merge_tol);
        if (!t) {
            return std::nullopt;
        }
        s[i] = *t;
    }
    const auto n = static_cast<double>(shape.value());
    auto q = [&](std::size_t i, double threshold) {
        return regularized_upper_gamma(shape, threshold / (n * v[i]));
    };
    PaperVerbatim out{s, 0.0, 0.0};
    out.false_alarm = q(1, s[1]) + q(0, s[1]);
    out.detection = q(2, s[1]) - q(2, s[2]) + q(3, s[2]);
    return out;
}

} // namespace iqsense
