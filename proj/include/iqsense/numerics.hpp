#pragma once

// Gamma-law primitives for the periodogram statistic. Shapes are integers
// (packet counts), so everything here reduces to Erlang/Poisson sums.

#include <cstdint>

namespace iqsense {

/// Integer Gamma shape, i.e. the number of averaged packets.
class GammaShape {
public:
    explicit GammaShape(std::int64_t n);

    std::int64_t value() const noexcept { return n_; }

    friend bool operator==(GammaShape, GammaShape) = default;

private:
    std::int64_t n_;
};

/// Positive, finite Gamma scale in units of the detector statistic.
class GammaScale {
public:
    explicit GammaScale(double scale);

    double value() const noexcept { return scale_; }

private:
    double scale_;
};

/// x^a e^{-x} / a! for integer a >= 0, evaluated without forming the
/// power or the factorial. Underflows to 0.
double poisson_term(std::int64_t a, double x);

/// Q(n, x) = Gamma(n, x) / Gamma(n) = e^{-x} sum_{m<n} x^m / m!.
double regularized_upper_gamma(GammaShape shape, double x);

/// P(n, x) = 1 - Q(n, x), computed directly where it is the small side.
double regularized_lower_gamma(GammaShape shape, double x);

double gamma_pdf(GammaShape shape, GammaScale scale, double z);

/// P(Z > threshold); thresholds at or below zero give 1.
double gamma_sf(GammaShape shape, GammaScale scale, double threshold);

double gamma_cdf(GammaShape shape, GammaScale scale, double z);

/// Smallest t >= 0 with gamma_sf(shape, scale, t) == p, for p in (0, 1].
double gamma_sf_inverse(GammaShape shape, GammaScale scale, double p);

} // namespace iqsense
