#include "iqsense/numerics.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace iqsense {

namespace {

constexpr double kSumEpsilon = 1e-17;

// lgamma(a + 1) - [(a + 1/2) ln a - a + ln(2 pi) / 2]
double stirling_correction(double a) {
    if (a < 10.0) {
        double factorial = 1.0;
        for (int m = 2; m <= static_cast<int>(a); ++m) {
            factorial *= m;
        }
        return std::log(factorial) - (a + 0.5) * std::log(a) + a -
               0.5 * std::log(2.0 * std::numbers::pi);
    }
    const double inv = 1.0 / a;
    const double inv2 = inv * inv;
    return inv *
           (1.0 / 12.0 -
            inv2 * (1.0 / 360.0 -
                    inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
}

// lambda - 1 - ln(lambda), accurate near lambda = 1.
double log_deviation(double lambda) {
    if (lambda < 0.5) {
        return lambda - 1.0 - std::log(lambda);
    }
    const double d = lambda - 1.0;
    if (std::abs(d) >= 0.25) {
        return d - std::log1p(d);
    }
    // d^2/2 - d^3/3 + d^4/4 - ...
    double power = d * d;
    double sum = 0.0;
    for (int k = 2; k < 60; ++k) {
        const double term = power / k;
        sum += (k % 2 == 0) ? term : -term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) {
            break;
        }
        power *= d;
    }
    return sum;
}

void check_argument(double x) {
    if (!(x >= 0.0)) {
        throw std::domain_error("incomplete gamma: argument must be >= 0, got " +
                                std::to_string(x));
    }
}

// sum_{m >= n} x^m e^{-x} / m!, valid (geometric convergence) for x < n.
double lower_series(std::int64_t n, double x) {
    double term = poisson_term(n, x);
    double sum = term;
    for (std::int64_t j = n + 1; term > kSumEpsilon * sum; ++j) {
        term *= x / static_cast<double>(j);
        sum += term;
    }
    return sum;
}

// sum_{m < n} x^m e^{-x} / m!, summed from the top term down; for x >= n
// the terms decrease monotonically in that direction.
double upper_sum(std::int64_t n, double x) {
    double term = poisson_term(n - 1, x);
    double sum = term;
    for (std::int64_t m = n - 1; m >= 1 && term > kSumEpsilon * sum; --m) {
        term *= static_cast<double>(m) / x;
        sum += term;
    }
    return sum;
}

} // namespace

GammaShape::GammaShape(std::int64_t n) : n_(n) {
    if (n < 1) {
        throw std::domain_error("gamma shape must be >= 1, got " + std::to_string(n));
    }
}

GammaScale::GammaScale(double scale) : scale_(scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw std::domain_error("gamma scale must be positive and finite, got " +
                                std::to_string(scale));
    }
}

double poisson_term(std::int64_t a, double x) {
    check_argument(x);
    if (a < 0) {
        throw std::domain_error("poisson_term: negative order");
    }
    if (a == 0) {
        return std::exp(-x);
    }
    if (x == 0.0) {
        return 0.0;
    }
    if (std::isinf(x)) {
        return 0.0;
    }
    const auto order = static_cast<double>(a);
    const double exponent = -order * log_deviation(x / order) -
                            0.5 * std::log(2.0 * std::numbers::pi * order) -
                            stirling_correction(order);
    return std::exp(exponent);
}

double regularized_upper_gamma(GammaShape shape, double x) {
    check_argument(x);
    const std::int64_t n = shape.value();
    if (x == 0.0) {
        return 1.0;
    }
    if (n == 1) {
        return std::exp(-x);
    }
    if (x >= static_cast<double>(n)) {
        return upper_sum(n, x);
    }
    return 1.0 - lower_series(n, x);
}

double regularized_lower_gamma(GammaShape shape, double x) {
    check_argument(x);
    const std::int64_t n = shape.value();
    if (x == 0.0) {
        return 0.0;
    }
    if (n == 1) {
        return -std::expm1(-x);
    }
    if (x >= static_cast<double>(n)) {
        return 1.0 - upper_sum(n, x);
    }
    return lower_series(n, x);
}

double gamma_pdf(GammaShape shape, GammaScale scale, double z) {
    if (z < 0.0) {
        return 0.0;
    }
    return poisson_term(shape.value() - 1, z / scale.value()) / scale.value();
}

double gamma_sf(GammaShape shape, GammaScale scale, double threshold) {
    if (!(threshold > 0.0)) {
        if (std::isnan(threshold)) {
            throw std::domain_error("gamma_sf: NaN threshold");
        }
        return 1.0;
    }
    if (std::isinf(threshold)) {
        return 0.0;
    }
    return regularized_upper_gamma(shape, threshold / scale.value());
}

double gamma_cdf(GammaShape shape, GammaScale scale, double z) {
    if (!(z > 0.0)) {
        return 0.0;
    }
    if (std::isinf(z)) {
        return 1.0;
    }
    return regularized_lower_gamma(shape, z / scale.value());
}

double gamma_sf_inverse(GammaShape shape, GammaScale scale, double p) {
    if (!(p > 0.0) || p > 1.0) {
        throw std::domain_error("gamma_sf_inverse: probability must be in (0, 1]");
    }
    if (p == 1.0) {
        return 0.0;
    }
    double hi = static_cast<double>(shape.value());
    while (regularized_upper_gamma(shape, hi) > p) {
        hi *= 2.0;
    }
    auto residual = [&](double x) { return regularized_upper_gamma(shape, x) - p; };
    std::uintmax_t max_iter = 200;
    const auto [lo_x, hi_x] = boost::math::tools::toms748_solve(
        residual, 0.0, hi, 1.0 - p, residual(hi),
        boost::math::tools::eps_tolerance<double>(50), max_iter);
    return 0.5 * (lo_x + hi_x) * scale.value();
}

} // namespace iqsense
