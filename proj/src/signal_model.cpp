#include "iqsense/signal_model.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace iqsense {

IqMismatch::IqMismatch(double epsilon, double theta) : epsilon_(epsilon), theta_(theta) {
    if (!(std::abs(epsilon) < 1.0)) {
        throw std::invalid_argument("amplitude mismatch must satisfy |epsilon| < 1, got " +
                                    std::to_string(epsilon));
    }
    if (!(std::abs(theta) < std::numbers::pi / 2)) {
        throw std::invalid_argument("phase mismatch must satisfy |theta| < pi/2, got " +
                                    std::to_string(theta));
    }
}

MismatchCoefficients mismatch_coefficients(const IqMismatch &m) {
    const double c = std::cos(m.theta());
    const double s = std::sin(m.theta());
    return {{c, m.epsilon() * s}, {m.epsilon() * c, -s}};
}

double image_rejection_ratio(const MismatchCoefficients &c) {
    const double direct = std::norm(c.alpha);
    if (direct == 0.0) {
        throw std::domain_error("degenerate mismatch: alpha = 0");
    }
    return std::norm(c.beta) / direct;
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

double from_db(double db) { return std::pow(10.0, db / 10.0); }

IqMismatch irr_to_mismatch(double irr_db) {
    if (irr_db == -std::numeric_limits<double>::infinity()) {
        return IqMismatch::ideal();
    }
    if (!(irr_db < 0.0)) {
        throw std::domain_error("IRR must be negative in dB, got " + std::to_string(irr_db));
    }
    return {std::pow(10.0, irr_db / 20.0), 0.0};
}

void SubcarrierPairConfig::validate() const {
    if (!(power_k >= 0.0) || !(power_mk >= 0.0) || !std::isfinite(power_k) ||
        !std::isfinite(power_mk)) {
        throw std::invalid_argument("subcarrier powers must be finite and >= 0");
    }
    if (psk_order < 2 || !std::has_single_bit(static_cast<unsigned>(psk_order))) {
        throw std::invalid_argument("PSK order must be a power of two >= 2, got " +
                                    std::to_string(psk_order));
    }
    for (double v : {channel_var, channel_var_mirror, noise_var}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("channel and noise variances must be positive");
        }
    }
}

SubcarrierPairConfig SubcarrierPairConfig::mirrored() const {
    SubcarrierPairConfig m = *this;
    std::swap(m.power_k, m.power_mk);
    std::swap(m.channel_var, m.channel_var_mirror);
    return m;
}

Complex psk_symbol(int index, int order) {
    if (order < 2) {
        throw std::invalid_argument("PSK order must be >= 2");
    }
    if (index < 0 || index >= order) {
        throw std::out_of_range("PSK index " + std::to_string(index) + " outside [0, " +
                                std::to_string(order) + ")");
    }
    // Quarter turns are exact.
    if ((4 * index) % order == 0) {
        static constexpr Complex quarter[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        return quarter[(4 * index) / order];
    }
    return std::polar(1.0, 2.0 * std::numbers::pi * index / order);
}

PskAlphabet::PskAlphabet(int order) : pick_(0, static_cast<std::size_t>(order) - 1) {
    if (order < 2) {
        throw std::invalid_argument("PSK order must be >= 2");
    }
    symbols_.reserve(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) {
        symbols_.push_back(psk_symbol(i, order));
    }
}

Complex transmit(Complex s_k, Complex s_mk, const SubcarrierPairConfig &cfg,
                 const MismatchCoefficients &tx) {
    return tx.alpha * std::sqrt(cfg.power_k) * s_k +
           tx.beta * std::sqrt(cfg.power_mk) * std::conj(s_mk);
}

Complex receive(Complex s_k, Complex s_mk, Complex h_k, Complex noise,
                const SubcarrierPairConfig &cfg, const MismatchCoefficients &tx) {
    return h_k * transmit(s_k, s_mk, cfg, tx) + noise;
}

Complex receive_joint(Complex y_k, Complex y_mk, const MismatchCoefficients &rx) {
    return rx.alpha * y_k + rx.beta * std::conj(y_mk);
}

Complex primary_rx(Complex s_mk, Complex g_mk, Complex s_sk, Complex h_mk, Complex noise,
                   double p_mk, double p0, const MismatchCoefficients &sec_tx) {
    if (!(p_mk >= 0.0) || !(p0 >= 0.0)) {
        throw std::invalid_argument("primary_rx: powers must be >= 0");
    }
    return std::sqrt(p_mk) * s_mk * g_mk + sec_tx.beta * std::sqrt(p0) * std::conj(s_sk) * h_mk +
           noise;
}

ComplexGaussian::ComplexGaussian(double variance)
    : variance_(variance), normal_(0.0, std::sqrt(variance / 2.0)) {
    if (!(variance > 0.0) || !std::isfinite(variance)) {
        throw std::invalid_argument("complex Gaussian variance must be positive, got " +
                                    std::to_string(variance));
    }
}

Complex draw_rayleigh(double channel_var, RandomStream &rng) {
    return ComplexGaussian(channel_var)(rng);
}

Complex draw_noise(double noise_var, RandomStream &rng) {
    return ComplexGaussian(noise_var)(rng);
}

} // namespace iqsense
