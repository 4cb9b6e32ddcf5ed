#pragma once

// Frequency-domain baseband model of a mirrored subcarrier pair (k, -k)
// under transmitter and receiver I/Q imbalance, Rayleigh fading and AWGN.

#include <complex>
#include <random>
#include <vector>

namespace iqsense {

using Complex = std::complex<double>;
using RandomStream = std::mt19937_64;

/// Amplitude (epsilon) and phase (theta, radians) mismatch of one I/Q front end.
class IqMismatch {
public:
    IqMismatch() = default;
    IqMismatch(double epsilon, double theta);

    static IqMismatch ideal() { return {}; }

    double epsilon() const noexcept { return epsilon_; }
    double theta() const noexcept { return theta_; }
    bool is_ideal() const noexcept { return epsilon_ == 0.0 && theta_ == 0.0; }

    friend bool operator==(const IqMismatch &, const IqMismatch &) = default;

private:
    double epsilon_ = 0.0;
    double theta_ = 0.0;
};

/// Direct (alpha) and image (beta) gains of an imbalanced front end.
struct MismatchCoefficients {
    Complex alpha{1.0, 0.0};
    Complex beta{0.0, 0.0};
};

MismatchCoefficients mismatch_coefficients(const IqMismatch &m);

/// |beta|^2 / |alpha|^2 as a linear ratio.
double image_rejection_ratio(const MismatchCoefficients &c);

double to_db(double linear);
double from_db(double db);

/// Canonical mismatch (theta = 0) with the requested IRR. -inf maps to ideal.
IqMismatch irr_to_mismatch(double irr_db);

struct SubcarrierPairConfig {
    double power_k = 1.0;
    double power_mk = 1.0;
    int psk_order = 16;
    double channel_var = 1.0;
    double channel_var_mirror = 1.0;
    double noise_var = 1.0;

    /// Throws std::invalid_argument on any violated invariant.
    void validate() const;

    /// The same pair seen from subcarrier -k.
    SubcarrierPairConfig mirrored() const;
};

Complex psk_symbol(int index, int order);

/// Precomputed M-PSK alphabet for the trial loops.
class PskAlphabet {
public:
    explicit PskAlphabet(int order);

    int order() const noexcept { return static_cast<int>(symbols_.size()); }
    const Complex &operator[](int index) const { return symbols_[static_cast<std::size_t>(index)]; }

    Complex draw(RandomStream &rng) const { return symbols_[pick_(rng)]; }

private:
    std::vector<Complex> symbols_;
    mutable std::uniform_int_distribution<std::size_t> pick_;
};

Complex transmit(Complex s_k, Complex s_mk, const SubcarrierPairConfig &cfg,
                 const MismatchCoefficients &tx);

/// y_k at an ideal secondary receiver.
Complex receive(Complex s_k, Complex s_mk, Complex h_k, Complex noise,
                const SubcarrierPairConfig &cfg, const MismatchCoefficients &tx);

/// r_k = alpha_R y_k + beta_R conj(y_{-k}).
Complex receive_joint(Complex y_k, Complex y_mk, const MismatchCoefficients &rx);

/// Primary receiver sample on -k with image leakage from a secondary
/// transmitter using subcarrier k.
Complex primary_rx(Complex s_mk, Complex g_mk, Complex s_sk, Complex h_mk, Complex noise,
                   double p_mk, double p0, const MismatchCoefficients &sec_tx);

/// Circularly symmetric complex Gaussian with E|z|^2 = variance.
class ComplexGaussian {
public:
    explicit ComplexGaussian(double variance);

    double variance() const noexcept { return variance_; }

    Complex operator()(RandomStream &rng) {
        const double re = normal_(rng);
        const double im = normal_(rng);
        return {re, im};
    }

private:
    double variance_;
    std::normal_distribution<double> normal_;
};

Complex draw_rayleigh(double channel_var, RandomStream &rng);
Complex draw_noise(double noise_var, RandomStream &rng);

} // namespace iqsense
