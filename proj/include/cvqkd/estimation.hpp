#ifndef CVQKD_ESTIMATION_HPP
#define CVQKD_ESTIMATION_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <span>

#include "cvqkd/errors.hpp"

namespace cvqkd {

using Cplx = std::complex<double>;

/// Asymptotic (point) estimates from aligned symbol pairs.
struct PointEstimates {
    double t_hat = 0.0;         ///< regression slope, t = sqrt(eta*T/2)
    double sigma2_hat = 0.0;    ///< residual variance per quadrature, SNU
    double xi_bq_hat = 0.0;     ///< excess noise per quadrature, unclamped
    double t_channel_hat = 0.0; ///< T = 2 t^2 / eta
    double v_b_hat = 0.0;       ///< Bob variance per quadrature, SNU
};

/// Finite-size worst-case bounds (confidence 1 - epsilon_pe).
struct WorstCaseEstimates {
    double t_min = 0.0;
    double sigma2_max = 0.0;
    double xi_bq_fs = 0.0;
    double t_channel_min = 0.0;
    double z_eps = 0.0;
    double delta_sigma2 = 0.0;
    double delta_sigma2_0 = 0.0;
};

/// Least-squares slope and residual variance, both quadratures pooled.
///
/// t = sum(x*y) / sum(x^2); sigma^2 = (1/m) sum((y - t x)^2) with m the
/// pooled sample count. xi_bq is reported unclamped: on finite samples it
/// can be negative, and clamping would bias the consistency tests.
inline PointEstimates fit_point(std::span<const Cplx> alice,
                                std::span<const Cplx> bob,
                                double eta, double v_elec) {
    if (alice.size() != bob.size() || alice.size() < 2)
        throw ValidationError("fit_point: need >= 2 aligned pairs");
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < alice.size(); ++i) {
        sxx += alice[i].real() * alice[i].real() + alice[i].imag() * alice[i].imag();
        sxy += alice[i].real() * bob[i].real() + alice[i].imag() * bob[i].imag();
    }
    if (sxx == 0.0)
        throw ValidationError("fit_point: zero Alice variance");
    const double t = sxy / sxx;
    double sres = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < alice.size(); ++i) {
        const double rx = bob[i].real() - t * alice[i].real();
        const double rp = bob[i].imag() - t * alice[i].imag();
        sres += rx * rx + rp * rp;
        syy += bob[i].real() * bob[i].real() + bob[i].imag() * bob[i].imag();
    }
    const double m = 2.0 * static_cast<double>(alice.size());
    PointEstimates e;
    e.t_hat = t;
    e.sigma2_hat = sres / m;
    e.xi_bq_hat = e.sigma2_hat - v_elec - 1.0;
    e.t_channel_hat = 2.0 * t * t / eta;
    e.v_b_hat = syy / m;
    return e;
}

/// z = sqrt(2) erfinv(1 - epsilon), the two-sided confidence coefficient.
///
/// Solved as erfc(x) = epsilon by Newton on std::erfc, which converges to
/// machine precision in a handful of steps from the asymptotic guess.
inline double z_of_epsilon(double epsilon_pe) {
    if (!(epsilon_pe > 0.0 && epsilon_pe < 1.0))
        throw ValidationError("epsilon_pe out of (0,1)");
    double x = epsilon_pe < 0.5 ? std::sqrt(-std::log(epsilon_pe)) : 0.0;
    const double two_over_sqrt_pi = 2.0 / std::sqrt(std::numbers::pi);
    for (int i = 0; i < 60; ++i) {
        const double f = std::erfc(x) - epsilon_pe;
        const double d = -two_over_sqrt_pi * std::exp(-x * x);
        const double step = f / d;
        x -= step;
        if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    return std::numbers::sqrt2 * x;
}

/// Worst-case slope and residual variance at confidence 1 - epsilon_pe:
/// t_min = t - z sqrt(sigma^2/(m V_A)), sigma2_max = sigma^2 (1 + z sqrt(2/m)).
inline WorstCaseEstimates worst_case(const PointEstimates& point, double va,
                                     double m, double epsilon_pe) {
    if (!(m >= 1.0))
        throw ValidationError("worst_case: m must be >= 1");
    if (!(va > 0.0))
        throw ValidationError("worst_case: va must be > 0");
    WorstCaseEstimates w;
    w.z_eps = z_of_epsilon(epsilon_pe);
    const double dt = w.z_eps * std::sqrt(point.sigma2_hat / (m * va));
    w.delta_sigma2 = w.z_eps * point.sigma2_hat * std::numbers::sqrt2 / std::sqrt(m);
    w.t_min = point.t_hat - dt;
    w.sigma2_max = point.sigma2_hat + w.delta_sigma2;
    return w;
}

/// Calibration uncertainty of the shot+electronic noise record:
/// delta_sigma0^2 = z sigma0^2 sqrt(2)/sqrt(m').
inline double calibration_bound(double sigma2_0_hat, double m_calib,
                                double epsilon_pe) {
    if (!(m_calib >= 1.0))
        throw ValidationError("calibration_bound: m' must be >= 1");
    return z_of_epsilon(epsilon_pe) * sigma2_0_hat * std::numbers::sqrt2 /
           std::sqrt(m_calib);
}

/// Finite-size excess noise: xi_fs = sigma2_max - (sigma0^2 - delta_sigma0^2).
/// sigma2_max already contains the +delta_sigma^2 widening.
inline double xi_finite_size(double sigma2_max, double sigma2_0_hat,
                             double delta_sigma2_0) {
    return sigma2_max - (sigma2_0_hat - delta_sigma2_0);
}

/// Excess noise referred to Alice's output: xi_A = 2 xi_Bq / (eta T).
inline double alice_referred(double xi_bq, double eta, double t_channel) {
    if (!(eta * t_channel > 0.0))
        throw ValidationError("alice_referred: eta*t_channel must be > 0");
    return 2.0 * xi_bq / (eta * t_channel);
}

/// Full finite-size chain from point estimates to worst-case bounds.
inline WorstCaseEstimates finite_size_bounds(const PointEstimates& point,
                                             double va, double eta,
                                             double sigma2_0_hat, double m,
                                             double m_calib, double epsilon_pe) {
    WorstCaseEstimates w = worst_case(point, va, m, epsilon_pe);
    w.delta_sigma2_0 = calibration_bound(sigma2_0_hat, m_calib, epsilon_pe);
    w.xi_bq_fs = xi_finite_size(w.sigma2_max, sigma2_0_hat, w.delta_sigma2_0);
    w.t_channel_min = 2.0 * w.t_min * w.t_min / eta;
    return w;
}

} // namespace cvqkd

#endif // CVQKD_ESTIMATION_HPP
