#ifndef CVQKD_SECURITY_HPP
#define CVQKD_SECURITY_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "cvqkd/errors.hpp"
#include "cvqkd/estimation.hpp"
#include "cvqkd/sysparams.hpp"

namespace cvqkd {

/// X-form two-mode covariance matrix [[a I2, c sz], [c sz, b I2]] in SNU.
struct TwoModeCov {
    double a = 1.0;
    double b = 1.0;
    double c = 0.0;
};

inline Eigen::Matrix4d to_matrix(const TwoModeCov& cov) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    m(0, 0) = m(1, 1) = cov.a;
    m(2, 2) = m(3, 3) = cov.b;
    m(0, 2) = m(2, 0) = cov.c;
    m(1, 3) = m(3, 1) = -cov.c;
    return m;
}

/// Symplectic form for n modes, xxpp-interleaved (x1,p1,x2,p2,...).
inline Eigen::MatrixXd symplectic_form(int n_modes) {
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
    for (int i = 0; i < n_modes; ++i) {
        omega(2 * i, 2 * i + 1) = 1.0;
        omega(2 * i + 1, 2 * i) = -1.0;
    }
    return omega;
}

/// Closed-form symplectic eigenvalues of an X-form matrix, descending:
/// nu^2 = (Delta +/- sqrt(Delta^2 - 4 D^2)) / 2 with Delta = a^2+b^2-2c^2,
/// D = ab - c^2.
inline std::pair<double, double> symplectic_eigenvalues(const TwoModeCov& cov) {
    const double delta = cov.a * cov.a + cov.b * cov.b - 2.0 * cov.c * cov.c;
    const double d = cov.a * cov.b - cov.c * cov.c;
    const double disc = std::max(delta * delta - 4.0 * d * d, 0.0);
    const double s = std::sqrt(disc);
    const double nu1 = std::sqrt(std::max((delta + s) / 2.0, 0.0));
    const double nu2 = std::sqrt(std::max((delta - s) / 2.0, 0.0));
    if (nu2 < 1.0 - 1e-9)
        throw UnphysicalStateError("covariance matrix is unphysical (nu = " +
                                   std::to_string(nu2) + " < 1)");
    return {nu1, nu2};
}

/// Symplectic eigenvalues of a general 2n x 2n covariance matrix as the
/// moduli of the eigenvalues of i Omega Sigma, ascending.
inline std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& sigma) {
    const int n = static_cast<int>(sigma.rows()) / 2;
    if (sigma.rows() != sigma.cols() || sigma.rows() % 2 != 0)
        throw ValidationError("covariance matrix must be 2n x 2n");
    const Eigen::MatrixXd m = symplectic_form(n) * sigma;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
    std::vector<double> mods(2 * n);
    for (int i = 0; i < 2 * n; ++i)
        mods[i] = std::abs(solver.eigenvalues()[i]);
    std::sort(mods.begin(), mods.end());
    // Eigenvalues come in +/- i nu pairs; keep one of each.
    std::vector<double> nus(n);
    for (int i = 0; i < n; ++i)
        nus[i] = 0.5 * (mods[2 * i] + mods[2 * i + 1]);
    for (double nu : nus)
        if (nu < 1.0 - 1e-9)
            throw UnphysicalStateError("covariance matrix is unphysical (nu = " +
                                       std::to_string(nu) + " < 1)");
    return nus;
}

/// Bosonic entropy g(nu) in bits; g(1) = 0 by continuity.
inline double g_entropy(double nu) {
    if (nu < 1.0 - 1e-9)
        throw UnphysicalStateError("g_entropy: nu < 1");
    if (nu <= 1.0 + 1e-12) return 0.0;
    const double p = (nu + 1.0) / 2.0;
    const double q = (nu - 1.0) / 2.0;
    return p * std::log2(p) - q * std::log2(q);
}

/// Covariance of Alice's mode and one of Bob's measured modes (trusted
/// detector included): a = V_A + 1, b = V_B, c = sqrt((eta t/2)(V_A^2+2V_A)).
inline TwoModeCov cov_measured(double va, double t, double xi_bq, double v_elec,
                               double eta) {
    TwoModeCov cov;
    cov.a = va + 1.0;
    cov.b = 0.5 * eta * t * va + xi_bq + v_elec + 1.0;
    cov.c = std::sqrt(std::max(0.5 * eta * t * (va * va + 2.0 * va), 0.0));
    return cov;
}

/// Covariance at the channel output, before the trusted detector. This is
/// what Eve purifies: a = V_A + 1, b = t (V_A + xi_A) + 1, c = sqrt(t (V_A^2+2V_A)).
inline TwoModeCov cov_channel_output(double va, double t, double xi_a) {
    TwoModeCov cov;
    cov.a = va + 1.0;
    cov.b = t * (va + xi_a) + 1.0;
    cov.c = std::sqrt(std::max(t * (va * va + 2.0 * va), 0.0));
    return cov;
}

/// Heterodyne mutual information, both quadratures:
/// I_AB = log2(V_B / V_B|A) with V_B|A = xi_Bq + v_elec + 1.
inline double mutual_information(double va, double t, double xi_bq,
                                 double v_elec, double eta) {
    const double vb = 0.5 * eta * t * va + xi_bq + v_elec + 1.0;
    const double vba = xi_bq + v_elec + 1.0;
    return std::log2(vb / vba);
}

namespace detail {

/// Heterodyne conditioning: Sigma_rest - C (Sigma_B + I2)^-1 C^T, where B is
/// the 2x2 block at rows/cols [b0, b0+1].
inline Eigen::MatrixXd heterodyne_condition(const Eigen::MatrixXd& sigma, int b0) {
    const int n = static_cast<int>(sigma.rows());
    std::vector<int> rest;
    for (int i = 0; i < n; ++i)
        if (i != b0 && i != b0 + 1) rest.push_back(i);
    const int r = static_cast<int>(rest.size());
    Eigen::MatrixXd srest(r, r), cross(r, 2);
    for (int i = 0; i < r; ++i) {
        cross(i, 0) = sigma(rest[i], b0);
        cross(i, 1) = sigma(rest[i], b0 + 1);
        for (int j = 0; j < r; ++j) srest(i, j) = sigma(rest[i], rest[j]);
    }
    Eigen::Matrix2d sb = sigma.block<2, 2>(b0, b0) + Eigen::Matrix2d::Identity();
    return srest - cross * sb.inverse() * cross.transpose();
}

} // namespace detail

/// Holevo bound chi_BE for reverse reconciliation with trusted detector
/// noise.
///
/// S(E) comes from the channel-output covariance (Eve purifies the channel
/// only). S(E|B) is computed by modeling the detector as a beam splitter of
/// transmittance eta whose vacuum port carries one half of an EPR pair of
/// variance v_d = 1 + 2 v_elec / (1 - eta), then heterodyne-conditioning on
/// the detected mode. The identity (1-eta) v_d = (1-eta) + 2 v_elec makes the
/// detected variance reproduce V_B exactly.
inline double holevo_bound(double va, double t, double xi_bq, double v_elec,
                           double eta) {
    if (!(t > 0.0))
        throw ValidationError("holevo_bound: t must be > 0");
    const double xi_a = alice_referred(xi_bq, eta, t);
    const TwoModeCov eve = cov_channel_output(va, t, xi_a);
    const auto [nu1, nu2] = symplectic_eigenvalues(eve);
    const double s_e = g_entropy(nu1) + g_entropy(nu2);

    double s_e_b = 0.0;
    if (eta >= 1.0 - 1e-12) {
        if (v_elec > 1e-12)
            throw UnphysicalStateError(
                "holevo_bound: eta = 1 with v_elec > 0 has no trusted-detector "
                "purification; use eta < 1 or v_elec = 0");
        // Ideal detector: condition Alice's mode directly on B.
        const Eigen::Matrix4d sigma = to_matrix(eve);
        const Eigen::MatrixXd cond = detail::heterodyne_condition(sigma, 2);
        for (double nu : symplectic_eigenvalues(cond)) s_e_b += g_entropy(nu);
    } else {
        const double v_d = 1.0 + 2.0 * v_elec / (1.0 - eta);
        const double c_d = std::sqrt(std::max(v_d * v_d - 1.0, 0.0));
        // Modes A, B1, F0, G; F0-G is the detector EPR ancilla.
        Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(8, 8);
        sigma.block<4, 4>(0, 0) = to_matrix(eve);
        sigma(4, 4) = sigma(5, 5) = sigma(6, 6) = sigma(7, 7) = v_d;
        sigma(4, 6) = sigma(6, 4) = c_d;
        sigma(5, 7) = sigma(7, 5) = -c_d;
        // Beam splitter of transmittance eta on (B1, F0).
        Eigen::MatrixXd bs = Eigen::MatrixXd::Identity(8, 8);
        const double tt = std::sqrt(eta), rr = std::sqrt(1.0 - eta);
        bs(2, 2) = bs(3, 3) = tt;
        bs(2, 4) = bs(3, 5) = rr;
        bs(4, 2) = bs(5, 3) = -rr;
        bs(4, 4) = bs(5, 5) = tt;
        sigma = bs * sigma * bs.transpose();
        const Eigen::MatrixXd cond = detail::heterodyne_condition(sigma, 2);
        for (double nu : symplectic_eigenvalues(cond)) s_e_b += g_entropy(nu);
    }
    return std::max(s_e - s_e_b, 0.0);
}

/// Devetak-Winter secret key rate report.
struct SecurityReport {
    double i_ab = 0.0;     ///< bits/symbol
    double chi_be = 0.0;   ///< bits/symbol
    double skr = 0.0;      ///< bits/second, clamped at 0
    double skr_raw = 0.0;  ///< bits/second, unclamped
    std::string regime;    ///< "asymptotic" or "finite-size"
    // Inputs echoed.
    double va = 0.0, t_channel = 0.0, xi_bq = 0.0, v_elec = 0.0, eta = 0.0;
    double beta = 0.0, r_eff = 0.0, ratio = 1.0;
};

namespace detail {

inline SecurityReport make_report(const char* regime, double va, double t,
                                  double xi_bq, double v_elec, double eta,
                                  double beta, double r_eff, double ratio) {
    SecurityReport rep;
    rep.regime = regime;
    rep.va = va;
    rep.t_channel = t;
    rep.xi_bq = xi_bq;
    rep.v_elec = v_elec;
    rep.eta = eta;
    rep.beta = beta;
    rep.r_eff = r_eff;
    rep.ratio = ratio;
    if (t > 0.0) {
        rep.i_ab = mutual_information(va, t, xi_bq, v_elec, eta);
        rep.chi_be = holevo_bound(va, t, xi_bq, v_elec, eta);
        rep.skr_raw = ratio * (beta * rep.i_ab - rep.chi_be) * r_eff;
    } else {
        rep.skr_raw = 0.0;
    }
    rep.skr = std::max(rep.skr_raw, 0.0);
    return rep;
}

} // namespace detail

/// SKR = ratio [beta I_AB - chi_BE] R_eff, clamped at 0 for the report.
inline SecurityReport skr_asymptotic(const SystemParams& p, double ratio) {
    if (!(ratio >= 0.0 && ratio <= 1.0))
        throw ValidationError("skr_asymptotic: ratio out of [0,1]");
    return detail::make_report("asymptotic", p.va, p.t_channel,
                               std::max(p.xi_bq, 0.0), p.v_elec, p.eta, p.beta,
                               p.r_eff(), ratio);
}

/// Finite-size SKR from explicit worst-case bounds, with Delta(n) = 0:
/// evaluated at (V_A, T_min, xi_Bq^FS) with prefactor (N-m)/N.
inline SecurityReport skr_finite(const SystemParams& p,
                                 const WorstCaseEstimates& wc, double n_total,
                                 double m) {
    if (!(m < n_total))
        throw ValidationError("skr_finite: m must be < N");
    const double ratio = (n_total - m) / n_total;
    const double t_min = std::max(wc.t_channel_min, 0.0);
    return detail::make_report("finite-size", p.va, t_min,
                               std::max(wc.xi_bq_fs, 0.0), p.v_elec, p.eta,
                               p.beta, p.r_eff(), ratio);
}

/// Finite-size SKR with the point estimates implied by the configured
/// channel (t = sqrt(eta T/2), sigma^2 = xi_Bq + v_elec + 1) and m' symbols
/// of calibration data.
inline SecurityReport skr_finite(const SystemParams& p, double n_total,
                                 double m, double m_calib, double epsilon_pe) {
    PointEstimates point;
    point.t_hat = std::sqrt(p.eta * p.t_channel / 2.0);
    point.sigma2_hat = p.xi_bq + p.v_elec + 1.0;
    point.xi_bq_hat = p.xi_bq;
    point.t_channel_hat = p.t_channel;
    const double sigma2_0 = p.v_elec + 1.0;
    const WorstCaseEstimates wc =
        finite_size_bounds(point, p.va, p.eta, sigma2_0, m, m_calib, epsilon_pe);
    return skr_finite(p, wc, n_total, m);
}

/// One row of an attenuation sweep.
struct SweepRow {
    double atten_db = 0.0;
    std::string regime; ///< "asym" or "fs"
    double m = 0.0;     ///< 0 for the asymptotic row
    double i_ab = 0.0;
    double chi_be = 0.0;
    double skr_bps = 0.0;
    double skr_raw_bps = 0.0;
};

/// Asymptotic plus per-m finite-size SKR over an attenuation grid. The
/// excess noise xi_Bq is held at its configured value across the grid; the
/// finite-size rows use worst-case bounds with m' = m and prefactor 1 (the
/// PE-fraction trade-off is reported separately by skr_finite).
inline std::vector<SweepRow> sweep_attenuation(const SystemParams& p,
                                               std::span<const double> atten_db,
                                               std::span<const double> m_list) {
    if (atten_db.empty())
        throw ValidationError("sweep_attenuation: empty grid");
    std::vector<SweepRow> rows;
    rows.reserve(atten_db.size() * (1 + m_list.size()));
    for (double a : atten_db) {
        SystemParams q = p;
        q.t_channel = db_to_transmittance(a);
        SecurityReport asym = skr_asymptotic(q, 1.0);
        rows.push_back({a, "asym", 0.0, asym.i_ab, asym.chi_be, asym.skr,
                        asym.skr_raw});
        for (double m : m_list) {
            // N >> m so the prefactor is 1; only the PE bounds bite.
            SecurityReport fs = skr_finite(q, m * 1e9, m, m, q.epsilon_pe);
            rows.push_back({a, "fs", m, fs.i_ab, fs.chi_be, fs.skr, fs.skr_raw});
        }
    }
    return rows;
}

} // namespace cvqkd

#endif // CVQKD_SECURITY_HPP
