#include <doctest.h>

#include <cmath>
#include <vector>

#include "cvqkd/rng.hpp"
#include "cvqkd/security.hpp"

using namespace cvqkd;

TEST_SUITE_BEGIN("security");

TEST_CASE("g entropy anchors") {
    CHECK(g_entropy(1.0) == 0.0);
    CHECK(g_entropy(3.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(g_entropy(0.5), UnphysicalStateError);
}

TEST_CASE("closed-form vs numeric symplectic eigenvalues on random physical states") {
    RandomStream rng(77);
    for (int i = 0; i < 1000; ++i) {
        const double va = 5.0 * rng.uniform();
        const double t = 1e-3 + (1.0 - 1e-3) * rng.uniform();
        const double xi_a = 0.5 * rng.uniform();
        const TwoModeCov cov = cov_channel_output(va, t, xi_a);
        const auto [nu1, nu2] = symplectic_eigenvalues(cov);
        const auto nums = symplectic_eigenvalues(Eigen::MatrixXd(to_matrix(cov)));
        REQUIRE(nums.size() == 2);
        CHECK(nums[1] == doctest::Approx(nu1).epsilon(1e-9));
        CHECK(nums[0] == doctest::Approx(nu2).epsilon(1e-9));
    }
}

TEST_CASE("TMSV marginals are pure: symplectic spectrum {1,1}") {
    for (double v : {1.0, 1.5, 3.778, 20.0}) {
        TwoModeCov tmsv{v, v, std::sqrt(v * v - 1.0)};
        const auto [nu1, nu2] = symplectic_eigenvalues(tmsv);
        CHECK(nu1 == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(nu2 == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("unphysical covariance is rejected") {
    CHECK_THROWS_AS(symplectic_eigenvalues(TwoModeCov{1.0, 1.0, 0.9}),
                    UnphysicalStateError);
}

TEST_CASE("measured covariance reproduces V_B") {
    const TwoModeCov cov = cov_measured(2.778, 0.624, 0.0135, 0.013, 0.296);
    CHECK(cov.a == doctest::Approx(3.778).epsilon(1e-15));
    CHECK(cov.b == doctest::Approx(1.283053856).epsilon(1e-12));
}

TEST_CASE("channel-output covariance anchor") {
    const double xi_a = alice_referred(0.0135, 0.296, 0.624);
    const TwoModeCov cov = cov_channel_output(2.778, 0.624, xi_a);
    CHECK(cov.a == doctest::Approx(3.778).epsilon(1e-15));
    CHECK(cov.b == doctest::Approx(2.824688216216216).epsilon(1e-12));
    CHECK(cov.c == doctest::Approx(2.877938362091864).epsilon(1e-12));
    const auto [nu1, nu2] = symplectic_eigenvalues(cov);
    CHECK(nu1 == doctest::Approx(2.0941674696372012).epsilon(1e-10));
    CHECK(nu2 == doctest::Approx(1.140855685853417).epsilon(1e-10));
}

TEST_CASE("mutual information anchor") {
    CHECK(mutual_information(2.778, 0.624, 0.0135, 0.013, 0.296) ==
          doctest::Approx(0.3218481011676921).epsilon(1e-12));
}

TEST_CASE("holevo bound anchor") {
    const double chi = holevo_bound(2.778, 0.624, 0.0135, 0.013, 0.296);
    CHECK(chi == doctest::Approx(0.2850471612230725).epsilon(1e-9));
    // Within the back-solved convention band.
    CHECK(std::abs(chi - 0.28626) < 0.002);
}

TEST_CASE("holevo bound shrinks with less excess noise") {
    const double lo = holevo_bound(2.778, 0.624, 0.001, 0.013, 0.296);
    const double hi = holevo_bound(2.778, 0.624, 0.03, 0.013, 0.296);
    CHECK(lo < hi);
}

TEST_CASE("ideal lossless detector limit") {
    // eta = 1 with electronic noise has no trusted purification.
    CHECK_THROWS_AS(holevo_bound(2.778, 0.624, 0.0135, 0.013, 1.0),
                    UnphysicalStateError);
    const double chi = holevo_bound(2.778, 0.624, 0.0135, 0.0, 1.0);
    CHECK(chi > 0.0);
    // Continuity: eta -> 1 with v_elec = 0 approaches the ideal branch.
    const double chi_near = holevo_bound(2.778, 0.624, 0.0135, 0.0, 1.0 - 1e-9);
    CHECK(chi_near == doctest::Approx(chi).epsilon(1e-5));
}

TEST_CASE("detector identity reproduces V_B in Monte-Carlo") {
    // Trusted detector as BS(eta) with an EPR ancilla of variance
    // v_d = 1 + 2 v_elec / (1 - eta): the measured quadrature variance must
    // equal V_B from the noise budget.
    const double va = 2.778, t = 0.624, xi_bq = 0.0135, v_elec = 0.013,
                 eta = 0.296;
    const double xi_a = alice_referred(xi_bq, eta, t);
    const double b_out = t * (va + xi_a) + 1.0;
    const double v_d = 1.0 + 2.0 * v_elec / (1.0 - eta);
    RandomStream rng(4242);
    const std::size_t n = 2000000;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x_b1 = rng.gaussian(b_out);
        const double x_f = rng.gaussian(v_d);
        const double x_mode = std::sqrt(eta) * x_b1 + std::sqrt(1.0 - eta) * x_f;
        const double x_meas = (x_mode + rng.gaussian()) / std::numbers::sqrt2;
        acc += x_meas * x_meas;
    }
    const double vb_mc = acc / static_cast<double>(n);
    const double vb = 0.5 * eta * t * va + xi_bq + v_elec + 1.0;
    CHECK(vb_mc == doctest::Approx(vb).epsilon(0.005));
}

TEST_CASE("asymptotic SKR anchor and ratio linearity") {
    SystemParams p;
    const SecurityReport full = skr_asymptotic(p, 1.0);
    CHECK(full.skr == doctest::Approx(165668.2790898798).epsilon(1e-9));
    CHECK(full.regime == "asymptotic");
    const SecurityReport half = skr_asymptotic(p, 0.5);
    CHECK(half.skr == doctest::Approx(0.5 * full.skr).epsilon(1e-15));
    CHECK_THROWS_AS(skr_asymptotic(p, 1.5), ValidationError);
}

TEST_CASE("finite-size SKR never exceeds the asymptotic rate") {
    SystemParams p;
    for (double a = 0.0; a <= 14.0; a += 0.5) {
        SystemParams q = p;
        q.t_channel = db_to_transmittance(a);
        const double asym = skr_asymptotic(q, 1.0).skr;
        for (double m : {1e6, 1e8, 1e10, 1e12}) {
            const double fs = skr_finite(q, m * 1e9, m, m, q.epsilon_pe).skr;
            CHECK(fs <= asym + 1e-9);
        }
    }
}

TEST_CASE("finite-size SKR converges to asymptotic at m = 1e12") {
    SystemParams p;
    const double asym = skr_asymptotic(p, 1.0).skr;
    const double fs = skr_finite(p, 1e12 * 1e9, 1e12, 1e12, p.epsilon_pe).skr;
    CHECK(fs == doctest::Approx(asym).epsilon(0.01));
}

TEST_CASE("finite-size prefactor and contracts") {
    SystemParams p;
    const SecurityReport rep =
        skr_finite(p, 3.08e6, 1.54e6, 1e6, p.epsilon_pe);
    CHECK(rep.ratio == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rep.regime == "finite-size");
    CHECK(rep.skr < skr_asymptotic(p, 0.5).skr);
    CHECK_THROWS_AS(skr_finite(p, 1e6, 1e6, 1e6, p.epsilon_pe), ValidationError);
}

TEST_CASE("attenuation sweep shape and consistency") {
    SystemParams p;
    std::vector<double> grid;
    for (double a = 0.0; a <= 14.0 + 1e-9; a += 0.25) grid.push_back(a);
    const std::vector<double> ms{1e6, 1e8, 1e10};
    const auto rows = sweep_attenuation(p, grid, ms);
    CHECK(rows.size() == 57 * 4);
    // Fixed column order: asym then the m list, per attenuation point.
    CHECK(rows[0].regime == "asym");
    CHECK(rows[1].m == 1e6);
    CHECK(rows[3].m == 1e10);
    for (std::size_t i = 0; i < rows.size(); i += 4) {
        CHECK(rows[i + 1].skr_bps <= rows[i].skr_bps + 1e-9);
        CHECK(rows[i + 2].skr_bps <= rows[i].skr_bps + 1e-9);
        CHECK(rows[i + 3].skr_bps <= rows[i].skr_bps + 1e-9);
    }
    CHECK_THROWS_AS(sweep_attenuation(p, std::span<const double>{}, ms),
                    ValidationError);
}

TEST_CASE("sweep zero-crossing ordering in m") {
    SystemParams p;
    auto crossing = [&](double m) {
        for (double a = 0.0; a <= 30.0; a += 0.05) {
            SystemParams q = p;
            q.t_channel = db_to_transmittance(a);
            if (skr_finite(q, m * 1e9, m, m, q.epsilon_pe).skr_raw <= 0.0)
                return a;
        }
        return 30.0;
    };
    CHECK(crossing(1e6) < crossing(1e10));
    CHECK(crossing(1e10) < crossing(1e12));
}

TEST_SUITE_END();
