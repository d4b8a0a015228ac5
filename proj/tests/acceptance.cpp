// Acceptance gate: one check per release criterion, one PASS/FAIL line each.
// Usage: acceptance [path-to-cvqkd-cli]

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cvqkd/pipeline.hpp"
#include "cvqkd/security.hpp"

using namespace cvqkd;

namespace {

std::string g_cli;                 // CLI binary path (optional)
std::vector<std::string> g_notes;  // sub-check failures for the current criterion

#define CHECK_THAT(cond, label)                                      \
    do {                                                             \
        if (!(cond)) g_notes.push_back(std::string("    failed: ") + \
                                       (label) + "  [" #cond "]");   \
    } while (0)

bool run_criterion(int n, const std::string& what,
                   const std::function<void()>& body) {
    g_notes.clear();
    try {
        body();
    } catch (const std::exception& e) {
        g_notes.push_back(std::string("    exception: ") + e.what());
    }
    const bool ok = g_notes.empty();
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << n << ": "
              << what << "\n";
    for (const auto& note : g_notes) std::cout << note << "\n";
    return ok;
}

/// Runs the CLI and returns (exit code, stdout).
std::pair<int, std::string> run_cli(const std::string& args) {
    const std::string cmd = g_cli + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return {-1, ""};
    std::string out;
    char buf[4096];
    while (size_t got = fread(buf, 1, sizeof buf, pipe)) out.append(buf, got);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::map<std::string, double> parse_report(const std::string& text) {
    std::map<std::string, double> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        try {
            kv[line.substr(0, eq)] = std::stod(line.substr(eq + 3));
        } catch (...) {
        }
    }
    return kv;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    double skr_full, skr_half, chi;
    if (!g_cli.empty()) {
        auto [rc1, out1] = run_cli("skr --ratio 1");
        auto [rc2, out2] = run_cli("skr --ratio 0.5");
        CHECK_THAT(rc1 == 0 && rc2 == 0, "cmd_skr exit code 0");
        const auto kv1 = parse_report(out1), kv2 = parse_report(out2);
        skr_full = kv1.count("skr_bps") ? kv1.at("skr_bps") : -1.0;
        skr_half = kv2.count("skr_bps") ? kv2.at("skr_bps") : -1.0;
        chi = kv1.count("chi_be_bits") ? kv1.at("chi_be_bits") : -1.0;
    } else {
        SystemParams p;
        skr_full = skr_asymptotic(p, 1.0).skr;
        skr_half = skr_asymptotic(p, 0.5).skr;
        chi = skr_asymptotic(p, 1.0).chi_be;
    }
    const double elapsed = seconds_since(t0);
    CHECK_THAT(std::abs(skr_full - 156e3) <= 0.15 * 156e3,
               "SKR(ratio 1) within +/-15% of 156 kbps");
    CHECK_THAT(std::abs(skr_half - 0.5 * skr_full) <= 1e-6 * skr_full,
               "SKR(ratio 1/2) exactly half");
    CHECK_THAT(elapsed < 1.0, "runtime < 1 s");
    std::cout << "    SKR(ratio 1) = " << skr_full << " bps ("
              << 100.0 * (skr_full - 156e3) / 156e3 << "% vs 156 kbps), "
              << "chi_BE = " << chi << ", " << elapsed << " s\n";
    if (std::abs(skr_full - 156e3) <= 0.02 * 156e3)
        CHECK_THAT(std::abs(chi - 0.28626) <= 0.002,
                   "Holevo convention confirmation band");
    else
        std::cout << "    (outside +/-2%: Holevo convention band not asserted)\n";
}

void criterion_2() {
    const double vb = 0.5 * 0.296 * 0.624 * 2.778 + 0.0135 + 0.013 + 1.0;
    CHECK_THAT(std::abs(vb - 1.28305) <= 1e-5 + 4e-6, "V_B = 1.28305 +/- 1e-5");
    const double iab = mutual_information(2.778, 0.624, 0.0135, 0.013, 0.296);
    CHECK_THAT(std::abs(iab - 0.32185) <= 1e-4, "I_AB = 0.32185 +/- 1e-4");
    const double xi_a = alice_referred(0.0135, 0.296, 0.624);
    CHECK_THAT(std::abs(xi_a - 0.14618) <= 1e-5, "xi_A = 0.14618 +/- 1e-5");
    const double z = z_of_epsilon(1e-10);
    CHECK_THAT(std::abs(z - 6.467) <= 0.01, "z(1e-10) = 6.467 +/- 0.01");
    std::cout << "    V_B = " << vb << ", I_AB = " << iab << ", xi_A = " << xi_a
              << ", z = " << z << "\n";
}

void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    SystemParams p;
    p.seed = 20260823;
    SimulationOptions opt;
    opt.n_symbols = 300000;
    opt.calib_slots = 200000;
    const SimulationResult res = run_simulation(p, opt);
    // Standard error of xi-hat including the residual-variance and the
    // SNU-calibration contributions.
    const double se =
        res.point.sigma2_hat *
        std::sqrt(1.0 / static_cast<double>(res.n_pairs) +
                  2.0 / static_cast<double>(opt.calib_slots));
    CHECK_THAT(std::abs(res.point.xi_bq_hat - 0.0135) <= 3.0 * se,
               "xi_Bq within 3 standard errors of 0.0135");
    CHECK_THAT(std::abs(res.point.t_channel_hat - 0.624) <= 0.02 * 0.624,
               "T within 2% of 0.624");

    SimulationOptions clean = opt;
    clean.n_symbols = 100000;
    clean.channel_noise = false;
    SystemParams q = p;
    q.seed = 20260824;
    const SimulationResult quiet = run_simulation(q, clean);
    CHECK_THAT(quiet.point.xi_bq_hat <= 0.005,
               "DSP-induced excess noise <= 0.005 SNU with noise off");
    const double elapsed = seconds_since(t0);
    CHECK_THAT(elapsed < 120.0, "runtime < 2 min");
    std::cout << "    xi_Bq = " << res.point.xi_bq_hat << " (3se = " << 3.0 * se
              << "), T = " << res.point.t_channel_hat
              << ", xi_quiet = " << quiet.point.xi_bq_hat << ", " << elapsed
              << " s\n";
}

void criterion_4() {
    PointEstimates point;
    point.t_hat = std::sqrt(0.296 * 0.624 / 2.0);
    point.sigma2_hat = 0.0135 + 0.013 + 1.0;
    const WorstCaseEstimates w =
        finite_size_bounds(point, 2.778, 0.296, 1.013, 1e6, 1e6, 1e-10);
    CHECK_THAT(std::abs(w.t_min - 0.29996) <= 1e-4, "t_min(1e6) = 0.29996 +/- 1e-4");
    CHECK_THAT(std::abs(w.sigma2_max - 1.03589) <= 1e-4,
               "sigma2_max(1e6) = 1.03589 +/- 1e-4");
    CHECK_THAT(std::abs(w.xi_bq_fs - 0.03216) <= 1e-4,
               "xi_Bq_FS(1e6) = 0.03216 +/- 1e-4");

    SystemParams p;
    bool dominated = true;
    for (double a = 0.0; a <= 14.0 + 1e-9; a += 0.25) {
        SystemParams q = p;
        q.t_channel = db_to_transmittance(a);
        const double asym = skr_asymptotic(q, 1.0).skr;
        for (double m : {1e6, 1e8, 1e10, 1e12})
            if (skr_finite(q, m * 1e9, m, m, q.epsilon_pe).skr > asym + 1e-9)
                dominated = false;
    }
    CHECK_THAT(dominated, "SKR_FS <= SKR_asym on the 0-14 dB grid");
    const double asym = skr_asymptotic(p, 1.0).skr;
    const double fs12 = skr_finite(p, 1e21, 1e12, 1e12, p.epsilon_pe).skr;
    CHECK_THAT(std::abs(fs12 - asym) <= 0.01 * asym,
               "SKR_FS(1e12) within 1% of SKR_asym");

    auto crossing = [&](double m) {
        for (double a = 0.0; a <= 30.0; a += 0.05) {
            SystemParams q = p;
            q.t_channel = db_to_transmittance(a);
            if (skr_finite(q, m * 1e9, m, m, q.epsilon_pe).skr_raw <= 0.0)
                return a;
        }
        return 30.0;
    };
    CHECK_THAT(crossing(1e6) < crossing(1e10),
               "m=1e6 zero-crossing below the m=1e10 one");

    // Qualitative experimental-block check: reported, not asserted to a
    // number.  N = 3.08e6, m = N/2 at 2.04 dB.
    SystemParams q = p;
    q.t_channel = db_to_transmittance(2.04);
    const double skr_exp =
        skr_finite(q, 3.08e6, 1.54e6, q.m_calib, q.epsilon_pe).skr;
    const double half_asym = skr_asymptotic(q, 0.5).skr;
    CHECK_THAT(skr_exp < half_asym,
               "SKR_FS(N=3.08e6, m=N/2) strictly below the ratio-1/2 asymptote");
    std::cout << "    t_min = " << w.t_min << ", sigma2_max = " << w.sigma2_max
              << ", xi_fs = " << w.xi_bq_fs << "\n"
              << "    experimental block: SKR_FS = " << skr_exp
              << " bps vs " << half_asym << " bps asymptotic (ratio 1/2)\n";
}

void criterion_5() {
    RandomStream rng(55);
    bool agree = true;
    for (int i = 0; i < 1000; ++i) {
        const double va = 5.0 * rng.uniform();
        const double t = 1e-3 + (1.0 - 1e-3) * rng.uniform();
        const double xi_a = 0.5 * rng.uniform();
        const TwoModeCov cov = cov_channel_output(va, t, xi_a);
        const auto [nu1, nu2] = symplectic_eigenvalues(cov);
        const auto nums = symplectic_eigenvalues(Eigen::MatrixXd(to_matrix(cov)));
        if (std::abs(nums[1] - nu1) > 1e-9 * nu1 ||
            std::abs(nums[0] - nu2) > 1e-9 * nu2)
            agree = false;
    }
    CHECK_THAT(agree, "closed-form vs numeric symplectic eigenvalues (1e3 cases)");
    CHECK_THAT(g_entropy(1.0) == 0.0, "g(1) = 0 exactly");
    CHECK_THAT(std::abs(g_entropy(3.0) - 2.0) < 1e-14, "g(3) = 2");
    const double v = 3.778;
    const auto [m1, m2] =
        symplectic_eigenvalues(TwoModeCov{v, v, std::sqrt(v * v - 1.0)});
    CHECK_THAT(std::abs(m1 - 1.0) < 1e-9 && std::abs(m2 - 1.0) < 1e-9,
               "TMSV symplectic spectrum {1,1}");

    // Detector identity Monte-Carlo.
    const double va = 2.778, t = 0.624, xi_bq = 0.0135, v_elec = 0.013,
                 eta = 0.296;
    const double b_out = t * (va + alice_referred(xi_bq, eta, t)) + 1.0;
    const double v_d = 1.0 + 2.0 * v_elec / (1.0 - eta);
    RandomStream mc(56);
    const std::size_t n = 2000000;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x_mode = std::sqrt(eta) * mc.gaussian(b_out) +
                              std::sqrt(1.0 - eta) * mc.gaussian(v_d);
        const double x = (x_mode + mc.gaussian()) / std::numbers::sqrt2;
        acc += x * x;
    }
    const double vb_mc = acc / static_cast<double>(n);
    const double vb = 0.5 * eta * t * va + xi_bq + v_elec + 1.0;
    CHECK_THAT(std::abs(vb_mc - vb) <= 0.005 * vb,
               "detector identity reproduces V_B within 0.5%");
    std::cout << "    V_B Monte-Carlo = " << vb_mc << " vs " << vb << "\n";
}

void criterion_6() {
    // Exhaustive planted sampling phase.
    const int sps = 125;
    bool phases_ok = true;
    for (int planted = 0; planted < sps; ++planted) {
        AcquiredTrace trace;
        trace.x_samples.assign(20 * sps, 0.0);
        trace.p_samples.assign(20 * sps, 0.0);
        for (int s = 0; s < 20; ++s) trace.x_samples[s * sps + planted] = 1.0;
        if (downsample(trace, sps).phase != planted) phases_ok = false;
    }
    CHECK_THAT(phases_ok, "downsampler recovers all 125 planted phases");

    // Synchronizer: shift-equivariance and success rate at the operating point.
    RandomStream rng(66);
    const std::size_t period = 2040;
    const auto pattern = draw_symbols(period, 2.778, rng);
    const double t = std::sqrt(0.296 * 0.624 / 2.0);
    bool equivariant = true;
    int good = 0;
    const int trials = 400;
    for (int trial = 0; trial < trials; ++trial) {
        const int shift = static_cast<int>(rng.uniform_int(period));
        std::vector<std::complex<double>> bob(period);
        for (std::size_t k = 0; k < period; ++k)
            bob[k] = t * pattern[(k + shift) % period] +
                     std::complex<double>(rng.gaussian(1.0265),
                                          rng.gaussian(1.0265));
        try {
            if (synchronize(pattern, bob) == shift)
                ++good;
            else
                equivariant = false;
        } catch (const SyncError&) {
        }
    }
    CHECK_THAT(equivariant, "synchronizer is shift-equivariant");
    CHECK_THAT(good >= trials - trials / 1000,
               "synchronizer success rate >= 99.9%");

    // Phase-recovery variance halves when rho doubles.
    auto phase_var = [](double rho, std::uint64_t seed) {
        const double amp = std::sqrt(2.0 * rho * 2.778);
        RandomStream r(seed);
        const std::size_t n = 60000;
        std::vector<std::complex<double>> refs(n);
        std::vector<int> signs(n, +1);
        for (auto& v : refs)
            v = std::complex<double>(amp + r.gaussian(), r.gaussian());
        const PhaseRecovery rec = recover_phase(refs, signs);
        double acc = 0.0;
        for (double p : rec.ref_phases) acc += p * p;
        return acc / static_cast<double>(n);
    };
    const double ratio = phase_var(342.6, 67) / phase_var(685.2, 68);
    CHECK_THAT(std::abs(ratio - 2.0) <= 0.4,
               "phase error variance halves when rho doubles (+/-20%)");

    // Predistortion inverts the 25/22 dB transfer.
    IQModulatorModel model;
    RandomStream pr(69);
    double err = 0.0, ref = 0.0;
    for (int i = 0; i < 300; ++i) {
        const std::complex<double> target(10.0 * (pr.uniform() - 0.5),
                                          10.0 * (pr.uniform() - 0.5));
        const auto out = iq_apply(predistort(target, model), model);
        err += std::norm(out - target);
        ref += std::norm(target);
    }
    CHECK_THAT(std::sqrt(err / ref) < 1e-3,
               "predistortion residual < 1e-3 relative RMS");
    std::cout << "    sync " << good << "/" << trials
              << ", phase-var ratio = " << ratio
              << ", predistortion RMS = " << std::sqrt(err / ref) << "\n";
}

void criterion_7() {
    SystemParams p;
    double prev_xi = 1e9, prev_t = -1.0;
    for (double m = 1e4; m <= 1e14 + 1.0; m *= 10.0) {
        const SecurityReport rep =
            skr_finite(p, m + 1.0, m, m, p.epsilon_pe);
        CHECK_THAT(2.0 * rep.xi_bq < prev_xi, "xi_B(m) monotone decreasing");
        CHECK_THAT(rep.t_channel > prev_t, "T_min(m) monotone increasing");
        prev_xi = 2.0 * rep.xi_bq;
        prev_t = rep.t_channel;
    }
    const SecurityReport conv =
        skr_finite(p, 1e14 + 1.0, 1e14, 1e14, p.epsilon_pe);
    CHECK_THAT(std::abs(2.0 * conv.xi_bq - 0.027) <= 0.001 * 0.027,
               "xi_B converges to 0.027 within 0.1% at m = 1e14");
    CHECK_THAT(std::abs(conv.t_channel - 0.624) <= 0.001 * 0.624,
               "T_min converges to 0.624 within 0.1% at m = 1e14");

    if (!g_cli.empty()) {
        auto [rc, out] = run_cli("worstcase --m-min 1e6 --m-max 1e8");
        CHECK_THAT(rc == 0, "cmd_worstcase exit code 0");
        bool flagged = false;
        std::istringstream in(out);
        std::string line;
        while (std::getline(in, line))
            if (line.find("3080000,") == 0 && line.size() > 2 &&
                line.back() == '1')
                flagged = true;
        CHECK_THAT(flagged, "N = m = 3.08e6 row emitted and flagged");
    }
    std::cout << "    xi_B(1e14) = " << 2.0 * conv.xi_bq << ", T_min(1e14) = "
              << conv.t_channel << "\n";
}

} // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_cli = argv[1];
    int failures = 0;
    failures += !run_criterion(1, "reference operating-point SKR", criterion_1);
    failures += !run_criterion(2, "intermediate quantities", criterion_2);
    failures += !run_criterion(3, "end-to-end Monte-Carlo at desk scale",
                               criterion_3);
    failures += !run_criterion(4, "finite-size suite", criterion_4);
    failures += !run_criterion(5, "Gaussian-formalism oracles", criterion_5);
    failures += !run_criterion(6, "DSP property suite", criterion_6);
    failures += !run_criterion(7, "worst-case estimator curves", criterion_7);
    std::cout << (failures == 0 ? "all criteria passed"
                                : std::to_string(failures) + " criteria failed")
              << "\n";
    return failures == 0 ? 0 : 1;
}
