// cvqkd command-line front end: closed-form SKR evaluation, end-to-end
// Monte-Carlo runs, attenuation sweeps, and worst-case estimator curves.

#include <cstdlib>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvqkd/io.hpp"
#include "cvqkd/pipeline.hpp"
#include "cvqkd/security.hpp"

namespace {

using namespace cvqkd;

SystemParams resolve_config(const std::string& path_flag) {
    std::string path = path_flag;
    if (path.empty()) {
        if (const char* env = std::getenv("CVQKD_CONFIG")) path = env;
    }
    if (path.empty()) return SystemParams{};
    return load_config_file(path);
}

std::vector<std::pair<std::string, std::string>> report_rows(
    const SecurityReport& rep) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("regime", rep.regime);
    kv.emplace_back("va", format_double(rep.va));
    kv.emplace_back("t_channel", format_double(rep.t_channel));
    kv.emplace_back("xi_bq", format_double(rep.xi_bq));
    kv.emplace_back("v_elec", format_double(rep.v_elec));
    kv.emplace_back("eta", format_double(rep.eta));
    kv.emplace_back("beta", format_double(rep.beta));
    kv.emplace_back("r_eff_hz", format_double(rep.r_eff));
    kv.emplace_back("ratio", format_double(rep.ratio));
    kv.emplace_back("i_ab_bits", format_double(rep.i_ab));
    kv.emplace_back("chi_be_bits", format_double(rep.chi_be));
    kv.emplace_back("skr_bps", format_double(rep.skr));
    kv.emplace_back("skr_raw_bps", format_double(rep.skr_raw));
    return kv;
}

void emit_report(const std::vector<std::pair<std::string, std::string>>& kv,
                 const RunManifest& manifest, const std::string& out_path) {
    write_report(std::cout, kv, &manifest);
    if (!out_path.empty()) {
        auto f = open_output(out_path);
        write_report(f, kv, &manifest);
    }
}

int cmd_skr(const SystemParams& params, const RunManifest& manifest,
            double ratio, const std::string& regime, double n_total, double m,
            double m_calib, double epsilon, const std::string& out_path) {
    SecurityReport rep;
    if (regime == "asym") {
        rep = skr_asymptotic(params, ratio);
    } else if (regime == "fs") {
        SystemParams p = params;
        if (epsilon > 0.0) p.epsilon_pe = epsilon;
        const double n = n_total > 0.0 ? n_total : p.n_total;
        const double mm = m > 0.0 ? m : p.m_pe;
        const double mc = m_calib > 0.0 ? m_calib : p.m_calib;
        rep = skr_finite(p, n, mm, mc, p.epsilon_pe);
        rep.ratio *= ratio;
        rep.skr *= ratio;
        rep.skr_raw *= ratio;
    } else {
        throw ConfigError("unknown regime '" + regime + "' (asym|fs)");
    }
    emit_report(report_rows(rep), manifest, out_path);
    return 0;
}

int cmd_simulate(const SystemParams& params, const RunManifest& manifest,
                 std::size_t n_symbols, std::size_t calib_slots,
                 bool dump_stages, bool no_noise, bool no_phase_walk,
                 const std::string& out_path, const std::string& stage_prefix) {
    SimulationOptions opt;
    opt.n_symbols = n_symbols;
    opt.calib_slots = calib_slots;
    opt.channel_noise = !no_noise;
    opt.phase_walk = !no_phase_walk;
    opt.dump_stages = dump_stages;
    const SimulationResult res = run_simulation(params, opt);

    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("n_pairs", std::to_string(res.n_pairs));
    kv.emplace_back("sync_offset", std::to_string(res.dsp.offset));
    kv.emplace_back("sampling_phase", std::to_string(res.sampling_phase));
    kv.emplace_back("va_powermeter", format_double(res.va_powermeter));
    kv.emplace_back("snu_scale", format_double(res.snu.scale));
    kv.emplace_back("sigma0_sq_hat", format_double(res.snu.sigma0_sq));
    kv.emplace_back("v_elec_hat", format_double(res.snu.v_elec_hat));
    kv.emplace_back("t_hat", format_double(res.point.t_hat));
    kv.emplace_back("t_channel_hat", format_double(res.point.t_channel_hat));
    kv.emplace_back("sigma2_hat", format_double(res.point.sigma2_hat));
    kv.emplace_back("xi_bq_hat", format_double(res.point.xi_bq_hat));
    kv.emplace_back("v_b_hat", format_double(res.point.v_b_hat));
    kv.emplace_back("z_eps", format_double(res.worst.z_eps));
    kv.emplace_back("t_min", format_double(res.worst.t_min));
    kv.emplace_back("t_channel_min", format_double(res.worst.t_channel_min));
    kv.emplace_back("sigma2_max", format_double(res.worst.sigma2_max));
    kv.emplace_back("xi_bq_fs", format_double(res.worst.xi_bq_fs));
    kv.emplace_back("i_ab_bits", format_double(res.skr_asym.i_ab));
    kv.emplace_back("chi_be_bits", format_double(res.skr_asym.chi_be));
    kv.emplace_back("skr_asym_bps", format_double(res.skr_asym.skr));
    kv.emplace_back("skr_fs_bps", format_double(res.skr_fs.skr));
    emit_report(kv, manifest, out_path);

    if (dump_stages) {
        {
            auto f = open_output(stage_prefix + "_downsampled.csv");
            write_constellation_csv(f, res.stage_downsampled, &manifest);
        }
        {
            auto f = open_output(stage_prefix + "_corrected.csv");
            write_constellation_csv(f, res.stage_corrected, &manifest);
        }
        {
            auto f = open_output(stage_prefix + "_aligned.csv");
            std::size_t n = std::min<std::size_t>(res.dsp.bob_symbols.size(),
                                                  opt.dump_limit);
            write_constellation_csv(
                f, std::span(res.dsp.bob_symbols.data(), n), &manifest);
        }
    }
    return 0;
}

int cmd_sweep(const SystemParams& params, const RunManifest& manifest,
              double atten_start, double atten_stop, double atten_step,
              const std::vector<double>& m_list, const std::string& out_path) {
    if (!(atten_step > 0.0) || atten_stop < atten_start)
        throw ConfigError("invalid attenuation grid");
    std::vector<double> grid;
    for (double a = atten_start; a <= atten_stop + 1e-9 * atten_step;
         a += atten_step)
        grid.push_back(a);
    if (grid.empty()) throw ConfigError("empty attenuation grid");

    // Grid points are independent; evaluate them in a worker pool and keep
    // the output in grid order.
    std::vector<std::future<std::vector<SweepRow>>> jobs;
    jobs.reserve(grid.size());
    for (double a : grid)
        jobs.push_back(std::async(std::launch::async, [&params, a, &m_list] {
            const std::vector<double> one{a};
            return sweep_attenuation(params, one, m_list);
        }));
    std::vector<SweepRow> rows;
    for (auto& job : jobs) {
        auto part = job.get();
        rows.insert(rows.end(), part.begin(), part.end());
    }

    write_sweep_csv(std::cout, rows, &manifest);
    if (!out_path.empty()) {
        auto f = open_output(out_path);
        write_sweep_csv(f, rows, &manifest);
    }
    return 0;
}

int cmd_worstcase(const SystemParams& params, const RunManifest& manifest,
                  double m_min, double m_max, int points_per_decade,
                  const std::string& out_path) {
    if (!(m_min >= 1.0) || m_max < m_min || points_per_decade < 1)
        throw ConfigError("invalid m grid");
    std::vector<double> grid;
    const double step = std::pow(10.0, 1.0 / points_per_decade);
    for (double m = m_min; m <= m_max * (1.0 + 1e-12); m *= step)
        grid.push_back(m);
    // The experimental block size is always reported alongside the curve.
    const double m_flag = params.n_total;
    if (m_flag >= m_min && m_flag <= m_max) grid.push_back(m_flag);
    std::sort(grid.begin(), grid.end());

    std::ostringstream body;
    body << "m,xi_b_fs,t_min,flagged\n";
    for (double m : grid) {
        const SecurityReport rep =
            skr_finite(params, m + 1.0, m, m, params.epsilon_pe);
        // rep echoes the worst-case inputs: t_channel = T_min, xi_bq = xi_Bq^FS.
        const bool flagged = m == m_flag;
        body << format_double(m) << ',' << format_double(2.0 * rep.xi_bq) << ','
             << format_double(rep.t_channel) << ',' << (flagged ? 1 : 0) << "\n";
    }
    manifest.write(std::cout);
    std::cout << body.str();
    if (!out_path.empty()) {
        auto f = open_output(out_path);
        manifest.write(f);
        f << body.str();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(cvqkd::kToolVersion) +
                 " - pulsed GMCS CV-QKD simulator and security analysis"};
    app.require_subcommand(1);

    std::string config_path, out_path, stage_prefix = "stages";
    double ratio = 1.0, n_total = 0.0, m = 0.0, m_calib = 0.0, epsilon = 0.0;
    std::string regime = "asym";
    std::size_t n_symbols = 100000, calib_slots = 200000;
    bool dump_stages = false, no_noise = false, no_phase_walk = false;
    double atten_start = 0.0, atten_stop = 14.0, atten_step = 0.25;
    std::vector<double> m_list{1e6, 1e8, 1e10};
    double m_min = 1e4, m_max = 1e14;
    int ppd = 4;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path,
                        "config file (flat key = value; default: "
                        "$CVQKD_CONFIG or built-in defaults)");
        sub->add_option("-o,--output", out_path, "also write the report here");
    };

    CLI::App* skr = app.add_subcommand("skr", "closed-form secret key rate");
    add_common(skr);
    skr->add_option("--ratio", ratio, "key-generation symbol fraction");
    skr->add_option("--regime", regime, "asym or fs");
    skr->add_option("--N", n_total, "total symbols (fs regime)");
    skr->add_option("--m", m, "parameter-estimation symbols (fs regime)");
    skr->add_option("--m-prime", m_calib, "calibration symbols (fs regime)");
    skr->add_option("--epsilon", epsilon, "PE security parameter");

    CLI::App* sim = app.add_subcommand("simulate", "end-to-end Monte-Carlo run");
    add_common(sim);
    sim->add_option("--n-symbols", n_symbols, "quantum symbols to simulate");
    sim->add_option("--calib-slots", calib_slots, "calibration record length");
    sim->add_flag("--dump-stages", dump_stages, "write per-stage constellations");
    sim->add_option("--stage-prefix", stage_prefix, "stage CSV path prefix");
    sim->add_flag("--no-noise", no_noise, "disable channel excess noise");
    sim->add_flag("--no-phase-walk", no_phase_walk, "disable laser phase noise");

    CLI::App* sweep = app.add_subcommand("sweep", "SKR vs channel attenuation");
    add_common(sweep);
    sweep->add_option("--atten-start", atten_start, "grid start, dB");
    sweep->add_option("--atten-stop", atten_stop, "grid stop, dB");
    sweep->add_option("--atten-step", atten_step, "grid step, dB");
    sweep->add_option("--m", m_list, "finite-size block sizes")->expected(-1);

    CLI::App* wc = app.add_subcommand("worstcase",
                                      "worst-case estimator curves vs m");
    add_common(wc);
    wc->add_option("--m-min", m_min, "smallest m");
    wc->add_option("--m-max", m_max, "largest m");
    wc->add_option("--points-per-decade", ppd, "log-grid density");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : static_cast<int>(cvqkd::kExitConfigError);
    }

    try {
        const cvqkd::SystemParams params = resolve_config(config_path);
        cvqkd::RunManifest manifest;
        manifest.seed = params.seed;
        manifest.params = params;
        for (int i = 0; i < argc; ++i)
            manifest.command += (i ? " " : "") + std::string(argv[i]);

        if (skr->parsed())
            return cmd_skr(params, manifest, ratio, regime, n_total, m, m_calib,
                           epsilon, out_path);
        if (sim->parsed())
            return cmd_simulate(params, manifest, n_symbols, calib_slots,
                                dump_stages, no_noise, no_phase_walk, out_path,
                                stage_prefix);
        if (sweep->parsed())
            return cmd_sweep(params, manifest, atten_start, atten_stop,
                             atten_step, m_list, out_path);
        if (wc->parsed())
            return cmd_worstcase(params, manifest, m_min, m_max, ppd, out_path);
        return static_cast<int>(cvqkd::kExitConfigError);
    } catch (const cvqkd::SyncError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(cvqkd::kExitSyncError);
    } catch (const cvqkd::UnphysicalStateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(cvqkd::kExitUnphysical);
    } catch (const cvqkd::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(cvqkd::kExitConfigError);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(cvqkd::kExitFailure);
    }
}
