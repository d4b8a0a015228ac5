#ifndef CVQKD_SYSPARAMS_HPP
#define CVQKD_SYSPARAMS_HPP

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "cvqkd/errors.hpp"

namespace cvqkd {

/// Channel attenuation in dB to power transmittance.
inline double db_to_transmittance(double atten_db) {
    if (!(atten_db >= 0.0))
        throw ValidationError("attenuation must be >= 0 dB");
    return std::pow(10.0, -atten_db / 10.0);
}

/// Inverse of db_to_transmittance.
inline double transmittance_to_db(double t) {
    if (!(t > 0.0 && t <= 1.0))
        throw ValidationError("transmittance out of (0,1]");
    return -10.0 * std::log10(t);
}

/// Mean photon number of a modulated coherent ensemble, V_A = 2<n>.
inline double mean_photon_number(double va) {
    if (!(va >= 0.0))
        throw ValidationError("va must be >= 0");
    return va / 2.0;
}

/// All static and dynamic system parameters plus simulation knobs.
///
/// Variances are per quadrature in shot noise units (vacuum variance 1).
/// va is the per-quadrature modulation variance: each quadrature of a
/// quantum symbol is drawn N(0, va), so V_A = 2<n>.
/// Immutable by convention after validate(); safe to share across workers.
struct SystemParams {
    double v_elec = 0.013;        ///< electronic noise variance, SNU
    double beta = 0.95;           ///< reconciliation efficiency
    double eta = 0.296;           ///< detection efficiency
    double rho = 342.6;           ///< reference/quantum intensity ratio
    double rep_rate = 16e6;       ///< pulse repetition rate, Hz
    double quantum_fraction = 0.5;///< fraction of slots carrying quantum symbols
    double epsilon_pe = 1e-10;    ///< PE security parameter
    double va = 2.778;            ///< Alice modulation variance, SNU
    double xi_bq = 0.0135;        ///< excess noise per quadrature at Bob, SNU
    double t_channel = 0.624;     ///< channel transmittance
    double n_total = 3.08e6;      ///< total exchanged symbols N
    double m_pe = 1.54e6;         ///< symbols used for parameter estimation
    double m_calib = 1e6;         ///< symbols used for calibration (m')
    double pulse_width = 11.7e-9; ///< optical pulse width, s
    int samples_per_symbol = 125; ///< 2 GSa/s at 16 MHz repetition
    double filter_bw = 50e6;      ///< receiver digital filter bandwidth, Hz
    double linewidth_total = 20e3;///< combined phase-noise linewidth, Hz (knob)
    std::uint64_t seed = 1;       ///< RNG seed

    /// Effective quantum symbol rate, Hz.
    double r_eff() const { return rep_rate * quantum_fraction; }

    /// Slot duration, s.
    double slot_duration() const { return 1.0 / rep_rate; }

    void validate() const {
        auto check = [](bool ok, const char* what) {
            if (!ok) throw ValidationError(what);
        };
        check(v_elec >= 0.0, "v_elec must be >= 0");
        check(beta > 0.0 && beta <= 1.0, "beta out of (0,1]");
        check(eta > 0.0 && eta <= 1.0, "eta out of (0,1]");
        check(rho > 0.0, "rho must be > 0");
        check(rep_rate > 0.0, "rep_rate must be > 0");
        check(quantum_fraction > 0.0 && quantum_fraction <= 1.0,
              "quantum_fraction out of (0,1]");
        check(epsilon_pe > 0.0 && epsilon_pe < 1.0, "epsilon_pe out of (0,1)");
        check(va >= 0.0, "va must be >= 0");
        check(xi_bq >= 0.0, "xi_bq must be >= 0");
        check(t_channel > 0.0 && t_channel <= 1.0, "t_channel out of (0,1]");
        check(n_total >= 1.0, "n_total must be >= 1");
        check(m_pe > 0.0 && m_pe <= n_total, "m_pe out of (0, n_total]");
        check(m_calib >= 1.0, "m_calib must be >= 1");
        check(pulse_width > 0.0, "pulse_width must be > 0");
        check(samples_per_symbol >= 1, "samples_per_symbol must be >= 1");
        check(filter_bw > 0.0, "filter_bw must be > 0");
        check(linewidth_total >= 0.0, "linewidth_total must be >= 0");
    }
};

namespace detail {

/// Number with optional k/M/G decimal suffix, e.g. "16M" == 16e6.
inline double parse_number(const std::string& text, int line_no) {
    const char* begin = text.c_str();
    char* end = nullptr;
    double value = std::strtod(begin, &end);
    if (end == begin)
        throw ConfigError("line " + std::to_string(line_no) +
                          ": not a number: '" + text + "'");
    std::string suffix(end);
    while (!suffix.empty() && std::isspace(static_cast<unsigned char>(suffix.back())))
        suffix.pop_back();
    if (suffix == "k") value *= 1e3;
    else if (suffix == "M") value *= 1e6;
    else if (suffix == "G") value *= 1e9;
    else if (!suffix.empty())
        throw ConfigError("line " + std::to_string(line_no) +
                          ": unknown numeric suffix '" + suffix + "'");
    return value;
}

} // namespace detail

/// Parses a flat key = value document into SystemParams.
///
/// Grammar: one `key = value` per line, `#` starts a comment, blank lines
/// ignored. Values accept scientific notation and k/M/G suffixes. The
/// excess-noise key is either `xi_bq` (per quadrature) or `xi_b` (total,
/// halved internally); giving both is an error. Unknown keys are rejected.
/// Absent keys keep their Table-1 defaults.
inline SystemParams load_config(std::string_view text) {
    SystemParams p;
    bool saw_xi_b = false, saw_xi_bq = false;

    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        auto trim = [](std::string s) {
            const char* ws = " \t\r\n";
            auto b = s.find_first_not_of(ws);
            if (b == std::string::npos) return std::string();
            auto e = s.find_last_not_of(ws);
            return s.substr(b, e - b + 1);
        };
        std::string stripped = trim(line);
        if (stripped.empty()) continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected 'key = value'");

        auto num = [&] { return detail::parse_number(value, line_no); };
        if (key == "v_elec") p.v_elec = num();
        else if (key == "beta") p.beta = num();
        else if (key == "eta") p.eta = num();
        else if (key == "rho") p.rho = num();
        else if (key == "rep_rate") p.rep_rate = num();
        else if (key == "quantum_fraction") p.quantum_fraction = num();
        else if (key == "epsilon_pe") p.epsilon_pe = num();
        else if (key == "va") p.va = num();
        else if (key == "xi_bq") { p.xi_bq = num(); saw_xi_bq = true; }
        else if (key == "xi_b") { p.xi_bq = num() / 2.0; saw_xi_b = true; }
        else if (key == "t_channel") p.t_channel = num();
        else if (key == "n_total") p.n_total = num();
        else if (key == "m_pe") p.m_pe = num();
        else if (key == "m_calib") p.m_calib = num();
        else if (key == "pulse_width") p.pulse_width = num();
        else if (key == "samples_per_symbol") p.samples_per_symbol = static_cast<int>(num());
        else if (key == "filter_bw") p.filter_bw = num();
        else if (key == "linewidth_total") p.linewidth_total = num();
        else if (key == "seed") p.seed = static_cast<std::uint64_t>(num());
        else
            throw ConfigError("line " + std::to_string(line_no) +
                              ": unknown key '" + key + "'");
    }
    if (saw_xi_b && saw_xi_bq)
        throw ConfigError("give either xi_b or xi_bq, not both");
    p.validate();
    return p;
}

inline SystemParams load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_config(buf.str());
}

/// Lossless serialization; load_config(to_config_text(p)) == p.
inline std::string to_config_text(const SystemParams& p) {
    std::ostringstream out;
    out.precision(17);
    out << "v_elec = " << p.v_elec << "\n"
        << "beta = " << p.beta << "\n"
        << "eta = " << p.eta << "\n"
        << "rho = " << p.rho << "\n"
        << "rep_rate = " << p.rep_rate << "\n"
        << "quantum_fraction = " << p.quantum_fraction << "\n"
        << "epsilon_pe = " << p.epsilon_pe << "\n"
        << "va = " << p.va << "\n"
        << "xi_bq = " << p.xi_bq << "\n"
        << "t_channel = " << p.t_channel << "\n"
        << "n_total = " << p.n_total << "\n"
        << "m_pe = " << p.m_pe << "\n"
        << "m_calib = " << p.m_calib << "\n"
        << "pulse_width = " << p.pulse_width << "\n"
        << "samples_per_symbol = " << p.samples_per_symbol << "\n"
        << "filter_bw = " << p.filter_bw << "\n"
        << "linewidth_total = " << p.linewidth_total << "\n"
        << "seed = " << p.seed << "\n";
    return out.str();
}

inline bool operator==(const SystemParams& a, const SystemParams& b) {
    return a.v_elec == b.v_elec && a.beta == b.beta && a.eta == b.eta &&
           a.rho == b.rho && a.rep_rate == b.rep_rate &&
           a.quantum_fraction == b.quantum_fraction &&
           a.epsilon_pe == b.epsilon_pe && a.va == b.va && a.xi_bq == b.xi_bq &&
           a.t_channel == b.t_channel && a.n_total == b.n_total &&
           a.m_pe == b.m_pe && a.m_calib == b.m_calib &&
           a.pulse_width == b.pulse_width &&
           a.samples_per_symbol == b.samples_per_symbol &&
           a.filter_bw == b.filter_bw &&
           a.linewidth_total == b.linewidth_total && a.seed == b.seed;
}

} // namespace cvqkd

#endif // CVQKD_SYSPARAMS_HPP
