#ifndef CVQKD_IO_HPP
#define CVQKD_IO_HPP

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cvqkd/dsp.hpp"
#include "cvqkd/linksim.hpp"
#include "cvqkd/security.hpp"
#include "cvqkd/sysparams.hpp"
#include "cvqkd/txmodel.hpp"

namespace cvqkd {

inline constexpr const char* kToolVersion = "cvqkd 0.1.0";

/// Provenance header written on top of every output file. Reruns with an
/// equal manifest produce byte-identical data files.
struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    SystemParams params;

    void write(std::ostream& out) const {
        out << "# " << kToolVersion << "\n";
        out << "# command: " << command << "\n";
        out << "# seed: " << seed << "\n";
        std::istringstream cfg(to_config_text(params));
        std::string line;
        while (std::getline(cfg, line)) out << "# param: " << line << "\n";
    }
};

/// Flat key-value report, one `key = value` per line.
inline void write_report(std::ostream& out,
                         const std::vector<std::pair<std::string, std::string>>& kv,
                         const RunManifest* manifest = nullptr) {
    if (manifest) manifest->write(out);
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

inline std::string format_double(double v, int precision = 12) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

/// Frame export: slot_index, tag, x, p.
inline void write_frame_csv(std::ostream& out, const SymbolFrame& frame,
                            const RunManifest* manifest = nullptr) {
    if (manifest) manifest->write(out);
    out << "slot_index,tag,x,p\n";
    for (std::size_t i = 0; i < frame.slots.size(); ++i) {
        const auto& s = frame.slots[i];
        out << i << ',' << (s.is_reference ? "R" : "Q") << ','
            << format_double(s.amplitude.real()) << ','
            << format_double(s.amplitude.imag()) << "\n";
    }
}

/// Trace export: sample_index, x, p; sample rate recorded in the header.
inline void write_trace_csv(std::ostream& out, const AcquiredTrace& trace,
                            const RunManifest* manifest = nullptr) {
    if (manifest) manifest->write(out);
    out << "# sample_rate: " << format_double(trace.sample_rate) << "\n";
    out << "sample_index,x,p\n";
    for (std::size_t i = 0; i < trace.x_samples.size(); ++i)
        out << i << ',' << format_double(trace.x_samples[i]) << ','
            << format_double(trace.p_samples[i]) << "\n";
}

/// Constellation export: index, x, p.
inline void write_constellation_csv(
    std::ostream& out, std::span<const std::complex<double>> points,
    const RunManifest* manifest = nullptr) {
    if (manifest) manifest->write(out);
    out << "index,x,p\n";
    for (std::size_t i = 0; i < points.size(); ++i)
        out << i << ',' << format_double(points[i].real()) << ','
            << format_double(points[i].imag()) << "\n";
}

/// Attenuation sweep export: atten_db, regime, m, i_ab_bits, chi_be_bits, skr_bps.
inline void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows,
                            const RunManifest* manifest = nullptr) {
    if (manifest) manifest->write(out);
    out << "atten_db,regime,m,i_ab_bits,chi_be_bits,skr_bps\n";
    for (const auto& r : rows)
        out << format_double(r.atten_db) << ',' << r.regime << ','
            << format_double(r.m) << ',' << format_double(r.i_ab) << ','
            << format_double(r.chi_be) << ',' << format_double(r.skr_bps) << "\n";
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

} // namespace cvqkd

#endif // CVQKD_IO_HPP
