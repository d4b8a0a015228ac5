#ifndef CVQKD_TXMODEL_HPP
#define CVQKD_TXMODEL_HPP

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "cvqkd/errors.hpp"
#include "cvqkd/rng.hpp"

namespace cvqkd {

/// One Gaussian-modulated symbol; real part is the X quadrature, imaginary
/// part is P, both in SNU amplitude units (vacuum variance 1, <n> = |q|^2/4).
using QuantumSymbol = std::complex<double>;

/// i.i.d. symbols with each quadrature N(0, va). Deterministic per stream.
inline std::vector<QuantumSymbol> draw_symbols(std::size_t n, double va,
                                               RandomStream& rng) {
    if (n < 1)
        throw ValidationError("draw_symbols: n must be >= 1");
    if (!(va >= 0.0))
        throw ValidationError("draw_symbols: va must be >= 0");
    const double s = std::sqrt(va);
    std::vector<QuantumSymbol> out(n);
    for (auto& q : out)
        q = {s * rng.gaussian(), s * rng.gaussian()};
    return out;
}

/// Quantum symbols interleaved 1:1 with constant-amplitude reference pulses
/// of alternating sign. References sit on the X quadrature with amplitude
/// sqrt(2 rho va), so their mean photon number is rho times the quantum one.
struct SymbolFrame {
    struct Slot {
        bool is_reference = false;
        QuantumSymbol amplitude;
        int ref_sign = 0; ///< +1 / -1 for references, 0 for quantum slots
    };
    std::vector<Slot> slots;
    double ref_amplitude = 0.0;
    int pattern_period = 2040; ///< quantum symbols per pseudo-random cycle
    double va = 0.0;           ///< nominal modulation variance

    std::size_t quantum_count() const { return slots.size() / 2; }
};

inline SymbolFrame build_frame(std::span<const QuantumSymbol> symbols,
                               double rho, double va,
                               int pattern_period = 2040) {
    if (symbols.empty())
        throw ValidationError("build_frame: empty symbol list");
    if (!(rho > 0.0))
        throw ValidationError("build_frame: rho must be > 0");
    SymbolFrame frame;
    frame.va = va;
    frame.pattern_period = pattern_period;
    frame.ref_amplitude = std::sqrt(2.0 * rho * va);
    frame.slots.reserve(2 * symbols.size());
    int sign = +1;
    for (const auto& q : symbols) {
        frame.slots.push_back({false, q, 0});
        frame.slots.push_back(
            {true, {sign * frame.ref_amplitude, 0.0}, sign});
        sign = -sign;
    }
    return frame;
}

/// Total mean photon number of a frame by direct summation over slots.
inline double frame_total_photons(const SymbolFrame& frame) {
    double total = 0.0;
    for (const auto& s : frame.slots)
        total += std::norm(s.amplitude) / 4.0;
    return total;
}

/// Mach-Zehnder / carver model parameters. Extinction ratios in dB.
struct IQModulatorModel {
    double er_top = 25.0;          ///< top MZI of the IQ modulator
    double er_bottom = 22.0;       ///< bottom MZI
    double phase_bias_error = 0.0; ///< deviation from pi/2 between the MZIs
    double er_carver = 28.5;       ///< pulse carver
    double er_voa_max = 33.0;      ///< maximum VOA attenuation

    static IQModulatorModel ideal() {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return {inf, inf, 0.0, inf, inf};
    }
};

/// Field imbalance r from ER = 20 log10((1+r)/(1-r)); r in [0, 1].
inline double er_to_imbalance(double er_db) {
    if (!(er_db >= 0.0))
        throw ValidationError("extinction ratio must be >= 0 dB");
    if (std::isinf(er_db)) return 1.0;
    const double q = std::pow(10.0, er_db / 20.0);
    return (q - 1.0) / (q + 1.0);
}

/// Single-MZI complex field transmittance, normalized so max |t|^2 = 1:
/// t(phi) = (1 + r e^{i phi}) / (1 + r). Min/max power ratio is 10^(-ER/10).
inline std::complex<double> mzi_transfer(double phi, double er_db) {
    const double r = er_to_imbalance(er_db);
    return (1.0 + r * std::exp(std::complex<double>(0.0, phi))) / (1.0 + r);
}

/// Drive phases of the two nested MZIs, relative to the null point (phi = pi).
struct DrivePair {
    double u_i = 0.0;
    double u_q = 0.0;
};

/// Physical IQ-modulator transfer: both MZIs driven around their null,
/// combined with the nominal pi/2 offset plus bias error.
inline std::complex<double> iq_output(const DrivePair& d,
                                      const IQModulatorModel& model) {
    const std::complex<double> quad =
        std::exp(std::complex<double>(0.0, std::numbers::pi / 2.0 +
                                               model.phase_bias_error));
    return 0.5 * (mzi_transfer(std::numbers::pi + d.u_i, model.er_top) +
                  quad * mzi_transfer(std::numbers::pi + d.u_q, model.er_bottom));
}

namespace detail {

inline double wrap_pi(double x) {
    x = std::remainder(x, 2.0 * std::numbers::pi);
    return x;
}

} // namespace detail

/// Closed-form drive inversion for the ideal modulator (infinite ER, no bias
/// error). With r = 1 the transfer gives output ((1+i) - (e^{iu_I} + i e^{iu_Q}))/4,
/// so the drives follow from decomposing Z = (1+i) - 4 w into two unit phasors.
inline DrivePair ideal_drives(std::complex<double> target) {
    const std::complex<double> z =
        std::complex<double>(1.0, 1.0) - 4.0 * target;
    const double mag = std::abs(z);
    if (mag > 2.0)
        throw ValidationError("target exceeds modulator dynamic range");
    const double half = std::acos(std::min(mag / 2.0, 1.0));
    const double base = std::arg(z);
    DrivePair d;
    d.u_i = detail::wrap_pi(base - half);
    d.u_q = detail::wrap_pi(base + half - std::numbers::pi / 2.0);
    return d;
}

/// Default field-per-SNU gain: symbols up to |q| ~ 10 stay inside the
/// modulator's symmetric dynamic range (radius 0.5 - sqrt(2)/4 ~ 0.146).
inline constexpr double kDriveScale = 0.0125;

/// Output in symbol units for a target driven with naive (ideal-model)
/// drives. With an ideal model this reproduces the target exactly (the
/// fixed field gain divides out); with finite ER it shows the distortion
/// that predistortion removes.
inline std::complex<double> iq_modulate(std::complex<double> target,
                                        const IQModulatorModel& model,
                                        double scale = kDriveScale) {
    return iq_output(ideal_drives(scale * target), model) / scale;
}

/// Output in symbol units for explicit drives.
inline std::complex<double> iq_apply(const DrivePair& d,
                                     const IQModulatorModel& model,
                                     double scale = kDriveScale) {
    return iq_output(d, model) / scale;
}

/// Drives such that iq_output reproduces scale*target on the actual
/// (possibly distorted) modulator, found by 2D Newton from the ideal-drive
/// start.
inline DrivePair predistort(std::complex<double> symbol_target,
                            const IQModulatorModel& model,
                            double scale = kDriveScale) {
    const std::complex<double> target = scale * symbol_target;
    DrivePair d = ideal_drives(target);
    const double r_top = er_to_imbalance(model.er_top);
    const double r_bot = er_to_imbalance(model.er_bottom);
    const std::complex<double> quad =
        std::exp(std::complex<double>(0.0, std::numbers::pi / 2.0 +
                                               model.phase_bias_error));
    const double tol = 1e-13 * (1.0 + std::abs(target));
    for (int iter = 0; iter < 80; ++iter) {
        const std::complex<double> f = iq_output(d, model) - target;
        if (std::abs(f) < tol) return d;
        const std::complex<double> ja =
            0.5 * std::complex<double>(0.0, 1.0) * r_top *
            std::exp(std::complex<double>(0.0, std::numbers::pi + d.u_i)) /
            (1.0 + r_top);
        const std::complex<double> jb =
            0.5 * quad * std::complex<double>(0.0, 1.0) * r_bot *
            std::exp(std::complex<double>(0.0, std::numbers::pi + d.u_q)) /
            (1.0 + r_bot);
        const double det = ja.real() * jb.imag() - jb.real() * ja.imag();
        if (std::abs(det) < 1e-14)
            break;
        const double du_i = (f.real() * jb.imag() - jb.real() * f.imag()) / det;
        const double du_q = (ja.real() * f.imag() - f.real() * ja.imag()) / det;
        d.u_i = detail::wrap_pi(d.u_i - du_i);
        d.u_q = detail::wrap_pi(d.u_q - du_q);
    }
    if (std::abs(iq_output(d, model) - target) < 1e-9 * (1.0 + std::abs(target)))
        return d;
    throw ValidationError("predistort: target outside the achievable constellation");
}

inline std::vector<DrivePair> predistort(std::span<const std::complex<double>> targets,
                                         const IQModulatorModel& model,
                                         double scale = kDriveScale) {
    std::vector<DrivePair> out;
    out.reserve(targets.size());
    for (const auto& t : targets) out.push_back(predistort(t, model, scale));
    return out;
}

/// Field-domain scale mapping SNU symbols into the modulator's achievable
/// disk. sigma_margin standard deviations of quadrature amplitude fit inside
/// 90% of the symmetric dynamic range.
inline double constellation_scale(double va, double sigma_margin = 6.0) {
    // Largest zero-centered disk inside the ideal achievable set.
    const double r_max = 0.5 - std::abs(std::complex<double>(0.25, 0.25));
    return 0.9 * r_max / (sigma_margin * std::sqrt(std::max(va, 1e-300)));
}

/// Multiplicative pulse-carving envelope floor in field units; finite
/// carver ER leaks 10^(-ER/20) of the field into "off" samples.
inline double carver_field_floor(double er_carver_db) {
    if (std::isinf(er_carver_db)) return 0.0;
    return std::pow(10.0, -er_carver_db / 20.0);
}

/// Modulation-variance estimate from the average optical power on a tap arm
/// (the 90:10 power-meter monitor). The known reference-pulse contribution
/// is removed; the estimate is normalized by the tap fraction, so it is
/// invariant to it. Unbiased: E[(x^2+p^2)/4] = va/2 per quantum slot.
inline double estimate_va_powermeter(const SymbolFrame& frame,
                                     double tap_fraction) {
    if (!(tap_fraction > 0.0 && tap_fraction < 1.0))
        throw ValidationError("tap_fraction out of (0,1)");
    std::size_t n_q = 0, n_ref = 0;
    double tap_power = 0.0;
    for (const auto& s : frame.slots) {
        tap_power += tap_fraction * std::norm(s.amplitude) / 4.0;
        (s.is_reference ? n_ref : n_q)++;
    }
    if (n_q == 0)
        throw ValidationError("estimate_va_powermeter: frame has no quantum slots");
    const double total_photons = tap_power / tap_fraction;
    const double ref_photons =
        static_cast<double>(n_ref) * frame.ref_amplitude * frame.ref_amplitude / 4.0;
    return 2.0 * (total_photons - ref_photons) / static_cast<double>(n_q);
}

} // namespace cvqkd

#endif // CVQKD_TXMODEL_HPP
