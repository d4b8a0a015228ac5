#ifndef CVQKD_DSP_HPP
#define CVQKD_DSP_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "cvqkd/errors.hpp"
#include "cvqkd/linksim.hpp"

namespace cvqkd {

/// Output of the offline DSP chain: aligned symbol pairs in SNU.
struct DspResult {
    std::vector<std::complex<double>> alice_symbols;
    std::vector<std::complex<double>> bob_symbols;
    int offset = 0;                  ///< detected pattern offset
    std::vector<double> phase_track; ///< estimated phase per slot, rad
};

/// One complex value per slot.
struct Downsampled {
    std::vector<std::complex<double>> slots;
    int phase = 0; ///< selected sampling phase k*
};

/// Slot values at a fixed sampling phase.
inline std::vector<std::complex<double>> downsample_at(const AcquiredTrace& trace,
                                                       int sps, int phase) {
    const std::size_t n_slots = trace.x_samples.size() / sps;
    std::vector<std::complex<double>> out(n_slots);
    for (std::size_t s = 0; s < n_slots; ++s)
        out[s] = {trace.x_samples[s * sps + phase],
                  trace.p_samples[s * sps + phase]};
    return out;
}

/// Selects the sampling phase k* maximizing the total energy
/// sum_n |s[k + n sps]|^2 (ties broken by smallest k) and returns the slot
/// values at that phase.
inline Downsampled downsample(const AcquiredTrace& trace, int sps) {
    if (trace.x_samples.empty())
        throw ValidationError("downsample: empty trace");
    if (trace.x_samples.size() % sps != 0)
        throw ValidationError("downsample: trace length not divisible by sps");
    const std::size_t n_slots = trace.x_samples.size() / sps;
    int best = 0;
    double best_energy = -1.0;
    for (int k = 0; k < sps; ++k) {
        double e = 0.0;
        for (std::size_t s = 0; s < n_slots; ++s) {
            const double x = trace.x_samples[s * sps + k];
            const double p = trace.p_samples[s * sps + k];
            e += x * x + p * p;
        }
        if (e > best_energy) {
            best_energy = e;
            best = k;
        }
    }
    return {downsample_at(trace, sps, best), best};
}

/// Which slot parity carries the references, by mean energy (references are
/// rho times brighter than quantum symbols).
inline int detect_reference_parity(std::span<const std::complex<double>> slots) {
    double e[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < slots.size(); ++i)
        e[i % 2] += std::norm(slots[i]);
    return e[1] > e[0] ? 1 : 0;
}

/// Per-reference phase estimates, sign-stripped and unwrapped.
struct PhaseRecovery {
    std::vector<double> ref_phases;
    std::vector<bool> flagged; ///< reference amplitude below the floor
};

/// Phase of each reference as arg(measured * sign), unwrapped so that
/// consecutive jumps stay in (-pi, pi].
inline PhaseRecovery recover_phase(std::span<const std::complex<double>> refs,
                                   std::span<const int> signs,
                                   double amplitude_floor = 0.0) {
    if (refs.size() != signs.size())
        throw ValidationError("recover_phase: refs/signs size mismatch");
    PhaseRecovery out;
    out.ref_phases.resize(refs.size());
    out.flagged.assign(refs.size(), false);
    double prev = 0.0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (std::abs(refs[i]) < amplitude_floor) out.flagged[i] = true;
        const double raw = std::arg(refs[i] * static_cast<double>(signs[i]));
        if (i == 0) {
            out.ref_phases[0] = raw;
        } else {
            const double jump = std::remainder(raw - prev, 2.0 * std::numbers::pi);
            out.ref_phases[i] = prev + jump;
        }
        prev = out.ref_phases[i];
    }
    return out;
}

/// Linear interpolation of reference phases to every slot index. Slots
/// before the first (after the last) reference take its phase unchanged.
inline std::vector<double> interpolate_phase(std::span<const double> ref_phases,
                                             std::span<const std::size_t> ref_slots,
                                             std::size_t n_slots) {
    if (ref_phases.empty() || ref_phases.size() != ref_slots.size())
        throw ValidationError("interpolate_phase: bad reference arrays");
    std::vector<double> track(n_slots);
    std::size_t seg = 0;
    for (std::size_t s = 0; s < n_slots; ++s) {
        while (seg + 1 < ref_slots.size() && ref_slots[seg + 1] < s) ++seg;
        if (s <= ref_slots.front()) {
            track[s] = ref_phases.front();
        } else if (s >= ref_slots.back()) {
            track[s] = ref_phases.back();
        } else {
            const double s0 = static_cast<double>(ref_slots[seg]);
            const double s1 = static_cast<double>(ref_slots[seg + 1]);
            const double w = (static_cast<double>(s) - s0) / (s1 - s0);
            track[s] = (1.0 - w) * ref_phases[seg] + w * ref_phases[seg + 1];
        }
    }
    return track;
}

/// Rotates every slot by -phase and keeps only the quantum slots (those at
/// index parity `quantum_parity`).
inline std::vector<std::complex<double>> correct_and_strip(
    std::span<const std::complex<double>> slots,
    std::span<const double> phase_track, int quantum_parity) {
    if (phase_track.size() < slots.size())
        throw ValidationError("correct_and_strip: phase track too short");
    std::vector<std::complex<double>> out;
    out.reserve(slots.size() / 2 + 1);
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (static_cast<int>(i % 2) != quantum_parity) continue;
        out.push_back(slots[i] *
                      std::exp(std::complex<double>(0.0, -phase_track[i])));
    }
    return out;
}

/// Cross-correlation pattern synchronization. Returns the cyclic offset s
/// such that bob[k] lines up with pattern[(k + s) mod P].
///
/// Throws SyncError when the correlation peak is not significant
/// (peak / runner-up magnitude below min_peak_ratio).
inline int synchronize(std::span<const std::complex<double>> pattern,
                       std::span<const std::complex<double>> bob,
                       double min_peak_ratio = 1.5,
                       std::size_t max_window = 0) {
    const std::size_t period = pattern.size();
    if (bob.size() < period)
        throw ValidationError("synchronize: bob sequence shorter than pattern");
    std::size_t window = bob.size();
    if (max_window > 0) window = std::min(window, std::max(max_window, period));
    int best = 0;
    double best_mag = -1.0, second_mag = 0.0;
    for (std::size_t s = 0; s < period; ++s) {
        std::complex<double> corr{0.0, 0.0};
        std::size_t idx = s;
        for (std::size_t k = 0; k < window; ++k) {
            corr += std::conj(pattern[idx]) * bob[k];
            if (++idx == period) idx = 0;
        }
        const double mag = std::abs(corr);
        if (mag > best_mag) {
            second_mag = best_mag;
            best_mag = mag;
            best = static_cast<int>(s);
        } else if (mag > second_mag) {
            second_mag = mag;
        }
    }
    if (second_mag > 0.0 && best_mag / second_mag < min_peak_ratio)
        throw SyncError("synchronize: correlation peak below significance "
                        "threshold (ratio " +
                        std::to_string(best_mag / std::max(second_mag, 1e-300)) +
                        ")");
    return best;
}

/// Symbol sequence with a one-shot SNU-normalization flag.
struct SymbolBlock {
    std::vector<std::complex<double>> symbols;
    bool snu_normalized = false;
};

struct SnuScale {
    double scale = 1.0;      ///< multiplicative factor applied to the symbols
    double sigma0_sq = 1.0;  ///< normalized shot+electronic variance, v_elec+1
    double v_elec_hat = 0.0; ///< normalized electronic variance
};

namespace detail {

inline double pooled_variance(std::span<const std::complex<double>> slots) {
    double acc = 0.0;
    for (const auto& v : slots) acc += std::norm(v);
    return acc / (2.0 * static_cast<double>(slots.size()));
}

} // namespace detail

/// Rescales the block so that pure vacuum noise has unit variance. The shot
/// record (signal off, LO on) carries shot + electronic noise; the optional
/// electronic record (LO off) lets the two be separated. Returns the scale
/// and sigma0^2 = v_elec + 1 in SNU.
inline SnuScale normalize_snu(SymbolBlock& block,
                              std::span<const std::complex<double>> shot_slots,
                              std::span<const std::complex<double>> elec_slots = {}) {
    if (block.snu_normalized)
        throw ValidationError("normalize_snu: block already normalized");
    if (shot_slots.empty())
        throw ValidationError("normalize_snu: empty calibration record");
    const double v_shot = detail::pooled_variance(shot_slots);
    const double v_elec = elec_slots.empty() ? 0.0 : detail::pooled_variance(elec_slots);
    const double pure = v_shot - v_elec;
    if (!(pure > 0.0))
        throw ValidationError("normalize_snu: degenerate calibration record");
    SnuScale s;
    s.scale = 1.0 / std::sqrt(pure);
    s.sigma0_sq = v_shot / pure;
    s.v_elec_hat = v_elec / pure;
    for (auto& v : block.symbols) v *= s.scale;
    block.snu_normalized = true;
    return s;
}

} // namespace cvqkd

#endif // CVQKD_DSP_HPP
