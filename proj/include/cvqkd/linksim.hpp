#ifndef CVQKD_LINKSIM_HPP
#define CVQKD_LINKSIM_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "cvqkd/errors.hpp"
#include "cvqkd/rng.hpp"
#include "cvqkd/txmodel.hpp"

namespace cvqkd {

/// Fiber channel: loss, Wiener phase walk, excess-noise injection.
/// xi_alice is the excess noise referred to Alice's output (pre-loss); the
/// equivalent Bob-side value is xi_Bq = eta T xi_alice / 2.
struct ChannelModel {
    double t_channel = 1.0;
    double linewidth_total = 0.0; ///< Hz
    double xi_alice = 0.0;        ///< SNU per quadrature
    double slot_duration = 62.5e-9;
    double initial_phase = 0.0;

    void validate() const {
        if (!(t_channel > 0.0 && t_channel <= 1.0))
            throw ValidationError("t_channel out of (0,1]");
        if (!(xi_alice >= 0.0))
            throw ValidationError("xi_alice must be >= 0");
        if (!(linewidth_total >= 0.0))
            throw ValidationError("linewidth_total must be >= 0");
        if (!(slot_duration > 0.0))
            throw ValidationError("slot_duration must be > 0");
    }
};

/// Heterodyne receiver: efficiency, electronic noise, acquisition settings.
struct DetectorModel {
    double eta = 1.0;
    double v_elec = 0.0;          ///< SNU per quadrature
    int samples_per_symbol = 125;
    double filter_bw = 50e6;      ///< single-pole low-pass, Hz

    void validate() const {
        if (!(eta > 0.0 && eta <= 1.0))
            throw ValidationError("eta out of (0,1]");
        if (!(v_elec >= 0.0))
            throw ValidationError("v_elec must be >= 0");
        if (samples_per_symbol < 1)
            throw ValidationError("samples_per_symbol must be >= 1");
    }
};

/// Oversampled dual-quadrature receiver record (simulated scope output).
struct AcquiredTrace {
    std::vector<double> x_samples;
    std::vector<double> p_samples;
    double sample_rate = 0.0;
};

/// Channel output: per-slot complex means plus the phase-walk track.
struct PropagatedFrame {
    std::vector<std::complex<double>> means;
    std::vector<double> phases;
};

/// Scales slot means by sqrt(T), rotates them along a Wiener phase walk with
/// per-slot increments N(0, 2 pi linewidth slot_duration), and adds Gaussian
/// quadrature noise of variance T * xi_alice.
inline PropagatedFrame propagate(std::span<const std::complex<double>> slot_means,
                                 const ChannelModel& channel, RandomStream& rng) {
    channel.validate();
    const double amp = std::sqrt(channel.t_channel);
    const double walk_var =
        2.0 * std::numbers::pi * channel.linewidth_total * channel.slot_duration;
    const double noise_var = channel.t_channel * channel.xi_alice;
    PropagatedFrame out;
    out.means.resize(slot_means.size());
    out.phases.resize(slot_means.size());
    double phase = channel.initial_phase;
    for (std::size_t i = 0; i < slot_means.size(); ++i) {
        phase += rng.gaussian(walk_var);
        out.phases[i] = phase;
        std::complex<double> m =
            amp * slot_means[i] * std::exp(std::complex<double>(0.0, phase));
        m += std::complex<double>(rng.gaussian(noise_var), rng.gaussian(noise_var));
        out.means[i] = m;
    }
    return out;
}

inline PropagatedFrame propagate(const SymbolFrame& frame,
                                 const ChannelModel& channel, RandomStream& rng) {
    std::vector<std::complex<double>> means;
    means.reserve(frame.slots.size());
    for (const auto& s : frame.slots) means.push_back(s.amplitude);
    return propagate(means, channel, rng);
}

/// One heterodyne measurement in SNU: mean scaled by sqrt(eta/2), additive
/// N(0, 1 + v_elec) per quadrature (shot + electronic).
inline std::complex<double> heterodyne_measure(std::complex<double> slot_mean,
                                               const DetectorModel& det,
                                               RandomStream& rng) {
    const double gain = std::sqrt(det.eta / 2.0);
    const double nv = 1.0 + det.v_elec;
    return gain * slot_mean +
           std::complex<double>(rng.gaussian(nv), rng.gaussian(nv));
}

/// Renders slot means as raised-cosine pulses sampled at
/// samples_per_symbol per slot, with white per-sample noise and a
/// single-pole low-pass at filter_bw.
///
/// Both the envelope and the noise are pre-scaled by the filter's pulse-peak
/// and noise-variance gains, so the peak-sample readout of a slot reproduces
/// heterodyne_measure statistics exactly: peak value sqrt(eta/2) * mean,
/// noise variance 1 + v_elec per quadrature. Filter state persists across
/// emit() calls, so long frames can be produced in chunks.
class TraceSynthesizer {
public:
    TraceSynthesizer(const DetectorModel& det, double pulse_width,
                     double slot_duration,
                     double carve_floor_db = std::numeric_limits<double>::infinity())
        : det_(det), slot_duration_(slot_duration) {
        det_.validate();
        if (det_.samples_per_symbol < 4)
            throw ValidationError("samples_per_symbol must be >= 4 for traces");
        if (!(pulse_width > 0.0) || pulse_width > slot_duration)
            throw ValidationError("pulse wider than slot");
        sample_rate_ = det_.samples_per_symbol / slot_duration;

        const double a = filter_coeff();
        noise_gain_ = a > 0.0 ? (1.0 - a) / (1.0 + a) : 1.0;

        // Raised-cosine envelope centered in the slot, with the carver's
        // extinction floor leaking into "off" samples.
        const double floor = carver_field_floor(carve_floor_db);
        envelope_.resize(det_.samples_per_symbol);
        const double dt = 1.0 / sample_rate_;
        const double center = slot_duration / 2.0;
        for (int j = 0; j < det_.samples_per_symbol; ++j) {
            const double tau = (j + 0.5) * dt - center;
            double rc = 0.0;
            if (std::abs(tau) <= pulse_width / 2.0)
                rc = 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * tau / pulse_width));
            envelope_[j] = floor + (1.0 - floor) * rc;
        }

        // Peak gain of the filtered envelope (isolated pulse).
        if (a > 0.0) {
            double y = 0.0, peak = 0.0;
            peak_index_ = 0;
            for (int j = 0; j < det_.samples_per_symbol; ++j) {
                y = a * y + (1.0 - a) * envelope_[j];
                if (y > peak) {
                    peak = y;
                    peak_index_ = j;
                }
            }
            envelope_gain_ = peak;
        } else {
            peak_index_ = static_cast<int>(
                std::max_element(envelope_.begin(), envelope_.end()) -
                envelope_.begin());
            envelope_gain_ = envelope_[peak_index_];
        }
    }

    double sample_rate() const { return sample_rate_; }
    int peak_index() const { return peak_index_; }
    double envelope_gain() const { return envelope_gain_; }

    /// Appends the rendered samples for a chunk of slots to `out`.
    void emit(std::span<const std::complex<double>> slot_means, RandomStream& rng,
              AcquiredTrace& out, bool signal_on = true, bool shot_on = true) {
        out.sample_rate = sample_rate_;
        const int sps = det_.samples_per_symbol;
        const std::size_t base = out.x_samples.size();
        out.x_samples.resize(base + slot_means.size() * sps);
        out.p_samples.resize(base + slot_means.size() * sps);
        const double gain = std::sqrt(det_.eta / 2.0) / envelope_gain_;
        const double nv = (shot_on ? 1.0 + det_.v_elec : det_.v_elec) / noise_gain_;
        const double ns = std::sqrt(nv);
        for (std::size_t s = 0; s < slot_means.size(); ++s) {
            const double mx = signal_on ? gain * slot_means[s].real() : 0.0;
            const double mp = signal_on ? gain * slot_means[s].imag() : 0.0;
            for (int j = 0; j < sps; ++j) {
                const std::size_t k = base + s * sps + j;
                out.x_samples[k] = mx * envelope_[j] + ns * rng.gaussian();
                out.p_samples[k] = mp * envelope_[j] + ns * rng.gaussian();
            }
        }
        const double a = filter_coeff();
        if (a > 0.0) {
            for (std::size_t k = base; k < out.x_samples.size(); ++k) {
                fx_ = a * fx_ + (1.0 - a) * out.x_samples[k];
                fp_ = a * fp_ + (1.0 - a) * out.p_samples[k];
                out.x_samples[k] = fx_;
                out.p_samples[k] = fp_;
            }
        }
    }

private:
    double filter_coeff() const {
        if (!(det_.filter_bw > 0.0) || det_.filter_bw >= sample_rate_ / 2.0)
            return 0.0; // wideband: no filtering
        return std::exp(-2.0 * std::numbers::pi * det_.filter_bw / sample_rate_);
    }

    DetectorModel det_;
    double slot_duration_;
    double sample_rate_ = 0.0;
    double noise_gain_ = 1.0;
    double envelope_gain_ = 1.0;
    int peak_index_ = 0;
    std::vector<double> envelope_;
    double fx_ = 0.0, fp_ = 0.0; // filter state
};

/// Whole-frame trace in one call.
inline AcquiredTrace synthesize_trace(std::span<const std::complex<double>> slot_means,
                                      const DetectorModel& det, double pulse_width,
                                      double slot_duration, RandomStream& rng,
                                      double carve_floor_db =
                                          std::numeric_limits<double>::infinity()) {
    TraceSynthesizer synth(det, pulse_width, slot_duration, carve_floor_db);
    AcquiredTrace trace;
    synth.emit(slot_means, rng, trace);
    return trace;
}

/// Signal-off record (LO on): per-sample statistics of shot + electronic
/// noise, used downstream to fix the SNU scale.
inline AcquiredTrace shot_calibration_trace(const DetectorModel& det,
                                            std::size_t n_slots,
                                            double pulse_width,
                                            double slot_duration,
                                            RandomStream& rng) {
    TraceSynthesizer synth(det, pulse_width, slot_duration);
    std::vector<std::complex<double>> zeros(n_slots, {0.0, 0.0});
    AcquiredTrace trace;
    synth.emit(zeros, rng, trace, /*signal_on=*/false, /*shot_on=*/true);
    return trace;
}

/// LO-off record: electronic noise only.
inline AcquiredTrace elec_calibration_trace(const DetectorModel& det,
                                            std::size_t n_slots,
                                            double pulse_width,
                                            double slot_duration,
                                            RandomStream& rng) {
    TraceSynthesizer synth(det, pulse_width, slot_duration);
    std::vector<std::complex<double>> zeros(n_slots, {0.0, 0.0});
    AcquiredTrace trace;
    synth.emit(zeros, rng, trace, /*signal_on=*/false, /*shot_on=*/false);
    return trace;
}

} // namespace cvqkd

#endif // CVQKD_LINKSIM_HPP
