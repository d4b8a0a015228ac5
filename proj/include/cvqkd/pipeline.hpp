#ifndef CVQKD_PIPELINE_HPP
#define CVQKD_PIPELINE_HPP

#include <algorithm>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "cvqkd/dsp.hpp"
#include "cvqkd/estimation.hpp"
#include "cvqkd/linksim.hpp"
#include "cvqkd/rng.hpp"
#include "cvqkd/security.hpp"
#include "cvqkd/sysparams.hpp"
#include "cvqkd/txmodel.hpp"

namespace cvqkd {

struct SimulationOptions {
    std::size_t n_symbols = 100000;
    std::size_t calib_slots = 200000; ///< slots per calibration record
    bool channel_noise = true;        ///< inject excess noise
    bool phase_walk = true;
    bool random_start_phase = true;
    std::size_t sync_window = 8160;   ///< symbols used for the sync correlation
    std::size_t chunk_slots = 4096;   ///< trace synthesis chunk size
    bool dump_stages = false;         ///< capture per-stage constellations
    std::size_t dump_limit = 20000;   ///< max slots captured per stage
};

struct SimulationResult {
    PointEstimates point;
    WorstCaseEstimates worst;
    SecurityReport skr_asym;
    SecurityReport skr_fs;
    SnuScale snu;
    DspResult dsp;
    double va_powermeter = 0.0;
    int sampling_phase = 0;
    int true_offset = 0;
    std::size_t n_pairs = 0;
    // Stage dumps (populated when dump_stages is set).
    std::vector<std::complex<double>> stage_downsampled;
    std::vector<std::complex<double>> stage_corrected;
};

namespace detail {

/// Chunked trace synthesis + fixed-phase downsampling; keeps peak memory at
/// one chunk of samples. The sampling phase is chosen on the first chunk.
inline std::vector<std::complex<double>> render_and_downsample(
    TraceSynthesizer& synth, std::span<const std::complex<double>> slot_means,
    RandomStream& rng, std::size_t chunk_slots, int& sampling_phase,
    bool choose_phase, bool signal_on = true, bool shot_on = true) {
    std::vector<std::complex<double>> slots;
    slots.reserve(slot_means.size());
    AcquiredTrace chunk;
    for (std::size_t begin = 0; begin < slot_means.size(); begin += chunk_slots) {
        const std::size_t end = std::min(begin + chunk_slots, slot_means.size());
        chunk.x_samples.clear();
        chunk.p_samples.clear();
        synth.emit(slot_means.subspan(begin, end - begin), rng, chunk, signal_on,
                   shot_on);
        const int n_sps = static_cast<int>(chunk.x_samples.size() / (end - begin));
        if (choose_phase && begin == 0)
            sampling_phase = downsample(chunk, n_sps).phase;
        auto vals = downsample_at(chunk, n_sps, sampling_phase);
        slots.insert(slots.end(), vals.begin(), vals.end());
    }
    return slots;
}

} // namespace detail

/// Full desk-scale run: frame generation, channel, oversampled receiver,
/// DSP chain, parameter estimation, and secret key rates.
inline SimulationResult run_simulation(const SystemParams& params,
                                       const SimulationOptions& options) {
    params.validate();
    const std::size_t period = 2040;
    if (options.n_symbols < period)
        throw ValidationError("n_symbols must be >= the pattern period (2040)");

    RandomStream rng_pattern = RandomStream::substream(params.seed, 0);
    RandomStream rng_channel = RandomStream::substream(params.seed, 1);
    RandomStream rng_trace = RandomStream::substream(params.seed, 2);
    RandomStream rng_shot = RandomStream::substream(params.seed, 3);
    RandomStream rng_elec = RandomStream::substream(params.seed, 4);
    RandomStream rng_misc = RandomStream::substream(params.seed, 5);

    // Alice's cyclic pseudo-random pattern, repeated over the frame. The
    // acquisition starts at an unknown (but reference-sign-aligned, hence
    // even) position in the cycle.
    const auto pattern = draw_symbols(period, params.va, rng_pattern);
    const int true_offset =
        2 * static_cast<int>(rng_misc.uniform_int(period / 2));
    std::vector<QuantumSymbol> sent(options.n_symbols);
    for (std::size_t k = 0; k < sent.size(); ++k)
        sent[k] = pattern[(k + static_cast<std::size_t>(true_offset)) % period];

    const SymbolFrame frame = build_frame(sent, params.rho, params.va);
    const double va_pm = estimate_va_powermeter(frame, 0.9);

    ChannelModel channel;
    channel.t_channel = params.t_channel;
    channel.linewidth_total = options.phase_walk ? params.linewidth_total : 0.0;
    channel.xi_alice =
        options.channel_noise
            ? alice_referred(params.xi_bq, params.eta, params.t_channel)
            : 0.0;
    channel.slot_duration = params.slot_duration();
    channel.initial_phase =
        options.random_start_phase
            ? 2.0 * std::numbers::pi * rng_misc.uniform()
            : 0.0;
    const PropagatedFrame prop = propagate(frame, channel, rng_channel);

    DetectorModel det;
    det.eta = params.eta;
    det.v_elec = params.v_elec;
    det.samples_per_symbol = params.samples_per_symbol;
    det.filter_bw = params.filter_bw;

    // Oversampled acquisition, rendered and downsampled in chunks.
    int sampling_phase = 0;
    TraceSynthesizer synth(det, params.pulse_width, channel.slot_duration);
    const auto slots = detail::render_and_downsample(
        synth, prop.means, rng_trace, options.chunk_slots, sampling_phase,
        /*choose_phase=*/true);

    // Calibration records, processed through the same chain.
    const std::vector<std::complex<double>> zeros(options.calib_slots, {0.0, 0.0});
    TraceSynthesizer synth_shot(det, params.pulse_width, channel.slot_duration);
    const auto shot_slots = detail::render_and_downsample(
        synth_shot, zeros, rng_shot, options.chunk_slots, sampling_phase, false,
        /*signal_on=*/false, /*shot_on=*/true);
    TraceSynthesizer synth_elec(det, params.pulse_width, channel.slot_duration);
    const auto elec_slots = detail::render_and_downsample(
        synth_elec, zeros, rng_elec, options.chunk_slots, sampling_phase, false,
        /*signal_on=*/false, /*shot_on=*/false);

    // Reference-aided phase recovery.
    const int ref_parity = detect_reference_parity(slots);
    const int quantum_parity = 1 - ref_parity;
    std::vector<std::complex<double>> refs;
    std::vector<std::size_t> ref_slot_idx;
    std::vector<int> signs;
    for (std::size_t i = static_cast<std::size_t>(ref_parity); i < slots.size();
         i += 2) {
        refs.push_back(slots[i]);
        ref_slot_idx.push_back(i);
        signs.push_back(signs.size() % 2 == 0 ? +1 : -1);
    }
    const PhaseRecovery rec = recover_phase(refs, signs);
    const auto track = interpolate_phase(rec.ref_phases, ref_slot_idx, slots.size());
    auto bob_q = correct_and_strip(slots, track, quantum_parity);

    SimulationResult result;
    result.sampling_phase = sampling_phase;
    result.true_offset = true_offset;
    result.va_powermeter = va_pm;
    if (options.dump_stages) {
        const std::size_t n1 = std::min(options.dump_limit, slots.size());
        result.stage_downsampled.assign(slots.begin(), slots.begin() + n1);
        const std::size_t n2 = std::min(options.dump_limit, bob_q.size());
        result.stage_corrected.assign(bob_q.begin(), bob_q.begin() + n2);
    }

    SymbolBlock block{std::move(bob_q), false};
    result.snu = normalize_snu(block, shot_slots, elec_slots);

    const int offset =
        synchronize(pattern, block.symbols, 1.5, options.sync_window);
    std::vector<std::complex<double>> alice(block.symbols.size());
    for (std::size_t k = 0; k < alice.size(); ++k)
        alice[k] = pattern[(k + static_cast<std::size_t>(offset)) % period];

    result.point = fit_point(alice, block.symbols, params.eta, params.v_elec);
    result.n_pairs = alice.size();
    result.worst = finite_size_bounds(
        result.point, va_pm, params.eta, result.snu.sigma0_sq,
        static_cast<double>(result.n_pairs),
        static_cast<double>(options.calib_slots), params.epsilon_pe);

    SystemParams est = params;
    est.t_channel = std::clamp(result.point.t_channel_hat, 1e-12, 1.0);
    est.xi_bq = std::max(result.point.xi_bq_hat, 0.0);
    result.skr_asym = skr_asymptotic(est, 1.0);
    const double n_total =
        std::max(params.n_total, static_cast<double>(result.n_pairs) + 1.0);
    result.skr_fs = skr_finite(est, result.worst, n_total,
                               static_cast<double>(result.n_pairs));

    result.dsp.alice_symbols = std::move(alice);
    result.dsp.bob_symbols = std::move(block.symbols);
    result.dsp.offset = offset;
    result.dsp.phase_track = track;
    return result;
}

} // namespace cvqkd

#endif // CVQKD_PIPELINE_HPP
