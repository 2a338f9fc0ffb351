#pragma once

// Synthetic cohorts: many (participant, task) recordings generated from
// SynthConfig, usable in memory or written out as an on-disk dataset.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ppgopt/config.hpp"
#include "ppgopt/evaluate.hpp"
#include "ppgopt/io.hpp"
#include "ppgopt/pipeline.hpp"
#include "ppgopt/synth.hpp"

namespace ppgopt {

struct SynthRecordingSpec {
    std::string participant;
    std::string task;
    SynthConfig synth;
    double ppg_fs = 64.0;
    double ecg_fs = 256.0;
    double acc_fs = 32.0;
    double motion_amp_g = 0.0;
    Millis start_ms = 1'600'000'000'000; // epoch ms, shared by all channels
};

struct SynthRecording {
    SynthRecordingSpec spec;
    std::vector<double> beats_ms; // ground truth, relative to start_ms
    SynthPpg ppg;
    Signal ecg;
    std::array<Signal, 3> acc;
};

inline SynthRecording generate(const SynthRecordingSpec& spec)
{
    SynthRecording r;
    r.spec = spec;
    r.beats_ms = gen_beat_times(spec.synth);
    r.ppg = gen_ppg(r.beats_ms, spec.ppg_fs, spec.synth, spec.start_ms);
    r.ecg = gen_ecg(r.beats_ms, spec.ecg_fs, spec.synth, spec.start_ms);
    r.acc = gen_acc(spec.synth, spec.acc_fs, spec.motion_amp_g, 1.0, spec.start_ms);
    return r;
}

/// True beats rounded to ms.
inline BeatSeries truth_beats(const SynthRecording& r)
{
    std::vector<Millis> t;
    for (double b : r.beats_ms) t.push_back(round_ms(b));
    return BeatSeries(std::move(t), BeatSource::ECG);
}

/// In-memory recording. Reference beats are the ground truth, or detected
/// from the synthetic ECG when detect_ecg is set.
inline Recording to_recording(const SynthRecording& s, const RunConfig& cfg, bool detect_ecg = false)
{
    Recording r;
    r.participant = s.spec.participant;
    r.task = s.spec.task;
    r.ppg = s.ppg.signal;
    r.ecg_beats = detect_ecg ? ecg_reference_beats(s.ecg, cfg) : truth_beats(s);
    r.ppg_offset_ms = 0;
    r.windows = tile_windows(std::min(s.ecg.duration_ms(), s.ppg.signal.duration_ms()), cfg.window_ms);
    r.motion_auc.assign(r.windows.size(), std::nullopt);
    const auto auc = motion_auc(s.acc[0], s.acc[1], s.acc[2], r.windows);
    for (std::size_t i = 0; i < auc.size(); ++i) r.motion_auc[i] = auc[i];
    return r;
}

inline Dataset to_dataset(const std::vector<SynthRecording>& cohort, const RunConfig& cfg, bool detect_ecg = false)
{
    Dataset d;
    for (const auto& s : cohort) d.recordings.push_back(to_recording(s, cfg, detect_ecg));
    return d;
}

/// Cohort with per-participant heart rate between 0.8 and 1.5 Hz. Every
/// other participant carries strong baseline wander inside the default
/// pass band, a little below their heart rate.
inline std::vector<SynthRecordingSpec> synthetic_cohort(std::size_t participants, const std::vector<std::string>& tasks,
                                                        double duration_s, std::uint64_t seed)
{
    std::vector<SynthRecordingSpec> out;
    Rng rng(seed);
    for (std::size_t p = 0; p < participants; ++p) {
        const double hr_hz = participants > 1 ? 0.8 + 0.65 * static_cast<double>(p) / static_cast<double>(participants - 1) : 1.1;
        const bool wander = p % 2 == 1;
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            SynthRecordingSpec s;
            char id[32];
            std::snprintf(id, sizeof id, "p%02zu", p + 1);
            s.participant = id;
            s.task = tasks[t];
            s.synth.duration_s = duration_s;
            s.synth.mean_hr_bpm = 60.0 * hr_hz * (1.0 + 0.03 * static_cast<double>(t));
            s.synth.hrv_sd_ms = 25.0 + 10.0 * rng.uniform();
            s.synth.resp_amp_frac = 0.2;
            s.synth.resp_rate_hz = 0.2 + 0.1 * rng.uniform();
            s.synth.diastolic_frac = 0.3;
            s.synth.noise_snr_db = 20.0;
            if (wander) {
                s.synth.baseline_wander_hz = std::max(0.55, 0.6 * hr_hz);
                s.synth.baseline_wander_amp = 3.0;
            }
            s.synth.seed = rng.next() >> 16;
            s.motion_amp_g = 0.05 * static_cast<double>(t);
            out.push_back(s);
        }
    }
    return out;
}

inline std::vector<SynthRecording> generate(const std::vector<SynthRecordingSpec>& specs)
{
    std::vector<SynthRecording> out;
    for (const auto& s : specs) out.push_back(generate(s));
    return out;
}

/// Writes every recording under dir/<participant>/<task>/ (BVP.csv and
/// ACC.csv in E4 layout, ECG.csv as time_ms,value, beats.csv with the true
/// beats in ms from the recording start) plus dir/manifest.json.
inline io::DatasetManifest write_cohort(const std::filesystem::path& dir, const std::vector<SynthRecording>& cohort)
{
    io::DatasetManifest m;
    m.base_dir = dir;
    for (const auto& s : cohort) {
        const auto sub = dir / s.spec.participant / s.spec.task;
        io::ManifestEntry e;
        e.participant = s.spec.participant;
        e.task = s.spec.task;
        e.ppg = sub / "BVP.csv";
        e.ecg = sub / "ECG.csv";
        e.acc = sub / "ACC.csv";
        e.ecg_fs = s.spec.ecg_fs;
        io::write_e4_csv(e.ppg, s.ppg.signal);
        io::write_signal_csv(*e.ecg, s.ecg);
        io::write_e4_acc(*e.acc, s.acc);
        io::write_beats_csv(sub / "beats.csv", truth_beats(s));
        m.recordings.push_back(e);
    }
    io::write_manifest(dir / "manifest.json", m);
    return m;
}

} // namespace ppgopt
