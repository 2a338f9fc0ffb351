#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ppgopt/beats.hpp"
#include "ppgopt/filter.hpp"
#include "ppgopt/metrics.hpp"
#include "ppgopt/synth.hpp"
#include "test_util.hpp"

using namespace ppgopt;

namespace {

Signal filtered_ecg(const Signal& raw) { return apply_zero_phase(design_bandpass(FilterSpec::ecg_default(), raw.fs()), raw); }

Signal filtered_ppg(const Signal& raw) { return apply_zero_phase(design_bandpass(FilterSpec::ppg_default(), raw.fs()), raw); }

// Fraction of truth beats with a detection within tol, and of detections near a truth beat.
std::pair<double, double> se_ppv(std::span<const Millis> found, const std::vector<double>& truth, double tol)
{
    auto near = [tol](double t, auto begin, auto end) {
        return std::any_of(begin, end, [&](auto v) { return std::abs(static_cast<double>(v) - t) <= tol; });
    };
    std::size_t hit = 0, good = 0;
    for (double t : truth) hit += near(t, found.begin(), found.end());
    for (Millis f : found) good += near(static_cast<double>(f), truth.begin(), truth.end());
    return {static_cast<double>(hit) / static_cast<double>(truth.size()),
            found.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(found.size())};
}

} // namespace

TEST(BeatSeries, StrictlyIncreasing)
{
    EXPECT_NO_THROW(BeatSeries({0, 800, 1650}, BeatSource::ECG));
    EXPECT_THROW(BeatSeries({0, 800, 800}, BeatSource::ECG), Error);
    EXPECT_THROW(BeatSeries({10, 5}, BeatSource::PPG), Error);
    const BeatSeries b({0, 800, 1650}, BeatSource::ECG);
    EXPECT_EQ(b.ibis(), (std::vector<double>{800, 850}));
    EXPECT_EQ(b.shifted(-100).times()[0], -100);
}

TEST(EcgDetect, CleanSixtyBpm)
{
    SynthConfig cfg;
    cfg.duration_s = 60;
    const auto beats = gen_beat_times(cfg);
    const auto ecg = filtered_ecg(gen_ecg(beats, 700.0, cfg));
    const auto found = detect_ecg_beats(ecg);
    EXPECT_NEAR(static_cast<double>(found.size()), 60.0, 1.0);
    for (double t : beats) {
        if (t < 100.0) continue; // R wave cut by the record start
        const auto it = std::min_element(found.times().begin(), found.times().end(),
                                         [t](Millis a, Millis b) { return std::abs(a - t) < std::abs(b - t); });
        EXPECT_LE(std::abs(static_cast<double>(*it) - t), 10.0);
    }
}

TEST(EcgDetect, FlatGivesNoBeats)
{
    const Signal zero(std::vector<double>(7000, 0.0), 700.0, 0, Role::ECG);
    EXPECT_TRUE(detect_ecg_beats(zero).empty());
}

TEST(EcgDetect, NoisyTenDb)
{
    SynthConfig cfg;
    cfg.duration_s = 120;
    cfg.mean_hr_bpm = 72;
    cfg.hrv_sd_ms = 40;
    cfg.noise_snr_db = 10.0;
    cfg.seed = 11;
    const auto beats = gen_beat_times(cfg);
    const auto found = detect_ecg_beats(filtered_ecg(gen_ecg(beats, 700.0, cfg)));
    const auto [se, ppv] = se_ppv(found.times(), beats, 50.0);
    EXPECT_GE(se, 0.99);
    EXPECT_GE(ppv, 0.99);
}

TEST(EcgDetect, RefractoryHolds)
{
    testutil::TestRng rng(5);
    std::vector<double> x(7000 * 3);
    for (double& v : x) v = rng.normal();
    const auto found = detect_ecg_beats(filtered_ecg(Signal(x, 700.0, 0, Role::ECG)));
    for (std::size_t i = 1; i < found.size(); ++i) EXPECT_GE(found.times()[i] - found.times()[i - 1], 250);
}

TEST(PpgDetect, CleanSixtyBpm)
{
    SynthConfig cfg;
    cfg.duration_s = 60;
    cfg.diastolic_frac = 0.3;
    const auto beats = gen_beat_times(cfg);
    const auto ppg = gen_ppg(beats, 64.0, cfg);
    const auto apices = detect_ppg_apices(filtered_ppg(ppg.signal));
    EXPECT_NEAR(static_cast<double>(apices.size()), 60.0, 1.0);
}

TEST(PpgDetect, FlatThrows)
{
    const Signal flat(std::vector<double>(640, 3.0), 64.0, 0, Role::PPG);
    try {
        detect_ppg_apices(flat);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NoBeatsDetected);
    }
}

TEST(PpgDetect, RateBounds)
{
    SynthConfig cfg;
    cfg.duration_s = 30;
    cfg.diastolic_frac = 0.0;
    cfg.mean_hr_bpm = 175;
    const auto fast = gen_ppg(gen_beat_times(cfg), 128.0, cfg);
    EXPECT_NO_THROW(detect_ppg_apices(fast.signal));

    // Same waveform but the detector only accepts up to 160 bpm: every level is rejected.
    PpgDetectorConfig strict;
    strict.max_bpm = 160;
    EXPECT_THROW(detect_ppg_apices(fast.signal, strict), Error);

    // Any accepted level implies a mean rate inside the bounds.
    testutil::TestRng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        cfg.mean_hr_bpm = rng.uniform(40, 200);
        cfg.seed = static_cast<std::uint64_t>(trial);
        const auto s = gen_ppg(gen_beat_times(cfg), 64.0, cfg).signal;
        try {
            const auto a = detect_ppg_apices(s);
            const double mean_ms = static_cast<double>(a.back() - a.front()) * 1000.0 / 64.0 / static_cast<double>(a.size() - 1);
            EXPECT_GE(60000.0 / mean_ms, 40.0 - 1e-9);
            EXPECT_LE(60000.0 / mean_ms, 180.0 + 1e-9);
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::NoBeatsDetected);
        }
    }
}

TEST(MiddleAmplitude, RampMidpoint)
{
    // 1 kHz ramp from 0 at t = 0 to 1 at t = 100 ms.
    std::vector<double> x(101);
    for (std::size_t i = 0; i <= 100; ++i) x[i] = static_cast<double>(i) / 100.0;
    const Signal s(x, 1000.0, 0, Role::PPG);
    const std::vector<std::size_t> apex{100};
    const auto b = locate_middle_amplitude(s, apex);
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(b.times()[0], 50);
}

TEST(MiddleAmplitude, FlatIsSkipped)
{
    const Signal s(std::vector<double>(50, 1.0), 100.0, 0, Role::PPG);
    const std::vector<std::size_t> apex{20, 40};
    EXPECT_TRUE(locate_middle_amplitude(s, apex).empty());
    const std::vector<std::size_t> first{0};
    EXPECT_TRUE(locate_middle_amplitude(Signal({1, 0, 2}, 100.0, 0, Role::PPG), first).empty());
}

TEST(MiddleAmplitude, InterpolatesBetweenSamples)
{
    // level 0.5 crossed between samples 2 (0.2) and 3 (0.8): position 2.5 -> 25 ms at 100 Hz
    const Signal s({0.0, 0.1, 0.2, 0.8, 1.0, 0.5}, 100.0, 0, Role::PPG);
    const std::vector<std::size_t> apex{4};
    EXPECT_EQ(locate_middle_amplitude(s, apex).times()[0], 25);
}

TEST(MiddleAmplitude, MatchesAnalyticCrossing)
{
    SynthConfig cfg;
    cfg.duration_s = 30;
    cfg.diastolic_frac = 0.0;
    cfg.mean_hr_bpm = 70;
    cfg.hrv_sd_ms = 30;
    cfg.seed = 3;
    const auto beats = gen_beat_times(cfg);
    const auto ppg = gen_ppg(beats, 64.0, cfg, 0);
    const auto found = detect_ppg_beats(ppg.signal);
    std::size_t checked = 0;
    for (double t : ppg.truth_ms) {
        if (t < 2000) continue; // first beats have a truncated upstroke
        const auto it = std::min_element(found.times().begin(), found.times().end(),
                                         [t](Millis a, Millis b) { return std::abs(a - t) < std::abs(b - t); });
        EXPECT_LE(std::abs(static_cast<double>(*it) - t), 1000.0 / 64.0) << t;
        ++checked;
    }
    EXPECT_GT(checked, 25u);
}

TEST(PpgDetect, TranslationEquivariant)
{
    SynthConfig cfg;
    cfg.duration_s = 40;
    cfg.mean_hr_bpm = 75;
    cfg.hrv_sd_ms = 20;
    cfg.noise_snr_db = 25;
    cfg.seed = 4;
    const auto raw = gen_ppg(gen_beat_times(cfg), 64.0, cfg).signal;
    const std::size_t k = 64;
    const std::vector<double> x(raw.samples().begin(), raw.samples().end());
    std::vector<double> shifted(k, x.front());
    shifted.insert(shifted.end(), x.begin(), x.end());
    const auto a = detect_ppg_beats(raw);
    const auto b = detect_ppg_beats(Signal(shifted, 64.0, 0, Role::PPG));
    const Millis dt = 1000;
    std::size_t same = 0;
    for (Millis t : a.times()) {
        if (t < 3000 || t > 37000) continue;
        same += std::find(b.times().begin(), b.times().end(), t + dt) != b.times().end();
    }
    std::size_t interior = std::count_if(a.times().begin(), a.times().end(), [](Millis t) { return t >= 3000 && t <= 37000; });
    EXPECT_EQ(same, interior);
}

TEST(PpgDetect, OutputStrictlyIncreasingOnNoise)
{
    testutil::TestRng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(64 * 30);
        for (double& v : x) v = rng.normal();
        try {
            const auto b = detect_ppg_beats(filtered_ppg(Signal(x, 64.0, 0, Role::PPG)));
            for (std::size_t i = 1; i < b.size(); ++i) EXPECT_GT(b.times()[i], b.times()[i - 1]);
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::NoBeatsDetected);
        }
    }
}
