#pragma once

// Synthetic ECG / PPG / accelerometer channels with known beat times.
//
// Random numbers: std::mt19937_64 (fully specified by the C++ standard), with
// uniform doubles taken as (draw >> 11) * 2^-53 and Gaussians from the cosine
// branch of Box-Muller on two uniforms. Channel noise streams are seeded with
// seed + 1 (PPG), seed + 2 (ECG), seed + 3 (ACC); beat times use seed itself.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ppgopt/error.hpp"
#include "ppgopt/signal.hpp"

namespace ppgopt {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal()
    {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

struct SynthConfig {
    double duration_s = 60.0;
    double mean_hr_bpm = 60.0;
    double hrv_sd_ms = 0.0;
    double resp_rate_hz = 0.25;
    double resp_amp_frac = 0.0;
    double diastolic_frac = 0.3;
    std::optional<double> noise_snr_db; // nullopt: noise off
    double baseline_wander_hz = 0.2;
    double baseline_wander_amp = 0.0;
    std::uint64_t seed = 1;

    void validate() const
    {
        if (!(mean_hr_bpm >= 30.0 && mean_hr_bpm <= 220.0)) throw Error(ErrorKind::InvalidInput, "mean_hr_bpm outside [30, 220]");
        if (!(duration_s > 0.0)) throw Error(ErrorKind::InvalidInput, "duration_s must be positive");
        if (!(diastolic_frac >= 0.0 && diastolic_frac < 1.0)) throw Error(ErrorKind::InvalidInput, "diastolic_frac outside [0, 1)");
        if (hrv_sd_ms < 0.0) throw Error(ErrorKind::InvalidInput, "hrv_sd_ms must be >= 0");
    }
};

inline constexpr double kSystolicSigmaMs = 80.0;
inline constexpr double kDiastolicSigmaMs = 100.0;
inline constexpr double kDiastolicDelayMs = 300.0;

/// Offset from the systolic apex to the half-amplitude point of its upstroke
/// for an isolated bump on a zero baseline: -sigma * sqrt(2 ln 2).
inline double ppg_mid_upstroke_offset_ms() { return -kSystolicSigmaMs * std::sqrt(2.0 * std::numbers::ln2); }

/// Beat times in ms from 0: IBI = 60000/hr + N(0, hrv_sd), clipped to [300, 2000].
inline std::vector<double> gen_beat_times(const SynthConfig& cfg)
{
    cfg.validate();
    Rng rng(cfg.seed);
    const double mean_ibi = 60000.0 / cfg.mean_hr_bpm;
    const double end = cfg.duration_s * 1000.0;
    std::vector<double> beats;
    for (double t = 0.0; t < end;) {
        beats.push_back(t);
        const double jitter = cfg.hrv_sd_ms > 0.0 ? cfg.hrv_sd_ms * rng.normal() : 0.0;
        t += std::clamp(mean_ibi + jitter, 300.0, 2000.0);
    }
    return beats;
}

namespace detail {

inline double gaussian(double dt_ms, double sigma_ms) { return std::exp(-0.5 * (dt_ms / sigma_ms) * (dt_ms / sigma_ms)); }

inline void add_noise(std::vector<double>& x, std::optional<double> snr_db, std::uint64_t seed)
{
    if (!snr_db || x.empty()) return;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double power = 0.0;
    for (double v : x) power += (v - mean) * (v - mean);
    power /= static_cast<double>(x.size());
    const double sd = std::sqrt(power / std::pow(10.0, *snr_db / 10.0));
    Rng rng(seed);
    for (double& v : x) v += sd * rng.normal();
}

// Sum of per-beat templates; only beats within `reach_ms` of a sample are visited.
template <typename Template>
std::vector<double> render(std::span<const double> beats, std::size_t n, double fs, double reach_ms, Template&& shape)
{
    std::vector<double> x(n, 0.0);
    std::size_t first = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * 1000.0 / fs;
        while (first < beats.size() && beats[first] < t - reach_ms) ++first;
        for (std::size_t b = first; b < beats.size() && beats[b] <= t + reach_ms; ++b) {
            x[i] += shape(t - beats[b], t);
        }
    }
    return x;
}

} // namespace detail

struct SynthPpg {
    Signal signal;
    std::vector<double> truth_ms; // half-amplitude crossing of each clean systolic upstroke
};

/// Systolic bump (sigma 80 ms) at each beat plus a diastolic bump
/// (diastolic_frac, sigma 100 ms) 300 ms later, amplitude-modulated by
/// respiration, plus baseline wander and white noise.
inline SynthPpg gen_ppg(std::span<const double> beats, double fs, const SynthConfig& cfg, Millis start_time_ms = 0)
{
    cfg.validate();
    const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * fs));
    auto x = detail::render(beats, n, fs, 1000.0, [&](double dt, double t) {
        const double pulse = detail::gaussian(dt, kSystolicSigmaMs) +
                             cfg.diastolic_frac * detail::gaussian(dt - kDiastolicDelayMs, kDiastolicSigmaMs);
        return pulse * (1.0 + cfg.resp_amp_frac * std::sin(2.0 * std::numbers::pi * cfg.resp_rate_hz * t / 1000.0));
    });
    if (cfg.baseline_wander_amp != 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += cfg.baseline_wander_amp * std::sin(2.0 * std::numbers::pi * cfg.baseline_wander_hz * static_cast<double>(i) / fs);
        }
    }
    detail::add_noise(x, cfg.noise_snr_db, cfg.seed + 1);

    SynthPpg out{Signal(std::move(x), fs, start_time_ms, Role::PPG), {}};
    out.truth_ms.reserve(beats.size());
    for (double b : beats) out.truth_ms.push_back(b + ppg_mid_upstroke_offset_ms());
    return out;
}

/// R spike (Gaussian sigma 10 ms, amplitude 1) with small P and T waves.
inline Signal gen_ecg(std::span<const double> beats, double fs, const SynthConfig& cfg, Millis start_time_ms = 0)
{
    cfg.validate();
    if (fs < 100.0) throw Error(ErrorKind::InvalidInput, "synthetic ECG needs fs >= 100 Hz");
    const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * fs));
    auto x = detail::render(beats, n, fs, 500.0, [](double dt, double) {
        return detail::gaussian(dt, 10.0) + 0.12 * detail::gaussian(dt + 180.0, 25.0) +
               0.3 * detail::gaussian(dt - 260.0, 45.0);
    });
    detail::add_noise(x, cfg.noise_snr_db, cfg.seed + 2);
    return Signal(std::move(x), fs, start_time_ms, Role::ECG);
}

/// Tri-axial accelerometer in g: gravity on z, small sensor noise, and an
/// optional sinusoidal movement on x.
inline std::array<Signal, 3> gen_acc(const SynthConfig& cfg, double fs, double motion_amp_g = 0.0,
                                     double motion_hz = 1.0, Millis start_time_ms = 0)
{
    cfg.validate();
    const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * fs));
    Rng rng(cfg.seed + 3);
    std::vector<double> ax(n), ay(n), az(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        ax[i] = motion_amp_g * std::sin(2.0 * std::numbers::pi * motion_hz * t) + 0.005 * rng.normal();
        ay[i] = 0.005 * rng.normal();
        az[i] = 1.0 + 0.005 * rng.normal();
    }
    return {Signal(std::move(ax), fs, start_time_ms, Role::ACC_X), Signal(std::move(ay), fs, start_time_ms, Role::ACC_Y),
            Signal(std::move(az), fs, start_time_ms, Role::ACC_Z)};
}

} // namespace ppgopt
