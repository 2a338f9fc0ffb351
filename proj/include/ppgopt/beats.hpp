#pragma once

// Beat detection: ECG R peaks from a Shannon-energy envelope, PPG apices from
// adaptive moving-average thresholding, and the PPG middle-amplitude fiducial.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ppgopt/error.hpp"
#include "ppgopt/signal.hpp"

namespace ppgopt {

enum class BeatSource { ECG, PPG };

/// Strictly increasing beat timestamps in ms since signal start.
class BeatSeries {
public:
    BeatSeries() = default;
    BeatSeries(std::vector<Millis> times_ms, BeatSource source) : times_(std::move(times_ms)), source_(source)
    {
        for (std::size_t i = 1; i < times_.size(); ++i) {
            if (times_[i] <= times_[i - 1]) {
                throw Error(ErrorKind::ValidationError, "beat times not strictly increasing at index " + std::to_string(i));
            }
        }
    }

    [[nodiscard]] std::span<const Millis> times() const noexcept { return times_; }
    [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
    [[nodiscard]] bool empty() const noexcept { return times_.empty(); }
    [[nodiscard]] BeatSource source() const noexcept { return source_; }

    [[nodiscard]] std::vector<double> ibis() const
    {
        std::vector<double> out;
        for (std::size_t i = 1; i < times_.size(); ++i) out.push_back(static_cast<double>(times_[i] - times_[i - 1]));
        return out;
    }

    [[nodiscard]] BeatSeries shifted(Millis offset) const
    {
        BeatSeries s = *this;
        for (Millis& t : s.times_) t += offset;
        return s;
    }

private:
    std::vector<Millis> times_;
    BeatSource source_ = BeatSource::ECG;
};

struct EcgDetectorConfig {
    double smoothing_ms = 65.0;
    double refractory_ms = 250.0;
    double refine_ms = 80.0;
    double block_ms = 2000.0;     // envelope threshold is relative to the median per-block maximum
    double threshold_frac = 0.3;
};

struct PpgDetectorConfig {
    double moving_average_ms = 750.0;
    double min_bpm = 40.0;
    double max_bpm = 180.0;
    // Threshold offsets above the moving average, in percent of half the
    // signal's peak-to-peak range.
    std::vector<double> levels_percent = {0, 5, 10, 15, 20, 25, 30, 40, 50, 60, 70, 80, 90};
    double foot_lookback_ms = 2000.0;
    // Interval SDs closer than this (in sample periods) count as equal; the
    // level with more apices then wins. Keeps edge beats that sample jitter
    // alone would otherwise trade away.
    double sd_tie_samples = 0.5;
};

namespace detail {

// Centered moving average with windows shrinking at the edges.
inline std::vector<double> moving_average(std::span<const double> x, std::size_t width)
{
    const std::size_t n = x.size();
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
    const std::size_t half = width / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n, i + half + 1);
        out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
    }
    return out;
}

inline std::size_t samples_for(double ms, double fs) { return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ms * fs / 1000.0))); }

inline double median(std::vector<double> v)
{
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid))) / 2.0;
    }
    return m;
}

// Greedy non-maximum suppression: keep the highest-scoring indices no closer
// than `gap` samples to an already kept one. Result is sorted by index.
inline std::vector<std::size_t> suppress(std::vector<std::size_t> idx, std::span<const double> score, std::size_t gap)
{
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    std::vector<std::size_t> kept;
    for (std::size_t i : idx) {
        bool ok = true;
        for (std::size_t k : kept) {
            if ((i > k ? i - k : k - i) < gap) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(i);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

} // namespace detail

/// R peaks of a band-passed ECG.
///
/// First difference -> amplitude normalization -> Shannon energy
/// -x^2 ln x^2 -> moving-average envelope -> envelope peaks above an adaptive
/// threshold -> each refined to the largest |ecg| sample within +-refine_ms,
/// with a refractory period between accepted beats.
inline BeatSeries detect_ecg_beats(const Signal& ecg, const EcgDetectorConfig& cfg = {})
{
    const auto x = ecg.samples();
    const double fs = ecg.fs();
    if (x.size() < 3) return BeatSeries({}, BeatSource::ECG);

    std::vector<double> d(x.size() - 1);
    double peak = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        d[i] = x[i + 1] - x[i];
        peak = std::max(peak, std::abs(d[i]));
    }
    if (!(peak > 0.0)) return BeatSeries({}, BeatSource::ECG);

    std::vector<double> energy(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double v = d[i] / peak;
        const double sq = v * v;
        energy[i] = sq > 0.0 ? -sq * std::log(sq) : 0.0;
    }
    const auto env = detail::moving_average(energy, detail::samples_for(cfg.smoothing_ms, fs));

    const std::size_t block = detail::samples_for(cfg.block_ms, fs);
    std::vector<double> block_max;
    for (std::size_t start = 0; start < env.size(); start += block) {
        const auto end = std::min(env.size(), start + block);
        block_max.push_back(*std::max_element(env.begin() + static_cast<std::ptrdiff_t>(start), env.begin() + static_cast<std::ptrdiff_t>(end)));
    }
    const double threshold = cfg.threshold_frac * detail::median(block_max);
    if (!(threshold > 0.0)) return BeatSeries({}, BeatSource::ECG);

    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i + 1 < env.size(); ++i) {
        if (env[i] >= threshold && env[i] >= env[i - 1] && env[i] > env[i + 1]) candidates.push_back(i);
    }
    const std::size_t refractory = detail::samples_for(cfg.refractory_ms, fs);
    candidates = detail::suppress(std::move(candidates), env, refractory);

    std::vector<double> magnitude(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) magnitude[i] = std::abs(x[i]);
    const std::size_t reach = detail::samples_for(cfg.refine_ms, fs);
    std::vector<std::size_t> refined;
    for (std::size_t c : candidates) {
        const std::size_t lo = c >= reach ? c - reach : 0;
        const std::size_t hi = std::min(x.size() - 1, c + reach);
        std::size_t best = lo;
        for (std::size_t j = lo; j <= hi; ++j) {
            if (magnitude[j] > magnitude[best]) best = j;
        }
        refined.push_back(best);
    }
    std::sort(refined.begin(), refined.end());
    refined.erase(std::unique(refined.begin(), refined.end()), refined.end());
    refined = detail::suppress(std::move(refined), magnitude, refractory);

    std::vector<Millis> times;
    times.reserve(refined.size());
    for (std::size_t i : refined) times.push_back(round_ms(static_cast<double>(i) * 1000.0 / fs));
    return BeatSeries(std::move(times), BeatSource::ECG);
}

/// Apex sample indices of a band-passed PPG.
///
/// Regions where the signal rises above its moving average plus an offset
/// each yield one apex (their maximum). Every configured offset level is
/// tried; the level whose apex intervals have the smallest standard deviation,
/// among those implying a mean rate inside [min_bpm, max_bpm], wins. Near-equal
/// SDs go to the level with more apices.
inline std::vector<std::size_t> detect_ppg_apices(const Signal& ppg, const PpgDetectorConfig& cfg = {})
{
    const auto x = ppg.samples();
    const double fs = ppg.fs();
    if (x.size() < 3) throw Error(ErrorKind::NoBeatsDetected, "PPG too short");
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    const double half_range = (*mx - *mn) / 2.0;
    if (!(half_range > 0.0)) throw Error(ErrorKind::NoBeatsDetected, "flat PPG signal");

    const auto ma = detail::moving_average(x, detail::samples_for(cfg.moving_average_ms, fs));

    std::vector<std::size_t> best;
    double best_sd = std::numeric_limits<double>::infinity();
    const double tie = cfg.sd_tie_samples * 1000.0 / fs;
    for (double level : cfg.levels_percent) {
        const double offset = level / 100.0 * half_range;
        std::vector<std::size_t> apices;
        std::size_t i = 0;
        while (i < x.size()) {
            if (x[i] > ma[i] + offset) {
                std::size_t apex = i;
                while (i < x.size() && x[i] > ma[i] + offset) {
                    if (x[i] > x[apex]) apex = i;
                    ++i;
                }
                apices.push_back(apex);
            } else {
                ++i;
            }
        }
        if (apices.size() < 3) continue;

        std::vector<double> intervals;
        for (std::size_t k = 1; k < apices.size(); ++k) intervals.push_back(static_cast<double>(apices[k] - apices[k - 1]) * 1000.0 / fs);
        double mean = 0.0;
        for (double v : intervals) mean += v;
        mean /= static_cast<double>(intervals.size());
        const double bpm = 60000.0 / mean;
        if (bpm < cfg.min_bpm || bpm > cfg.max_bpm) continue;
        double var = 0.0;
        for (double v : intervals) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / static_cast<double>(intervals.size()));
        const bool tied = std::abs(sd - best_sd) <= tie;
        if ((tied && apices.size() > best.size()) || (!tied && sd < best_sd)) {
            best_sd = sd;
            best = std::move(apices);
        }
    }
    if (best.empty()) throw Error(ErrorKind::NoBeatsDetected, "no threshold level yields a plausible pulse rate");
    return best;
}

/// Beat time = first upward crossing of (foot + apex) / 2 between the foot and
/// the apex, linearly interpolated. The foot is the minimum over
/// (previous apex, apex], looking back at most foot_lookback_ms.
inline BeatSeries locate_middle_amplitude(const Signal& ppg, std::span<const std::size_t> apices,
                                          const PpgDetectorConfig& cfg = {})
{
    const auto x = ppg.samples();
    const double fs = ppg.fs();
    const std::size_t lookback = detail::samples_for(cfg.foot_lookback_ms, fs);
    std::vector<Millis> times;
    std::size_t prev = 0;
    bool have_prev = false;
    for (std::size_t apex : apices) {
        if (apex >= x.size()) throw Error(ErrorKind::InvalidInput, "apex index out of range");
        std::size_t lo = apex >= lookback ? apex - lookback : 0;
        if (have_prev && prev + 1 > lo) lo = prev + 1;
        have_prev = true;
        prev = apex;
        if (lo >= apex) continue;

        std::size_t foot = lo;
        for (std::size_t j = lo; j <= apex; ++j) {
            if (x[j] < x[foot]) foot = j;
        }
        const double level = (x[foot] + x[apex]) / 2.0;
        if (!(x[apex] > x[foot])) continue;

        for (std::size_t j = foot; j < apex; ++j) {
            if (x[j] < level && x[j + 1] >= level) {
                const double pos = static_cast<double>(j) + (level - x[j]) / (x[j + 1] - x[j]);
                const Millis t = round_ms(pos * 1000.0 / fs);
                if (times.empty() || t > times.back()) times.push_back(t);
                break;
            }
        }
    }
    return BeatSeries(std::move(times), BeatSource::PPG);
}

inline BeatSeries detect_ppg_beats(const Signal& ppg, const PpgDetectorConfig& cfg = {})
{
    const auto apices = detect_ppg_apices(ppg, cfg);
    return locate_middle_amplitude(ppg, apices, cfg);
}

} // namespace ppgopt
