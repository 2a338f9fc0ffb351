#pragma once

// Beat matching, detection accuracy (Se / PPV / F1), windowed IBI and RMSSD
// errors, a MIMS-like motion summary, and Pearson correlation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppgopt/beats.hpp"
#include "ppgopt/error.hpp"
#include "ppgopt/filter.hpp"
#include "ppgopt/signal.hpp"

namespace ppgopt {

struct MatchResult {
    Millis lag_ms = 0;
    std::vector<std::pair<Millis, Millis>> pairs; // (ecg, ppg) with ppg as given, before the lag
    std::size_t n_correct = 0;
    std::size_t n_ecg = 0;
    std::size_t n_ppg = 0;
    Millis total_abs_residual_ms = 0;
};

struct Accuracy {
    double se = 0.0;
    double ppv = 0.0;
    double f1 = 0.0;
};

struct SegmentMetrics {
    Window window;
    std::size_t n_correct = 0;
    std::size_t n_ecg = 0;
    std::size_t n_ppg = 0;
    double se = 0.0;
    double ppv = 0.0;
    double f1 = 0.0;
    double mean_ibi_ms = 0.0;
    double rmssd_ms = 0.0;
    double ref_mean_ibi_ms = 0.0;
    double ref_rmssd_ms = 0.0;
    double abs_err_ibi_ms = 0.0;
    double abs_err_rmssd_ms = 0.0;
    std::optional<double> motion_auc;
    bool valid = false;
};

struct MatchConfig {
    Millis tolerance_ms = 150;
    Millis search_ms = 2000;
    Millis step_ms = 20;
};

struct IbiCleaningConfig {
    double min_ibi_ms = 300.0;
    double max_ibi_ms = 2000.0;
    double max_rel_deviation = 0.25;
    std::size_t min_valid_beats = 10; // a window needs strictly more than this
};

/// One-to-one matching of PPG beats (shifted by lag_ms) to ECG beats within
/// tolerance_ms. Both series are walked in time order and each PPG beat takes
/// the earliest still-unmatched ECG beat inside its tolerance interval; with
/// equal-width intervals this yields a maximum-cardinality matching.
inline MatchResult match_beats(std::span<const Millis> ppg, std::span<const Millis> ecg, Millis tolerance_ms,
                               Millis lag_ms = 0)
{
    MatchResult r;
    r.lag_ms = lag_ms;
    r.n_ecg = ecg.size();
    r.n_ppg = ppg.size();
    std::size_t j = 0;
    for (Millis p_raw : ppg) {
        const Millis p = p_raw + lag_ms;
        while (j < ecg.size() && ecg[j] < p - tolerance_ms) ++j;
        if (j < ecg.size() && ecg[j] <= p + tolerance_ms) {
            r.pairs.emplace_back(ecg[j], p_raw);
            r.total_abs_residual_ms += std::abs(ecg[j] - p);
            ++j;
        }
    }
    r.n_correct = r.pairs.size();
    return r;
}

inline MatchResult match_beats(const BeatSeries& ppg, const BeatSeries& ecg, Millis tolerance_ms = 150, Millis lag_ms = 0)
{
    return match_beats(ppg.times(), ecg.times(), tolerance_ms, lag_ms);
}

/// Lag on the step grid within +-search_ms maximizing the match count. Ties go
/// to the smaller total |residual| of the matched pairs, then to the smaller
/// |lag|, then to the negative lag.
inline Millis best_lag(const BeatSeries& ppg, const BeatSeries& ecg, const MatchConfig& cfg = {})
{
    if (ppg.empty() || ecg.empty()) throw Error(ErrorKind::EmptyInput, "best_lag needs non-empty beat series");
    if (cfg.step_ms <= 0 || cfg.search_ms < 0) throw Error(ErrorKind::InvalidInput, "invalid lag search grid");
    Millis best = 0;
    std::size_t best_count = 0;
    Millis best_residual = 0;
    bool first = true;
    for (Millis lag = -(cfg.search_ms / cfg.step_ms) * cfg.step_ms; lag <= cfg.search_ms; lag += cfg.step_ms) {
        const auto m = match_beats(ppg.times(), ecg.times(), cfg.tolerance_ms, lag);
        const bool better = [&] {
            if (first) return true;
            if (m.n_correct != best_count) return m.n_correct > best_count;
            if (m.total_abs_residual_ms != best_residual) return m.total_abs_residual_ms < best_residual;
            if (std::abs(lag) != std::abs(best)) return std::abs(lag) < std::abs(best);
            return lag < best;
        }();
        if (better) {
            best = lag;
            best_count = m.n_correct;
            best_residual = m.total_abs_residual_ms;
            first = false;
        }
    }
    return best;
}

inline Accuracy se_ppv_f1(std::size_t n_correct, std::size_t n_ecg, std::size_t n_ppg)
{
    if (n_ecg == 0 || n_ppg == 0) throw Error(ErrorKind::UndefinedMetric, "Se/PPV need at least one ECG and one PPG beat");
    Accuracy a;
    a.se = static_cast<double>(n_correct) / static_cast<double>(n_ecg) * 100.0;
    a.ppv = static_cast<double>(n_correct) / static_cast<double>(n_ppg) * 100.0;
    a.f1 = (a.se + a.ppv) > 0.0 ? 2.0 * a.ppv * a.se / (a.ppv + a.se) : 0.0;
    return a;
}

inline Accuracy se_ppv_f1(const MatchResult& m) { return se_ppv_f1(m.n_correct, m.n_ecg, m.n_ppg); }

/// Cleaned IBIs in original order. linked[i] is true when values[i] directly
/// follows values[i - 1] in the input (no IBI dropped in between).
struct CleanedIbis {
    std::vector<double> values;
    std::vector<bool> linked;
};

/// Drops IBIs outside [min_ibi, max_ibi], then IBIs deviating more than
/// max_rel_deviation from the median of the survivors, repeating the median
/// step until nothing else is dropped.
inline CleanedIbis clean_ibis(std::span<const double> ibis, const IbiCleaningConfig& cfg = {})
{
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < ibis.size(); ++i) {
        if (ibis[i] >= cfg.min_ibi_ms && ibis[i] <= cfg.max_ibi_ms) kept.push_back(i);
    }
    for (;;) {
        if (kept.empty()) break;
        std::vector<double> vals;
        for (std::size_t i : kept) vals.push_back(ibis[i]);
        const double med = detail::median(vals);
        std::vector<std::size_t> next;
        for (std::size_t i : kept) {
            if (std::abs(ibis[i] - med) <= cfg.max_rel_deviation * med) next.push_back(i);
        }
        if (next.size() == kept.size()) break;
        kept = std::move(next);
    }
    CleanedIbis out;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        out.values.push_back(ibis[kept[k]]);
        out.linked.push_back(k > 0 && kept[k] == kept[k - 1] + 1);
    }
    return out;
}

/// RMSSD over every successive pair.
inline double rmssd(std::span<const double> ibis)
{
    if (ibis.size() < 2) throw Error(ErrorKind::UndefinedMetric, "RMSSD needs at least 2 IBIs");
    double acc = 0.0;
    for (std::size_t i = 1; i < ibis.size(); ++i) acc += (ibis[i] - ibis[i - 1]) * (ibis[i] - ibis[i - 1]);
    return std::sqrt(acc / static_cast<double>(ibis.size() - 1));
}

/// RMSSD over successive pairs that do not span a dropped IBI.
inline double rmssd(const CleanedIbis& ibis)
{
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 1; i < ibis.values.size(); ++i) {
        if (!ibis.linked[i]) continue;
        const double d = ibis.values[i] - ibis.values[i - 1];
        acc += d * d;
        ++n;
    }
    if (n == 0) throw Error(ErrorKind::UndefinedMetric, "no valid successive IBI pairs");
    return std::sqrt(acc / static_cast<double>(n));
}

inline double mae(std::span<const double> values)
{
    if (values.empty()) throw Error(ErrorKind::UndefinedMetric, "MAE of an empty list");
    double acc = 0.0;
    for (double v : values) acc += std::abs(v);
    return acc / static_cast<double>(values.size());
}

namespace detail {

inline std::vector<Millis> beats_in(std::span<const Millis> t, const Window& w)
{
    std::vector<Millis> out;
    for (Millis v : t) {
        if (w.contains(v)) out.push_back(v);
    }
    return out;
}

inline std::vector<double> diffs(std::span<const Millis> t)
{
    std::vector<double> out;
    for (std::size_t i = 1; i < t.size(); ++i) out.push_back(static_cast<double>(t[i] - t[i - 1]));
    return out;
}

inline double mean(std::span<const double> v)
{
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

} // namespace detail

/// Per-window accuracy and interval metrics. `lag_ms` is added to every PPG
/// beat before it is assigned to a window, so windows live on the ECG clock.
inline std::vector<SegmentMetrics> window_metrics(const BeatSeries& ppg, const BeatSeries& ecg, Millis lag_ms,
                                                  std::span<const Window> windows, Millis tolerance_ms = 150,
                                                  const IbiCleaningConfig& cleaning = {})
{
    std::vector<Millis> shifted(ppg.times().begin(), ppg.times().end());
    for (Millis& t : shifted) t += lag_ms;

    std::vector<SegmentMetrics> out;
    out.reserve(windows.size());
    for (const Window& w : windows) {
        SegmentMetrics s;
        s.window = w;
        const auto p = detail::beats_in(shifted, w);
        const auto e = detail::beats_in(ecg.times(), w);
        const auto m = match_beats(p, e, tolerance_ms);
        s.n_correct = m.n_correct;
        s.n_ecg = m.n_ecg;
        s.n_ppg = m.n_ppg;
        if (s.n_ecg > 0 && s.n_ppg > 0) {
            const auto acc = se_ppv_f1(m);
            s.se = acc.se;
            s.ppv = acc.ppv;
            s.f1 = acc.f1;
        }

        const auto p_ibis = detail::diffs(p);
        const auto e_ibis = detail::diffs(e);
        const auto p_clean = clean_ibis(p_ibis, cleaning);
        const auto e_clean = clean_ibis(e_ibis, cleaning);
        if (p_clean.values.size() > cleaning.min_valid_beats && e_clean.values.size() > cleaning.min_valid_beats) {
            try {
                s.rmssd_ms = rmssd(p_clean);
                s.ref_rmssd_ms = rmssd(e_clean);
                s.mean_ibi_ms = detail::mean(p_clean.values);
                s.ref_mean_ibi_ms = detail::mean(e_clean.values);
                s.abs_err_ibi_ms = std::abs(s.mean_ibi_ms - s.ref_mean_ibi_ms);
                s.abs_err_rmssd_ms = std::abs(s.rmssd_ms - s.ref_rmssd_ms);
                s.valid = true;
            } catch (const Error&) {
                s.valid = false;
            }
        }
        out.push_back(s);
    }
    return out;
}

inline constexpr double kMotionFs = 100.0;

/// MIMS-like motion summary per window, summed over the three axes: each axis
/// is resampled to 100 Hz, band-passed 0.2-5 Hz (4th-order Butterworth,
/// zero-phase), rectified, and integrated with the trapezoid rule (g * s).
/// Window times are relative to the accelerometer start.
inline std::vector<double> motion_auc(const Signal& acc_x, const Signal& acc_y, const Signal& acc_z,
                                      std::span<const Window> windows)
{
    if (acc_x.size() != acc_y.size() || acc_x.size() != acc_z.size() || acc_x.fs() != acc_y.fs() ||
        acc_x.fs() != acc_z.fs()) {
        throw Error(ErrorKind::InvalidInput, "accelerometer axes differ in length or sampling rate");
    }
    const auto cascade = design_bandpass(FilterSpec::motion_default(), kMotionFs);
    std::vector<double> totals(windows.size(), 0.0);
    for (const Signal* axis : {&acc_x, &acc_y, &acc_z}) {
        const Signal r = resample(*axis, kMotionFs);
        auto y = apply_zero_phase(cascade, r.samples());
        for (double& v : y) v = std::abs(v);
        for (std::size_t wi = 0; wi < windows.size(); ++wi) {
            const auto first = static_cast<std::size_t>(std::llround(static_cast<double>(windows[wi].start_ms) * kMotionFs / 1000.0));
            const auto last = std::min(y.size() - 1, static_cast<std::size_t>(std::llround(static_cast<double>(windows[wi].end_ms()) * kMotionFs / 1000.0)));
            double area = 0.0;
            for (std::size_t i = first; i < last; ++i) area += 0.5 * (y[i] + y[i + 1]) / kMotionFs;
            totals[wi] += area;
        }
    }
    return totals;
}

inline double motion_auc(const Signal& acc_x, const Signal& acc_y, const Signal& acc_z, const Window& window)
{
    const std::array<Window, 1> one{window};
    return motion_auc(acc_x, acc_y, acc_z, one).front();
}

inline double pearson_r(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw Error(ErrorKind::InvalidInput, "pearson_r needs equal-length inputs");
    if (x.size() < 3) throw Error(ErrorKind::UndefinedMetric, "pearson_r needs at least 3 pairs");
    const double mx = detail::mean(x);
    const double my = detail::mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorKind::UndefinedMetric, "pearson_r of a constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

} // namespace ppgopt
