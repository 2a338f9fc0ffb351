#pragma once

// Objective evaluation of one cutoff pair over recordings: filter the PPG,
// detect beats, align to the ECG beats, score 60 s windows, aggregate.

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ppgopt/beats.hpp"
#include "ppgopt/filter.hpp"
#include "ppgopt/metrics.hpp"
#include "ppgopt/optimizer.hpp"
#include "ppgopt/signal.hpp"

namespace ppgopt {

/// One (participant, task) recording with its ECG reference already reduced to beats.
struct Recording {
    std::string participant;
    std::string task;
    Signal ppg;
    BeatSeries ecg_beats;        // ms on the ECG clock
    Millis ppg_offset_ms = 0;    // PPG start minus ECG start
    std::vector<Window> windows; // on the ECG clock
    std::vector<std::optional<double>> motion_auc; // per window, when accelerometer data exist
};

struct Dataset {
    std::vector<Recording> recordings;
};

struct EvalConfig {
    FilterSpec ppg_filter = FilterSpec::ppg_default();
    PpgDetectorConfig ppg_detector;
    MatchConfig matching;
    IbiCleaningConfig cleaning;
};

enum class ScopeLevel { BASE, GLOBAL, PER_PERSON_TASK };

inline const char* to_string(ScopeLevel s) noexcept
{
    switch (s) {
    case ScopeLevel::BASE: return "base";
    case ScopeLevel::GLOBAL: return "global";
    case ScopeLevel::PER_PERSON_TASK: return "per_person_task";
    }
    return "?";
}

struct OptimizationScope {
    ScopeLevel level = ScopeLevel::GLOBAL;
    std::optional<std::string> participant;
    std::optional<std::string> task;

    [[nodiscard]] bool selects(const Recording& r) const
    {
        return (!participant || *participant == r.participant) && (!task || *task == r.task);
    }
};

inline constexpr CutoffPair kBaseCutoffs{0.5, 4.0};

/// Per-recording result for one cutoff pair.
struct RecordingEvaluation {
    bool feasible = false;
    ObjectiveTriple objectives = infeasible_triple();
    Millis lag_ms = 0;
    std::vector<SegmentMetrics> windows;
    std::string failure; // why infeasible
};

/// Mean F1 over valid windows, MAE over per-window |mean IBI error| and
/// |RMSSD error|. No valid window -> infeasible.
inline RecordingEvaluation evaluate_recording(const Recording& rec, const CutoffPair& pair, const EvalConfig& cfg)
{
    RecordingEvaluation out;
    try {
        FilterSpec spec = cfg.ppg_filter;
        spec.f_low = pair.f_low;
        spec.f_high = pair.f_high;
        const auto filtered = apply_zero_phase(design_bandpass(spec, rec.ppg.fs()), rec.ppg);
        const auto beats = detect_ppg_beats(filtered, cfg.ppg_detector).shifted(rec.ppg_offset_ms);
        if (beats.empty() || rec.ecg_beats.empty()) throw Error(ErrorKind::NoBeatsDetected, "no beats to match");
        out.lag_ms = best_lag(beats, rec.ecg_beats, cfg.matching);
        out.windows = window_metrics(beats, rec.ecg_beats, out.lag_ms, rec.windows, cfg.matching.tolerance_ms, cfg.cleaning);
    } catch (const Error& e) {
        out.failure = e.what();
        return out;
    }
    for (std::size_t i = 0; i < out.windows.size() && i < rec.motion_auc.size(); ++i) out.windows[i].motion_auc = rec.motion_auc[i];

    std::vector<double> f1, ibi, rms;
    for (const auto& w : out.windows) {
        if (!w.valid) continue;
        f1.push_back(w.f1);
        ibi.push_back(w.abs_err_ibi_ms);
        rms.push_back(w.abs_err_rmssd_ms);
    }
    if (f1.empty()) {
        out.failure = "Infeasible: no valid windows";
        return out;
    }
    out.feasible = true;
    out.objectives = {-detail::mean(f1), mae(ibi), mae(rms)};
    return out;
}

/// Memoizes per-(recording, lattice point) evaluations and pools them over scopes.
/// Thread-safe; evaluation results do not depend on call order.
class CutoffEvaluator {
public:
    CutoffEvaluator(const Dataset& data, EvalConfig cfg) : data_(&data), cfg_(std::move(cfg)) {}

    [[nodiscard]] const Dataset& dataset() const noexcept { return *data_; }
    [[nodiscard]] const EvalConfig& config() const noexcept { return cfg_; }

    const RecordingEvaluation& recording(std::size_t index, const CutoffPair& pair)
    {
        const Key key{index, LatticePoint::nearest(pair)};
        {
            std::lock_guard lock(mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        }
        auto result = evaluate_recording(data_->recordings.at(index), key.second.pair(), cfg_);
        std::lock_guard lock(mutex_);
        return cache_.emplace(key, std::move(result)).first->second;
    }

    /// Objective triple of a lattice pair on a scope: unweighted mean of the
    /// per-recording triples, where an infeasible recording contributes the
    /// penalty triple. No selected recording, or none feasible -> penalty.
    ObjectiveTriple evaluate(const CutoffPair& pair, const OptimizationScope& scope)
    {
        ObjectiveTriple sum{0.0, 0.0, 0.0};
        std::size_t n = 0, feasible = 0;
        for (std::size_t i = 0; i < data_->recordings.size(); ++i) {
            if (!scope.selects(data_->recordings[i])) continue;
            const auto& r = recording(i, pair);
            sum.neg_f1 += r.objectives.neg_f1;
            sum.mae_ibi += r.objectives.mae_ibi;
            sum.mae_rmssd += r.objectives.mae_rmssd;
            ++n;
            if (r.feasible) ++feasible;
        }
        if (n == 0 || feasible == 0) return infeasible_triple();
        const auto dn = static_cast<double>(n);
        return {sum.neg_f1 / dn, sum.mae_ibi / dn, sum.mae_rmssd / dn};
    }

    /// Preloaded results (e.g. from an on-disk cache).
    void seed(std::size_t index, const LatticePoint& lp, RecordingEvaluation result)
    {
        std::lock_guard lock(mutex_);
        cache_.emplace(Key{index, lp}, std::move(result));
    }

    [[nodiscard]] std::map<std::pair<std::size_t, LatticePoint>, RecordingEvaluation> snapshot() const
    {
        std::lock_guard lock(mutex_);
        return cache_;
    }

private:
    using Key = std::pair<std::size_t, LatticePoint>;
    const Dataset* data_;
    EvalConfig cfg_;
    mutable std::mutex mutex_;
    std::map<Key, RecordingEvaluation> cache_;
};

/// Objective triple of `pair` on `scope`; throws Infeasible when no recording
/// in the scope has a valid window.
inline ObjectiveTriple evaluate_cutoffs(const CutoffPair& pair, const OptimizationScope& scope, const Dataset& data,
                                       const EvalConfig& cfg = {})
{
    CutoffEvaluator ev(data, cfg);
    std::size_t feasible = 0;
    for (std::size_t i = 0; i < data.recordings.size(); ++i) {
        if (scope.selects(data.recordings[i]) && ev.recording(i, pair).feasible) ++feasible;
    }
    if (feasible == 0) throw Error(ErrorKind::Infeasible, "no valid windows in scope");
    return ev.evaluate(pair, scope);
}

} // namespace ppgopt
