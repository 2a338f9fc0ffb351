#pragma once

// Full run: load a manifest, detect ECG reference beats once per recording,
// evaluate the fixed baseline filter, optimize GLOBAL and PER_PERSON_TASK
// cutoffs, compare the resulting IBI / RMSSD distributions, write reports.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppgopt/beats.hpp"
#include "ppgopt/config.hpp"
#include "ppgopt/evaluate.hpp"
#include "ppgopt/filter.hpp"
#include "ppgopt/io.hpp"
#include "ppgopt/metrics.hpp"
#include "ppgopt/optimizer.hpp"
#include "ppgopt/stats.hpp"

namespace ppgopt {

namespace fs = std::filesystem;

/// ECG preprocessing: elliptic band-pass (zero-phase), then R-peak detection.
inline BeatSeries ecg_reference_beats(const Signal& ecg, const RunConfig& cfg)
{
    const auto filtered = apply_zero_phase(design_bandpass(cfg.ecg_filter, ecg.fs()), ecg);
    return detect_ecg_beats(filtered, cfg.ecg_detector);
}

namespace detail {

inline std::optional<std::vector<std::optional<double>>> motion_for(const std::array<Signal, 3>& acc, Millis ecg_start_ms,
                                                                     std::span<const Window> windows)
{
    const Millis shift = ecg_start_ms - acc[0].start_time_ms();
    const auto acc_len = static_cast<Millis>(std::floor(acc[0].duration_ms()));
    std::vector<Window> inside;
    std::vector<std::size_t> which;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const Window w{windows[i].start_ms + shift, windows[i].length_ms};
        if (w.start_ms >= 0 && w.end_ms() <= acc_len) {
            inside.push_back(w);
            which.push_back(i);
        }
    }
    std::vector<std::optional<double>> out(windows.size());
    if (!inside.empty()) {
        const auto auc = motion_auc(acc[0], acc[1], acc[2], inside);
        for (std::size_t k = 0; k < which.size(); ++k) out[which[k]] = auc[k];
    }
    return out;
}

} // namespace detail

/// One recording from a manifest entry.
inline Recording load_recording(const io::ManifestEntry& e, const RunConfig& cfg)
{
    Recording r;
    r.participant = e.participant;
    r.task = e.task;
    r.ppg = io::read_any_signal(e.ppg, e.ppg_fs, Role::PPG);
    Millis ecg_start = 0;
    double ecg_duration_ms = 0.0;
    if (e.ecg) {
        const Signal ecg = io::read_any_signal(*e.ecg, e.ecg_fs, Role::ECG);
        ecg_start = ecg.start_time_ms();
        ecg_duration_ms = ecg.duration_ms();
        r.ecg_beats = ecg_reference_beats(ecg, cfg);
    } else {
        r.ecg_beats = io::read_beats_csv(*e.ecg_beats, BeatSource::ECG);
        ecg_start = e.ecg_start_ms.value_or(r.ppg.start_time_ms());
        ecg_duration_ms = static_cast<double>(r.ppg.start_time_ms() - ecg_start) + r.ppg.duration_ms();
    }
    r.ppg_offset_ms = r.ppg.start_time_ms() - ecg_start;
    const double ppg_end = static_cast<double>(r.ppg_offset_ms) + r.ppg.duration_ms();
    r.windows = tile_windows(std::min(ecg_duration_ms, ppg_end), cfg.window_ms);
    if (e.acc) {
        const auto acc = io::read_e4_acc(*e.acc, e.acc_units_per_g);
        r.motion_auc = *detail::motion_for(acc, ecg_start, r.windows);
    }
    return r;
}

/// All manifest recordings, in manifest order. Ingestion problems are
/// collected across files and reported together.
inline Dataset load_dataset(const io::DatasetManifest& m, const RunConfig& cfg)
{
    Dataset d;
    std::string problems;
    std::optional<ErrorKind> first_kind;
    for (const auto& e : m.recordings) {
        try {
            d.recordings.push_back(load_recording(e, cfg));
        } catch (const Error& ex) {
            if (!first_kind) first_kind = ex.kind();
            problems += "\n  (" + e.participant + ", " + e.task + "): " + ex.what();
        }
    }
    if (first_kind) throw Error(*first_kind, "ingestion failed:" + problems);
    return d;
}

// ---- on-disk cache of per-(recording, lattice point) evaluations ----

inline std::string recording_key(const Recording& r, const EvalConfig& cfg)
{
    io::Fnv1a h;
    h.values(r.ppg.samples()).value(r.ppg.fs()).value(r.ppg.start_time_ms());
    h.values(r.ecg_beats.times()).value(r.ppg_offset_ms);
    for (const auto& w : r.windows) h.value(w.start_ms).value(w.length_ms);
    RunConfig c;
    c.eval = cfg;
    const auto j = to_json(c);
    for (const char* k : {"ppg_filter", "ppg_detector", "matching", "ibi_cleaning"}) h.text(j.at(k).dump());
    return h.hex();
}

inline nlohmann::ordered_json to_json(const RecordingEvaluation& e)
{
    nlohmann::ordered_json j;
    j["feasible"] = e.feasible;
    j["failure"] = e.failure;
    j["lag_ms"] = e.lag_ms;
    j["objectives"] = {e.objectives.neg_f1, e.objectives.mae_ibi, e.objectives.mae_rmssd};
    auto ws = nlohmann::ordered_json::array();
    for (const auto& w : e.windows) {
        ws.push_back({w.window.start_ms, w.window.length_ms, w.n_correct, w.n_ecg, w.n_ppg, w.se, w.ppv, w.f1,
                      w.mean_ibi_ms, w.rmssd_ms, w.ref_mean_ibi_ms, w.ref_rmssd_ms, w.abs_err_ibi_ms,
                      w.abs_err_rmssd_ms, w.valid});
    }
    j["windows"] = ws;
    return j;
}

inline RecordingEvaluation recording_evaluation_from(const nlohmann::json& j)
{
    RecordingEvaluation e;
    e.feasible = j.at("feasible").get<bool>();
    e.failure = j.at("failure").get<std::string>();
    e.lag_ms = j.at("lag_ms").get<Millis>();
    const auto& o = j.at("objectives");
    e.objectives = {o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
    for (const auto& w : j.at("windows")) {
        SegmentMetrics s;
        s.window = {w.at(0).get<Millis>(), w.at(1).get<Millis>()};
        s.n_correct = w.at(2).get<std::size_t>();
        s.n_ecg = w.at(3).get<std::size_t>();
        s.n_ppg = w.at(4).get<std::size_t>();
        s.se = w.at(5).get<double>();
        s.ppv = w.at(6).get<double>();
        s.f1 = w.at(7).get<double>();
        s.mean_ibi_ms = w.at(8).get<double>();
        s.rmssd_ms = w.at(9).get<double>();
        s.ref_mean_ibi_ms = w.at(10).get<double>();
        s.ref_rmssd_ms = w.at(11).get<double>();
        s.abs_err_ibi_ms = w.at(12).get<double>();
        s.abs_err_rmssd_ms = w.at(13).get<double>();
        s.valid = w.at(14).get<bool>();
        e.windows.push_back(s);
    }
    return e;
}

/// Seeds `ev` from cache_dir; unreadable cache files are ignored.
inline void load_cache(CutoffEvaluator& ev, const fs::path& dir)
{
    const auto& recs = ev.dataset().recordings;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto path = dir / (recording_key(recs[i], ev.config()) + ".json");
        if (!fs::exists(path)) continue;
        try {
            const auto j = io::read_json(path);
            for (const auto& item : j.at("points")) {
                const LatticePoint lp{item.at("low_dh").get<int>(), item.at("high_dh").get<int>()};
                auto e = recording_evaluation_from(item.at("result"));
                for (std::size_t w = 0; w < e.windows.size() && w < recs[i].motion_auc.size(); ++w) {
                    e.windows[w].motion_auc = recs[i].motion_auc[w];
                }
                ev.seed(i, lp, std::move(e));
            }
        } catch (const std::exception&) {
            continue;
        }
    }
}

inline void save_cache(const CutoffEvaluator& ev, const fs::path& dir)
{
    const auto& recs = ev.dataset().recordings;
    std::map<std::size_t, nlohmann::ordered_json> per_recording;
    for (const auto& [key, result] : ev.snapshot()) {
        auto& j = per_recording[key.first];
        if (j.is_null()) j["points"] = nlohmann::ordered_json::array();
        j["points"].push_back({{"low_dh", key.second.low_dh}, {"high_dh", key.second.high_dh}, {"result", to_json(result)}});
    }
    fs::create_directories(dir);
    for (const auto& [i, j] : per_recording) {
        const auto path = dir / (recording_key(recs[i], ev.config()) + ".json");
        auto out = io::detail::open_out(path);
        out << j.dump() << '\n';
    }
}

// ---- search ----

/// Candidate front of a scope: NSGA-II, or the non-dominated subset of the full grid.
inline std::vector<Solution> search_front(CutoffEvaluator& ev, const OptimizationScope& scope, const RunConfig& cfg)
{
    LatticeMemo memo([&ev, scope](const CutoffPair& p) { return ev.evaluate(p, scope); });
    if (cfg.method == SearchMethod::NSGA2) return nsga2(memo, cfg.bounds, cfg.nsga2);
    std::vector<LatticePoint> grid;
    for (const auto& p : grid_combinations(cfg.bounds)) grid.push_back(LatticePoint::nearest(p));
    memo.evaluate(grid, cfg.jobs);
    std::vector<Solution> all;
    for (const auto& lp : grid) all.push_back({lp.pair(), memo.at(lp)});
    return pareto_filter(all);
}

// ---- report ----

struct ScopeRow {
    ScopeLevel scope = ScopeLevel::BASE;
    std::string participant;
    std::string task;
    CutoffPair cutoffs;
    RecordingEvaluation eval;
    std::optional<double> score;        // PER_PERSON_TASK: selected filter's scalarized score on the slice
    std::optional<double> score_global; // GLOBAL filter's score on the same slice and normalization
};

struct FrontRow {
    ScopeLevel scope = ScopeLevel::GLOBAL;
    std::string participant; // empty for GLOBAL
    std::string task;
    Solution solution;
    double score = 0.0;
    bool selected = false;
    bool injected_global = false;
};

struct DistributionRow {
    std::string task;
    std::string participant;
    std::string condition; // ecg, base, global, per_person_task
    std::optional<double> mean_ibi_ms;
    std::optional<double> rmssd_ms;
};

struct StatsRow {
    std::string task;
    std::string metric; // mean_ibi_ms / rmssd_ms
    std::string test;   // rm_anova / paired_t
    std::string condition_a;
    std::string condition_b;
    double statistic = 0.0;
    double df1 = 0.0;
    double df2 = 0.0;
    double p_value = 1.0;
    double p_bonferroni = 1.0;
    std::optional<double> cohens_d;
    std::size_t n_subjects = 0;
    std::string note;
};

struct RunReport {
    std::vector<ScopeRow> rows;
    std::vector<FrontRow> fronts;
    std::optional<CutoffPair> global_cutoffs;
    std::vector<DistributionRow> distributions;
    std::vector<StatsRow> stats;
};

namespace detail {

// Mean over valid windows of per-window PPG mean IBI / RMSSD.
inline DistributionRow distribution_of(const Recording& r, const std::string& condition, const RecordingEvaluation& e)
{
    DistributionRow d{r.task, r.participant, condition, std::nullopt, std::nullopt};
    double ibi = 0.0, rms = 0.0;
    std::size_t n = 0;
    for (const auto& w : e.windows) {
        if (!w.valid) continue;
        ibi += w.mean_ibi_ms;
        rms += w.rmssd_ms;
        ++n;
    }
    if (n > 0) {
        d.mean_ibi_ms = ibi / static_cast<double>(n);
        d.rmssd_ms = rms / static_cast<double>(n);
    }
    return d;
}

// Reference values from the ECG beats alone, over windows with enough clean IBIs.
inline DistributionRow reference_distribution(const Recording& r, const IbiCleaningConfig& cleaning)
{
    DistributionRow d{r.task, r.participant, "ecg", std::nullopt, std::nullopt};
    double ibi = 0.0, rms = 0.0;
    std::size_t n = 0;
    for (const auto& w : r.windows) {
        const auto beats = beats_in(r.ecg_beats.times(), w);
        const auto clean = clean_ibis(diffs(beats), cleaning);
        if (clean.values.size() <= cleaning.min_valid_beats) continue;
        try {
            const double v = rmssd(clean);
            ibi += mean(clean.values);
            rms += v;
            ++n;
        } catch (const Error&) {
        }
    }
    if (n > 0) {
        d.mean_ibi_ms = ibi / static_cast<double>(n);
        d.rmssd_ms = rms / static_cast<double>(n);
    }
    return d;
}

} // namespace detail

/// RM-ANOVA and Bonferroni-corrected paired t-tests between conditions, per
/// task and metric, over participants with a value in every condition.
inline std::vector<StatsRow> compare_conditions(const std::vector<DistributionRow>& dist, const RunConfig& cfg)
{
    std::vector<StatsRow> out;
    std::vector<std::string> tasks, conditions;
    for (const auto& d : dist) {
        if (std::find(tasks.begin(), tasks.end(), d.task) == tasks.end()) tasks.push_back(d.task);
        if (std::find(conditions.begin(), conditions.end(), d.condition) == conditions.end()) conditions.push_back(d.condition);
    }
    std::sort(tasks.begin(), tasks.end());
    for (const auto& task : tasks) {
        for (const char* metric : {"mean_ibi_ms", "rmssd_ms"}) {
            const bool is_ibi = std::string(metric) == "mean_ibi_ms";
            std::map<std::string, std::map<std::string, double>> by_participant; // participant -> condition -> value
            for (const auto& d : dist) {
                if (d.task != task) continue;
                const auto& v = is_ibi ? d.mean_ibi_ms : d.rmssd_ms;
                if (v) by_participant[d.participant][d.condition] = *v;
            }
            std::vector<std::vector<double>> matrix;
            for (const auto& [p, vals] : by_participant) {
                if (vals.size() != conditions.size()) continue;
                std::vector<double> row;
                for (const auto& c : conditions) row.push_back(vals.at(c));
                matrix.push_back(row);
            }
            StatsRow anova;
            anova.task = task;
            anova.metric = metric;
            anova.test = "rm_anova";
            anova.n_subjects = matrix.size();
            if (matrix.size() < 2 || conditions.size() < 2) {
                anova.note = "insufficient complete subjects";
                anova.statistic = std::nan("");
                anova.p_value = std::nan("");
                anova.p_bonferroni = std::nan("");
                out.push_back(anova);
                continue;
            }
            try {
                const auto t = stats::rm_anova(matrix);
                anova.statistic = t.f_stat;
                anova.df1 = t.df_treatment;
                anova.df2 = t.df_error;
                anova.p_value = t.p_value;
                anova.p_bonferroni = t.p_value;
                anova.note = t.p_value < cfg.alpha ? "significant" : "";
            } catch (const Error& e) {
                anova.statistic = std::nan("");
                anova.p_value = std::nan("");
                anova.p_bonferroni = std::nan("");
                anova.note = e.what();
                std::replace(anova.note.begin(), anova.note.end(), ',', ';');
            }
            out.push_back(anova);
            for (const auto& c : stats::pairwise_paired(matrix, cfg.pooled_cohens_d)) {
                StatsRow r;
                r.task = task;
                r.metric = metric;
                r.test = "paired_t";
                r.condition_a = conditions[c.a];
                r.condition_b = conditions[c.b];
                r.statistic = c.test.t;
                r.df1 = c.test.df;
                r.p_value = c.test.p;
                r.p_bonferroni = c.p_bonferroni;
                if (c.d_defined) r.cohens_d = c.cohens_d;
                r.n_subjects = matrix.size();
                r.note = c.p_bonferroni < cfg.alpha ? "significant" : "";
                out.push_back(r);
            }
        }
    }
    return out;
}

/// Runs BASE, then GLOBAL and PER_PERSON_TASK when enabled. Deterministic for a
/// fixed config, independent of cfg.jobs.
inline RunReport run_pipeline(const Dataset& data, const RunConfig& cfg)
{
    RunReport report;
    CutoffEvaluator ev(data, cfg.eval);
    if (!cfg.cache_dir.empty()) load_cache(ev, cfg.cache_dir);
    const auto& recs = data.recordings;

    std::vector<DistributionRow> dist;
    for (const auto& r : recs) dist.push_back(detail::reference_distribution(r, cfg.eval.cleaning));

    const CutoffPair base = LatticePoint::nearest(cfg.base_cutoffs).pair();
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& e = ev.recording(i, base);
        report.rows.push_back({ScopeLevel::BASE, recs[i].participant, recs[i].task, base, e, std::nullopt, std::nullopt});
        dist.push_back(detail::distribution_of(recs[i], "base", e));
    }

    const bool need_global = (cfg.run_global || cfg.run_per_person_task) && !recs.empty();
    if (need_global) {
        const OptimizationScope all{ScopeLevel::GLOBAL, std::nullopt, std::nullopt};
        const auto front = search_front(ev, all, cfg);
        const auto scores = scalarized_scores(front);
        const auto pick = select_scalarized_index(front);
        report.global_cutoffs = front[pick].pair;
        for (std::size_t k = 0; k < front.size(); ++k) {
            report.fronts.push_back({ScopeLevel::GLOBAL, "", "", front[k], scores[k], k == pick, false});
        }
    }
    if (cfg.run_global && report.global_cutoffs) {
        for (std::size_t i = 0; i < recs.size(); ++i) {
            const auto& e = ev.recording(i, *report.global_cutoffs);
            report.rows.push_back({ScopeLevel::GLOBAL, recs[i].participant, recs[i].task, *report.global_cutoffs, e,
                                   std::nullopt, std::nullopt});
            dist.push_back(detail::distribution_of(recs[i], "global", e));
        }
    }
    if (cfg.run_per_person_task && report.global_cutoffs) {
        for (std::size_t i = 0; i < recs.size(); ++i) {
            const OptimizationScope slice{ScopeLevel::PER_PERSON_TASK, recs[i].participant, recs[i].task};
            auto candidates = search_front(ev, slice, cfg);
            const Solution global_here{*report.global_cutoffs, ev.evaluate(*report.global_cutoffs, slice)};
            const auto global_lp = LatticePoint::nearest(global_here.pair);
            const bool present = std::any_of(candidates.begin(), candidates.end(),
                                             [&](const Solution& s) { return LatticePoint::nearest(s.pair) == global_lp; });
            if (!present) candidates.push_back(global_here);
            const auto front = pareto_filter(candidates);
            const auto range = NormalizationRange::over(front);
            const auto pick = select_scalarized_index(front);
            for (std::size_t k = 0; k < front.size(); ++k) {
                report.fronts.push_back({ScopeLevel::PER_PERSON_TASK, recs[i].participant, recs[i].task, front[k],
                                         range.score(front[k].objectives), k == pick,
                                         LatticePoint::nearest(front[k].pair) == global_lp});
            }
            const auto chosen = front[pick].pair;
            const auto& e = ev.recording(i, chosen);
            report.rows.push_back({ScopeLevel::PER_PERSON_TASK, recs[i].participant, recs[i].task, chosen, e,
                                   range.score(front[pick].objectives), range.score(global_here.objectives)});
            dist.push_back(detail::distribution_of(recs[i], "per_person_task", e));
        }
    }

    std::stable_sort(dist.begin(), dist.end(), [](const DistributionRow& a, const DistributionRow& b) {
        return std::tie(a.task, a.participant) < std::tie(b.task, b.participant);
    });
    report.distributions = dist;
    report.stats = compare_conditions(dist, cfg);
    if (!cfg.cache_dir.empty()) save_cache(ev, cfg.cache_dir);
    return report;
}

inline RunReport run_pipeline(const io::DatasetManifest& m, const RunConfig& cfg) { return run_pipeline(load_dataset(m, cfg), cfg); }

/// Per-scope mean over recordings: mean F1, MAE IBI, MAE RMSSD (feasible recordings only).
struct ScopeSummary {
    ScopeLevel scope = ScopeLevel::BASE;
    std::string task; // empty: all tasks
    std::size_t n_recordings = 0;
    std::size_t n_feasible = 0;
    double mean_f1 = std::nan("");
    double mae_ibi_ms = std::nan("");
    double mae_rmssd_ms = std::nan("");
};

inline std::vector<ScopeSummary> summarize(const RunReport& report, bool per_task)
{
    std::map<std::pair<int, std::string>, ScopeSummary> acc;
    std::map<std::pair<int, std::string>, std::array<double, 3>> sums;
    for (const auto& r : report.rows) {
        const std::pair key{static_cast<int>(r.scope), per_task ? r.task : std::string()};
        auto& s = acc[key];
        s.scope = r.scope;
        s.task = key.second;
        ++s.n_recordings;
        if (!r.eval.feasible) continue;
        ++s.n_feasible;
        auto& t = sums[key];
        t[0] += r.eval.objectives.f1();
        t[1] += r.eval.objectives.mae_ibi;
        t[2] += r.eval.objectives.mae_rmssd;
    }
    std::vector<ScopeSummary> out;
    for (auto& [key, s] : acc) {
        if (s.n_feasible > 0) {
            const auto& t = sums[key];
            const auto n = static_cast<double>(s.n_feasible);
            s.mean_f1 = t[0] / n;
            s.mae_ibi_ms = t[1] / n;
            s.mae_rmssd_ms = t[2] / n;
        }
        out.push_back(s);
    }
    return out;
}

namespace detail {

inline std::string num(double v) { return io::format_double(v); }
inline std::string num(const std::optional<double>& v) { return v ? io::format_double(*v) : ""; }

inline std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Minimal static box plot: one box per group (quartiles, whiskers at min/max).
inline void write_box_svg(const fs::path& path, const std::string& title,
                          const std::vector<std::pair<std::string, std::vector<double>>>& groups)
{
    constexpr double width = 480, height = 320, left = 60, right = 20, top = 40, bottom = 40;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& [_, v] : groups) {
        for (double x : v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    }
    if (!(hi >= lo)) {
        lo = 0;
        hi = 1;
    }
    if (hi == lo) {
        lo -= 1;
        hi += 1;
    }
    auto y = [&](double v) { return top + (hi - v) / (hi - lo) * (height - top - bottom); };
    auto quantile = [](std::vector<double> v, double q) {
        std::sort(v.begin(), v.end());
        const double pos = q * static_cast<double>(v.size() - 1);
        const auto i = static_cast<std::size_t>(pos);
        const double f = pos - static_cast<double>(i);
        return i + 1 < v.size() ? v[i] * (1 - f) + v[i + 1] * f : v[i];
    };
    auto out = io::detail::open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
        << title << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << fixed(y(hi), 1) << "\" text-anchor=\"end\" font-size=\"10\">"
        << fixed(hi, 1) << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << fixed(y(lo), 1) << "\" text-anchor=\"end\" font-size=\"10\">"
        << fixed(lo, 1) << "</text>\n";
    const double slot = (width - left - right) / static_cast<double>(std::max<std::size_t>(1, groups.size()));
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double cx = left + slot * (static_cast<double>(g) + 0.5);
        const auto& v = groups[g].second;
        out << "<text x=\"" << fixed(cx, 1) << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\" font-size=\"11\">"
            << groups[g].first << "</text>\n";
        if (v.empty()) continue;
        const double q0 = quantile(v, 0), q1 = quantile(v, 0.25), q2 = quantile(v, 0.5), q3 = quantile(v, 0.75),
                     q4 = quantile(v, 1);
        const double bw = slot * 0.4;
        out << "<line x1=\"" << fixed(cx, 1) << "\" x2=\"" << fixed(cx, 1) << "\" y1=\"" << fixed(y(q0), 1) << "\" y2=\""
            << fixed(y(q4), 1) << "\" stroke=\"black\"/>\n";
        out << "<rect x=\"" << fixed(cx - bw / 2, 1) << "\" y=\"" << fixed(y(q3), 1) << "\" width=\"" << fixed(bw, 1)
            << "\" height=\"" << fixed(std::max(0.5, y(q1) - y(q3)), 1) << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << fixed(cx - bw / 2, 1) << "\" x2=\"" << fixed(cx + bw / 2, 1) << "\" y1=\"" << fixed(y(q2), 1)
            << "\" y2=\"" << fixed(y(q2), 1) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
    out << "</svg>\n";
}

} // namespace detail

inline constexpr const char* kResultsHeader =
    "scope,participant,task,f_low,f_high,feasible,lag_ms,mean_f1,mae_ibi_ms,mae_rmssd_ms,n_windows,n_valid_windows,score,score_global";
inline constexpr const char* kWindowsHeader =
    "scope,participant,task,f_low,f_high,window_start_ms,window_length_ms,n_ecg,n_ppg,n_correct,se,ppv,f1,mean_ibi_ms,"
    "ref_mean_ibi_ms,rmssd_ms,ref_rmssd_ms,abs_err_ibi_ms,abs_err_rmssd_ms,motion_auc,valid";
inline constexpr const char* kFrontsHeader =
    "scope,participant,task,f_low,f_high,mean_f1,mae_ibi_ms,mae_rmssd_ms,score,selected,injected_global";
inline constexpr const char* kDistributionsHeader = "task,participant,condition,mean_ibi_ms,rmssd_ms";
inline constexpr const char* kStatsHeader =
    "task,metric,test,condition_a,condition_b,n_subjects,statistic,df1,df2,p_value,p_bonferroni,cohens_d,note";
inline constexpr const char* kTableHeader = "task,scope,n_recordings,n_feasible,mean_f1,mae_ibi_ms,mae_rmssd_ms";

inline void write_distributions_csv(const fs::path& path, const std::vector<DistributionRow>& rows)
{
    using detail::num;
    auto out = io::detail::open_out(path);
    out << kDistributionsHeader << '\n';
    for (const auto& d : rows) {
        out << d.task << ',' << d.participant << ',' << d.condition << ',' << num(d.mean_ibi_ms) << ',' << num(d.rmssd_ms) << '\n';
    }
}

inline std::vector<DistributionRow> read_distributions_csv(const fs::path& path)
{
    const auto lines = io::detail::read_lines(path);
    const auto source = path.string();
    if (lines.empty() || io::detail::trim(lines[0]) != kDistributionsHeader) {
        throw Error(ErrorKind::ParseError, source + ":1: expected header '" + std::string(kDistributionsHeader) + "'");
    }
    std::vector<DistributionRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = io::detail::split(lines[i]);
        if (cells.size() != 5) throw Error(ErrorKind::ParseError, source + ":" + std::to_string(i + 1) + ": expected 5 columns");
        DistributionRow d{std::string(cells[0]), std::string(cells[1]), std::string(cells[2]), std::nullopt, std::nullopt};
        if (!cells[3].empty()) d.mean_ibi_ms = io::detail::parse_double(cells[3], source, i + 1);
        if (!cells[4].empty()) d.rmssd_ms = io::detail::parse_double(cells[4], source, i + 1);
        rows.push_back(std::move(d));
    }
    return rows;
}

inline void write_stats_csv(const fs::path& path, const std::vector<StatsRow>& rows)
{
    using detail::num;
    auto out = io::detail::open_out(path);
    out << kStatsHeader << '\n';
    for (const auto& s : rows) {
        out << s.task << ',' << s.metric << ',' << s.test << ',' << s.condition_a << ',' << s.condition_b << ','
            << s.n_subjects << ',' << num(s.statistic) << ',' << num(s.df1) << ',' << num(s.df2) << ',' << num(s.p_value)
            << ',' << num(s.p_bonferroni) << ',' << num(s.cohens_d) << ',' << s.note << '\n';
    }
}

/// Writes results.csv, windows.csv, fronts.csv, distributions.csv, stats.csv,
/// table.csv, summary.json, config.json and box plots into out_dir.
inline void write_report(const RunReport& report, const RunConfig& cfg, const fs::path& out_dir)
{
    using detail::num;
    fs::create_directories(out_dir);
    {
        auto out = io::detail::open_out(out_dir / "results.csv");
        out << kResultsHeader << '\n';
        for (const auto& r : report.rows) {
            const auto valid = std::count_if(r.eval.windows.begin(), r.eval.windows.end(), [](const auto& w) { return w.valid; });
            out << to_string(r.scope) << ',' << r.participant << ',' << r.task << ',' << num(r.cutoffs.f_low) << ','
                << num(r.cutoffs.f_high) << ',' << (r.eval.feasible ? 1 : 0) << ',' << r.eval.lag_ms << ',';
            if (r.eval.feasible) {
                out << num(r.eval.objectives.f1()) << ',' << num(r.eval.objectives.mae_ibi) << ','
                    << num(r.eval.objectives.mae_rmssd);
            } else {
                out << ",,";
            }
            out << ',' << r.eval.windows.size() << ',' << valid << ',' << num(r.score) << ',' << num(r.score_global) << '\n';
        }
    }
    {
        auto out = io::detail::open_out(out_dir / "windows.csv");
        out << kWindowsHeader << '\n';
        for (const auto& r : report.rows) {
            for (const auto& w : r.eval.windows) {
                out << to_string(r.scope) << ',' << r.participant << ',' << r.task << ',' << num(r.cutoffs.f_low) << ','
                    << num(r.cutoffs.f_high) << ',' << w.window.start_ms << ',' << w.window.length_ms << ',' << w.n_ecg
                    << ',' << w.n_ppg << ',' << w.n_correct << ',' << num(w.se) << ',' << num(w.ppv) << ',' << num(w.f1)
                    << ',';
                if (w.valid) {
                    out << num(w.mean_ibi_ms) << ',' << num(w.ref_mean_ibi_ms) << ',' << num(w.rmssd_ms) << ','
                        << num(w.ref_rmssd_ms) << ',' << num(w.abs_err_ibi_ms) << ',' << num(w.abs_err_rmssd_ms);
                } else {
                    out << ",,,,,";
                }
                out << ',' << num(w.motion_auc) << ',' << (w.valid ? 1 : 0) << '\n';
            }
        }
    }
    {
        auto out = io::detail::open_out(out_dir / "fronts.csv");
        out << kFrontsHeader << '\n';
        for (const auto& f : report.fronts) {
            const auto& o = f.solution.objectives;
            out << to_string(f.scope) << ',' << f.participant << ',' << f.task << ',' << num(f.solution.pair.f_low) << ','
                << num(f.solution.pair.f_high) << ',' << num(o.f1()) << ',' << num(o.mae_ibi) << ',' << num(o.mae_rmssd)
                << ',' << num(f.score) << ',' << (f.selected ? 1 : 0) << ',' << (f.injected_global ? 1 : 0) << '\n';
        }
    }
    write_distributions_csv(out_dir / "distributions.csv", report.distributions);
    write_stats_csv(out_dir / "stats.csv", report.stats);
    {
        auto out = io::detail::open_out(out_dir / "table.csv");
        out << kTableHeader << '\n';
        auto rows = summarize(report, true);
        for (const auto& s : summarize(report, false)) rows.push_back(s);
        for (const auto& s : rows) {
            out << (s.task.empty() ? "all" : s.task) << ',' << to_string(s.scope) << ',' << s.n_recordings << ','
                << s.n_feasible << ',' << num(s.mean_f1) << ',' << num(s.mae_ibi_ms) << ',' << num(s.mae_rmssd_ms) << '\n';
        }
    }
    {
        nlohmann::ordered_json j;
        std::set<std::string> participants, tasks;
        for (const auto& r : report.rows) {
            participants.insert(r.participant);
            tasks.insert(r.task);
        }
        j["n_participants"] = participants.size();
        j["n_tasks"] = tasks.size();
        if (report.global_cutoffs) {
            j["global_cutoffs"] = {{"f_low", report.global_cutoffs->f_low}, {"f_high", report.global_cutoffs->f_high}};
        } else {
            j["global_cutoffs"] = nullptr;
        }
        auto scopes = nlohmann::ordered_json::object();
        for (const auto& s : summarize(report, false)) {
            auto num_or_null = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); };
            scopes[to_string(s.scope)] = {{"n_recordings", s.n_recordings}, {"n_feasible", s.n_feasible},
                                          {"mean_f1", num_or_null(s.mean_f1)}, {"mae_ibi_ms", num_or_null(s.mae_ibi_ms)},
                                          {"mae_rmssd_ms", num_or_null(s.mae_rmssd_ms)}};
        }
        j["scopes"] = scopes;

        // Motion level vs beat accuracy, per scope, over windows with accelerometer data.
        auto motion = nlohmann::ordered_json::object();
        for (ScopeLevel level : {ScopeLevel::BASE, ScopeLevel::GLOBAL, ScopeLevel::PER_PERSON_TASK}) {
            std::vector<double> auc, f1;
            for (const auto& r : report.rows) {
                if (r.scope != level) continue;
                for (const auto& w : r.eval.windows) {
                    if (w.motion_auc && w.n_ecg > 0 && w.n_ppg > 0) {
                        auc.push_back(*w.motion_auc);
                        f1.push_back(w.f1);
                    }
                }
            }
            try {
                motion[to_string(level)] = pearson_r(auc, f1);
            } catch (const Error&) {
                motion[to_string(level)] = nullptr;
            }
        }
        j["motion_auc_vs_f1_pearson_r"] = motion;
        auto out = io::detail::open_out(out_dir / "summary.json");
        out << j.dump(2) << '\n';
    }
    {
        auto out = io::detail::open_out(out_dir / "config.json");
        out << to_json(cfg).dump(2) << '\n';
    }
    for (const auto& [metric, label] : {std::pair{0, "F1 (%)"}, std::pair{1, "MAE IBI (ms)"}, std::pair{2, "MAE RMSSD (ms)"}}) {
        std::vector<std::pair<std::string, std::vector<double>>> groups;
        for (ScopeLevel level : {ScopeLevel::BASE, ScopeLevel::GLOBAL, ScopeLevel::PER_PERSON_TASK}) {
            std::vector<double> v;
            for (const auto& r : report.rows) {
                if (r.scope != level || !r.eval.feasible) continue;
                const auto o = r.eval.objectives;
                v.push_back(metric == 0 ? o.f1() : metric == 1 ? o.mae_ibi : o.mae_rmssd);
            }
            if (!v.empty()) groups.emplace_back(to_string(level), v);
        }
        static const char* names[] = {"box_f1.svg", "box_mae_ibi.svg", "box_mae_rmssd.svg"};
        detail::write_box_svg(out_dir / names[metric], label, groups);
    }
}

} // namespace ppgopt
