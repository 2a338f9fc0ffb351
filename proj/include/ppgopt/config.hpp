#pragma once

// Run configuration. JSON, one section per module; every key is optional and
// defaults to the values below. Unknown keys are rejected.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppgopt/beats.hpp"
#include "ppgopt/error.hpp"
#include "ppgopt/evaluate.hpp"
#include "ppgopt/filter.hpp"
#include "ppgopt/optimizer.hpp"

namespace ppgopt {

enum class SearchMethod { NSGA2, GRID };

struct RunConfig {
    std::uint64_t seed = 42;
    std::size_t jobs = 1;
    Millis window_ms = 60'000;
    double alpha = 0.05;
    bool pooled_cohens_d = false;
    bool run_global = true;
    bool run_per_person_task = true;
    CutoffPair base_cutoffs = kBaseCutoffs;
    SearchMethod method = SearchMethod::NSGA2;
    CutoffBounds bounds;
    Nsga2Config nsga2;
    EvalConfig eval;
    FilterSpec ecg_filter = FilterSpec::ecg_default();
    EcgDetectorConfig ecg_detector;
    std::string cache_dir; // empty: no on-disk cache
};

namespace detail {

inline FilterFamily family_from(const std::string& s)
{
    if (s == "chebyshev2") return FilterFamily::CHEBYSHEV2;
    if (s == "elliptic") return FilterFamily::ELLIPTIC;
    if (s == "butterworth") return FilterFamily::BUTTERWORTH;
    throw Error(ErrorKind::ValidationError, "config: unknown filter family '" + s + "'");
}

// Reads keys of one JSON object, remembering which were used.
class Section {
public:
    Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw Error(ErrorKind::ValidationError, "config: '" + path_ + "' must be an object");
    }

    template <typename T>
    void get(const char* key, T& out)
    {
        used_.push_back(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw Error(ErrorKind::ValidationError, "config: bad value for '" + name(key) + "'");
        }
    }

    [[nodiscard]] bool has(const char* key) const { return j_.contains(key); }

    Section sub(const char* key)
    {
        used_.push_back(key);
        static const nlohmann::json empty = nlohmann::json::object();
        return Section(j_.contains(key) ? j_.at(key) : empty, name(key));
    }

    void finish() const
    {
        for (const auto& [k, _] : j_.items()) {
            if (std::find(used_.begin(), used_.end(), k) == used_.end()) {
                throw Error(ErrorKind::ValidationError, "config: unknown key '" + name(k.c_str()) + "'");
            }
        }
    }

private:
    [[nodiscard]] std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    const nlohmann::json& j_;
    std::string path_;
    std::vector<std::string> used_;
};

inline void read_filter(Section s, FilterSpec& f, bool with_band)
{
    std::string family = to_string(f.family);
    s.get("family", family);
    f.family = family_from(family);
    s.get("order", f.order);
    if (with_band) {
        s.get("f_low", f.f_low);
        s.get("f_high", f.f_high);
    }
    s.get("stopband_atten_db", f.stopband_atten_db);
    s.get("passband_ripple_db", f.passband_ripple_db);
    s.finish();
}

inline nlohmann::ordered_json filter_json(const FilterSpec& f, bool with_band)
{
    nlohmann::ordered_json j;
    j["family"] = to_string(f.family);
    j["order"] = f.order;
    if (with_band) {
        j["f_low"] = f.f_low;
        j["f_high"] = f.f_high;
    }
    j["stopband_atten_db"] = f.stopband_atten_db;
    j["passband_ripple_db"] = f.passband_ripple_db;
    return j;
}

} // namespace detail

inline RunConfig parse_config(const nlohmann::json& j)
{
    RunConfig c;
    detail::Section root(j, "");
    root.get("seed", c.seed);
    root.get("jobs", c.jobs);
    root.get("window_ms", c.window_ms);
    root.get("cache_dir", c.cache_dir);
    {
        auto s = root.sub("scopes");
        s.get("global", c.run_global);
        s.get("per_person_task", c.run_per_person_task);
        s.finish();
    }
    {
        auto s = root.sub("base_cutoffs");
        s.get("f_low", c.base_cutoffs.f_low);
        s.get("f_high", c.base_cutoffs.f_high);
        s.finish();
    }
    {
        auto s = root.sub("search");
        std::string method = "nsga2";
        s.get("method", method);
        if (method == "nsga2") {
            c.method = SearchMethod::NSGA2;
        } else if (method == "grid") {
            c.method = SearchMethod::GRID;
        } else {
            throw Error(ErrorKind::ValidationError, "config: search.method must be 'nsga2' or 'grid'");
        }
        auto b = s.sub("bounds");
        b.get("low_min", c.bounds.low_min);
        b.get("low_max", c.bounds.low_max);
        b.get("high_min", c.bounds.high_min);
        b.get("high_max", c.bounds.high_max);
        b.finish();
        auto n = s.sub("nsga2");
        n.get("pop_size", c.nsga2.pop_size);
        n.get("generations", c.nsga2.generations);
        n.get("crossover_prob", c.nsga2.crossover_prob);
        n.get("crossover_eta", c.nsga2.crossover_eta);
        n.get("mutation_prob", c.nsga2.mutation_prob);
        n.get("mutation_eta", c.nsga2.mutation_eta);
        n.finish();
        s.finish();
    }
    detail::read_filter(root.sub("ppg_filter"), c.eval.ppg_filter, false);
    detail::read_filter(root.sub("ecg_filter"), c.ecg_filter, true);
    {
        auto s = root.sub("ppg_detector");
        s.get("moving_average_ms", c.eval.ppg_detector.moving_average_ms);
        s.get("min_bpm", c.eval.ppg_detector.min_bpm);
        s.get("max_bpm", c.eval.ppg_detector.max_bpm);
        s.get("levels_percent", c.eval.ppg_detector.levels_percent);
        s.get("foot_lookback_ms", c.eval.ppg_detector.foot_lookback_ms);
        s.get("sd_tie_samples", c.eval.ppg_detector.sd_tie_samples);
        s.finish();
    }
    {
        auto s = root.sub("ecg_detector");
        s.get("smoothing_ms", c.ecg_detector.smoothing_ms);
        s.get("refractory_ms", c.ecg_detector.refractory_ms);
        s.get("refine_ms", c.ecg_detector.refine_ms);
        s.get("block_ms", c.ecg_detector.block_ms);
        s.get("threshold_frac", c.ecg_detector.threshold_frac);
        s.finish();
    }
    {
        auto s = root.sub("matching");
        s.get("tolerance_ms", c.eval.matching.tolerance_ms);
        s.get("search_ms", c.eval.matching.search_ms);
        s.get("step_ms", c.eval.matching.step_ms);
        s.finish();
    }
    {
        auto s = root.sub("ibi_cleaning");
        s.get("min_ibi_ms", c.eval.cleaning.min_ibi_ms);
        s.get("max_ibi_ms", c.eval.cleaning.max_ibi_ms);
        s.get("max_rel_deviation", c.eval.cleaning.max_rel_deviation);
        s.get("min_valid_beats", c.eval.cleaning.min_valid_beats);
        s.finish();
    }
    {
        auto s = root.sub("stats");
        s.get("alpha", c.alpha);
        std::string d = "paired";
        s.get("cohens_d", d);
        if (d != "paired" && d != "pooled") throw Error(ErrorKind::ValidationError, "config: stats.cohens_d must be 'paired' or 'pooled'");
        c.pooled_cohens_d = d == "pooled";
        s.finish();
    }
    root.finish();

    c.bounds.validate();
    if (c.window_ms <= 0) throw Error(ErrorKind::ValidationError, "config: window_ms must be positive");
    if (c.jobs == 0) c.jobs = 1;
    if (c.eval.matching.step_ms <= 0) throw Error(ErrorKind::ValidationError, "config: matching.step_ms must be positive");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw Error(ErrorKind::ValidationError, "config: stats.alpha must be in (0, 1)");
    c.nsga2.seed = c.seed;
    c.nsga2.jobs = c.jobs;
    return c;
}

/// Full configuration with every default filled in; parse_config(to_json(c)) == c.
inline nlohmann::ordered_json to_json(const RunConfig& c)
{
    nlohmann::ordered_json j;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["window_ms"] = c.window_ms;
    j["cache_dir"] = c.cache_dir;
    j["scopes"] = {{"global", c.run_global}, {"per_person_task", c.run_per_person_task}};
    j["base_cutoffs"] = {{"f_low", c.base_cutoffs.f_low}, {"f_high", c.base_cutoffs.f_high}};
    nlohmann::ordered_json search;
    search["method"] = c.method == SearchMethod::NSGA2 ? "nsga2" : "grid";
    search["bounds"] = {{"low_min", c.bounds.low_min}, {"low_max", c.bounds.low_max}, {"high_min", c.bounds.high_min},
                        {"high_max", c.bounds.high_max}};
    search["nsga2"] = {{"pop_size", c.nsga2.pop_size},           {"generations", c.nsga2.generations},
                       {"crossover_prob", c.nsga2.crossover_prob}, {"crossover_eta", c.nsga2.crossover_eta},
                       {"mutation_prob", c.nsga2.mutation_prob},   {"mutation_eta", c.nsga2.mutation_eta}};
    j["search"] = search;
    j["ppg_filter"] = detail::filter_json(c.eval.ppg_filter, false);
    j["ecg_filter"] = detail::filter_json(c.ecg_filter, true);
    const auto& pd = c.eval.ppg_detector;
    j["ppg_detector"] = {{"moving_average_ms", pd.moving_average_ms}, {"min_bpm", pd.min_bpm}, {"max_bpm", pd.max_bpm},
                         {"levels_percent", pd.levels_percent}, {"foot_lookback_ms", pd.foot_lookback_ms},
                         {"sd_tie_samples", pd.sd_tie_samples}};
    const auto& ed = c.ecg_detector;
    j["ecg_detector"] = {{"smoothing_ms", ed.smoothing_ms}, {"refractory_ms", ed.refractory_ms}, {"refine_ms", ed.refine_ms},
                         {"block_ms", ed.block_ms}, {"threshold_frac", ed.threshold_frac}};
    const auto& m = c.eval.matching;
    j["matching"] = {{"tolerance_ms", m.tolerance_ms}, {"search_ms", m.search_ms}, {"step_ms", m.step_ms}};
    const auto& cl = c.eval.cleaning;
    j["ibi_cleaning"] = {{"min_ibi_ms", cl.min_ibi_ms}, {"max_ibi_ms", cl.max_ibi_ms},
                         {"max_rel_deviation", cl.max_rel_deviation}, {"min_valid_beats", cl.min_valid_beats}};
    j["stats"] = {{"alpha", c.alpha}, {"cohens_d", c.pooled_cohens_d ? "pooled" : "paired"}};
    return j;
}

} // namespace ppgopt
