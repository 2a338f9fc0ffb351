// ppgopt command-line front end.
//
// Exit codes: 0 success, 2 invalid input / configuration, 3 runtime or numerics failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ppgopt/cohort.hpp"
#include "ppgopt/config.hpp"
#include "ppgopt/io.hpp"
#include "ppgopt/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ppgopt;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::string out_dir = ".";
};

RunConfig load_config(const Globals& g)
{
    RunConfig cfg = g.config_path.empty() ? parse_config(nlohmann::json::object()) : parse_config(io::read_json(g.config_path));
    if (g.seed) cfg.seed = cfg.nsga2.seed = *g.seed;
    if (g.jobs) cfg.jobs = cfg.nsga2.jobs = std::max<std::size_t>(1, *g.jobs);
    return cfg;
}

Role parse_role(const std::string& s)
{
    if (s == "ppg") return Role::PPG;
    if (s == "ecg") return Role::ECG;
    throw Error(ErrorKind::ValidationError, "--role must be 'ppg' or 'ecg'");
}

FilterSpec filter_for(Role role, const RunConfig& cfg, std::optional<double> f_low, std::optional<double> f_high)
{
    FilterSpec spec = role == Role::ECG ? cfg.ecg_filter : cfg.eval.ppg_filter;
    if (role == Role::PPG) {
        spec.f_low = cfg.base_cutoffs.f_low;
        spec.f_high = cfg.base_cutoffs.f_high;
    }
    if (f_low) spec.f_low = *f_low;
    if (f_high) spec.f_high = *f_high;
    return spec;
}

std::string label(const Recording& r) { return r.participant + "/" + r.task; }

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Band-pass cutoff optimization for PPG beat detection"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "random seed (overrides config)");
    app.add_option("--jobs", g.jobs, "worker threads (overrides config)");
    app.add_option("--out-dir", g.out_dir, "output directory");

    // synth
    auto* synth = app.add_subcommand("synth", "write a synthetic cohort and its manifest");
    std::size_t participants = 6;
    std::vector<std::string> tasks{"rest", "stress"};
    double duration_s = 120.0;
    synth->add_option("--participants", participants)->check(CLI::Range(1, 999));
    synth->add_option("--tasks", tasks)->delimiter(',');
    synth->add_option("--duration", duration_s, "seconds per recording")->check(CLI::PositiveNumber);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "validate a manifest, detect ECG beats, summarize recordings");
    std::string manifest_path;
    ingest->add_option("--manifest", manifest_path)->required();

    // filter / detect
    std::string input;
    std::string role_name = "ppg";
    std::optional<double> fs_hz, f_low, f_high;
    auto* filter = app.add_subcommand("filter", "zero-phase band-pass one signal file");
    auto* detect = app.add_subcommand("detect", "detect beats in one signal file");
    bool no_filter = false;
    for (auto* sub : {filter, detect}) {
        sub->add_option("--input", input)->required();
        sub->add_option("--role", role_name, "ppg or ecg");
        sub->add_option("--fs", fs_hz, "sampling rate (Hz); inferred from time_ms when omitted");
        sub->add_option("--f-low", f_low);
        sub->add_option("--f-high", f_high);
    }
    detect->add_flag("--no-filter", no_filter, "detect on the raw signal");

    // match
    auto* match = app.add_subcommand("match", "align and match PPG beats against ECG beats");
    std::string ppg_beats_path, ecg_beats_path;
    match->add_option("--ppg-beats", ppg_beats_path)->required();
    match->add_option("--ecg-beats", ecg_beats_path)->required();

    // sweep / optimize / report
    auto* sweep = app.add_subcommand("sweep", "evaluate every grid cutoff pair on every recording");
    auto* optimize = app.add_subcommand("optimize", "search cutoffs per scope and write fronts and selections");
    auto* report = app.add_subcommand("report", "full run: all scopes, statistics, tables and plots");
    for (auto* sub : {sweep, optimize, report}) sub->add_option("--manifest", manifest_path)->required();

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "compare conditions from a distributions.csv");
    std::string dist_path;
    stats_cmd->add_option("--input", dist_path, "distributions.csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        const RunConfig cfg = load_config(g);
        const fs::path out = g.out_dir;
        fs::create_directories(out);

        if (*synth) {
            const auto cohort = generate(synthetic_cohort(participants, tasks, duration_s, cfg.seed));
            const auto m = write_cohort(out, cohort);
            std::cout << "wrote " << m.recordings.size() << " recordings, manifest " << (out / "manifest.json").string() << '\n';
        } else if (*ingest) {
            const auto m = io::read_manifest(manifest_path);
            const auto data = load_dataset(m, cfg);
            auto csv = io::detail::open_out(out / "ingest.csv");
            csv << "participant,task,ppg_fs,ppg_duration_s,ppg_offset_ms,n_ecg_beats,n_windows,has_motion\n";
            for (const auto& r : data.recordings) {
                const bool motion = std::any_of(r.motion_auc.begin(), r.motion_auc.end(), [](const auto& v) { return v.has_value(); });
                csv << r.participant << ',' << r.task << ',' << io::format_double(r.ppg.fs()) << ','
                    << io::format_double(r.ppg.duration_ms() / 1000.0) << ',' << r.ppg_offset_ms << ',' << r.ecg_beats.size()
                    << ',' << r.windows.size() << ',' << (motion ? 1 : 0) << '\n';
                io::write_beats_csv(out / "ecg_beats" / (r.participant + "__" + r.task + ".csv"), r.ecg_beats);
                std::cout << label(r) << ": " << r.ecg_beats.size() << " ECG beats, " << r.windows.size() << " windows\n";
            }
        } else if (*filter || *detect) {
            const Role role = parse_role(role_name);
            const Signal raw = io::read_any_signal(input, fs_hz, role);
            const bool apply = *filter || !no_filter;
            const Signal s = apply ? apply_zero_phase(design_bandpass(filter_for(role, cfg, f_low, f_high), raw.fs()), raw) : raw;
            if (*filter) {
                io::write_signal_csv(out / "filtered.csv", s);
                std::cout << "wrote " << (out / "filtered.csv").string() << '\n';
            } else {
                const auto beats = role == Role::ECG ? detect_ecg_beats(s, cfg.ecg_detector) : detect_ppg_beats(s, cfg.eval.ppg_detector);
                io::write_beats_csv(out / "beats.csv", beats);
                std::cout << beats.size() << " beats -> " << (out / "beats.csv").string() << '\n';
            }
        } else if (*match) {
            const auto ppg = io::read_beats_csv(ppg_beats_path, BeatSource::PPG);
            const auto ecg = io::read_beats_csv(ecg_beats_path, BeatSource::ECG);
            if (ppg.empty() || ecg.empty()) throw Error(ErrorKind::EmptyInput, "no beats to match");
            const Millis lag = best_lag(ppg, ecg, cfg.eval.matching);
            const auto m = match_beats(ppg, ecg, cfg.eval.matching.tolerance_ms, lag);
            const auto acc = se_ppv_f1(m);
            const auto last = static_cast<double>(std::max(ppg.times().back() + lag, ecg.times().back()) + 1);
            const auto windows = tile_windows(last, cfg.window_ms);
            const auto seg = window_metrics(ppg, ecg, lag, windows, cfg.eval.matching.tolerance_ms, cfg.eval.cleaning);
            nlohmann::ordered_json j;
            j["lag_ms"] = lag;
            j["n_correct"] = m.n_correct;
            j["n_ecg"] = m.n_ecg;
            j["n_ppg"] = m.n_ppg;
            j["se"] = acc.se;
            j["ppv"] = acc.ppv;
            j["f1"] = acc.f1;
            j["n_windows"] = seg.size();
            j["n_valid_windows"] = std::count_if(seg.begin(), seg.end(), [](const auto& w) { return w.valid; });
            io::detail::open_out(out / "match.json") << j.dump(2) << '\n';
            std::cout << j.dump(2) << '\n';
        } else if (*sweep) {
            const auto data = load_dataset(io::read_manifest(manifest_path), cfg);
            CutoffEvaluator ev(data, cfg.eval);
            if (!cfg.cache_dir.empty()) load_cache(ev, cfg.cache_dir);
            const OptimizationScope all{ScopeLevel::GLOBAL, std::nullopt, std::nullopt};
            LatticeMemo memo([&ev, all](const CutoffPair& p) { return ev.evaluate(p, all); });
            std::vector<LatticePoint> grid;
            for (const auto& p : grid_combinations(cfg.bounds)) grid.push_back(LatticePoint::nearest(p));
            memo.evaluate(grid, cfg.jobs);
            if (!cfg.cache_dir.empty()) save_cache(ev, cfg.cache_dir);
            auto csv = io::detail::open_out(out / "sweep.csv");
            csv << "participant,task,f_low,f_high,feasible,mean_f1,mae_ibi_ms,mae_rmssd_ms\n";
            for (const auto& lp : grid) {
                const auto pair = lp.pair();
                const auto pooled = memo.at(lp);
                csv << "*,*," << io::format_double(pair.f_low) << ',' << io::format_double(pair.f_high) << ",1,"
                    << io::format_double(pooled.f1()) << ',' << io::format_double(pooled.mae_ibi) << ','
                    << io::format_double(pooled.mae_rmssd) << '\n';
            }
            for (std::size_t i = 0; i < data.recordings.size(); ++i) {
                const auto& r = data.recordings[i];
                for (const auto& lp : grid) {
                    const auto pair = lp.pair();
                    const auto& e = ev.recording(i, pair);
                    csv << r.participant << ',' << r.task << ',' << io::format_double(pair.f_low) << ','
                        << io::format_double(pair.f_high) << ',' << (e.feasible ? 1 : 0) << ',';
                    if (e.feasible) {
                        csv << io::format_double(e.objectives.f1()) << ',' << io::format_double(e.objectives.mae_ibi) << ','
                            << io::format_double(e.objectives.mae_rmssd);
                    } else {
                        csv << ",,";
                    }
                    csv << '\n';
                }
            }
            std::cout << grid.size() << " cutoff pairs x " << data.recordings.size() << " recordings -> "
                      << (out / "sweep.csv").string() << '\n';
        } else if (*optimize || *report) {
            const auto data = load_dataset(io::read_manifest(manifest_path), cfg);
            const auto rep = run_pipeline(data, cfg);
            if (*report) {
                write_report(rep, cfg, out);
                for (const auto& s : summarize(rep, false)) {
                    std::printf("%-16s F1 %.2f %%  MAE IBI %.1f ms  MAE RMSSD %.1f ms\n", to_string(s.scope), s.mean_f1,
                                s.mae_ibi_ms, s.mae_rmssd_ms);
                }
            } else {
                auto csv = io::detail::open_out(out / "selected.csv");
                csv << "scope,participant,task,f_low,f_high\n";
                for (const auto& r : rep.rows) {
                    if (r.scope == ScopeLevel::BASE) continue;
                    csv << to_string(r.scope) << ',' << r.participant << ',' << r.task << ','
                        << io::format_double(r.cutoffs.f_low) << ',' << io::format_double(r.cutoffs.f_high) << '\n';
                }
                auto fcsv = io::detail::open_out(out / "fronts.csv");
                fcsv << kFrontsHeader << '\n';
                for (const auto& f : rep.fronts) {
                    const auto& o = f.solution.objectives;
                    fcsv << to_string(f.scope) << ',' << f.participant << ',' << f.task << ','
                         << io::format_double(f.solution.pair.f_low) << ',' << io::format_double(f.solution.pair.f_high)
                         << ',' << io::format_double(o.f1()) << ',' << io::format_double(o.mae_ibi) << ','
                         << io::format_double(o.mae_rmssd) << ',' << io::format_double(f.score) << ',' << (f.selected ? 1 : 0)
                         << ',' << (f.injected_global ? 1 : 0) << '\n';
                }
                if (rep.global_cutoffs) {
                    std::printf("global cutoffs: %.1f-%.1f Hz\n", rep.global_cutoffs->f_low, rep.global_cutoffs->f_high);
                }
            }
            std::cout << "wrote results to " << out.string() << '\n';
        } else if (*stats_cmd) {
            const auto rows = compare_conditions(read_distributions_csv(dist_path), cfg);
            write_stats_csv(out / "stats.csv", rows);
            for (const auto& s : rows) {
                std::printf("%s %s %s %s%s%s p=%.4g p_bonf=%.4g %s\n", s.task.c_str(), s.metric.c_str(), s.test.c_str(),
                            s.condition_a.c_str(), s.condition_b.empty() ? "" : " vs ", s.condition_b.c_str(), s.p_value,
                            s.p_bonferroni, s.note.c_str());
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.is_validation() ? kExitValidation : kExitRuntime;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
