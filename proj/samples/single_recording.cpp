// Evaluate a few cutoff pairs on one synthetic recording with strong
// baseline wander, then let NSGA-II pick one.

#include <cstdio>

#include "ppgopt/cohort.hpp"

using namespace ppgopt;

int main()
{
    SynthRecordingSpec spec;
    spec.participant = "demo";
    spec.task = "rest";
    spec.synth.duration_s = 180;
    spec.synth.mean_hr_bpm = 84;
    spec.synth.hrv_sd_ms = 30;
    spec.synth.noise_snr_db = 20;
    spec.synth.baseline_wander_hz = 0.8;
    spec.synth.baseline_wander_amp = 3.0;

    RunConfig cfg;
    Dataset data;
    data.recordings.push_back(to_recording(generate(spec), cfg));

    std::printf("f_low  f_high   F1 (%%)  MAE IBI  MAE RMSSD\n");
    for (CutoffPair p : {CutoffPair{0.5, 4.0}, CutoffPair{1.0, 4.0}, CutoffPair{1.2, 3.0}}) {
        const auto e = evaluate_recording(data.recordings[0], p, cfg.eval);
        if (!e.feasible) {
            std::printf("%5.1f  %6.1f   infeasible: %s\n", p.f_low, p.f_high, e.failure.c_str());
            continue;
        }
        std::printf("%5.1f  %6.1f   %6.2f  %7.1f  %9.1f\n", p.f_low, p.f_high, e.objectives.f1(), e.objectives.mae_ibi,
                    e.objectives.mae_rmssd);
    }

    CutoffEvaluator ev(data, cfg.eval);
    const OptimizationScope scope{ScopeLevel::GLOBAL, std::nullopt, std::nullopt};
    const auto front = nsga2([&](const CutoffPair& p) { return ev.evaluate(p, scope); }, cfg.bounds, cfg.nsga2);
    const auto pick = select_scalarized(front);
    std::printf("front of %zu points; selected %.1f-%.1f Hz, F1 %.2f %%\n", front.size(), pick.pair.f_low, pick.pair.f_high,
                pick.objectives.f1());
}
