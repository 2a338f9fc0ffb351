#pragma once

// Cutoff search: the decihertz grid, fast non-dominated sorting, NSGA-II over
// (f_low, f_high), and min-max scalarized selection of a single filter.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "ppgopt/error.hpp"
#include "ppgopt/synth.hpp"

namespace ppgopt {

/// Cutoff frequencies in Hz.
struct CutoffPair {
    double f_low = 0.5;
    double f_high = 4.0;
    friend bool operator==(const CutoffPair&, const CutoffPair&) = default;
};

/// A point of the 0.1 Hz lattice, in integer decihertz.
struct LatticePoint {
    int low_dh = 5;
    int high_dh = 40;

    [[nodiscard]] CutoffPair pair() const { return {low_dh / 10.0, high_dh / 10.0}; }
    static LatticePoint nearest(const CutoffPair& p)
    {
        return {static_cast<int>(std::lround(p.f_low * 10.0)), static_cast<int>(std::lround(p.f_high * 10.0))};
    }
    friend auto operator<=>(const LatticePoint&, const LatticePoint&) = default;
};

/// All objectives are minimized.
struct ObjectiveTriple {
    double neg_f1 = 0.0;
    double mae_ibi = 0.0;
    double mae_rmssd = 0.0;

    [[nodiscard]] std::array<double, 3> values() const { return {neg_f1, mae_ibi, mae_rmssd}; }
    [[nodiscard]] double f1() const { return -neg_f1; }
    friend bool operator==(const ObjectiveTriple&, const ObjectiveTriple&) = default;
};

inline constexpr double kInfeasiblePenaltyMs = 1e6;

inline ObjectiveTriple infeasible_triple() { return {0.0, kInfeasiblePenaltyMs, kInfeasiblePenaltyMs}; }

struct CutoffBounds {
    double low_min = 0.4;
    double low_max = 1.7;
    double high_min = 1.2;
    double high_max = 5.0;

    void validate() const
    {
        const bool ok = low_min > 0.0 && low_min <= low_max && high_min <= high_max && low_min < high_max &&
                        std::isfinite(low_max) && std::isfinite(high_max);
        if (!ok) throw Error(ErrorKind::InvalidInput, "invalid cutoff bounds");
    }
};

/// Cartesian product of the two ranges on the `step` lattice, keeping only
/// f_low < f_high. Lattice coordinates are integers, so no float drift.
inline std::vector<CutoffPair> grid_combinations(double low_min, double low_max, double high_min, double high_max,
                                                 double step = 0.1)
{
    if (!(step > 0.0)) throw Error(ErrorKind::InvalidInput, "grid step must be positive");
    const double inv = 1.0 / step;
    const bool decimal = std::abs(inv - std::round(inv)) < 1e-9;
    auto value = [&](long long u) { return decimal ? static_cast<double>(u) / std::round(inv) : static_cast<double>(u) * step; };
    const long long lo0 = std::llround(low_min / step), lo1 = std::llround(low_max / step);
    const long long hi0 = std::llround(high_min / step), hi1 = std::llround(high_max / step);
    std::vector<CutoffPair> out;
    for (long long lo = lo0; lo <= lo1; ++lo) {
        for (long long hi = hi0; hi <= hi1; ++hi) {
            if (lo < hi) out.push_back({value(lo), value(hi)});
        }
    }
    return out;
}

inline std::vector<CutoffPair> grid_combinations(const CutoffBounds& b = {}, double step = 0.1)
{
    return grid_combinations(b.low_min, b.low_max, b.high_min, b.high_max, step);
}

inline bool dominates(const ObjectiveTriple& a, const ObjectiveTriple& b)
{
    const auto va = a.values();
    const auto vb = b.values();
    bool strictly = false;
    for (std::size_t i = 0; i < 3; ++i) {
        if (va[i] > vb[i]) return false;
        if (va[i] < vb[i]) strictly = true;
    }
    return strictly;
}

/// Fast non-dominated sort. Front 0 holds the points no other point dominates;
/// indices inside each front are ascending.
inline std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const ObjectiveTriple> points)
{
    const std::size_t n = points.size();
    std::vector<std::vector<std::size_t>> dominated_by_me(n);
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) continue;
            if (dominates(points[p], points[q])) {
                dominated_by_me[p].push_back(q);
            } else if (dominates(points[q], points[p])) {
                ++domination_count[p];
            }
        }
        if (domination_count[p] == 0) current.push_back(p);
    }
    while (!current.empty()) {
        fronts.push_back(current);
        std::vector<std::size_t> next;
        for (std::size_t p : current) {
            for (std::size_t q : dominated_by_me[p]) {
                if (--domination_count[q] == 0) next.push_back(q);
            }
        }
        std::sort(next.begin(), next.end());
        current = std::move(next);
    }
    return fronts;
}

/// Crowding distance of each member of `front` (same order as `front`).
inline std::vector<double> crowding_distance(std::span<const ObjectiveTriple> points, std::span<const std::size_t> front)
{
    const std::size_t m = front.size();
    std::vector<double> dist(m, 0.0);
    if (m <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    for (std::size_t obj = 0; obj < 3; ++obj) {
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        auto val = [&](std::size_t k) { return points[front[k]].values()[obj]; };
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val(a) < val(b); });
        const double lo = val(order.front());
        const double hi = val(order.back());
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        if (!(hi > lo)) continue;
        for (std::size_t k = 1; k + 1 < m; ++k) {
            dist[order[k]] += (val(order[k + 1]) - val(order[k - 1])) / (hi - lo);
        }
    }
    return dist;
}

struct Nsga2Config {
    std::size_t pop_size = 40;
    std::size_t generations = 25;
    double crossover_prob = 0.9;
    double crossover_eta = 15.0;
    double mutation_prob = 0.5; // per variable
    double mutation_eta = 20.0;
    std::uint64_t seed = 42;
    std::size_t jobs = 1; // parallel objective evaluations; results do not depend on it
};

struct Solution {
    CutoffPair pair;
    ObjectiveTriple objectives;
};

/// Maps a continuous candidate onto a valid lattice point inside the bounds.
inline LatticePoint snap_to_lattice(const CutoffPair& p, const CutoffBounds& b)
{
    const int lo_min = static_cast<int>(std::lround(b.low_min * 10.0));
    const int lo_max = static_cast<int>(std::lround(b.low_max * 10.0));
    const int hi_min = static_cast<int>(std::lround(b.high_min * 10.0));
    const int hi_max = static_cast<int>(std::lround(b.high_max * 10.0));
    LatticePoint lp = LatticePoint::nearest(p);
    lp.low_dh = std::clamp(lp.low_dh, lo_min, lo_max);
    lp.high_dh = std::clamp(lp.high_dh, hi_min, hi_max);
    if (lp.low_dh >= lp.high_dh) {
        if (lp.low_dh + 1 <= hi_max) {
            lp.high_dh = std::max(lp.low_dh + 1, hi_min);
        } else {
            lp.low_dh = lp.high_dh - 1;
        }
    }
    return lp;
}

/// Evaluates lattice points not seen before, possibly in parallel, and
/// memoizes the results.
class LatticeMemo {
public:
    using Objective = std::function<ObjectiveTriple(const CutoffPair&)>;

    explicit LatticeMemo(Objective objective) : objective_(std::move(objective)) {}

    void evaluate(std::span<const LatticePoint> points, std::size_t jobs)
    {
        std::vector<LatticePoint> todo;
        for (const auto& p : points) {
            if (!cache_.contains(p) && std::find(todo.begin(), todo.end(), p) == todo.end()) todo.push_back(p);
        }
        std::vector<ObjectiveTriple> results(todo.size());
        const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, todo.size()));
        if (workers <= 1) {
            for (std::size_t i = 0; i < todo.size(); ++i) results[i] = objective_(todo[i].pair());
        } else {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&, w] {
                    for (std::size_t i = w; i < todo.size(); i += workers) results[i] = objective_(todo[i].pair());
                });
            }
        }
        for (std::size_t i = 0; i < todo.size(); ++i) cache_.emplace(todo[i], results[i]);
    }

    [[nodiscard]] const ObjectiveTriple& at(const LatticePoint& p) const { return cache_.at(p); }
    [[nodiscard]] const std::map<LatticePoint, ObjectiveTriple>& cache() const noexcept { return cache_; }

private:
    Objective objective_;
    std::map<LatticePoint, ObjectiveTriple> cache_;
};

namespace detail {

// Simulated binary crossover for one bounded variable (Deb & Agrawal).
inline std::pair<double, double> sbx(double x1, double x2, double lo, double hi, double eta, Rng& rng)
{
    if (std::abs(x1 - x2) < 1e-14) return {x1, x2};
    const double y1 = std::min(x1, x2);
    const double y2 = std::max(x1, x2);
    const double u = rng.uniform();
    auto child = [&](double beta) {
        const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
        const double betaq = u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (eta + 1.0))
                                              : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
        return betaq;
    };
    const double bq1 = child(1.0 + 2.0 * (y1 - lo) / (y2 - y1));
    const double bq2 = child(1.0 + 2.0 * (hi - y2) / (y2 - y1));
    double c1 = std::clamp(0.5 * ((y1 + y2) - bq1 * (y2 - y1)), lo, hi);
    double c2 = std::clamp(0.5 * ((y1 + y2) + bq2 * (y2 - y1)), lo, hi);
    if (rng.uniform() <= 0.5) std::swap(c1, c2);
    return {c1, c2};
}

// Polynomial mutation for one bounded variable.
inline double polynomial_mutation(double x, double lo, double hi, double eta, Rng& rng)
{
    if (!(hi > lo)) return x;
    const double d1 = (x - lo) / (hi - lo);
    const double d2 = (hi - x) / (hi - lo);
    const double u = rng.uniform();
    const double pw = 1.0 / (eta + 1.0);
    double dq;
    if (u < 0.5) {
        const double v = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0);
        dq = std::pow(v, pw) - 1.0;
    } else {
        const double v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0);
        dq = 1.0 - std::pow(v, pw);
    }
    return std::clamp(x + dq * (hi - lo), lo, hi);
}

inline CutoffPair repair(CutoffPair p, const CutoffBounds& b)
{
    constexpr double eps = 0.1;
    if (p.f_low >= p.f_high) std::swap(p.f_low, p.f_high);
    p.f_low = std::clamp(p.f_low, b.low_min, b.low_max);
    p.f_high = std::clamp(p.f_high, b.high_min, b.high_max);
    if (p.f_high - p.f_low < eps) {
        p.f_high = std::min(p.f_low + eps, b.high_max);
        if (p.f_high - p.f_low < eps) p.f_low = std::max(p.f_high - eps, b.low_min);
    }
    return p;
}

} // namespace detail

/// NSGA-II over (f_low, f_high). Candidates are continuous; objectives are
/// evaluated (and memoized) at their nearest lattice point. Environmental
/// selection ranks distinct lattice points first and only falls back on
/// duplicates to fill the population. Returns the first front of every lattice
/// point this run evaluated (an elitist archive, so a point truncated away by
/// crowding is not lost), sorted by lattice coordinates. Deterministic for a
/// fixed seed regardless of cfg.jobs.
inline std::vector<Solution> nsga2(LatticeMemo& memo, const CutoffBounds& bounds, const Nsga2Config& cfg)
{
    bounds.validate();
    if (cfg.pop_size < 4 || cfg.pop_size % 2 != 0) throw Error(ErrorKind::InvalidInput, "population size must be even and >= 4");

    Rng rng(cfg.seed);
    const std::size_t n = cfg.pop_size;
    std::vector<CutoffPair> pop(n);
    for (auto& ind : pop) {
        ind = detail::repair({rng.uniform(bounds.low_min, bounds.low_max), rng.uniform(bounds.high_min, bounds.high_max)}, bounds);
    }

    std::map<LatticePoint, ObjectiveTriple> visited;
    auto objectives_of = [&](std::span<const CutoffPair> inds) {
        std::vector<LatticePoint> lps;
        for (const auto& p : inds) lps.push_back(snap_to_lattice(p, bounds));
        memo.evaluate(lps, cfg.jobs);
        std::vector<ObjectiveTriple> objs;
        for (const auto& lp : lps) {
            objs.push_back(memo.at(lp));
            visited.emplace(lp, objs.back());
        }
        return objs;
    };

    struct Ranked {
        std::vector<std::size_t> rank;
        std::vector<double> crowd;
    };
    auto rank_population = [](std::span<const ObjectiveTriple> objs) {
        Ranked r{std::vector<std::size_t>(objs.size()), std::vector<double>(objs.size())};
        const auto fronts = non_dominated_sort(objs);
        for (std::size_t f = 0; f < fronts.size(); ++f) {
            const auto cd = crowding_distance(objs, fronts[f]);
            for (std::size_t k = 0; k < fronts[f].size(); ++k) {
                r.rank[fronts[f][k]] = f;
                r.crowd[fronts[f][k]] = cd[k];
            }
        }
        return r;
    };

    auto objs = objectives_of(pop);
    auto ranked = rank_population(objs);

    const std::array<std::pair<double, double>, 2> var_bounds = {std::pair{bounds.low_min, bounds.low_max},
                                                                 std::pair{bounds.high_min, bounds.high_max}};
    auto tournament = [&]() {
        const auto a = static_cast<std::size_t>(rng.next() % n);
        const auto b = static_cast<std::size_t>(rng.next() % n);
        if (ranked.rank[a] != ranked.rank[b]) return ranked.rank[a] < ranked.rank[b] ? a : b;
        if (ranked.crowd[a] != ranked.crowd[b]) return ranked.crowd[a] > ranked.crowd[b] ? a : b;
        return std::min(a, b);
    };

    for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
        std::vector<CutoffPair> offspring;
        offspring.reserve(n);
        while (offspring.size() < n) {
            const CutoffPair& p1 = pop[tournament()];
            const CutoffPair& p2 = pop[tournament()];
            std::array<double, 2> c1 = {p1.f_low, p1.f_high};
            std::array<double, 2> c2 = {p2.f_low, p2.f_high};
            if (rng.uniform() <= cfg.crossover_prob) {
                for (std::size_t v = 0; v < 2; ++v) {
                    if (rng.uniform() <= 0.5) {
                        std::tie(c1[v], c2[v]) = detail::sbx(c1[v], c2[v], var_bounds[v].first, var_bounds[v].second, cfg.crossover_eta, rng);
                    }
                }
            }
            for (auto* c : {&c1, &c2}) {
                for (std::size_t v = 0; v < 2; ++v) {
                    if (rng.uniform() <= cfg.mutation_prob) {
                        (*c)[v] = detail::polynomial_mutation((*c)[v], var_bounds[v].first, var_bounds[v].second, cfg.mutation_eta, rng);
                    }
                }
            }
            offspring.push_back(detail::repair({c1[0], c1[1]}, bounds));
            offspring.push_back(detail::repair({c2[0], c2[1]}, bounds));
        }

        const auto off_objs = objectives_of(offspring);
        std::vector<CutoffPair> merged = pop;
        merged.insert(merged.end(), offspring.begin(), offspring.end());
        std::vector<ObjectiveTriple> merged_objs = objs;
        merged_objs.insert(merged_objs.end(), off_objs.begin(), off_objs.end());

        std::vector<std::size_t> distinct, repeats;
        {
            std::set<LatticePoint> seen;
            for (std::size_t i = 0; i < merged.size(); ++i) {
                (seen.insert(snap_to_lattice(merged[i], bounds)).second ? distinct : repeats).push_back(i);
            }
        }
        std::vector<ObjectiveTriple> distinct_objs;
        for (std::size_t i : distinct) distinct_objs.push_back(merged_objs[i]);

        std::vector<std::size_t> chosen;
        for (const auto& front : non_dominated_sort(distinct_objs)) {
            if (chosen.size() + front.size() <= n) {
                for (std::size_t k : front) chosen.push_back(distinct[k]);
                continue;
            }
            const auto cd = crowding_distance(distinct_objs, front);
            std::vector<std::size_t> order(front.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cd[a] > cd[b]; });
            for (std::size_t k = 0; chosen.size() < n; ++k) chosen.push_back(distinct[front[order[k]]]);
            break;
        }
        for (std::size_t k = 0; chosen.size() < n; ++k) chosen.push_back(repeats[k]);
        std::vector<CutoffPair> next_pop;
        std::vector<ObjectiveTriple> next_objs;
        for (std::size_t i : chosen) {
            next_pop.push_back(merged[i]);
            next_objs.push_back(merged_objs[i]);
        }
        pop = std::move(next_pop);
        objs = std::move(next_objs);
        ranked = rank_population(objs);
    }

    std::vector<LatticePoint> points;
    std::vector<ObjectiveTriple> values;
    for (const auto& [lp, obj] : visited) {
        points.push_back(lp);
        values.push_back(obj);
    }
    std::vector<Solution> front;
    const auto fronts = non_dominated_sort(values);
    for (std::size_t i : fronts.front()) front.push_back({points[i].pair(), values[i]});
    return front;
}

inline std::vector<Solution> nsga2(const LatticeMemo::Objective& eval, const CutoffBounds& bounds, const Nsga2Config& cfg)
{
    LatticeMemo memo(eval);
    return nsga2(memo, bounds, cfg);
}

/// Min-max normalization ranges of each objective over a set of solutions.
struct NormalizationRange {
    std::array<double, 3> lo{};
    std::array<double, 3> hi{};

    static NormalizationRange over(std::span<const Solution> front)
    {
        NormalizationRange r;
        r.lo.fill(std::numeric_limits<double>::infinity());
        r.hi.fill(-std::numeric_limits<double>::infinity());
        for (const auto& s : front) {
            const auto v = s.objectives.values();
            for (std::size_t k = 0; k < 3; ++k) {
                r.lo[k] = std::min(r.lo[k], v[k]);
                r.hi[k] = std::max(r.hi[k], v[k]);
            }
        }
        return r;
    }

    /// -F1_norm + MAE_IBI_norm + MAE_RMSSD_norm; a constant objective
    /// normalizes to 0. F1 = -neg_f1, so F1_norm = (hi[0] - neg_f1) / span.
    [[nodiscard]] double score(const ObjectiveTriple& t) const
    {
        const auto v = t.values();
        auto norm = [&](std::size_t k, double x) {
            const double span = hi[k] - lo[k];
            return span > 0.0 ? x / span : 0.0;
        };
        return -norm(0, hi[0] - v[0]) + norm(1, v[1] - lo[1]) + norm(2, v[2] - lo[2]);
    }
};

inline std::vector<double> scalarized_scores(std::span<const Solution> front)
{
    const auto range = NormalizationRange::over(front);
    std::vector<double> out;
    for (const auto& s : front) out.push_back(range.score(s.objectives));
    return out;
}

/// The front member minimizing -F1_norm + MAE_IBI_norm + MAE_RMSSD_norm; ties
/// go to lower MAE RMSSD, then lower MAE IBI, then lower f_low.
inline std::size_t select_scalarized_index(std::span<const Solution> front)
{
    if (front.empty()) throw Error(ErrorKind::EmptyInput, "cannot select from an empty front");
    const auto scores = scalarized_scores(front);
    std::size_t best = 0;
    for (std::size_t i = 1; i < front.size(); ++i) {
        const auto& a = front[i];
        const auto& b = front[best];
        if (scores[i] != scores[best]) {
            if (scores[i] < scores[best]) best = i;
            continue;
        }
        if (a.objectives.mae_rmssd != b.objectives.mae_rmssd) {
            if (a.objectives.mae_rmssd < b.objectives.mae_rmssd) best = i;
            continue;
        }
        if (a.objectives.mae_ibi != b.objectives.mae_ibi) {
            if (a.objectives.mae_ibi < b.objectives.mae_ibi) best = i;
            continue;
        }
        if (a.pair.f_low < b.pair.f_low) best = i;
    }
    return best;
}

inline Solution select_scalarized(std::span<const Solution> front) { return front[select_scalarized_index(front)]; }

/// Non-dominated subset of `candidates`, in input order.
inline std::vector<Solution> pareto_filter(std::span<const Solution> candidates)
{
    std::vector<ObjectiveTriple> objs;
    for (const auto& c : candidates) objs.push_back(c.objectives);
    std::vector<Solution> out;
    const auto fronts = non_dominated_sort(objs);
    if (fronts.empty()) return out;
    for (std::size_t i : fronts.front()) out.push_back(candidates[i]);
    return out;
}

} // namespace ppgopt
