#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "ppgopt/filter.hpp"
#include "ppgopt/metrics.hpp"
#include "test_util.hpp"

using namespace ppgopt;

namespace {

BeatSeries series(std::vector<Millis> t, BeatSource s = BeatSource::ECG) { return BeatSeries(std::move(t), s); }

std::vector<Millis> regular(std::size_t n, Millis period, Millis start = 0)
{
    std::vector<Millis> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back(start + static_cast<Millis>(i) * period);
    return t;
}

std::vector<Millis> random_beats(testutil::TestRng& rng, std::size_t max_n, Millis span)
{
    const auto n = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(max_n)));
    std::vector<Millis> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back(rng.integer(0, span));
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

// Maximum bipartite matching by augmenting paths (Kuhn).
std::size_t max_matching(const std::vector<Millis>& a, const std::vector<Millis>& b, Millis tol)
{
    std::vector<int> owner(b.size(), -1);
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::vector<bool> seen(b.size(), false);
        std::function<bool(std::size_t)> augment = [&](std::size_t u) {
            for (std::size_t v = 0; v < b.size(); ++v) {
                if (seen[v] || std::abs(a[u] - b[v]) > tol) continue;
                seen[v] = true;
                if (owner[v] < 0 || augment(static_cast<std::size_t>(owner[v]))) {
                    owner[v] = static_cast<int>(u);
                    return true;
                }
            }
            return false;
        };
        augment(i);
    }
    return static_cast<std::size_t>(std::count_if(owner.begin(), owner.end(), [](int o) { return o >= 0; }));
}

std::vector<Window> one_minute_windows(std::size_t n)
{
    std::vector<Window> w;
    for (std::size_t i = 0; i < n; ++i) w.push_back({static_cast<Millis>(i) * 60000, 60000});
    return w;
}

} // namespace

TEST(MatchBeats, IdenticalAndToleranceBoundary)
{
    const auto t = regular(10, 800);
    EXPECT_EQ(match_beats(t, t, 150).n_correct, 10u);
    const std::vector<Millis> p{1151}, e{1000};
    EXPECT_EQ(match_beats(p, e, 150).n_correct, 0u);
    const std::vector<Millis> p2{1150};
    EXPECT_EQ(match_beats(p2, e, 150).n_correct, 1u);
    EXPECT_EQ(match_beats(std::vector<Millis>{}, e, 150).n_correct, 0u);
}

TEST(MatchBeats, CountEqualsMaximumMatchingOnRandomInstances)
{
    testutil::TestRng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_beats(rng, 20, 5000);
        const auto b = random_beats(rng, 20, 5000);
        const Millis tol = rng.integer(0, 400);
        const auto m = match_beats(a, b, tol);
        ASSERT_EQ(m.n_correct, max_matching(a, b, tol)) << "trial " << trial;
    }
}

TEST(MatchBeats, PairsAreOneToOneAndWithinTolerance)
{
    testutil::TestRng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_beats(rng, 30, 8000);
        const auto b = random_beats(rng, 30, 8000);
        const Millis lag = rng.integer(-300, 300);
        const auto m = match_beats(a, b, 150, lag);
        EXPECT_LE(m.n_correct, std::min(m.n_ecg, m.n_ppg));
        std::vector<Millis> es, ps;
        for (auto [e, p] : m.pairs) {
            EXPECT_LE(std::abs(p + lag - e), 150);
            es.push_back(e);
            ps.push_back(p);
        }
        std::sort(es.begin(), es.end());
        std::sort(ps.begin(), ps.end());
        EXPECT_EQ(std::adjacent_find(es.begin(), es.end()), es.end());
        EXPECT_EQ(std::adjacent_find(ps.begin(), ps.end()), ps.end());
    }
}

TEST(MatchBeats, CountsSymmetricAndShiftInvariant)
{
    testutil::TestRng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_beats(rng, 25, 6000);
        const auto b = random_beats(rng, 25, 6000);
        const Millis tol = rng.integer(0, 300);
        const auto ab = match_beats(a, b, tol).n_correct;
        EXPECT_EQ(ab, match_beats(b, a, tol).n_correct);
        const Millis d = rng.integer(-5000, 5000);
        auto a2 = a, b2 = b;
        for (auto& v : a2) v += d;
        for (auto& v : b2) v += d;
        EXPECT_EQ(ab, match_beats(a2, b2, tol).n_correct);
    }
}

TEST(BestLag, RecoversConstructedShifts)
{
    const auto ecg = series(regular(60, 1000, 3000));
    EXPECT_EQ(best_lag(ecg.shifted(500), ecg), -500);
    EXPECT_EQ(best_lag(ecg, ecg), 0);
    EXPECT_THROW(best_lag(series({}), ecg), Error);
}

TEST(BestLag, JitteredOffsetAgreesWithFineSearch)
{
    testutil::TestRng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Millis> e, p;
        Millis t = 2500;
        for (int i = 0; i < 80; ++i) {
            t += rng.integer(700, 1100);
            e.push_back(t);
            p.push_back(t + 300 + rng.integer(-40, 40));
        }
        const auto ecg = series(e);
        const auto ppg = series(p, BeatSource::PPG);
        const Millis lag = best_lag(ppg, ecg);
        EXPECT_LE(std::abs(lag + 300), 40) << "trial " << trial;

        std::size_t fine_best = 0;
        for (Millis l = -2000; l <= 2000; ++l) fine_best = std::max(fine_best, match_beats(ppg, ecg, 150, l).n_correct);
        EXPECT_EQ(match_beats(ppg, ecg, 150, lag).n_correct, fine_best);
    }
}

TEST(Accuracy, WorkedExamples)
{
    auto a = se_ppv_f1(10, 10, 10);
    EXPECT_DOUBLE_EQ(a.se, 100.0);
    EXPECT_DOUBLE_EQ(a.f1, 100.0);
    a = se_ppv_f1(8, 10, 10);
    EXPECT_DOUBLE_EQ(a.ppv, 80.0);
    EXPECT_DOUBLE_EQ(a.f1, 80.0);
    a = se_ppv_f1(6, 10, 8);
    EXPECT_DOUBLE_EQ(a.se, 60.0);
    EXPECT_DOUBLE_EQ(a.ppv, 75.0);
    EXPECT_NEAR(a.f1, 66.666666666666667, 1e-12);
    EXPECT_DOUBLE_EQ(se_ppv_f1(0, 5, 5).f1, 0.0);
    EXPECT_THROW(se_ppv_f1(0, 0, 3), Error);
}

TEST(Accuracy, F1BetweenSeAndPpv)
{
    testutil::TestRng rng(19);
    for (int i = 0; i < 500; ++i) {
        const auto ne = static_cast<std::size_t>(rng.integer(1, 100));
        const auto np = static_cast<std::size_t>(rng.integer(1, 100));
        const auto nc = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(std::min(ne, np))));
        const auto a = se_ppv_f1(nc, ne, np);
        EXPECT_GE(a.f1, std::min(a.se, a.ppv) - 1e-12);
        EXPECT_LE(a.f1, std::max(a.se, a.ppv) + 1e-12);
    }
}

TEST(CleanIbis, RuleExamples)
{
    EXPECT_EQ(clean_ibis(std::vector<double>{800, 810, 1600, 805}).values, (std::vector<double>{800, 810, 805}));
    EXPECT_EQ(clean_ibis(std::vector<double>{800, 800, 800}).values, (std::vector<double>{800, 800, 800}));
    EXPECT_EQ(clean_ibis(std::vector<double>{250, 800, 810}).values, (std::vector<double>{800, 810}));
    const auto c = clean_ibis(std::vector<double>{800, 810, 1600, 805});
    EXPECT_EQ(c.linked, (std::vector<bool>{false, true, false}));
}

TEST(CleanIbis, Idempotent)
{
    testutil::TestRng rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> x;
        const auto n = rng.integer(0, 40);
        for (int i = 0; i < n; ++i) x.push_back(rng.uniform(100.0, 2500.0));
        const auto once = clean_ibis(x).values;
        EXPECT_EQ(clean_ibis(once).values, once) << "trial " << trial;
    }
}

TEST(Rmssd, ClosedFormsAndOracle)
{
    EXPECT_DOUBLE_EQ(rmssd(std::vector<double>{800, 800, 800}), 0.0);
    EXPECT_DOUBLE_EQ(rmssd(std::vector<double>{800, 850, 800}), 50.0);
    EXPECT_THROW(rmssd(std::vector<double>{800}), Error);

    testutil::TestRng rng(29);
    std::vector<double> x(100);
    for (auto& v : x) v = rng.uniform(600.0, 1200.0);
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += std::pow(x[i] - x[i - 1], 2);
    EXPECT_NEAR(rmssd(x), std::sqrt(s / 99.0), 1e-9);

    auto scaled = x;
    for (auto& v : scaled) v *= 2.5;
    EXPECT_NEAR(rmssd(scaled), 2.5 * rmssd(x), 1e-9);
}

TEST(Rmssd, SkipsPairsAcrossDroppedIntervals)
{
    const auto c = clean_ibis(std::vector<double>{800, 820, 1600, 800, 780});
    // valid pairs: (800, 820) and (800, 780)
    EXPECT_NEAR(rmssd(c), 20.0, 1e-12);
}

TEST(Mae, ExamplesAndOracle)
{
    EXPECT_DOUBLE_EQ(mae(std::vector<double>{0, 0, 0}), 0.0);
    EXPECT_DOUBLE_EQ(mae(std::vector<double>{-3, 3}), 3.0);
    EXPECT_THROW(mae(std::vector<double>{}), Error);
    testutil::TestRng rng(31);
    std::vector<double> x(1000);
    double s = 0.0;
    for (auto& v : x) {
        v = rng.uniform(-100.0, 100.0);
        s += std::abs(v);
    }
    EXPECT_NEAR(mae(x), s / 1000.0, 1e-12);
}

TEST(WindowMetrics, FewBeatsInvalid)
{
    const auto e = series(regular(5, 1000, 1000));
    const auto w = window_metrics(e.shifted(0), e, 0, one_minute_windows(1));
    ASSERT_EQ(w.size(), 1u);
    EXPECT_FALSE(w[0].valid);
}

TEST(WindowMetrics, IdenticalSeriesHaveZeroError)
{
    testutil::TestRng rng(37);
    std::vector<Millis> t;
    Millis now = 100;
    while (now < 180000) {
        t.push_back(now);
        now += rng.integer(750, 900);
    }
    const auto e = series(t);
    const auto w = window_metrics(e, e, 0, one_minute_windows(3));
    for (const auto& s : w) {
        ASSERT_TRUE(s.valid);
        EXPECT_DOUBLE_EQ(s.abs_err_ibi_ms, 0.0);
        EXPECT_DOUBLE_EQ(s.abs_err_rmssd_ms, 0.0);
        EXPECT_DOUBLE_EQ(s.f1, 100.0);
    }
}

TEST(WindowMetrics, AlternatingJitterRmssd)
{
    // ECG every 1000 ms; PPG alternates +20 / -20 ms, so PPG IBIs alternate
    // 960 / 1040 and every successive difference is 80 ms.
    std::vector<Millis> e, p;
    for (int i = 0; i < 59; ++i) {
        e.push_back(500 + i * 1000);
        p.push_back(500 + i * 1000 + (i % 2 == 0 ? 20 : -20));
    }
    const auto w = window_metrics(series(p, BeatSource::PPG), series(e), 0, one_minute_windows(1));
    ASSERT_TRUE(w[0].valid);
    EXPECT_NEAR(w[0].ref_rmssd_ms, 0.0, 1e-12);
    EXPECT_NEAR(w[0].rmssd_ms, 80.0, 1e-12);
    EXPECT_NEAR(w[0].abs_err_rmssd_ms, 80.0, 1e-12);
    EXPECT_DOUBLE_EQ(w[0].f1, 100.0);
}

TEST(WindowMetrics, LagIsAppliedBeforeWindowing)
{
    const auto e = series(regular(59, 1000, 500));
    const auto p = e.shifted(700);
    const auto w = window_metrics(p, e, -700, one_minute_windows(1));
    EXPECT_DOUBLE_EQ(w[0].f1, 100.0);
}

TEST(MotionAuc, ZeroAndDc)
{
    const std::size_t n = 32 * 60;
    const Signal zero(std::vector<double>(n, 0.0), 32.0, 0, Role::ACC_X);
    const Signal one(std::vector<double>(n, 1.0), 32.0, 0, Role::ACC_Z);
    const Window w{0, 60000};
    EXPECT_DOUBLE_EQ(motion_auc(zero, zero, zero, w), 0.0);

    const Signal s(testutil::sine(1.0, 32.0, n), 32.0, 0, Role::ACC_X);
    const double unit = motion_auc(s, zero, zero, w);
    EXPECT_LT(std::abs(motion_auc(zero, zero, one, w)), 1e-3 * unit);
}

TEST(MotionAuc, SinusoidMatchesRectifiedIntegral)
{
    // A 1 Hz unit sinusoid passes the 0.2-5 Hz band nearly unchanged; the
    // rectified integral over 60 s is 60 * 2/pi.
    const std::size_t n = 100 * 60;
    const Signal s(testutil::sine(1.0, 100.0, n), 100.0, 0, Role::ACC_X);
    const Signal zero(std::vector<double>(n, 0.0), 100.0, 0, Role::ACC_Y);
    const auto cascade = design_bandpass(FilterSpec::motion_default(), 100.0);
    const double freqs[] = {1.0};
    const double gain = std::abs(frequency_response(cascade, freqs, 100.0).front());
    const double expected = gain * (n - 1) / 100.0 * 2.0 / std::numbers::pi;
    EXPECT_NEAR(motion_auc(s, zero, zero, Window{0, 60000}), expected, 0.01 * expected);
}

TEST(MotionAuc, AxisMismatch)
{
    const Signal a(std::vector<double>(100, 0.0), 32.0, 0, Role::ACC_X);
    const Signal b(std::vector<double>(90, 0.0), 32.0, 0, Role::ACC_Y);
    EXPECT_THROW(motion_auc(a, b, a, Window{0, 1000}), Error);
}

TEST(PearsonR, IdentityNegationOracle)
{
    testutil::TestRng rng(41);
    std::vector<double> x(50), y(50), neg(50);
    for (std::size_t i = 0; i < 50; ++i) {
        x[i] = rng.uniform();
        y[i] = x[i] + rng.normal();
        neg[i] = -x[i];
    }
    EXPECT_NEAR(pearson_r(x, x), 1.0, 1e-15);
    EXPECT_NEAR(pearson_r(x, neg), -1.0, 1e-15);

    double mx = 0, my = 0;
    for (std::size_t i = 0; i < 50; ++i) {
        mx += x[i] / 50;
        my += y[i] / 50;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < 50; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    EXPECT_NEAR(pearson_r(x, y), sxy / std::sqrt(sxx * syy), 1e-12);
    EXPECT_THROW(pearson_r(std::vector<double>(50, 1.0), x), Error);
}
