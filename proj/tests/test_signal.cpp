#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ppgopt/signal.hpp"
#include "test_util.hpp"

using namespace ppgopt;

TEST(Signal, DurationAndValidation)
{
    const Signal s(std::vector<double>(128, 0.0), 64.0, 1'600'000'000'000, Role::PPG);
    EXPECT_DOUBLE_EQ(s.duration_ms(), 2000.0);
    EXPECT_EQ(s.start_time_ms(), 1'600'000'000'000);
    EXPECT_THROW(Signal({1.0}, 0.0, 0, Role::PPG), Error);
    EXPECT_THROW(Signal({1.0}, -4.0, 0, Role::PPG), Error);
    EXPECT_THROW(Signal({1.0, NAN}, 4.0, 0, Role::PPG), Error);
    EXPECT_THROW(Signal({INFINITY}, 4.0, 0, Role::PPG), Error);
    EXPECT_TRUE(Signal({}, 4.0, 0, Role::ECG).empty());
}

TEST(RoundMs, HalfUp)
{
    EXPECT_EQ(round_ms(0.5), 1);
    EXPECT_EQ(round_ms(1.49), 1);
    EXPECT_EQ(round_ms(-0.5), 0);
    EXPECT_EQ(round_ms(-0.51), -1);
}

TEST(Resample, ConstantUpsample)
{
    const Signal s({5, 5, 5, 5}, 4.0, 10, Role::PPG);
    const auto r = resample(s, 8.0);
    EXPECT_EQ(r.fs(), 8.0);
    EXPECT_EQ(r.start_time_ms(), 10);
    ASSERT_EQ(r.size(), 7u);
    for (double v : r.samples()) EXPECT_EQ(v, 5.0);
}

TEST(Resample, IdentityIsBitExact)
{
    testutil::TestRng rng(1);
    std::vector<double> x(100);
    for (double& v : x) v = rng.normal();
    const Signal s(x, 64.0, 0, Role::PPG);
    const auto r = resample(s, 64.0);
    ASSERT_EQ(r.size(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(r[i], x[i]);
}

TEST(Resample, RampIsExact)
{
    const auto r = resample(Signal({0, 1, 2}, 1.0, 0, Role::PPG), 2.0);
    const std::vector<double> expect{0, 0.5, 1, 1.5, 2};
    ASSERT_EQ(r.size(), expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_DOUBLE_EQ(r[i], expect[i]);
}

TEST(Resample, Errors)
{
    EXPECT_THROW(resample(Signal({1.0}, 4.0, 0, Role::PPG), 8.0), Error);
    EXPECT_THROW(resample(Signal({1.0, 2.0}, 4.0, 0, Role::PPG), 0.0), Error);
    try {
        resample(Signal({}, 4.0, 0, Role::PPG), 8.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    }
}

TEST(Resample, UpThenDownRoundTrip)
{
    const double fs = 64.0;
    const auto x = testutil::sine(fs / 4.0 * 0.9, fs, 640, 1.0, 0.3);
    const Signal s(x, fs, 0, Role::PPG);
    const auto back = resample(resample(s, 2.0 * fs), fs);
    ASSERT_EQ(back.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(back[i], s[i], 1e-9);
}

TEST(Resample, DurationWithinOneOutputPeriod)
{
    testutil::TestRng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const double fs = rng.uniform(4.0, 1000.0);
        const double target = rng.uniform(4.0, 1000.0);
        const auto n = static_cast<std::size_t>(rng.integer(2, 3000));
        const Signal s(std::vector<double>(n, 1.0), fs, 0, Role::ECG);
        const auto r = resample(s, target);
        EXPECT_LE(std::abs(r.duration_ms() - s.duration_ms()), 1000.0 / target + 1000.0 / fs + 1e-9);
    }
}

TEST(Segment, CountsAndDroppedTail)
{
    auto make = [](double seconds) { return Signal(std::vector<double>(static_cast<std::size_t>(seconds * 64), 0.0), 64.0, 0, Role::PPG); };
    EXPECT_EQ(segment(make(180), 60'000).size(), 3u);
    EXPECT_EQ(segment(make(150), 60'000).size(), 2u);
    EXPECT_EQ(segment(make(59), 60'000).size(), 0u);
    EXPECT_TRUE(segment(Signal({}, 64.0, 0, Role::PPG), 60'000).empty());
    EXPECT_THROW(segment(make(10), 0), Error);
}

TEST(Segment, ConcatenationIsPrefix)
{
    testutil::TestRng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const double fs = rng.uniform(20.0, 300.0);
        const auto n = static_cast<std::size_t>(rng.integer(0, 40'000));
        std::vector<double> x(n);
        for (double& v : x) v = rng.normal();
        const Signal s(x, fs, 1000, Role::PPG);
        const Millis w = rng.integer(1'000, 30'000);
        std::vector<double> joined;
        Millis expect_start = 0;
        for (const auto& [win, part] : segment(s, w)) {
            EXPECT_EQ(win.start_ms, expect_start);
            EXPECT_EQ(win.length_ms, w);
            EXPECT_EQ(part.start_time_ms(), 1000 + win.start_ms);
            expect_start += w;
            joined.insert(joined.end(), part.samples().begin(), part.samples().end());
        }
        ASSERT_LE(joined.size(), x.size());
        for (std::size_t i = 0; i < joined.size(); ++i) ASSERT_EQ(joined[i], x[i]);
    }
}

TEST(TileWindows, NoOverlap)
{
    const auto w = tile_windows(185'000.0, 60'000);
    ASSERT_EQ(w.size(), 3u);
    for (std::size_t i = 1; i < w.size(); ++i) EXPECT_EQ(w[i].start_ms, w[i - 1].end_ms());
    EXPECT_TRUE(w[0].contains(0));
    EXPECT_FALSE(w[0].contains(60'000));
}
