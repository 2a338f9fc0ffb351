#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "data/reference_values.inc"
#include "ppgopt/filter.hpp"
#include "test_util.hpp"

using namespace ppgopt;

namespace {

double mag_at(const SosCascade& c, double f, double fs)
{
    const double freqs[] = {f};
    return std::abs(frequency_response(c, freqs, fs).front());
}

// Stopband edges land on exactly -40 dB; allow float rounding on top.
constexpr double kEdgeGain = 0.01 + 1e-9;

} // namespace

TEST(DesignBandpass, Chebyshev2BaselineMeetsEdgesAndMidband)
{
    const auto c = design_bandpass(FilterSpec::ppg_default(0.5, 4.0), 64.0);
    EXPECT_EQ(c.size(), 4u);
    EXPECT_LE(mag_at(c, 0.5, 64.0), kEdgeGain);
    EXPECT_LE(mag_at(c, 4.0, 64.0), kEdgeGain);
    EXPECT_GE(mag_at(c, 2.0, 64.0), 0.9);
}

TEST(DesignBandpass, EllipticEcgPassesMidband)
{
    const auto c = design_bandpass(FilterSpec::ecg_default(), 700.0);
    EXPECT_GE(mag_at(c, 7.0, 700.0), 0.9);
}

TEST(DesignBandpass, InvalidBandAndNyquist)
{
    try {
        design_bandpass(FilterSpec::ppg_default(4.0, 0.5), 64.0);
        FAIL() << "expected InvalidBand";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidBand);
    }
    try {
        design_bandpass(FilterSpec::ppg_default(0.5, 32.0), 64.0);
        FAIL() << "expected NyquistViolation";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NyquistViolation);
    }
    auto odd = FilterSpec::ppg_default();
    odd.order = 3;
    EXPECT_THROW(design_bandpass(odd, 64.0), Error);
}

TEST(DesignBandpass, MatchesReferenceDesigns)
{
    struct Case {
        FilterSpec spec;
        double fs;
        const std::array<std::array<double, 6>, 4>& ref;
    };
    const Case cases[] = {
        {FilterSpec::ecg_default(), 700.0, ref::kEllip700},
        {FilterSpec::ecg_default(), 500.0, ref::kEllip500},
        {FilterSpec::motion_default(), 100.0, ref::kButter100},
    };
    for (const auto& cs : cases) {
        const auto c = design_bandpass(cs.spec, cs.fs);
        for (int i = 0; i < 256; ++i) {
            const double f = cs.fs / 2.0 * i / 256.0;
            EXPECT_NEAR(mag_at(c, f, cs.fs), testutil::sos_magnitude(cs.ref, f, cs.fs), 1e-6)
                << to_string(cs.spec.family) << " f=" << f;
        }
    }
    // A spread of grid designs; the full 525 sweep lives in the acceptance suite.
    for (std::size_t idx = 0; idx < ref::kCheby2Grid64.size(); idx += 37) {
        const auto& r = ref::kCheby2Grid64[idx];
        const auto c = design_bandpass(FilterSpec::ppg_default(r.low_dh / 10.0, r.high_dh / 10.0), 64.0);
        for (int i = 0; i < 256; ++i) {
            const double f = 32.0 * i / 256.0;
            EXPECT_NEAR(mag_at(c, f, 64.0), testutil::sos_magnitude(r.sos, f, 64.0), 1e-6);
        }
    }
}

TEST(DesignBandpass, AllGridDesignsStableWithUnimodalPassband)
{
    for (int lo = 4; lo <= 17; ++lo) {
        for (int hi = 12; hi <= 50; ++hi) {
            if (lo >= hi) continue;
            const double fl = lo / 10.0, fh = hi / 10.0;
            const auto c = design_bandpass(FilterSpec::ppg_default(fl, fh), 64.0);
            ASSERT_LT(c.max_pole_radius(), 1.0);
            std::vector<double> freqs;
            for (int i = 0; i <= 400; ++i) freqs.push_back(fl + (fh - fl) * i / 400.0);
            const auto h = frequency_response(c, freqs, 64.0);
            std::size_t peak = 0;
            for (std::size_t i = 1; i < h.size(); ++i) {
                if (std::abs(h[i]) > std::abs(h[peak])) peak = i;
            }
            for (std::size_t i = 1; i <= peak; ++i) ASSERT_GE(std::abs(h[i]) + 1e-12, std::abs(h[i - 1])) << fl << "-" << fh;
            for (std::size_t i = peak + 1; i < h.size(); ++i) ASSERT_LE(std::abs(h[i]), std::abs(h[i - 1]) + 1e-12) << fl << "-" << fh;
        }
    }
}

TEST(FrequencyResponse, DcAndMidband)
{
    const auto butter = design_bandpass(FilterSpec::motion_default(), 100.0);
    EXPECT_LE(mag_at(butter, 0.0, 100.0), 1e-6);

    // Even-order type II band-pass: DC sits at the stopband level, not at zero.
    const auto cheb = design_bandpass(FilterSpec::ppg_default(0.5, 4.0), 64.0);
    EXPECT_NEAR(mag_at(cheb, 0.0, 64.0), 0.01, 1e-9);
    EXPECT_GE(mag_at(cheb, std::sqrt(0.5 * 4.0), 64.0), 0.9);
}

TEST(FrequencyResponse, EqualsDftOfImpulseResponse)
{
    const auto c = design_bandpass(FilterSpec::ppg_default(0.5, 4.0), 64.0);
    const std::size_t n = 4096;
    std::vector<double> h(n, 0.0);
    h[0] = 1.0;
    // Causal single pass through the sections.
    for (const Biquad& s : c.sections()) {
        double z1 = 0, z2 = 0;
        for (double& v : h) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
    for (int k = 0; k <= 64; ++k) {
        const double f = 32.0 * k / 64.0;
        std::complex<double> dft(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            dft += h[i] * std::polar(1.0, -2.0 * std::numbers::pi * f / 64.0 * static_cast<double>(i));
        }
        const double freqs[] = {f};
        const auto resp = frequency_response(c, freqs, 64.0).front();
        EXPECT_LT(std::abs(resp - dft), 1e-6) << f;
    }
}

TEST(FrequencyResponse, RejectsOutOfRange)
{
    const auto c = design_bandpass(FilterSpec::ppg_default(), 64.0);
    const double freqs[] = {40.0};
    try {
        frequency_response(c, freqs, 64.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidFrequency);
    }
}

TEST(ZeroPhase, ZeroInZeroOut)
{
    const auto c = design_bandpass(FilterSpec::ppg_default(), 64.0);
    const std::vector<double> x(500, 0.0);
    for (double v : apply_zero_phase(c, x)) EXPECT_EQ(v, 0.0);
}

TEST(ZeroPhase, TooShortSignal)
{
    const auto c = design_bandpass(FilterSpec::ppg_default(), 64.0);
    const std::vector<double> x(zero_phase_padding(c), 1.0);
    try {
        apply_zero_phase(c, x);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    }
    EXPECT_EQ(zero_phase_padding(c), 24u);
}

TEST(ZeroPhase, SinusoidKeepsPhaseAndAmplitude)
{
    const auto c = design_bandpass(FilterSpec::ppg_default(0.5, 4.0), 64.0);
    const auto x = testutil::sine(2.0, 64.0, 64 * 60);
    const auto y = apply_zero_phase(c, x);
    ASSERT_EQ(y.size(), x.size());
    const std::span<const double> xi(x.data() + 640, x.size() - 1280);
    const std::span<const double> yi(y.data() + 640, y.size() - 1280);
    EXPECT_EQ(testutil::xcorr_argmax(xi, yi, 16), 0);
    double peak = 0;
    for (double v : yi) peak = std::max(peak, std::abs(v));
    EXPECT_NEAR(peak, 1.0, 0.05);
}

TEST(ZeroPhase, SymmetricPulseStaysSymmetric)
{
    const auto c = design_bandpass(FilterSpec::ppg_default(0.5, 4.0), 64.0);
    const std::size_t n = 16385, mid = n / 2;
    std::vector<double> x(n, 0.0);
    for (int k = -20; k <= 20; ++k) x[mid + static_cast<std::size_t>(k + 0)] = std::exp(-0.5 * (k / 6.0) * (k / 6.0));
    const auto y = apply_zero_phase(c, x);
    for (std::size_t k = 1; k < 2000; ++k) EXPECT_NEAR(y[mid - k], y[mid + k], 1e-9);
}

TEST(ZeroPhase, PassbandSinusoidsHaveZeroLag)
{
    testutil::TestRng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        const int lo = static_cast<int>(rng.integer(4, 12));
        const int hi = static_cast<int>(rng.integer(lo + 8, 50));
        const auto c = design_bandpass(FilterSpec::ppg_default(lo / 10.0, hi / 10.0), 64.0);
        const double f = std::sqrt(lo / 10.0 * hi / 10.0);
        const auto x = testutil::sine(f, 64.0, 64 * 40, 1.0, rng.uniform(0, 6.28));
        const auto y = apply_zero_phase(c, x);
        const std::span<const double> xi(x.data() + 640, x.size() - 1280);
        const std::span<const double> yi(y.data() + 640, y.size() - 1280);
        EXPECT_EQ(testutil::xcorr_argmax(xi, yi, 8), 0) << lo << "-" << hi;
    }
}

TEST(ZeroPhase, NeverIncreasesWhiteNoiseEnergy)
{
    testutil::TestRng rng(11);
    const FilterSpec specs[] = {FilterSpec::ppg_default(0.5, 4.0), FilterSpec::ppg_default(1.2, 1.9),
                                FilterSpec::ppg_default(0.4, 5.0)};
    for (const auto& spec : specs) {
        const auto c = design_bandpass(spec, 64.0);
        std::vector<double> x(20000);
        for (double& v : x) v = rng.normal();
        const auto y = apply_zero_phase(c, x);
        double ex = 0, ey = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            ex += x[i] * x[i];
            ey += y[i] * y[i];
        }
        EXPECT_LE(ey, ex * 1.01);
    }
    const auto ecg = design_bandpass(FilterSpec::ecg_default(), 700.0);
    std::vector<double> x(20000);
    for (double& v : x) v = rng.normal();
    const auto y = apply_zero_phase(ecg, x);
    double ex = 0, ey = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ex += x[i] * x[i];
        ey += y[i] * y[i];
    }
    EXPECT_LE(ey, ex * 1.01);
}
