#pragma once

// Shared helpers for the test suites. Nothing here calls into the library's
// implementation paths it is used to check.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace testutil {

// |H(f)| of a scipy-layout SOS matrix (b0 b1 b2 a0 a1 a2 per row).
template <std::size_t N>
double sos_magnitude(const std::array<std::array<double, 6>, N>& sos, double f, double fs)
{
    const std::complex<double> z = std::polar(1.0, 2.0 * std::numbers::pi * f / fs);
    std::complex<double> h(1.0);
    for (const auto& row : sos) {
        const auto num = row[0] * z * z + row[1] * z + row[2];
        const auto den = row[3] * z * z + row[4] * z + row[5];
        h *= num / den;
    }
    return std::abs(h);
}

class TestRng {
public:
    explicit TestRng(std::uint64_t seed) : engine_(seed) {}
    double uniform(double lo = 0.0, double hi = 1.0)
    {
        return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }
    std::int64_t integer(std::int64_t lo, std::int64_t hi) // inclusive
    {
        return lo + static_cast<std::int64_t>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    double normal()
    {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

inline std::vector<double> sine(double freq, double fs, std::size_t n, double amp = 1.0, double phase = 0.0)
{
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs + phase);
    }
    return x;
}

// Lag (in samples, |lag| <= max_lag) maximizing sum_i a[i] * b[i + lag].
inline long xcorr_argmax(std::span<const double> a, std::span<const double> b, long max_lag)
{
    long best = 0;
    double best_v = -INFINITY;
    for (long lag = -max_lag; lag <= max_lag; ++lag) {
        double acc = 0.0;
        for (long i = 0; i < static_cast<long>(a.size()); ++i) {
            const long j = i + lag;
            if (j >= 0 && j < static_cast<long>(b.size())) acc += a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(j)];
        }
        if (acc > best_v) {
            best_v = acc;
            best = lag;
        }
    }
    return best;
}

} // namespace testutil
