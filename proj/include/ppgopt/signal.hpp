#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppgopt/error.hpp"

namespace ppgopt {

using Millis = std::int64_t;

enum class Role { PPG, ECG, ACC_X, ACC_Y, ACC_Z };

inline const char* to_string(Role role) noexcept
{
    switch (role) {
    case Role::PPG: return "PPG";
    case Role::ECG: return "ECG";
    case Role::ACC_X: return "ACC_X";
    case Role::ACC_Y: return "ACC_Y";
    case Role::ACC_Z: return "ACC_Z";
    }
    return "?";
}

// Sub-millisecond positions are rounded half-up onto the integer ms grid.
inline Millis round_ms(double ms) noexcept { return static_cast<Millis>(std::floor(ms + 0.5)); }

/// Uniformly sampled waveform. Immutable once constructed; all samples are finite.
class Signal {
public:
    Signal() = default;

    Signal(std::vector<double> samples, double fs, Millis start_time_ms, Role role)
        : samples_(std::move(samples)), fs_(fs), start_time_ms_(start_time_ms), role_(role)
    {
        if (!(fs_ > 0.0) || !std::isfinite(fs_)) {
            throw Error(ErrorKind::InvalidInput, "sampling rate must be positive, got " + std::to_string(fs_));
        }
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            if (!std::isfinite(samples_[i])) {
                throw Error(ErrorKind::InvalidInput, "non-finite sample at index " + std::to_string(i));
            }
        }
    }

    [[nodiscard]] std::span<const double> samples() const noexcept { return samples_; }
    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
    [[nodiscard]] bool empty() const noexcept { return samples_.empty(); }
    [[nodiscard]] double fs() const noexcept { return fs_; }
    [[nodiscard]] Millis start_time_ms() const noexcept { return start_time_ms_; }
    [[nodiscard]] Role role() const noexcept { return role_; }
    [[nodiscard]] double duration_ms() const noexcept { return static_cast<double>(samples_.size()) / fs_ * 1000.0; }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return samples_[i]; }

    // Same timing and role, new samples (e.g. filter output).
    [[nodiscard]] Signal with_samples(std::vector<double> samples) const
    {
        return Signal(std::move(samples), fs_, start_time_ms_, role_);
    }

private:
    std::vector<double> samples_;
    double fs_ = 1.0;
    Millis start_time_ms_ = 0;
    Role role_ = Role::PPG;
};

struct Window {
    Millis start_ms = 0;
    Millis length_ms = 60'000;

    [[nodiscard]] Millis end_ms() const noexcept { return start_ms + length_ms; }
    [[nodiscard]] bool contains(Millis t) const noexcept { return t >= start_ms && t < end_ms(); }
    friend bool operator==(const Window&, const Window&) = default;
};

/// Linear interpolation onto a uniform grid at target_fs. The first sample time is kept.
inline Signal resample(const Signal& signal, double target_fs)
{
    if (!(target_fs > 0.0)) {
        throw Error(ErrorKind::InvalidInput, "target sampling rate must be positive");
    }
    if (signal.size() < 2) {
        throw Error(ErrorKind::InsufficientData, "resample needs at least 2 samples");
    }
    if (target_fs == signal.fs()) {
        return signal;
    }
    const auto x = signal.samples();
    const double last = static_cast<double>(x.size() - 1);
    const auto n_out = static_cast<std::size_t>(std::floor(last * target_fs / signal.fs() + 1e-9)) + 1;
    std::vector<double> out(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
        const double pos = static_cast<double>(i) * signal.fs() / target_fs;
        auto lo = static_cast<std::size_t>(std::floor(pos));
        if (lo >= x.size() - 1) {
            out[i] = x.back();
            continue;
        }
        const double frac = pos - static_cast<double>(lo);
        out[i] = frac == 0.0 ? x[lo] : x[lo] + frac * (x[lo + 1] - x[lo]);
    }
    return Signal(std::move(out), target_fs, signal.start_time_ms(), signal.role());
}

/// Windows tiling [0, duration_ms); a trailing partial window is dropped.
inline std::vector<Window> tile_windows(double duration_ms, Millis window_ms)
{
    if (window_ms <= 0) {
        throw Error(ErrorKind::InvalidInput, "window length must be positive");
    }
    std::vector<Window> windows;
    for (Millis start = 0; static_cast<double>(start + window_ms) <= duration_ms + 1e-9; start += window_ms) {
        windows.push_back(Window{start, window_ms});
    }
    return windows;
}

inline std::vector<std::pair<Window, Signal>> segment(const Signal& signal, Millis window_ms)
{
    std::vector<std::pair<Window, Signal>> parts;
    const auto x = signal.samples();
    for (const Window& w : tile_windows(signal.duration_ms(), window_ms)) {
        const auto begin = static_cast<std::size_t>(std::llround(static_cast<double>(w.start_ms) * signal.fs() / 1000.0));
        const auto end = std::min(x.size(), static_cast<std::size_t>(std::llround(static_cast<double>(w.end_ms()) * signal.fs() / 1000.0)));
        std::vector<double> chunk(x.begin() + static_cast<std::ptrdiff_t>(begin), x.begin() + static_cast<std::ptrdiff_t>(end));
        parts.emplace_back(w, Signal(std::move(chunk), signal.fs(), signal.start_time_ms() + w.start_ms, signal.role()));
    }
    return parts;
}

} // namespace ppgopt
