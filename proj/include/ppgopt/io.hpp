#pragma once

// File formats: E4-style CSV, generic "time_ms,value" signal CSV, beats CSV,
// the JSON dataset manifest, and content hashing for the on-disk cache.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppgopt/beats.hpp"
#include "ppgopt/error.hpp"
#include "ppgopt/signal.hpp"

namespace ppgopt::io {

namespace fs = std::filesystem;

/// Shortest text that parses back to the same double.
inline std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string where(const std::string& source, std::size_t line) { return source + ":" + std::to_string(line); }

inline double parse_double(std::string_view s, const std::string& source, std::size_t line)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw Error(ErrorKind::ParseError, where(source, line) + ": not a number: '" + std::string(s) + "'");
    }
    return v;
}

inline Millis parse_ms(std::string_view s, const std::string& source, std::size_t line)
{
    s = trim(s);
    Millis v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        // Also accept an integral value written as a decimal, e.g. "800.0".
        const double d = parse_double(s, source, line);
        if (d != std::floor(d)) throw Error(ErrorKind::ParseError, where(source, line) + ": not an integer ms value");
        return static_cast<Millis>(d);
    }
    return v;
}

inline std::vector<std::string> read_lines(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

inline std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    return out;
}

// E4 header value: one number, or the same number repeated once per column.
inline double e4_header(std::string_view line, const std::string& source, std::size_t line_no)
{
    const auto cells = split(line);
    if (cells.empty() || cells.front().empty()) throw Error(ErrorKind::ParseError, where(source, line_no) + ": malformed E4 header");
    return parse_double(cells.front(), source, line_no);
}

// Epoch seconds with millisecond precision, as the E4 writes them.
inline std::string format_epoch_seconds(Millis ms)
{
    const Millis sec = ms >= 0 ? ms / 1000 : -((-ms + 999) / 1000);
    const Millis frac = ms - sec * 1000;
    std::string f = std::to_string(frac);
    return std::to_string(sec) + "." + std::string(3 - f.size(), '0') + f + "000";
}

inline std::string format_rate(double fs)
{
    auto s = format_double(fs);
    if (s.find_first_of(".e") == std::string::npos) s += ".000000";
    return s;
}

} // namespace detail

/// Parses E4 export lines: epoch start (s), sampling rate (Hz), then one
/// sample per line with `columns` comma-separated values.
inline std::vector<Signal> parse_e4(const std::vector<std::string>& lines, std::size_t columns,
                                    std::span<const Role> roles, const std::string& source)
{
    if (lines.empty()) throw Error(ErrorKind::ParseError, source + ": empty file");
    if (lines.size() < 2) throw Error(ErrorKind::ParseError, detail::where(source, 2) + ": missing sampling-rate line");
    const double epoch_s = detail::e4_header(lines[0], source, 1);
    const double fs = detail::e4_header(lines[1], source, 2);
    if (!(fs > 0.0)) throw Error(ErrorKind::ParseError, detail::where(source, 2) + ": sampling rate must be positive");
    std::vector<std::vector<double>> cols(columns);
    for (std::size_t i = 2; i < lines.size(); ++i) {
        const auto cells = detail::split(lines[i]);
        if (cells.size() != columns) {
            throw Error(ErrorKind::ParseError, detail::where(source, i + 1) + ": expected " + std::to_string(columns) + " column(s)");
        }
        for (std::size_t c = 0; c < columns; ++c) cols[c].push_back(detail::parse_double(cells[c], source, i + 1));
    }
    const Millis start = round_ms(epoch_s * 1000.0);
    std::vector<Signal> out;
    for (std::size_t c = 0; c < columns; ++c) out.emplace_back(std::move(cols[c]), fs, start, roles[c]);
    return out;
}

inline Signal read_e4_csv(const fs::path& path, Role role = Role::PPG)
{
    const std::array<Role, 1> roles{role};
    return parse_e4(detail::read_lines(path), 1, roles, path.string()).front();
}

/// E4 ACC.csv: three columns of raw counts; divided by units_per_g (64 on the E4).
inline std::array<Signal, 3> read_e4_acc(const fs::path& path, double units_per_g = 64.0)
{
    if (!(units_per_g > 0.0)) throw Error(ErrorKind::InvalidInput, "units_per_g must be positive");
    const std::array<Role, 3> roles{Role::ACC_X, Role::ACC_Y, Role::ACC_Z};
    auto axes = parse_e4(detail::read_lines(path), 3, roles, path.string());
    std::array<Signal, 3> out;
    for (std::size_t c = 0; c < 3; ++c) {
        std::vector<double> g(axes[c].samples().begin(), axes[c].samples().end());
        for (double& v : g) v /= units_per_g;
        out[c] = axes[c].with_samples(std::move(g));
    }
    return out;
}

inline void write_e4_csv(const fs::path& path, const Signal& s)
{
    auto out = detail::open_out(path);
    out << detail::format_epoch_seconds(s.start_time_ms()) << '\n' << detail::format_rate(s.fs()) << '\n';
    for (double v : s.samples()) out << format_double(v) << '\n';
}

/// Axes in g are written as rounded raw counts (value * units_per_g).
inline void write_e4_acc(const fs::path& path, const std::array<Signal, 3>& axes, double units_per_g = 64.0)
{
    auto out = detail::open_out(path);
    const auto epoch = detail::format_epoch_seconds(axes[0].start_time_ms());
    const auto rate = detail::format_rate(axes[0].fs());
    out << epoch << ", " << epoch << ", " << epoch << '\n' << rate << ", " << rate << ", " << rate << '\n';
    for (std::size_t i = 0; i < axes[0].size(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            out << (c ? "," : "") << format_double(std::round(axes[c][i] * units_per_g));
        }
        out << '\n';
    }
}

inline constexpr std::string_view kSignalHeader = "time_ms,value";
inline constexpr std::string_view kBeatsHeader = "time_ms";

/// Generic "time_ms,value" CSV. The sampling rate comes from the manifest;
/// without one it is inferred from the median time step. The first time_ms
/// becomes the start time.
inline Signal read_signal_csv(const fs::path& path, std::optional<double> fs_hz, Role role)
{
    const auto lines = detail::read_lines(path);
    const auto source = path.string();
    if (lines.empty()) throw Error(ErrorKind::ParseError, source + ": empty file");
    if (detail::trim(lines[0]) != kSignalHeader) {
        throw Error(ErrorKind::ParseError, detail::where(source, 1) + ": expected header '" + std::string(kSignalHeader) + "'");
    }
    std::vector<double> times, values;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = detail::split(lines[i]);
        if (cells.size() != 2) throw Error(ErrorKind::ParseError, detail::where(source, i + 1) + ": expected 2 columns");
        times.push_back(detail::parse_double(cells[0], source, i + 1));
        values.push_back(detail::parse_double(cells[1], source, i + 1));
    }
    double fs = fs_hz.value_or(0.0);
    if (!fs_hz) {
        if (times.size() < 2) throw Error(ErrorKind::ValidationError, source + ": sampling rate missing and not inferable");
        std::vector<double> steps;
        for (std::size_t i = 1; i < times.size(); ++i) steps.push_back(times[i] - times[i - 1]);
        const double step = ppgopt::detail::median(steps);
        if (!(step > 0.0)) throw Error(ErrorKind::ValidationError, source + ": time_ms not increasing");
        fs = 1000.0 / step;
    }
    const Millis start = times.empty() ? 0 : round_ms(times.front());
    return Signal(std::move(values), fs, start, role);
}

inline void write_signal_csv(const fs::path& path, const Signal& s)
{
    auto out = detail::open_out(path);
    out << kSignalHeader << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double t = static_cast<double>(s.start_time_ms()) + static_cast<double>(i) * 1000.0 / s.fs();
        out << format_double(t) << ',' << format_double(s[i]) << '\n';
    }
}

/// Either format, told apart by the first line.
inline Signal read_any_signal(const fs::path& path, std::optional<double> fs_hz, Role role)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::string first;
    std::getline(in, first);
    if (detail::trim(first) == kSignalHeader) return read_signal_csv(path, fs_hz, role);
    return read_e4_csv(path, role);
}

inline BeatSeries read_beats_csv(const fs::path& path, BeatSource source = BeatSource::ECG)
{
    const auto lines = detail::read_lines(path);
    const auto name = path.string();
    if (lines.empty() || detail::trim(lines[0]) != kBeatsHeader) {
        throw Error(ErrorKind::ParseError, detail::where(name, 1) + ": expected header '" + std::string(kBeatsHeader) + "'");
    }
    std::vector<Millis> t;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        t.push_back(detail::parse_ms(lines[i], name, i + 1));
        if (t.size() > 1 && t.back() <= t[t.size() - 2]) {
            throw Error(ErrorKind::ValidationError, detail::where(name, i + 1) + ": beat times not strictly increasing");
        }
    }
    return BeatSeries(std::move(t), source);
}

inline void write_beats_csv(const fs::path& path, const BeatSeries& beats)
{
    auto out = detail::open_out(path);
    out << kBeatsHeader << '\n';
    for (Millis t : beats.times()) out << t << '\n';
}

// ---- manifest ----

struct ManifestEntry {
    std::string participant;
    std::string task;
    fs::path ppg;
    std::optional<fs::path> ecg;       // raw ECG signal
    std::optional<fs::path> ecg_beats; // or reference beats directly
    std::optional<fs::path> acc;
    std::optional<double> ppg_fs;
    std::optional<double> ecg_fs;
    std::optional<double> acc_fs;
    double acc_units_per_g = 64.0;
    std::optional<Millis> ecg_start_ms; // when only beats are given
};

struct DatasetManifest {
    fs::path base_dir;
    std::vector<ManifestEntry> recordings;
};

namespace detail {

template <typename T>
std::optional<T> opt(const nlohmann::json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

} // namespace detail

/// JSON manifest: {"recordings": [{"participant", "task", "ppg", "ecg" |
/// "ecg_beats", "acc"?, "ppg_fs"?, "ecg_fs"?, "acc_fs"?, "acc_units_per_g"?,
/// "ecg_start_ms"?}]}. Relative paths resolve against the manifest's folder.
/// Every problem found is reported at once.
inline DatasetManifest parse_manifest(const nlohmann::json& j, const fs::path& base_dir, bool check_files = true)
{
    static const std::vector<std::string> known = {"participant", "task", "ppg", "ecg", "ecg_beats", "acc", "ppg_fs",
                                                   "ecg_fs", "acc_fs", "acc_units_per_g", "ecg_start_ms"};
    DatasetManifest m;
    m.base_dir = base_dir;
    std::vector<std::string> problems;
    if (!j.is_object() || !j.contains("recordings") || !j.at("recordings").is_array()) {
        throw Error(ErrorKind::ValidationError, "manifest: expected an object with a 'recordings' array");
    }
    std::vector<std::pair<std::string, std::string>> seen;
    std::size_t idx = 0;
    for (const auto& r : j.at("recordings")) {
        const std::string at = "recordings[" + std::to_string(idx++) + "]";
        try {
            for (const auto& [key, _] : r.items()) {
                if (std::find(known.begin(), known.end(), key) == known.end()) problems.push_back(at + ": unknown key '" + key + "'");
            }
            ManifestEntry e;
            e.participant = r.at("participant").get<std::string>();
            e.task = r.at("task").get<std::string>();
            auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
            e.ppg = resolve(r.at("ppg").get<std::string>());
            if (auto v = detail::opt<std::string>(r, "ecg")) e.ecg = resolve(*v);
            if (auto v = detail::opt<std::string>(r, "ecg_beats")) e.ecg_beats = resolve(*v);
            if (auto v = detail::opt<std::string>(r, "acc")) e.acc = resolve(*v);
            e.ppg_fs = detail::opt<double>(r, "ppg_fs");
            e.ecg_fs = detail::opt<double>(r, "ecg_fs");
            e.acc_fs = detail::opt<double>(r, "acc_fs");
            e.acc_units_per_g = detail::opt<double>(r, "acc_units_per_g").value_or(64.0);
            e.ecg_start_ms = detail::opt<Millis>(r, "ecg_start_ms");
            if (!e.ecg && !e.ecg_beats) problems.push_back(at + ": needs 'ecg' or 'ecg_beats'");
            const auto key = std::pair{e.participant, e.task};
            if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
                problems.push_back(at + ": duplicate (participant, task) = (" + e.participant + ", " + e.task + ")");
            }
            seen.push_back(key);
            if (check_files) {
                for (const auto* p : {&e.ppg}) {
                    if (!fs::exists(*p)) problems.push_back(at + ": missing file " + p->string());
                }
                for (const auto* p : {&e.ecg, &e.ecg_beats, &e.acc}) {
                    if (*p && !fs::exists(**p)) problems.push_back(at + ": missing file " + (*p)->string());
                }
            }
            m.recordings.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            problems.push_back(at + ": " + ex.what());
        }
    }
    if (!problems.empty()) {
        std::string msg = "manifest invalid:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw Error(ErrorKind::ValidationError, msg);
    }
    return m;
}

inline nlohmann::json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
    }
}

inline DatasetManifest read_manifest(const fs::path& path)
{
    return parse_manifest(read_json(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

inline void write_manifest(const fs::path& path, const DatasetManifest& m)
{
    nlohmann::ordered_json recs = nlohmann::ordered_json::array();
    auto rel = [&](const fs::path& p) { return p.lexically_relative(m.base_dir).generic_string(); };
    for (const auto& e : m.recordings) {
        nlohmann::ordered_json r;
        r["participant"] = e.participant;
        r["task"] = e.task;
        r["ppg"] = rel(e.ppg);
        if (e.ecg) r["ecg"] = rel(*e.ecg);
        if (e.ecg_beats) r["ecg_beats"] = rel(*e.ecg_beats);
        if (e.acc) r["acc"] = rel(*e.acc);
        if (e.ppg_fs) r["ppg_fs"] = *e.ppg_fs;
        if (e.ecg_fs) r["ecg_fs"] = *e.ecg_fs;
        if (e.acc_fs) r["acc_fs"] = *e.acc_fs;
        if (e.acc) r["acc_units_per_g"] = e.acc_units_per_g;
        if (e.ecg_start_ms) r["ecg_start_ms"] = *e.ecg_start_ms;
        recs.push_back(r);
    }
    nlohmann::ordered_json j;
    j["recordings"] = recs;
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

// ---- hashing ----

/// 64-bit FNV-1a.
class Fnv1a {
public:
    Fnv1a& bytes(const void* data, std::size_t n)
    {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    Fnv1a& text(std::string_view s)
    {
        bytes(s.data(), s.size());
        return bytes("\0", 1);
    }
    template <typename T>
        requires std::is_arithmetic_v<T>
    Fnv1a& value(T v)
    {
        return bytes(&v, sizeof v);
    }
    template <typename T>
        requires std::is_arithmetic_v<T>
    Fnv1a& values(std::span<const T> v)
    {
        value(v.size());
        return bytes(v.data(), v.size_bytes());
    }
    [[nodiscard]] std::uint64_t digest() const noexcept { return h_; }
    [[nodiscard]] std::string hex() const
    {
        std::array<char, 17> buf{};
        std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h_));
        return buf.data();
    }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

} // namespace ppgopt::io
