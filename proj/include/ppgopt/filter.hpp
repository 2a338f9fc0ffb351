#pragma once

// IIR band-pass design (Butterworth, Chebyshev type II, elliptic) realized as
// second-order sections, plus forward-backward application.
//
// Design path: normalized analog low-pass prototype (zeros/poles/gain)
// -> low-pass to band-pass transform at pre-warped edges -> bilinear transform
// -> pole/zero pairing into biquads.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ppgopt/error.hpp"
#include "ppgopt/signal.hpp"

namespace ppgopt {

enum class FilterFamily { CHEBYSHEV2, ELLIPTIC, BUTTERWORTH };

inline const char* to_string(FilterFamily f) noexcept
{
    switch (f) {
    case FilterFamily::CHEBYSHEV2: return "chebyshev2";
    case FilterFamily::ELLIPTIC: return "elliptic";
    case FilterFamily::BUTTERWORTH: return "butterworth";
    }
    return "?";
}

/// Band-pass specification. `order` is the analog prototype order, so the
/// realized band-pass has 2*order poles, i.e. `order` biquad sections.
/// For CHEBYSHEV2 the band edges are stopband edges (gain reaches
/// -stopband_atten_db there); for ELLIPTIC and BUTTERWORTH they are passband
/// edges (-passband_ripple_db and -3 dB respectively).
struct FilterSpec {
    FilterFamily family = FilterFamily::CHEBYSHEV2;
    int order = 4;
    double f_low = 0.5;
    double f_high = 4.0;
    double stopband_atten_db = 40.0;
    double passband_ripple_db = 1.0;

    static FilterSpec ppg_default(double f_low = 0.5, double f_high = 4.0)
    {
        return FilterSpec{FilterFamily::CHEBYSHEV2, 4, f_low, f_high, 40.0, 1.0};
    }
    static FilterSpec ecg_default() { return FilterSpec{FilterFamily::ELLIPTIC, 4, 1.0, 15.0, 40.0, 1.0}; }
    static FilterSpec motion_default() { return FilterSpec{FilterFamily::BUTTERWORTH, 4, 0.2, 5.0, 40.0, 1.0}; }
};

/// b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
};

class SosCascade {
public:
    SosCascade() = default;
    explicit SosCascade(std::vector<Biquad> sections) : sections_(std::move(sections)) {}

    [[nodiscard]] std::span<const Biquad> sections() const noexcept { return sections_; }
    [[nodiscard]] std::size_t size() const noexcept { return sections_.size(); }

    /// Largest pole magnitude over all sections.
    [[nodiscard]] double max_pole_radius() const
    {
        double r = 0.0;
        for (const Biquad& s : sections_) {
            const double disc = s.a1 * s.a1 - 4.0 * s.a2;
            if (disc < 0.0) {
                r = std::max(r, std::sqrt(s.a2));
            } else {
                const double sq = std::sqrt(disc);
                r = std::max({r, std::abs((-s.a1 + sq) / 2.0), std::abs((-s.a1 - sq) / 2.0)});
            }
        }
        return r;
    }

private:
    std::vector<Biquad> sections_;
};

namespace detail {

using cplx = std::complex<double>;

struct Zpk {
    std::vector<cplx> z;
    std::vector<cplx> p;
    double k = 1.0;
};

inline Zpk butterworth_prototype(int n)
{
    Zpk out;
    for (int m = -n + 1; m < n; m += 2) {
        out.p.push_back(-std::exp(cplx(0.0, std::numbers::pi * m / (2.0 * n))));
    }
    return out;
}

// Stopband edge normalized to 1 rad/s.
inline Zpk chebyshev2_prototype(int n, double rs_db)
{
    Zpk out;
    const double de = 1.0 / std::sqrt(std::pow(10.0, 0.1 * rs_db) - 1.0);
    const double mu = std::asinh(1.0 / de) / n;
    for (int m = -n + 1; m < n; m += 2) {
        if (m != 0) {
            out.z.push_back(cplx(0.0, 1.0 / std::sin(m * std::numbers::pi / (2.0 * n))));
        }
        const cplx base = -std::exp(cplx(0.0, std::numbers::pi * m / (2.0 * n)));
        out.p.push_back(1.0 / cplx(std::sinh(mu) * base.real(), std::cosh(mu) * base.imag()));
    }
    cplx num(1.0), den(1.0);
    for (const cplx& p : out.p) num *= -p;
    for (const cplx& z : out.z) den *= -z;
    out.k = (num / den).real();
    return out;
}

// Jacobi elliptic functions via descending Landen transformations. Arguments
// are normalized to quarter periods (u = 1 <-> K).
inline std::vector<double> landen(double k)
{
    std::vector<double> v;
    for (int i = 0; i < 32 && k > 1e-300; ++i) {
        const double kp = std::sqrt((1.0 - k) * (1.0 + k));
        k = std::pow(k / (1.0 + kp), 2);
        v.push_back(k);
        if (k < 1e-17) break;
    }
    return v;
}

inline double ellipk(double k)
{
    double prod = std::numbers::pi / 2.0;
    for (double vn : landen(k)) prod *= 1.0 + vn;
    return prod;
}

inline cplx cde(cplx u, double k)
{
    const auto v = landen(k);
    cplx w = std::cos(u * std::numbers::pi / 2.0);
    for (auto it = v.rbegin(); it != v.rend(); ++it) {
        w = (1.0 + *it) * w / (1.0 + *it * w * w);
    }
    return w;
}

inline cplx sne(cplx u, double k)
{
    const auto v = landen(k);
    cplx w = std::sin(u * std::numbers::pi / 2.0);
    for (auto it = v.rbegin(); it != v.rend(); ++it) {
        w = (1.0 + *it) * w / (1.0 + *it * w * w);
    }
    return w;
}

inline cplx acde(cplx w, double k)
{
    const auto v = landen(k);
    double prev = k;
    for (double vn : v) {
        w = w / (1.0 + std::sqrt(1.0 - w * w * prev * prev)) * 2.0 / (1.0 + vn);
        prev = vn;
    }
    return std::acos(w) * (2.0 / std::numbers::pi);
}

inline cplx asne(cplx w, double k) { return 1.0 - acde(w, k); }

// Solves the degree equation for the selectivity k given order n and k1.
inline double ellipdeg(int n, double k1)
{
    const double k1p = std::sqrt((1.0 - k1) * (1.0 + k1));
    double prod = 1.0;
    for (int i = 1; i <= n / 2; ++i) {
        prod *= sne(cplx((2.0 * i - 1.0) / n), k1p).real();
    }
    const double kp = std::pow(k1p, n) * std::pow(prod, 4);
    return std::sqrt((1.0 - kp) * (1.0 + kp));
}

// Passband edge normalized to 1 rad/s, ripple rp_db, attenuation rs_db.
inline Zpk elliptic_prototype(int n, double rp_db, double rs_db)
{
    Zpk out;
    const double ep = std::sqrt(std::pow(10.0, 0.1 * rp_db) - 1.0);
    const double es = std::sqrt(std::pow(10.0, 0.1 * rs_db) - 1.0);
    const double k1 = ep / es;
    const double k = ellipdeg(n, k1);
    const double v0 = (cplx(0.0, -1.0) * asne(cplx(0.0, 1.0 / ep), k1) / static_cast<double>(n)).real();

    for (int i = 1; i <= n / 2; ++i) {
        const double ui = (2.0 * i - 1.0) / n;
        const cplx zero = cplx(0.0, 1.0) / (k * cde(cplx(ui), k));
        const cplx pole = cplx(0.0, 1.0) * cde(cplx(ui, -v0), k);
        out.z.push_back(zero);
        out.z.push_back(std::conj(zero));
        out.p.push_back(pole);
        out.p.push_back(std::conj(pole));
    }
    if (n % 2 == 1) {
        out.p.push_back(cplx(0.0, 1.0) * sne(cplx(0.0, v0), k));
    }
    // Unit DC gain for odd orders, passband floor for even orders.
    const double h0 = (n % 2 == 0) ? 1.0 / std::sqrt(1.0 + ep * ep) : 1.0;
    cplx num(1.0), den(1.0);
    for (const cplx& p : out.p) num *= -p;
    for (const cplx& z : out.z) den *= -z;
    out.k = h0 * (num / den).real();
    return out;
}

inline Zpk lowpass_to_bandpass(const Zpk& lp, double w0, double bw)
{
    Zpk bp;
    auto split = [&](const cplx& r, std::vector<cplx>& dst) {
        const cplx half = r * bw / 2.0;
        const cplx root = std::sqrt(half * half - w0 * w0);
        dst.push_back(half + root);
        dst.push_back(half - root);
    };
    for (const cplx& z : lp.z) split(z, bp.z);
    for (const cplx& p : lp.p) split(p, bp.p);
    const std::size_t degree = lp.p.size() - lp.z.size();
    bp.z.insert(bp.z.end(), degree, cplx(0.0));
    bp.k = lp.k * std::pow(bw, static_cast<double>(degree));
    return bp;
}

inline Zpk bilinear(const Zpk& analog, double fs)
{
    Zpk d;
    const double fs2 = 2.0 * fs;
    cplx num(1.0), den(1.0);
    for (const cplx& z : analog.z) {
        d.z.push_back((fs2 + z) / (fs2 - z));
        num *= fs2 - z;
    }
    for (const cplx& p : analog.p) {
        d.p.push_back((fs2 + p) / (fs2 - p));
        den *= fs2 - p;
    }
    d.z.insert(d.z.end(), analog.p.size() - analog.z.size(), cplx(-1.0));
    d.k = analog.k * (num / den).real();
    return d;
}

struct RootGroups {
    std::vector<cplx> complex_upper; // one representative per conjugate pair
    std::vector<double> real;
};

inline RootGroups group_roots(const std::vector<cplx>& roots)
{
    RootGroups g;
    for (const cplx& r : roots) {
        const double tol = 1e-10 * std::max(1.0, std::abs(r));
        if (std::abs(r.imag()) <= tol) {
            g.real.push_back(r.real());
        } else if (r.imag() > 0.0) {
            g.complex_upper.push_back(r);
        }
    }
    return g;
}

/// Pairs each pole pair with the nearest remaining zeros; sections come out
/// sorted by ascending pole radius, the overall gain lives on the first one.
inline std::vector<Biquad> zpk_to_sos(const Zpk& zpk)
{
    RootGroups poles = group_roots(zpk.p);
    RootGroups zeros = group_roots(zpk.z);

    struct PoleSection {
        cplx p1, p2;
        double radius;
    };
    std::vector<PoleSection> pole_sections;
    for (const cplx& p : poles.complex_upper) {
        pole_sections.push_back({p, std::conj(p), std::abs(p)});
    }
    std::sort(poles.real.begin(), poles.real.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
    for (std::size_t i = 0; i < poles.real.size(); i += 2) {
        const double a = poles.real[i];
        const double b = i + 1 < poles.real.size() ? poles.real[i + 1] : 0.0;
        pole_sections.push_back({cplx(a), cplx(b), std::max(std::abs(a), std::abs(b))});
    }

    // Critical (large radius) poles claim their zeros first.
    std::vector<std::size_t> order(pole_sections.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pole_sections[a].radius > pole_sections[b].radius;
    });

    std::vector<Biquad> sections(pole_sections.size());
    std::vector<double> radii(pole_sections.size());
    for (std::size_t idx : order) {
        const PoleSection& ps = pole_sections[idx];
        Biquad bq;
        const cplx a_sum = ps.p1 + ps.p2;
        const cplx a_prod = ps.p1 * ps.p2;
        bq.a1 = -a_sum.real();
        bq.a2 = a_prod.real();

        const cplx target = ps.p1;
        double best_c = INFINITY;
        std::size_t best_ci = 0;
        for (std::size_t i = 0; i < zeros.complex_upper.size(); ++i) {
            const double d = std::abs(zeros.complex_upper[i] - target);
            if (d < best_c) {
                best_c = d;
                best_ci = i;
            }
        }
        auto nearest_real = [&]() {
            std::size_t best = 0;
            double bd = INFINITY;
            for (std::size_t i = 0; i < zeros.real.size(); ++i) {
                const double d = std::abs(cplx(zeros.real[i]) - target);
                if (d < bd) {
                    bd = d;
                    best = i;
                }
            }
            return std::pair{best, bd};
        };
        auto [best_ri, best_r] = nearest_real();

        if (!zeros.complex_upper.empty() && (zeros.real.size() < 2 || best_c <= best_r)) {
            const cplx z = zeros.complex_upper[best_ci];
            zeros.complex_upper.erase(zeros.complex_upper.begin() + static_cast<std::ptrdiff_t>(best_ci));
            bq.b0 = 1.0;
            bq.b1 = -2.0 * z.real();
            bq.b2 = std::norm(z);
        } else if (!zeros.real.empty()) {
            const double z1 = zeros.real[best_ri];
            zeros.real.erase(zeros.real.begin() + static_cast<std::ptrdiff_t>(best_ri));
            if (!zeros.real.empty()) {
                auto [ri2, unused] = nearest_real();
                (void)unused;
                const double z2 = zeros.real[ri2];
                zeros.real.erase(zeros.real.begin() + static_cast<std::ptrdiff_t>(ri2));
                bq.b0 = 1.0;
                bq.b1 = -(z1 + z2);
                bq.b2 = z1 * z2;
            } else {
                bq.b0 = 1.0;
                bq.b1 = -z1;
                bq.b2 = 0.0;
            }
        }
        sections[idx] = bq;
        radii[idx] = ps.radius;
    }

    std::vector<std::size_t> by_radius(sections.size());
    for (std::size_t i = 0; i < by_radius.size(); ++i) by_radius[i] = i;
    std::stable_sort(by_radius.begin(), by_radius.end(), [&](std::size_t a, std::size_t b) { return radii[a] < radii[b]; });
    std::vector<Biquad> sorted;
    sorted.reserve(sections.size());
    for (std::size_t i : by_radius) sorted.push_back(sections[i]);
    if (!sorted.empty()) {
        sorted.front().b0 *= zpk.k;
        sorted.front().b1 *= zpk.k;
        sorted.front().b2 *= zpk.k;
    }
    return sorted;
}

// Steady-state direct-form-II-transposed state for a unit step at the cascade input.
inline std::vector<std::array<double, 2>> step_initial_state(std::span<const Biquad> sections)
{
    std::vector<std::array<double, 2>> zi(sections.size());
    double scale = 1.0;
    for (std::size_t i = 0; i < sections.size(); ++i) {
        const Biquad& s = sections[i];
        const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
        const double z2 = s.b2 - s.a2 * gain;
        const double z1 = s.b1 - s.a1 * gain + z2;
        zi[i] = {scale * z1, scale * z2};
        scale *= gain;
    }
    return zi;
}

inline void filter_in_place(std::span<const Biquad> sections, std::vector<double>& x,
                            std::vector<std::array<double, 2>> state)
{
    for (std::size_t si = 0; si < sections.size(); ++si) {
        const Biquad& s = sections[si];
        double z1 = state[si][0];
        double z2 = state[si][1];
        for (double& v : x) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
}

} // namespace detail

inline SosCascade design_bandpass(const FilterSpec& spec, double fs)
{
    if (!(fs > 0.0)) throw Error(ErrorKind::InvalidInput, "sampling rate must be positive");
    if (!(spec.f_low > 0.0)) throw Error(ErrorKind::InvalidBand, "f_low must be positive");
    if (!(spec.f_low < spec.f_high)) {
        throw Error(ErrorKind::InvalidBand, "f_low (" + std::to_string(spec.f_low) + ") must be below f_high (" +
                                                std::to_string(spec.f_high) + ")");
    }
    if (!(spec.f_high < fs / 2.0)) {
        throw Error(ErrorKind::NyquistViolation, "f_high " + std::to_string(spec.f_high) + " Hz is not below fs/2");
    }
    if (spec.order < 2 || spec.order % 2 != 0) {
        throw Error(ErrorKind::InvalidInput, "band-pass order must be even and >= 2");
    }

    detail::Zpk proto;
    switch (spec.family) {
    case FilterFamily::BUTTERWORTH: proto = detail::butterworth_prototype(spec.order); break;
    case FilterFamily::CHEBYSHEV2: proto = detail::chebyshev2_prototype(spec.order, spec.stopband_atten_db); break;
    case FilterFamily::ELLIPTIC:
        proto = detail::elliptic_prototype(spec.order, spec.passband_ripple_db, spec.stopband_atten_db);
        break;
    }

    const double w_low = 2.0 * fs * std::tan(std::numbers::pi * spec.f_low / fs);
    const double w_high = 2.0 * fs * std::tan(std::numbers::pi * spec.f_high / fs);
    const auto analog = detail::lowpass_to_bandpass(proto, std::sqrt(w_low * w_high), w_high - w_low);
    SosCascade cascade(detail::zpk_to_sos(detail::bilinear(analog, fs)));

    if (!(cascade.max_pole_radius() < 1.0 - 1e-9)) {
        throw Error(ErrorKind::DesignFailure, std::string("unstable ") + to_string(spec.family) + " design");
    }
    return cascade;
}

/// H(e^{j 2 pi f / fs}) of the cascade at each frequency.
inline std::vector<std::complex<double>> frequency_response(const SosCascade& cascade, std::span<const double> freqs,
                                                            double fs)
{
    std::vector<std::complex<double>> out;
    out.reserve(freqs.size());
    for (double f : freqs) {
        if (!(f >= 0.0 && f <= fs / 2.0)) {
            throw Error(ErrorKind::InvalidFrequency, "frequency " + std::to_string(f) + " outside [0, fs/2]");
        }
        const std::complex<double> zinv = std::exp(std::complex<double>(0.0, -2.0 * std::numbers::pi * f / fs));
        const std::complex<double> zinv2 = zinv * zinv;
        std::complex<double> h(1.0);
        for (const Biquad& s : cascade.sections()) {
            h *= (s.b0 + s.b1 * zinv + s.b2 * zinv2) / (1.0 + s.a1 * zinv + s.a2 * zinv2);
        }
        out.push_back(h);
    }
    return out;
}

/// Edge padding used by apply_zero_phase: three times the filter state size.
inline std::size_t zero_phase_padding(const SosCascade& cascade) noexcept { return 3 * 2 * cascade.size(); }

/// Forward-backward filtering with odd reflected-edge padding and steady-state
/// initial conditions. Output has the input's length and zero net phase.
inline std::vector<double> apply_zero_phase(const SosCascade& cascade, std::span<const double> x)
{
    const std::size_t pad = zero_phase_padding(cascade);
    if (x.size() <= pad) {
        throw Error(ErrorKind::InsufficientData, "signal of " + std::to_string(x.size()) +
                                                     " samples is too short for zero-phase filtering (needs > " +
                                                     std::to_string(pad) + ")");
    }
    const std::size_t n = x.size();
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    const auto sections = cascade.sections();
    const auto zi = detail::step_initial_state(sections);
    auto scaled = [&](double v) {
        auto s = zi;
        for (auto& st : s) {
            st[0] *= v;
            st[1] *= v;
        }
        return s;
    };

    detail::filter_in_place(sections, ext, scaled(ext.front()));
    std::reverse(ext.begin(), ext.end());
    detail::filter_in_place(sections, ext, scaled(ext.front()));
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

inline Signal apply_zero_phase(const SosCascade& cascade, const Signal& signal)
{
    return signal.with_samples(apply_zero_phase(cascade, signal.samples()));
}

} // namespace ppgopt
