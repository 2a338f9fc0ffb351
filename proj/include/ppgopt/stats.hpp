#pragma once

// Repeated-measures ANOVA, paired t-tests with Bonferroni correction and
// Cohen's d. p-values come from a regularized incomplete beta evaluated by
// continued fraction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ppgopt/error.hpp"

namespace ppgopt::stats {

namespace detail {

inline constexpr double kCfTolerance = 1e-12;
inline constexpr int kCfMaxIterations = 300;

// Continued fraction for I_x(a, b), modified Lentz.
inline double beta_cf(double a, double b, double x)
{
    constexpr double tiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kCfMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kCfTolerance) return h;
    }
    throw Error(ErrorKind::DesignFailure, "incomplete beta continued fraction did not converge");
}

inline double mean(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_sd(std::span<const double> v)
{
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) throw Error(ErrorKind::InvalidInput, "incomplete_beta domain");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double front =
        std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
    return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

inline double f_cdf(double f, double d1, double d2)
{
    if (f <= 0.0) return 0.0;
    return incomplete_beta(d1 / 2.0, d2 / 2.0, d1 * f / (d1 * f + d2));
}

inline double f_sf(double f, double d1, double d2)
{
    if (f <= 0.0) return 1.0;
    return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

inline double t_cdf(double t, double df)
{
    const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    return t > 0.0 ? 1.0 - tail : tail;
}

inline double t_sf(double t, double df) { return t_cdf(-t, df); }

/// Two-sided p of a t statistic.
inline double t_two_sided_p(double t, double df) { return std::min(1.0, incomplete_beta(df / 2.0, 0.5, df / (df + t * t))); }

struct RmAnovaTable {
    double f_stat = 0.0;
    double df_treatment = 0.0;
    double df_error = 0.0;
    double p_value = 1.0;
    double ss_subjects = 0.0;
    double ss_treatment = 0.0;
    double ss_error = 0.0;
    std::vector<double> means; // per condition
};

/// One-way within-subjects ANOVA; rows are subjects, columns conditions.
/// No sphericity correction.
inline RmAnovaTable rm_anova(const std::vector<std::vector<double>>& data)
{
    const std::size_t n = data.size();
    if (n < 2) throw Error(ErrorKind::InvalidInput, "rm_anova needs at least 2 subjects");
    const std::size_t k = data.front().size();
    if (k < 2) throw Error(ErrorKind::InvalidInput, "rm_anova needs at least 2 conditions");
    for (const auto& row : data) {
        if (row.size() != k) throw Error(ErrorKind::InvalidInput, "rm_anova: missing cells");
        for (double v : row) {
            if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "rm_anova: missing cells");
        }
    }

    double grand = 0.0;
    std::vector<double> subj(n, 0.0);
    RmAnovaTable t;
    t.means.assign(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            grand += data[i][j];
            subj[i] += data[i][j] / static_cast<double>(k);
            t.means[j] += data[i][j] / static_cast<double>(n);
        }
    }
    grand /= static_cast<double>(n * k);

    double ss_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        t.ss_subjects += static_cast<double>(k) * (subj[i] - grand) * (subj[i] - grand);
        for (std::size_t j = 0; j < k; ++j) {
            ss_total += (data[i][j] - grand) * (data[i][j] - grand);
            const double r = data[i][j] - subj[i] - t.means[j] + grand;
            t.ss_error += r * r;
        }
    }
    for (std::size_t j = 0; j < k; ++j) t.ss_treatment += static_cast<double>(n) * (t.means[j] - grand) * (t.means[j] - grand);

    t.df_treatment = static_cast<double>(k - 1);
    t.df_error = static_cast<double>((k - 1) * (n - 1));
    // Residuals at rounding level count as zero.
    const double noise_floor = 1e-13 * std::max(ss_total, std::numeric_limits<double>::min());
    const bool no_treatment = t.ss_treatment <= noise_floor;
    const bool no_error = t.ss_error <= noise_floor;
    if (no_treatment) {
        t.f_stat = 0.0;
        t.p_value = 1.0;
        return t;
    }
    if (no_error) throw Error(ErrorKind::DegenerateVariance, "rm_anova: zero error variance");
    t.f_stat = (t.ss_treatment / t.df_treatment) / (t.ss_error / t.df_error);
    t.p_value = f_sf(t.f_stat, t.df_treatment, t.df_error);
    return t;
}

struct TTest {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

/// Paired t on a - b. Identical samples give t = 0, p = 1.
inline TTest paired_t(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw Error(ErrorKind::InvalidInput, "paired samples differ in length");
    if (a.size() < 2) throw Error(ErrorKind::InvalidInput, "paired_t needs n >= 2");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    TTest r;
    r.df = static_cast<double>(d.size() - 1);
    const double m = detail::mean(d);
    const double sd = detail::sample_sd(d);
    if (sd == 0.0) {
        if (m == 0.0) return r;
        throw Error(ErrorKind::DegenerateVariance, "paired_t: differences have zero variance");
    }
    r.t = m / (sd / std::sqrt(static_cast<double>(d.size())));
    r.p = t_two_sided_p(r.t, r.df);
    return r;
}

inline std::vector<double> bonferroni(std::span<const double> p_values, std::size_t m)
{
    if (m < p_values.size()) throw Error(ErrorKind::InvalidInput, "bonferroni: m smaller than the number of tests");
    std::vector<double> out;
    for (double p : p_values) out.push_back(std::min(1.0, static_cast<double>(m) * p));
    return out;
}

/// mean(a - b) / sd(a - b), sample sd.
inline double cohens_d_paired(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size() || a.size() < 2) throw Error(ErrorKind::InvalidInput, "cohens_d_paired needs equal lengths >= 2");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const double sd = detail::sample_sd(d);
    if (!(sd > 0.0)) throw Error(ErrorKind::DegenerateVariance, "cohens_d_paired: differences have zero variance");
    return detail::mean(d) / sd;
}

/// (mean(a) - mean(b)) / pooled sample sd.
inline double cohens_d_pooled(std::span<const double> a, std::span<const double> b)
{
    if (a.size() < 2 || b.size() < 2) throw Error(ErrorKind::InvalidInput, "cohens_d_pooled needs n >= 2 per group");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double sa = detail::sample_sd(a);
    const double sb = detail::sample_sd(b);
    const double pooled = std::sqrt(((na - 1.0) * sa * sa + (nb - 1.0) * sb * sb) / (na + nb - 2.0));
    if (!(pooled > 0.0)) throw Error(ErrorKind::DegenerateVariance, "cohens_d_pooled: zero pooled variance");
    return (detail::mean(a) - detail::mean(b)) / pooled;
}

struct PairwiseComparison {
    std::size_t a = 0;
    std::size_t b = 0;
    TTest test;
    double p_bonferroni = 1.0;
    double cohens_d = 0.0;
    bool d_defined = true;
};

/// Every condition pair (a < b) of a subjects x conditions matrix, with the
/// Bonferroni factor equal to the number of pairs.
inline std::vector<PairwiseComparison> pairwise_paired(const std::vector<std::vector<double>>& data, bool pooled_d = false)
{
    if (data.empty()) throw Error(ErrorKind::InvalidInput, "pairwise_paired: no subjects");
    const std::size_t k = data.front().size();
    std::vector<std::vector<double>> cols(k);
    for (const auto& row : data) {
        if (row.size() != k) throw Error(ErrorKind::InvalidInput, "pairwise_paired: missing cells");
        for (std::size_t j = 0; j < k; ++j) cols[j].push_back(row[j]);
    }
    std::vector<PairwiseComparison> out;
    std::vector<double> ps;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            PairwiseComparison c;
            c.a = a;
            c.b = b;
            try {
                c.test = paired_t(cols[a], cols[b]);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::DegenerateVariance) throw;
                c.test = {std::numeric_limits<double>::quiet_NaN(), static_cast<double>(data.size() - 1), 0.0};
            }
            try {
                c.cohens_d = pooled_d ? cohens_d_pooled(cols[a], cols[b]) : cohens_d_paired(cols[a], cols[b]);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::DegenerateVariance) throw;
                c.cohens_d = std::numeric_limits<double>::quiet_NaN();
                c.d_defined = false;
            }
            ps.push_back(c.test.p);
            out.push_back(c);
        }
    }
    const auto adj = bonferroni(ps, ps.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i].p_bonferroni = adj[i];
    return out;
}

} // namespace ppgopt::stats
