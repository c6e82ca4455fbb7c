#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dispersia/distributions.hpp"
#include "dispersia/errors.hpp"
#include "dispersia/special_functions.hpp"

// Alternative goodness-of-fit tests: Pearson chi-square with equal-probability
// binning, and the one-sample Kolmogorov-Smirnov test with its asymptotic
// p-value. The KS p-value is only valid when the null parameters are fully
// specified, not estimated; callers fitting first should surface a warning.

namespace dispersia {

struct GofBin {
    double lower = 0.0;
    double upper = 0.0;
    long observed = 0;
    double expected = 0.0;
};

struct GofResult {
    double statistic = 0.0;
    double df = 0.0;
    double p_value = 1.0;
    std::vector<GofBin> bins;  // chi-square only
};

// Interior bin edges giving k cells of equal model probability, with
// k = max(4, min(20, floor(n / min_expected))). Returns k-1 edges.
inline std::vector<double> equal_prob_bins(const DistributionSpec& spec, std::size_t n,
                                           double min_expected = 5.0) {
    validate(spec);
    if (!(min_expected > 0.0))
        throw parameter_error("equal_prob_bins: min_expected must be > 0");
    if (static_cast<double>(n) < 2.0 * min_expected)
        throw data_error("equal_prob_bins: need at least " +
                         std::to_string(2.0 * min_expected) + " observations, got " +
                         std::to_string(n));
    const int k = std::max(4, std::min(20, static_cast<int>(static_cast<double>(n) / min_expected)));
    std::vector<double> edges(static_cast<std::size_t>(k) - 1);
    for (int i = 1; i < k; ++i)
        edges[static_cast<std::size_t>(i) - 1] =
            quantile(spec, static_cast<double>(i) / static_cast<double>(k));
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            throw data_error("equal_prob_bins: bin edges are not strictly increasing (the model "
                             "is too concentrated for " + std::to_string(k) + " cells)");
    return edges;
}

// Pearson chi-square against the model spec. Bins are the equal-probability
// cells above; cell j covers (edge_{j-1}, edge_j] with expected count
// n * (F(edge_j) - F(edge_{j-1})). fitted_param_count parameters estimated
// from the data are deducted from the degrees of freedom.
inline GofResult pearson_chi2(std::span<const double> data, const DistributionSpec& spec,
                              int fitted_param_count, double min_expected = 5.0) {
    const auto edges = equal_prob_bins(spec, data.size(), min_expected);
    const std::size_t k = edges.size() + 1;
    if (fitted_param_count < 0 ||
        static_cast<std::size_t>(fitted_param_count) >= k - 1)
        throw parameter_error("pearson_chi2: fitted_param_count must lie in [0, bins-2]");

    GofResult out;
    out.bins.resize(k);
    const double inf = std::numeric_limits<double>::infinity();
    double prev_cdf = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        out.bins[j].lower = j == 0 ? -inf : edges[j - 1];
        out.bins[j].upper = j == k - 1 ? inf : edges[j];
        const double hi_cdf = j == k - 1 ? 1.0 : cdf(spec, edges[j]);
        out.bins[j].expected = static_cast<double>(data.size()) * (hi_cdf - prev_cdf);
        prev_cdf = hi_cdf;
        if (!(out.bins[j].expected > 1e-9))
            throw data_error("pearson_chi2: expected count in bin " + std::to_string(j) +
                             " is zero");
    }
    for (double v : data) {
        if (std::isnan(v)) throw data_error("pearson_chi2: NaN in data");
        const auto it = std::upper_bound(edges.begin(), edges.end(), v);
        std::size_t j = static_cast<std::size_t>(it - edges.begin());
        if (j > 0 && v <= edges[j - 1]) --j;  // ties land in the lower cell, matching (lo, hi]
        ++out.bins[j].observed;
    }
    double stat = 0.0;
    for (const auto& bin : out.bins) {
        const double d = static_cast<double>(bin.observed) - bin.expected;
        stat += d * d / bin.expected;
    }
    out.statistic = stat;
    out.df = static_cast<double>(k) - 1.0 - static_cast<double>(fitted_param_count);
    out.p_value = reg_gamma_q(0.5 * out.df, 0.5 * stat);
    return out;
}

// Kolmogorov-Smirnov statistic D_n = max_i max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n).
// Data need not be sorted; NaNs are rejected.
inline double ks_statistic(std::span<const double> data,
                           const std::function<double(double)>& cdf_fn) {
    if (data.empty()) throw data_error("ks_statistic: data must be non-empty");
    std::vector<double> sorted(data.begin(), data.end());
    for (double v : sorted)
        if (std::isnan(v)) throw data_error("ks_statistic: NaN in data");
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf_fn(sorted[i]);
        const double upper = static_cast<double>(i + 1) / n - f;
        const double lower = f - static_cast<double>(i) / n;
        d = std::max(d, std::max(upper, lower));
    }
    return d;
}

inline double ks_statistic(std::span<const double> data, const DistributionSpec& spec) {
    return ks_statistic(data, [&](double x) { return cdf(spec, x); });
}

namespace detail {

// Survival function of the Kolmogorov limit law at x = sqrt(n) * D_n:
//   K(x) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2),
// truncated once terms drop below 1e-12. For small x that alternating sum
// degenerates, so the equivalent Jacobi theta form of the CDF is used there.
inline double kolmogorov_sf(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 0.75) {
        const double f = std::sqrt(2.0 * pi_const) / x;
        double cdf_val = 0.0;
        for (int k = 1; k <= 100; ++k) {
            const double odd = 2.0 * k - 1.0;
            const double term = std::exp(-odd * odd * pi_const * pi_const / (8.0 * x * x));
            cdf_val += term;
            if (term < 1e-16) break;
        }
        return std::clamp(1.0 - f * cdf_val, 0.0, 1.0);
    }
    double sf = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 1000; ++k) {
        const double term = std::exp(-2.0 * static_cast<double>(k) * static_cast<double>(k) * x * x);
        sf += sign * term;
        sign = -sign;
        if (term < 1e-12) break;
    }
    return std::clamp(2.0 * sf, 0.0, 1.0);
}

}  // namespace detail

inline double ks_pvalue(double d_stat, std::size_t n) {
    if (!(d_stat >= 0.0)) throw parameter_error("ks_pvalue: statistic must be >= 0");
    if (n < 1) throw parameter_error("ks_pvalue: n must be >= 1");
    return detail::kolmogorov_sf(std::sqrt(static_cast<double>(n)) * d_stat);
}

inline GofResult ks_test(std::span<const double> data, const DistributionSpec& spec) {
    GofResult out;
    out.statistic = ks_statistic(data, spec);
    out.df = 0.0;
    out.p_value = ks_pvalue(out.statistic, data.size());
    return out;
}

}  // namespace dispersia
