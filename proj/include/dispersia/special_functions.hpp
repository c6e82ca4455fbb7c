#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "dispersia/errors.hpp"

// Special functions backing the distribution layer: log-gamma, digamma,
// trigamma, the regularized incomplete gamma, the normal CDF and quantile,
// and the chi-square quantile. Accuracy contracts:
//   log_gamma / digamma / trigamma : <= 1e-12 relative for x >= 0.5
//   reg_gamma_p / reg_gamma_q      : <= 1e-10 absolute
//   norm_cdf                       : <= 1e-12 absolute
//   chi2_quantile                  : residual |P(df/2, x/2) - p| <= 1e-9

namespace dispersia {

inline constexpr double pi_const = 3.141592653589793238462643383279502884;

inline double log_gamma(double x) {
    if (!(x > 0.0)) throw parameter_error("log_gamma: x must be > 0, got " + std::to_string(x));
    return std::lgamma(x);
}

// Digamma via the Bernoulli asymptotic series after shifting to x >= 10
// with psi(x) = psi(x+1) - 1/x.
inline double digamma(double x) {
    if (!(x > 0.0)) throw parameter_error("digamma: x must be > 0, got " + std::to_string(x));
    double result = 0.0;
    while (x < 10.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double u = 1.0 / (x * x);
    const double tail =
        u * (1.0 / 12.0 -
        u * (1.0 / 120.0 -
        u * (1.0 / 252.0 -
        u * (1.0 / 240.0 -
        u * (1.0 / 132.0 -
        u * (691.0 / 32760.0 -
        u * (1.0 / 12.0)))))));
    return result + std::log(x) - 0.5 / x - tail;
}

// Trigamma by the same shift, psi'(x) = psi'(x+1) + 1/x^2.
inline double trigamma(double x) {
    if (!(x > 0.0)) throw parameter_error("trigamma: x must be > 0, got " + std::to_string(x));
    double result = 0.0;
    while (x < 10.0) {
        result += 1.0 / (x * x);
        x += 1.0;
    }
    const double u = 1.0 / (x * x);
    const double tail =
        u * (1.0 / 6.0 -
        u * (1.0 / 30.0 -
        u * (1.0 / 42.0 -
        u * (1.0 / 30.0 -
        u * (5.0 / 66.0 -
        u * (691.0 / 2730.0 -
        u * (7.0 / 6.0)))))));
    return result + 1.0 / x + 0.5 * u + tail / x;
}

namespace detail {

// Lower regularized incomplete gamma by its power series; valid for x < a+1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int i = 0; i < 1000000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-17)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw convergence_error("reg_gamma_p: series failed to converge", {a, x}, 1000000);
}

// Upper regularized incomplete gamma by modified Lentz continued fraction;
// valid for x >= a+1.
inline double gamma_q_fraction(double a, double x) {
    constexpr double fpmin = std::numeric_limits<double>::min() / 1e-30;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16)
            return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    }
    throw convergence_error("reg_gamma_q: continued fraction failed to converge", {a, x}, 1000000);
}

}  // namespace detail

inline double reg_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw parameter_error("reg_gamma_p: a must be > 0, got " + std::to_string(a));
    if (!(x >= 0.0)) throw parameter_error("reg_gamma_p: x must be >= 0, got " + std::to_string(x));
    if (x == 0.0) return 0.0;
    return x < a + 1.0 ? detail::gamma_p_series(a, x) : 1.0 - detail::gamma_q_fraction(a, x);
}

inline double reg_gamma_q(double a, double x) {
    if (!(a > 0.0)) throw parameter_error("reg_gamma_q: a must be > 0, got " + std::to_string(a));
    if (!(x >= 0.0)) throw parameter_error("reg_gamma_q: x must be >= 0, got " + std::to_string(x));
    if (x == 0.0) return 1.0;
    return x < a + 1.0 ? 1.0 - detail::gamma_p_series(a, x) : detail::gamma_q_fraction(a, x);
}

inline double norm_cdf(double z) {
    return 0.5 * std::erfc(-z * 0.7071067811865475244);
}

// Standard normal quantile: Acklam's rational approximation polished with one
// Halley step against erfc, which brings it to full double precision.
inline double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw parameter_error("norm_quantile: p must lie in (0,1), got " + std::to_string(p));
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = norm_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * pi_const) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

namespace detail {

// Quantile of the unit-scale gamma: the y > 0 with P(a, y) = p. Wilson-Hilferty
// start, then Newton safeguarded by a maintained bracket.
inline double gamma_unit_quantile(double a, double p) {
    const double z = norm_quantile(p);
    const double wh = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a));
    double y = a * wh * wh * wh;
    if (!(y > 0.0) || !std::isfinite(y))
        y = std::exp((std::log(p) + std::lgamma(a + 1.0)) / a);
    if (!(y > 0.0) || !std::isfinite(y)) y = 1e-280;

    double lo = y, hi = y;
    while (reg_gamma_p(a, hi) < p) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw convergence_error("gamma quantile: bracket overflow", {a, p}, 0);
    }
    while (reg_gamma_p(a, lo) > p) {
        hi = lo;
        lo *= 0.5;
        if (lo < 1e-300) return 0.0;
    }
    y = 0.5 * (lo + hi);
    const double lg = std::lgamma(a);
    for (int it = 0; it < 200; ++it) {
        const double f = reg_gamma_p(a, y) - p;
        if (f > 0.0) hi = y; else lo = y;
        const double dens = std::exp((a - 1.0) * std::log(y) - y - lg);
        double step = dens > 0.0 ? f / dens : 0.0;
        double y_next = y - step;
        if (!(y_next > lo && y_next < hi)) y_next = 0.5 * (lo + hi);
        if (std::fabs(y_next - y) <= 1e-14 * (std::fabs(y) + 1e-300)) return y_next;
        y = y_next;
    }
    return y;
}

}  // namespace detail

inline double chi2_cdf(double df, double x) {
    if (!(df > 0.0)) throw parameter_error("chi2_cdf: df must be > 0, got " + std::to_string(df));
    if (!(x >= 0.0)) throw parameter_error("chi2_cdf: x must be >= 0, got " + std::to_string(x));
    return reg_gamma_p(0.5 * df, 0.5 * x);
}

inline double chi2_quantile(double df, double p) {
    if (!(df > 0.0)) throw parameter_error("chi2_quantile: df must be > 0, got " + std::to_string(df));
    if (!(p > 0.0 && p < 1.0))
        throw parameter_error("chi2_quantile: p must lie in (0,1), got " + std::to_string(p));
    return 2.0 * detail::gamma_unit_quantile(0.5 * df, p);
}

}  // namespace dispersia
