#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dispersia/distributions.hpp"
#include "dispersia/errors.hpp"
#include "dispersia/special_functions.hpp"

// Maximum-likelihood fitting. The variance-ratio statistic divides by the
// plug-in population variance of the fitted model, so every fit records
// moments(spec).sigma2 alongside the estimates.

namespace dispersia {

enum class FitFamily { exponential, gamma, weibull, lognormal, poisson, binomial };

inline FitFamily fit_family_from_string(const std::string& s) {
    if (s == "exponential") return FitFamily::exponential;
    if (s == "gamma") return FitFamily::gamma;
    if (s == "weibull") return FitFamily::weibull;
    if (s == "lognormal") return FitFamily::lognormal;
    if (s == "poisson") return FitFamily::poisson;
    if (s == "binomial") return FitFamily::binomial;
    throw parameter_error("unknown fit family '" + s + "'");
}

inline std::string to_string(FitFamily f) {
    switch (f) {
        case FitFamily::exponential: return "exponential";
        case FitFamily::gamma: return "gamma";
        case FitFamily::weibull: return "weibull";
        case FitFamily::lognormal: return "lognormal";
        case FitFamily::poisson: return "poisson";
        case FitFamily::binomial: return "binomial";
    }
    throw parameter_error("unknown fit family");
}

struct FitResult {
    DistributionSpec spec;
    double log_likelihood = 0.0;
    double plug_in_variance = 0.0;
    int iterations = 0;
    bool converged = false;
    double gradient_norm = 0.0;
};

struct GammaSolve {
    double shape = 0.0, scale = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

struct WeibullSolve {
    double shape = 0.0, scale = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

// The plug-in variance is by definition the population variance of the
// fitted model, e.g. mean^2 for exponential, shape*scale^2 for gamma.
inline double plug_in_variance(const FitResult& fit) { return moments(fit.spec).sigma2; }

namespace detail {

inline double mean_of(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline void require_fit_data(std::span<const double> x, bool positive_support,
                             const char* family) {
    if (x.size() < 2)
        throw data_error(std::string(family) + " fit requires at least 2 observations, got " +
                         std::to_string(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]))
            throw data_error(std::string(family) + " fit: non-finite datum at index " +
                             std::to_string(i));
        if (positive_support && !(x[i] > 0.0))
            throw data_error(std::string(family) + " fit: datum " + std::to_string(x[i]) +
                             " at index " + std::to_string(i) +
                             " outside the positive support");
    }
}

}  // namespace detail

// Solve ln(shape) - digamma(shape) = s by Newton iteration on ln(shape),
// started from Thom's closed-form approximation; scale follows from the
// first-order condition mean = shape * scale.
inline GammaSolve gamma_mle_solve(double mean_x, double mean_log_x) {
    const double s = std::log(mean_x) - mean_log_x;
    if (!(s > 0.0))
        throw data_error("gamma MLE: ln(mean) - mean(log) = " + std::to_string(s) +
                         " must be > 0 (data degenerate?)");
    double alpha = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
    double u = std::log(alpha);
    GammaSolve out;
    for (out.iterations = 1; out.iterations <= 100; ++out.iterations) {
        alpha = std::exp(u);
        const double g = u - digamma(alpha) - s;
        const double gp = 1.0 - alpha * trigamma(alpha);
        const double step = g / gp;
        u -= step;
        if (std::fabs(step) < 1e-14 * std::max(1.0, std::fabs(u))) break;
    }
    alpha = std::exp(u);
    out.shape = alpha;
    out.scale = mean_x / alpha;
    out.residual = std::fabs(std::log(alpha) - digamma(alpha) - s);
    if (out.residual > 1e-12 || !std::isfinite(alpha))
        throw convergence_error("gamma MLE failed to converge: residual " +
                                    std::to_string(out.residual),
                                {alpha, out.scale}, out.iterations);
    return out;
}

// Weibull profile score in the shape k:
//   R(k) = sum(x^k ln x)/sum(x^k) - 1/k - mean(ln x),
// strictly increasing in k. Newton with a bisection fallback on [1e-3, 1e3];
// powers are evaluated as exp(k (ln x - max ln x)) so large k cannot overflow.
inline WeibullSolve weibull_mle_solve(std::span<const double> data) {
    detail::require_fit_data(data, true, "weibull");
    std::vector<double> logs(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) logs[i] = std::log(data[i]);
    const double log_max = *std::max_element(logs.begin(), logs.end());
    const double mean_log = detail::mean_of(logs);
    if (*std::min_element(logs.begin(), logs.end()) == log_max)
        throw data_error("weibull MLE: all observations equal");

    struct Score {
        double r, dr, mean_w;
    };
    auto score = [&](double k) {
        double sw = 0.0, swl = 0.0, swl2 = 0.0;
        for (std::size_t i = 0; i < logs.size(); ++i) {
            const double w = std::exp(k * (logs[i] - log_max));
            sw += w;
            swl += w * logs[i];
            swl2 += w * logs[i] * logs[i];
        }
        const double a = swl / sw;
        return Score{a - 1.0 / k - mean_log, (swl2 * sw - swl * swl) / (sw * sw) + 1.0 / (k * k),
                     sw / static_cast<double>(logs.size())};
    };

    double lo = 1e-3, hi = 1e3;
    if (!(score(lo).r < 0.0 && score(hi).r > 0.0))
        throw convergence_error("weibull MLE: score has no root in [1e-3, 1e3]", {lo, hi}, 0);

    // Start from the moment-of-logs approximation pi/(sqrt(6) sd(ln x)).
    double sq = 0.0;
    for (double lg : logs) sq += (lg - mean_log) * (lg - mean_log);
    const double sd_log = std::sqrt(sq / static_cast<double>(logs.size()));
    double k = std::clamp(pi_const / (std::sqrt(6.0) * sd_log), 2.0 * lo, 0.5 * hi);

    WeibullSolve out;
    double resid = std::numeric_limits<double>::infinity();
    for (out.iterations = 1; out.iterations <= 100; ++out.iterations) {
        const Score sc = score(k);
        resid = std::fabs(sc.r);
        if (sc.r > 0.0) hi = k; else lo = k;
        double k_next = k - sc.r / sc.dr;
        if (!(k_next > lo && k_next < hi)) k_next = 0.5 * (lo + hi);
        const bool done = std::fabs(k_next - k) < 1e-13 * k && resid < 1e-12;
        k = k_next;
        if (done) break;
    }
    const Score fin = score(k);
    out.shape = k;
    out.scale = std::exp(log_max + std::log(fin.mean_w) / k);
    out.residual = std::fabs(fin.r);
    if (out.residual > 1e-10)
        throw convergence_error("weibull MLE failed to converge: residual " +
                                    std::to_string(out.residual),
                                {out.shape, out.scale}, out.iterations);
    return out;
}

namespace detail {

inline double log_likelihood_of(const DistributionSpec& spec, std::span<const double> x) {
    double ll = 0.0;
    for (double v : x) {
        const double d = pdf(spec, v);
        ll += std::log(d);
    }
    return ll;
}

}  // namespace detail

// Full MLE for one family. Binomial needs the known trial count passed as
// binomial_size. Throws convergence_error (with the last iterate) if an
// iterative solver stalls, so Monte Carlo loops can count failures instead
// of silently absorbing them.
inline FitResult fit_mle(FitFamily family, std::span<const double> data, long binomial_size = 0) {
    FitResult fit;
    switch (family) {
        case FitFamily::exponential: {
            detail::require_fit_data(data, true, "exponential");
            const double mean = detail::mean_of(data);
            fit.spec = Exponential{mean};
            fit.log_likelihood = -static_cast<double>(data.size()) * (std::log(mean) + 1.0);
            fit.iterations = 0;
            fit.converged = true;
            fit.gradient_norm = 0.0;
            break;
        }
        case FitFamily::gamma: {
            detail::require_fit_data(data, true, "gamma");
            double mean_log = 0.0;
            for (double v : data) mean_log += std::log(v);
            mean_log /= static_cast<double>(data.size());
            const auto sol = gamma_mle_solve(detail::mean_of(data), mean_log);
            fit.spec = Gamma{sol.shape, sol.scale};
            fit.iterations = sol.iterations;
            fit.converged = true;
            fit.gradient_norm = sol.residual;
            const double n = static_cast<double>(data.size());
            fit.log_likelihood = n * ((sol.shape - 1.0) * mean_log -
                                      detail::mean_of(data) / sol.scale - log_gamma(sol.shape) -
                                      sol.shape * std::log(sol.scale));
            break;
        }
        case FitFamily::weibull: {
            const auto sol = weibull_mle_solve(data);
            fit.spec = Weibull{sol.shape, sol.scale};
            fit.iterations = sol.iterations;
            fit.converged = true;
            fit.gradient_norm = sol.residual;
            fit.log_likelihood = detail::log_likelihood_of(fit.spec, data);
            break;
        }
        case FitFamily::lognormal: {
            detail::require_fit_data(data, true, "lognormal");
            // MLE uses divisor n for the log variance, not n-1.
            double mu = 0.0;
            for (double v : data) mu += std::log(v);
            mu /= static_cast<double>(data.size());
            double s2 = 0.0;
            for (double v : data) {
                const double d = std::log(v) - mu;
                s2 += d * d;
            }
            s2 /= static_cast<double>(data.size());
            if (!(s2 > 0.0)) throw data_error("lognormal MLE: all observations equal");
            fit.spec = LogNormal{mu, std::sqrt(s2)};
            fit.iterations = 0;
            fit.converged = true;
            fit.gradient_norm = 0.0;
            fit.log_likelihood = detail::log_likelihood_of(fit.spec, data);
            break;
        }
        case FitFamily::poisson: {
            detail::require_fit_data(data, false, "poisson");
            for (double v : data)
                if (v < 0.0) throw data_error("poisson fit: negative datum " + std::to_string(v));
            const double mean = detail::mean_of(data);
            if (!(mean > 0.0)) throw data_error("poisson MLE: sample mean must be > 0");
            fit.spec = Poisson{mean};
            fit.iterations = 0;
            fit.converged = true;
            fit.gradient_norm = 0.0;
            fit.log_likelihood = detail::log_likelihood_of(fit.spec, data);
            break;
        }
        case FitFamily::binomial: {
            if (binomial_size < 1)
                throw parameter_error("binomial fit requires the trial count (size >= 1)");
            detail::require_fit_data(data, false, "binomial");
            for (double v : data)
                if (v < 0.0 || v > static_cast<double>(binomial_size))
                    throw data_error("binomial fit: datum " + std::to_string(v) +
                                     " outside [0, size]");
            const double p = detail::mean_of(data) / static_cast<double>(binomial_size);
            if (!(p > 0.0 && p < 1.0))
                throw data_error("binomial MLE: estimated prob " + std::to_string(p) +
                                 " lies on the boundary");
            fit.spec = Binomial{binomial_size, p};
            fit.iterations = 0;
            fit.converged = true;
            fit.gradient_norm = 0.0;
            fit.log_likelihood = detail::log_likelihood_of(fit.spec, data);
            break;
        }
    }
    fit.plug_in_variance = moments(fit.spec).sigma2;
    return fit;
}

}  // namespace dispersia
