#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>

#include "dispersia/distributions.hpp"
#include "dispersia/errors.hpp"
#include "dispersia/special_functions.hpp"

// The variance-ratio (index-of-dispersion) statistic, its classical normal
// approximation p-value, the exact exponential-null moments of the statistic
// under an MLE plug-in variance, and the asymptotic validity criterion for
// families whose variance is a function of the mean.

namespace dispersia {

enum class DfConvention { n_minus_1, n };

struct VarTestOutcome {
    double statistic_d = 0.0;
    std::size_t n = 0;
    DfConvention df_convention = DfConvention::n;
    double p_value_mooley = 1.0;
};

// D = sum (x_i - mean)^2 / variance_estimate.
inline double statistic_d(std::span<const double> data, double variance_estimate) {
    if (data.size() < 2)
        throw data_error("statistic_d requires at least 2 observations, got " +
                         std::to_string(data.size()));
    if (!(variance_estimate > 0.0))
        throw parameter_error("statistic_d: variance estimate must be > 0, got " +
                              std::to_string(variance_estimate));
    double mean = 0.0;
    for (double v : data) mean += v;
    mean /= static_cast<double>(data.size());
    double ss = 0.0;
    for (double v : data) ss += (v - mean) * (v - mean);
    return ss / variance_estimate;
}

// Two-sided p-value from the classical sqrt(2D) - sqrt(2*nu - 1) ~ N(0,1)
// approximation (Fisher-Yates), used by Mooley-style analyses. nu is n or
// n-1 depending on the degrees-of-freedom convention.
inline double mooley_pvalue(double d, std::size_t n, DfConvention convention) {
    if (!(d >= 0.0)) throw parameter_error("mooley_pvalue: D must be >= 0");
    if (n < 2) throw parameter_error("mooley_pvalue: n must be >= 2");
    const double nu =
        convention == DfConvention::n ? static_cast<double>(n) : static_cast<double>(n - 1);
    const double z = std::sqrt(2.0 * d) - std::sqrt(2.0 * nu - 1.0);
    return 2.0 * (1.0 - norm_cdf(std::fabs(z)));
}

inline VarTestOutcome var_ratio_test(std::span<const double> data, double variance_estimate,
                                     DfConvention convention = DfConvention::n) {
    VarTestOutcome out;
    out.statistic_d = statistic_d(data, variance_estimate);
    out.n = data.size();
    out.df_convention = convention;
    out.p_value_mooley = mooley_pvalue(out.statistic_d, out.n, convention);
    return out;
}

// Exact mean and variance of D under the exponential null with the MLE
// plug-in variance mean^2:
//   E(D)   = (n-1) n / (n+1)
//   Var(D) = 4 (n-1) / ((1 + 1/n)^2 (1 + 2/n) (1 + 3/n))
// These approach n-1 and 4(n-1); a chi-square(n-1) law would need 2(n-1).
inline double exp_null_mean_d(std::size_t n) {
    if (n < 2) throw parameter_error("exp_null_mean_d: n must be >= 2");
    const double nn = static_cast<double>(n);
    return (nn - 1.0) * nn / (nn + 1.0);
}

inline double exp_null_var_d(std::size_t n) {
    if (n < 2) throw parameter_error("exp_null_var_d: n must be >= 2");
    const double nn = static_cast<double>(n);
    return 4.0 * (nn - 1.0) /
           ((1.0 + 1.0 / nn) * (1.0 + 1.0 / nn) * (1.0 + 2.0 / nn) * (1.0 + 3.0 / nn));
}

// Conditional moments of S^2 = sum (X_i - mean)^2 given the sample total
// T = t, for an exponential sample:
//   E(S^2 | T=t) = (n-1) t^2 / (n (n+1))
//   E(S^4 | T=t) = (n-1)(n^2 + 7n - 6) t^4 / (n^2 (n+1)(n+2)(n+3))
struct ExpSMoments {
    double e_s2 = 0.0;
    double e_s4 = 0.0;
};

inline ExpSMoments exp_conditional_s_moments(std::size_t n, double t) {
    if (n < 2) throw parameter_error("exp_conditional_s_moments: n must be >= 2");
    if (!(t > 0.0)) throw parameter_error("exp_conditional_s_moments: t must be > 0");
    const double nn = static_cast<double>(n);
    const double t2 = t * t;
    ExpSMoments out;
    out.e_s2 = (nn - 1.0) / (nn * (nn + 1.0)) * t2;
    out.e_s4 = (nn - 1.0) * (nn * nn + 7.0 * nn - 6.0) /
               (nn * nn * (nn + 1.0) * (nn + 2.0) * (nn + 3.0)) * t2 * t2;
    return out;
}

// Unconditional counterparts, E(S^2) = (n-1) lambda^2 and
// E(S^4) = (n-1)(n^2 + 7n - 6) lambda^4 / n.
inline ExpSMoments exp_unconditional_s_moments(std::size_t n, double lambda) {
    if (n < 2) throw parameter_error("exp_unconditional_s_moments: n must be >= 2");
    if (!(lambda > 0.0)) throw parameter_error("exp_unconditional_s_moments: lambda must be > 0");
    const double nn = static_cast<double>(n);
    const double l2 = lambda * lambda;
    ExpSMoments out;
    out.e_s2 = (nn - 1.0) * l2;
    out.e_s4 = (nn - 1.0) * (nn * nn + 7.0 * nn - 6.0) / nn * l2 * l2;
    return out;
}

// The population variance modeled as a differentiable function of the
// population mean. If no analytic derivative is supplied, a central finite
// difference with relative step 1e-6 is used.
struct VarianceFunction {
    std::function<double(double)> value;
    std::function<double(double)> derivative;  // optional

    double operator()(double x) const { return value(x); }

    double deriv(double x) const {
        if (derivative) return derivative(x);
        const double h = 1e-6 * std::max(std::fabs(x), 1.0);
        return (value(x + h) - value(x - h)) / (2.0 * h);
    }
};

// Which factor multiplies the cross term of the asymptotic variance. The
// variance-weighted form
//   alpha = [ sigma^6 f'(mu)^2 - 2 f(mu) sigma^2 mu3 f'(mu)
//             + f(mu)^2 (mu4 - sigma^4) ] / f(mu)^4
// is dimensionless and reproduces the known family values (Poisson 2,
// exponential 4, gamma with known shape 2 + 2/shape). The mean-weighted
// variant replaces that f(mu) factor with mu; it is not scale-invariant and
// is kept only for side-by-side comparison.
enum class AlphaCrossTerm { variance_weighted, mean_weighted };

// Asymptotic Var(D)/n when the statistic divides by f(sample mean). The
// chi-square(n-1) approximation needs this to be (approximately) 2.
inline double alpha_condition(const MomentSet& m, const VarianceFunction& f,
                              AlphaCrossTerm cross = AlphaCrossTerm::variance_weighted) {
    const double fv = f(m.mu);
    if (!(fv > 0.0))
        throw model_error("alpha_condition: f(mu) must be > 0, got " + std::to_string(fv));
    if (std::fabs(fv - m.sigma2) > 1e-8 * m.sigma2)
        throw model_error("alpha_condition: f(mu) = " + std::to_string(fv) +
                          " disagrees with sigma2 = " + std::to_string(m.sigma2) +
                          "; the variance function does not describe this model");
    const double fd = f.deriv(m.mu);
    const double s2 = m.sigma2;
    const double cross_factor = cross == AlphaCrossTerm::variance_weighted ? fv : m.mu;
    const double numerator = s2 * s2 * s2 * fd * fd - 2.0 * cross_factor * s2 * m.mu3 * fd +
                             fv * fv * (m.mu4 - s2 * s2);
    return numerator / (fv * fv * fv * fv);
}

struct ValidityVerdict {
    double alpha = 0.0;
    double tolerance = 0.1;
    bool valid = false;
};

inline ValidityVerdict validity_verdict(double alpha, double tolerance = 0.1) {
    if (!(tolerance > 0.0))
        throw parameter_error("validity_verdict: tolerance must be > 0");
    return ValidityVerdict{alpha, tolerance, std::fabs(alpha - 2.0) <= tolerance};
}

// Variance-as-function-of-mean for a family with its shape-type parameters
// held fixed at the spec's values. For the scale families this is c * x^2
// with c the squared coefficient of variation; for Poisson it is x, for
// Binomial x (size - x) / size.
inline VarianceFunction variance_function_for(const DistributionSpec& spec) {
    validate(spec);
    struct Visitor {
        VarianceFunction operator()(const Exponential&) const {
            return {[](double x) { return x * x; }, [](double x) { return 2.0 * x; }};
        }
        VarianceFunction operator()(const Gamma& d) const {
            const double k = d.shape;
            return {[k](double x) { return x * x / k; }, [k](double x) { return 2.0 * x / k; }};
        }
        VarianceFunction operator()(const Weibull& d) const {
            const double g1 = std::exp(std::lgamma(1.0 + 1.0 / d.shape));
            const double g2 = std::exp(std::lgamma(1.0 + 2.0 / d.shape));
            const double c = g2 / (g1 * g1) - 1.0;
            return {[c](double x) { return c * x * x; }, [c](double x) { return 2.0 * c * x; }};
        }
        VarianceFunction operator()(const LogNormal& d) const {
            const double c = std::expm1(d.log_sd * d.log_sd);
            return {[c](double x) { return c * x * x; }, [c](double x) { return 2.0 * c * x; }};
        }
        VarianceFunction operator()(const Poisson&) const {
            return {[](double x) { return x; }, [](double) { return 1.0; }};
        }
        VarianceFunction operator()(const Binomial& d) const {
            const double size = static_cast<double>(d.size);
            return {[size](double x) { return x * (size - x) / size; },
                    [size](double x) { return (size - 2.0 * x) / size; }};
        }
        VarianceFunction operator()(const GammaMixture&) const {
            throw model_error(
                "gamma mixtures have no single variance-vs-mean function; evaluate "
                "alpha_condition with an explicit VarianceFunction instead");
        }
    };
    return std::visit(Visitor{}, spec);
}

}  // namespace dispersia
