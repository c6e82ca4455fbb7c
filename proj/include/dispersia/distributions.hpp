#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dispersia/errors.hpp"
#include "dispersia/rng.hpp"
#include "dispersia/special_functions.hpp"

// Distribution families used for sampling, fitting and exact moment work.
// All parameters are plain dimensionless reals; validation happens at the
// operation boundary, so specs are cheap aggregates.

namespace dispersia {

struct Exponential {
    double mean;
};
struct Gamma {
    double shape, scale;
};
struct Weibull {
    double shape, scale;
};
struct LogNormal {
    double log_mean, log_sd;
};
struct Poisson {
    double mean;
};
struct Binomial {
    long size;
    double prob;
};
struct GammaMixture {
    struct Component {
        double weight, shape, scale;
    };
    std::vector<Component> components;
};

using DistributionSpec =
    std::variant<Exponential, Gamma, Weibull, LogNormal, Poisson, Binomial, GammaMixture>;

// Population mean, variance and third/fourth central moments.
struct MomentSet {
    double mu;
    double sigma2;
    double mu3;
    double mu4;
};

namespace detail {

inline void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw parameter_error(std::string(name) + " must be finite and > 0, got " + std::to_string(v));
}

// Central moments from the first four raw moments.
inline MomentSet central_from_raw(double m1, double m2, double m3, double m4) {
    MomentSet m;
    m.mu = m1;
    m.sigma2 = m2 - m1 * m1;
    m.mu3 = m3 - 3.0 * m1 * m2 + 2.0 * m1 * m1 * m1;
    m.mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1 * m1 * m1 * m1;
    return m;
}

}  // namespace detail

inline void validate(const Exponential& d) { detail::require_positive(d.mean, "Exponential.mean"); }
inline void validate(const Gamma& d) {
    detail::require_positive(d.shape, "Gamma.shape");
    detail::require_positive(d.scale, "Gamma.scale");
}
inline void validate(const Weibull& d) {
    detail::require_positive(d.shape, "Weibull.shape");
    detail::require_positive(d.scale, "Weibull.scale");
}
inline void validate(const LogNormal& d) {
    if (!std::isfinite(d.log_mean))
        throw parameter_error("LogNormal.log_mean must be finite");
    detail::require_positive(d.log_sd, "LogNormal.log_sd");
}
inline void validate(const Poisson& d) { detail::require_positive(d.mean, "Poisson.mean"); }
inline void validate(const Binomial& d) {
    if (d.size < 1) throw parameter_error("Binomial.size must be >= 1, got " + std::to_string(d.size));
    if (!(d.prob > 0.0 && d.prob < 1.0))
        throw parameter_error("Binomial.prob must lie in (0,1), got " + std::to_string(d.prob));
}
inline void validate(const GammaMixture& d) {
    if (d.components.empty()) throw parameter_error("GammaMixture needs at least one component");
    double total = 0.0;
    for (const auto& c : d.components) {
        detail::require_positive(c.weight, "GammaMixture.weight");
        detail::require_positive(c.shape, "GammaMixture.shape");
        detail::require_positive(c.scale, "GammaMixture.scale");
        total += c.weight;
    }
    if (std::fabs(total - 1.0) > 1e-12)
        throw parameter_error("GammaMixture weights must sum to 1, got " + std::to_string(total));
}

inline void validate(const DistributionSpec& spec) {
    std::visit([](const auto& d) { validate(d); }, spec);
}

inline bool is_discrete(const DistributionSpec& spec) {
    return std::holds_alternative<Poisson>(spec) || std::holds_alternative<Binomial>(spec);
}

inline std::string family_name(const DistributionSpec& spec) {
    struct Namer {
        std::string operator()(const Exponential&) const { return "exponential"; }
        std::string operator()(const Gamma&) const { return "gamma"; }
        std::string operator()(const Weibull&) const { return "weibull"; }
        std::string operator()(const LogNormal&) const { return "lognormal"; }
        std::string operator()(const Poisson&) const { return "poisson"; }
        std::string operator()(const Binomial&) const { return "binomial"; }
        std::string operator()(const GammaMixture&) const { return "gamma_mixture"; }
    };
    return std::visit(Namer{}, spec);
}

// ---------------------------------------------------------------------------
// Exact population moments.

inline MomentSet moments(const Exponential& d) {
    validate(d);
    const double l = d.mean;
    return {l, l * l, 2.0 * l * l * l, 9.0 * l * l * l * l};
}

inline MomentSet moments(const Gamma& d) {
    validate(d);
    const double a = d.shape, b = d.scale;
    return {a * b, a * b * b, 2.0 * a * b * b * b, 3.0 * a * (a + 2.0) * b * b * b * b};
}

inline MomentSet moments(const Weibull& d) {
    validate(d);
    auto raw = [&](int r) {
        return std::pow(d.scale, r) * std::exp(std::lgamma(1.0 + r / d.shape));
    };
    return detail::central_from_raw(raw(1), raw(2), raw(3), raw(4));
}

inline MomentSet moments(const LogNormal& d) {
    validate(d);
    const double v = d.log_sd * d.log_sd;
    auto raw = [&](int r) { return std::exp(r * d.log_mean + 0.5 * r * r * v); };
    return detail::central_from_raw(raw(1), raw(2), raw(3), raw(4));
}

inline MomentSet moments(const Poisson& d) {
    validate(d);
    const double l = d.mean;
    return {l, l, l, 3.0 * l * l + l};
}

inline MomentSet moments(const Binomial& d) {
    validate(d);
    const double n = static_cast<double>(d.size), p = d.prob, q = 1.0 - p;
    const double v = n * p * q;
    return {n * p, v, v * (q - p), v * (1.0 - 6.0 * p * q) + 3.0 * v * v};
}

inline MomentSet moments(const GammaMixture& d) {
    validate(d);
    double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (const auto& c : d.components) {
        const double a = c.shape, b = c.scale;
        m1 += c.weight * a * b;
        m2 += c.weight * a * (a + 1.0) * b * b;
        m3 += c.weight * a * (a + 1.0) * (a + 2.0) * b * b * b;
        m4 += c.weight * a * (a + 1.0) * (a + 2.0) * (a + 3.0) * b * b * b * b;
    }
    return detail::central_from_raw(m1, m2, m3, m4);
}

inline MomentSet moments(const DistributionSpec& spec) {
    return std::visit([](const auto& d) { return moments(d); }, spec);
}

// ---------------------------------------------------------------------------
// Densities. Discrete families return the pmf at (numerically) integer points
// and 0 elsewhere.

namespace detail {

inline bool near_integer(double x, long& k) {
    const double r = std::round(x);
    if (std::fabs(x - r) > 1e-8 || r < 0.0) return false;
    k = static_cast<long>(r);
    return true;
}

inline double gamma_log_pdf(double shape, double scale, double x) {
    return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) -
           shape * std::log(scale);
}

}  // namespace detail

inline double pdf(const DistributionSpec& spec, double x) {
    validate(spec);
    struct Visitor {
        double x;
        double operator()(const Exponential& d) const {
            return x < 0.0 ? 0.0 : std::exp(-x / d.mean) / d.mean;
        }
        double operator()(const Gamma& d) const {
            if (x < 0.0) return 0.0;
            if (x == 0.0) return d.shape < 1.0 ? std::numeric_limits<double>::infinity()
                                               : (d.shape == 1.0 ? 1.0 / d.scale : 0.0);
            return std::exp(detail::gamma_log_pdf(d.shape, d.scale, x));
        }
        double operator()(const Weibull& d) const {
            if (x < 0.0) return 0.0;
            if (x == 0.0) return d.shape < 1.0 ? std::numeric_limits<double>::infinity()
                                               : (d.shape == 1.0 ? 1.0 / d.scale : 0.0);
            const double t = x / d.scale;
            return d.shape / d.scale * std::pow(t, d.shape - 1.0) *
                   std::exp(-std::pow(t, d.shape));
        }
        double operator()(const LogNormal& d) const {
            if (x <= 0.0) return 0.0;
            const double z = (std::log(x) - d.log_mean) / d.log_sd;
            return std::exp(-0.5 * z * z) / (x * d.log_sd * std::sqrt(2.0 * pi_const));
        }
        double operator()(const Poisson& d) const {
            long k;
            if (!detail::near_integer(x, k)) return 0.0;
            return std::exp(k * std::log(d.mean) - d.mean - std::lgamma(k + 1.0));
        }
        double operator()(const Binomial& d) const {
            long k;
            if (!detail::near_integer(x, k) || k > d.size) return 0.0;
            const double n = static_cast<double>(d.size);
            return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                            std::lgamma(n - k + 1.0) + k * std::log(d.prob) +
                            (n - k) * std::log1p(-d.prob));
        }
        double operator()(const GammaMixture& d) const {
            double total = 0.0;
            for (const auto& c : d.components) total += c.weight * pdf(Gamma{c.shape, c.scale}, x);
            return total;
        }
    };
    return std::visit(Visitor{x}, spec);
}

inline double pdf(const Gamma& d, double x) { return pdf(DistributionSpec{d}, x); }

// ---------------------------------------------------------------------------
// CDFs.

inline double cdf(const DistributionSpec& spec, double x) {
    validate(spec);
    struct Visitor {
        double x;
        double operator()(const Exponential& d) const {
            return x <= 0.0 ? 0.0 : -std::expm1(-x / d.mean);
        }
        double operator()(const Gamma& d) const {
            return x <= 0.0 ? 0.0 : reg_gamma_p(d.shape, x / d.scale);
        }
        double operator()(const Weibull& d) const {
            return x <= 0.0 ? 0.0 : -std::expm1(-std::pow(x / d.scale, d.shape));
        }
        double operator()(const LogNormal& d) const {
            return x <= 0.0 ? 0.0 : norm_cdf((std::log(x) - d.log_mean) / d.log_sd);
        }
        double operator()(const Poisson& d) const {
            if (x < 0.0) return 0.0;
            const double k = std::floor(x + 1e-9);
            return reg_gamma_q(k + 1.0, d.mean);
        }
        double operator()(const Binomial& d) const {
            if (x < 0.0) return 0.0;
            const long k = static_cast<long>(std::floor(x + 1e-9));
            if (k >= d.size) return 1.0;
            double total = 0.0;
            for (long j = 0; j <= k; ++j) total += pdf(DistributionSpec{d}, static_cast<double>(j));
            return std::min(total, 1.0);
        }
        double operator()(const GammaMixture& d) const {
            double total = 0.0;
            for (const auto& c : d.components) total += c.weight * cdf(DistributionSpec{Gamma{c.shape, c.scale}}, x);
            return total;
        }
    };
    return std::visit(Visitor{x}, spec);
}

// ---------------------------------------------------------------------------
// Quantiles. Continuous families invert the CDF exactly or by bracketed
// root-finding; discrete families return the smallest k with cdf(k) >= p.

namespace detail {

inline double mixture_quantile(const GammaMixture& d, double p) {
    double hi = 1.0;
    const DistributionSpec spec{d};
    while (cdf(spec, hi) < p) {
        hi *= 2.0;
        if (hi > 1e300) throw convergence_error("mixture quantile: bracket overflow", {p}, 0);
    }
    double lo = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(spec, mid) < p) lo = mid; else hi = mid;
        if (hi - lo <= 1e-13 * (hi + 1e-300)) break;
    }
    return 0.5 * (lo + hi);
}

template <typename Cdf>
inline double discrete_quantile(double p, Cdf&& cdf_at, long hard_cap) {
    // Smallest k with F(k) >= p (left-continuous generalized inverse),
    // located by doubling then binary search on the integers.
    long hi = 1;
    while (cdf_at(hi) < p && hi < hard_cap) hi *= 2;
    hi = std::min(hi, hard_cap);
    long lo = -1;
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        if (cdf_at(mid) < p) lo = mid; else hi = mid;
    }
    return static_cast<double>(hi);
}

}  // namespace detail

inline double quantile(const DistributionSpec& spec, double p) {
    validate(spec);
    if (!(p > 0.0 && p < 1.0))
        throw parameter_error("quantile: p must lie in (0,1), got " + std::to_string(p));
    struct Visitor {
        double p;
        double operator()(const Exponential& d) const { return -d.mean * std::log1p(-p); }
        double operator()(const Gamma& d) const {
            return d.scale * detail::gamma_unit_quantile(d.shape, p);
        }
        double operator()(const Weibull& d) const {
            return d.scale * std::pow(-std::log1p(-p), 1.0 / d.shape);
        }
        double operator()(const LogNormal& d) const {
            return std::exp(d.log_mean + d.log_sd * norm_quantile(p));
        }
        double operator()(const Poisson& d) const {
            const DistributionSpec spec{d};
            return detail::discrete_quantile(
                p, [&](long k) { return cdf(spec, static_cast<double>(k)); },
                1L << 50);
        }
        double operator()(const Binomial& d) const {
            const DistributionSpec spec{d};
            return detail::discrete_quantile(
                p, [&](long k) { return cdf(spec, static_cast<double>(k)); }, d.size);
        }
        double operator()(const GammaMixture& d) const { return detail::mixture_quantile(d, p); }
    };
    return std::visit(Visitor{p}, spec);
}

// ---------------------------------------------------------------------------
// Sampling. Deterministic: the output is a pure function of (spec, n, stream).

inline double sample_one(const DistributionSpec& spec, RandomEngine& eng) {
    struct Visitor {
        RandomEngine& eng;
        double operator()(const Exponential& d) const { return eng.next_exponential(d.mean); }
        double operator()(const Gamma& d) const { return d.scale * eng.next_gamma(d.shape); }
        double operator()(const Weibull& d) const {
            return d.scale * std::pow(-std::log(eng.next_open_double()), 1.0 / d.shape);
        }
        double operator()(const LogNormal& d) const {
            return std::exp(d.log_mean + d.log_sd * eng.next_normal());
        }
        double operator()(const Poisson& d) const {
            return static_cast<double>(eng.next_poisson(d.mean));
        }
        double operator()(const Binomial& d) const {
            return static_cast<double>(eng.next_binomial(d.size, d.prob));
        }
        double operator()(const GammaMixture& d) const {
            const double u = eng.next_double();
            double cum = 0.0;
            for (const auto& c : d.components) {
                cum += c.weight;
                if (u < cum) return c.scale * eng.next_gamma(c.shape);
            }
            const auto& last = d.components.back();
            return last.scale * eng.next_gamma(last.shape);
        }
    };
    return std::visit(Visitor{eng}, spec);
}

inline void sample_into(const DistributionSpec& spec, std::span<double> out, RandomEngine& eng) {
    for (double& v : out) v = sample_one(spec, eng);
}

inline std::vector<double> sample(const DistributionSpec& spec, std::size_t n, RngStream stream) {
    validate(spec);
    if (n < 1) throw parameter_error("sample: n must be >= 1");
    RandomEngine eng(stream);
    std::vector<double> out(n);
    sample_into(spec, out, eng);
    return out;
}

// ---------------------------------------------------------------------------
// Construction from (family name, parameter map), shared by the config parser
// and the CLI.

inline const std::vector<std::string>& param_names(const std::string& family) {
    static const std::map<std::string, std::vector<std::string>> names = {
        {"exponential", {"mean"}},
        {"gamma", {"shape", "scale"}},
        {"weibull", {"shape", "scale"}},
        {"lognormal", {"log_mean", "log_sd"}},
        {"poisson", {"mean"}},
        {"binomial", {"size", "prob"}},
    };
    const auto it = names.find(family);
    if (it == names.end()) throw parameter_error("unknown family '" + family + "'");
    return it->second;
}

inline DistributionSpec make_spec(const std::string& family,
                                  const std::map<std::string, double>& params) {
    const auto& expected = param_names(family);
    for (const auto& [key, value] : params) {
        (void)value;
        if (std::find(expected.begin(), expected.end(), key) == expected.end())
            throw parameter_error("family '" + family + "' has no parameter '" + key + "'");
    }
    auto get = [&](const std::string& key) {
        const auto it = params.find(key);
        if (it == params.end())
            throw parameter_error("family '" + family + "' requires parameter '" + key + "'");
        return it->second;
    };
    DistributionSpec spec;
    if (family == "exponential") spec = Exponential{get("mean")};
    else if (family == "gamma") spec = Gamma{get("shape"), get("scale")};
    else if (family == "weibull") spec = Weibull{get("shape"), get("scale")};
    else if (family == "lognormal") spec = LogNormal{get("log_mean"), get("log_sd")};
    else if (family == "poisson") spec = Poisson{get("mean")};
    else if (family == "binomial") {
        const double size = get("size");
        if (std::fabs(size - std::round(size)) > 1e-9)
            throw parameter_error("binomial size must be an integer, got " + std::to_string(size));
        spec = Binomial{static_cast<long>(std::round(size)), get("prob")};
    } else
        throw parameter_error("unknown family '" + family + "'");
    validate(spec);
    return spec;
}

inline std::map<std::string, double> spec_params(const DistributionSpec& spec) {
    struct Visitor {
        std::map<std::string, double> operator()(const Exponential& d) const {
            return {{"mean", d.mean}};
        }
        std::map<std::string, double> operator()(const Gamma& d) const {
            return {{"shape", d.shape}, {"scale", d.scale}};
        }
        std::map<std::string, double> operator()(const Weibull& d) const {
            return {{"shape", d.shape}, {"scale", d.scale}};
        }
        std::map<std::string, double> operator()(const LogNormal& d) const {
            return {{"log_mean", d.log_mean}, {"log_sd", d.log_sd}};
        }
        std::map<std::string, double> operator()(const Poisson& d) const {
            return {{"mean", d.mean}};
        }
        std::map<std::string, double> operator()(const Binomial& d) const {
            return {{"size", static_cast<double>(d.size)}, {"prob", d.prob}};
        }
        std::map<std::string, double> operator()(const GammaMixture& d) const {
            std::map<std::string, double> out;
            for (std::size_t i = 0; i < d.components.size(); ++i) {
                const std::string tag = "c" + std::to_string(i + 1) + "_";
                out[tag + "weight"] = d.components[i].weight;
                out[tag + "shape"] = d.components[i].shape;
                out[tag + "scale"] = d.components[i].scale;
            }
            return out;
        }
    };
    return std::visit(Visitor{}, spec);
}

}  // namespace dispersia
