#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dispersia/distributions.hpp"
#include "dispersia/errors.hpp"
#include "dispersia/fitting.hpp"
#include "dispersia/rng.hpp"
#include "dispersia/special_functions.hpp"
#include "dispersia/vartest.hpp"

// Deterministic, parallelizable Monte Carlo experiments. Every replicate owns
// a value-typed stream derived from (master seed, cell, replicate), and
// aggregation runs in replicate order with compensated summation, so results
// are bit-identical for any worker count.

namespace dispersia {

enum class Sided { two_sided_equal_tail };

struct ExperimentConfig {
    std::string family;
    std::vector<double> parameter_grid;
    std::map<std::string, double> fixed_params;
    std::string varying_param;  // the family parameter the grid sweeps
    std::vector<long> sample_sizes;
    long replicates = 10000;
    std::uint64_t master_seed = 42;
    double level = 0.05;
    Sided sided = Sided::two_sided_equal_tail;
    std::string fit_family;  // custom rejection runs; empty means same as family
};

struct CellSummary {
    std::string family;
    std::map<std::string, double> params;
    long n = 0;
    double mean_d = 0.0;
    double var_d = 0.0;
    long rejection_count = 0;
    long replicates = 0;
    long failed_fits = 0;
    bool flagged = false;  // more than 0.1% of fits failed
};

struct ExperimentSummary {
    std::vector<CellSummary> cells;
    std::uint64_t master_seed = 0;
};

// Stream for replicate r of cell c. Cell and replicate are packed into the
// stream index (both must fit in 32 bits), which keeps the map injective.
inline RngStream derive_stream_seed(std::uint64_t master_seed, std::uint64_t cell_index,
                                    std::uint64_t replicate_index) {
    if (cell_index >> 32)
        throw parameter_error("derive_stream_seed: cell index must fit in 32 bits");
    if (replicate_index >> 32)
        throw parameter_error("derive_stream_seed: replicate index must fit in 32 bits");
    return RngStream{master_seed, (cell_index << 32) | replicate_index};
}

namespace detail {

// Neumaier compensated accumulator.
struct CompensatedSum {
    double sum = 0.0, comp = 0.0;
    void add(double x) {
        const double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

}  // namespace detail

// One D value per replicate; failed replicates (statistic threw a data or
// convergence error) come back as NaN. The statistic must be a pure function
// of the sample.
inline std::vector<double> run_replicates(
    const DistributionSpec& true_spec, long n, long replicates, std::uint64_t master_seed,
    std::uint64_t cell_index, const std::function<double(std::span<const double>)>& statistic,
    int threads = 1) {
    validate(true_spec);
    if (n < 2) throw parameter_error("run_replicates: sample size must be >= 2");
    if (replicates < 1) throw parameter_error("run_replicates: replicates must be >= 1");
    if (threads < 1) throw parameter_error("run_replicates: threads must be >= 1");

    std::vector<double> out(static_cast<std::size_t>(replicates));
    auto worker = [&](long first, long last) {
        std::vector<double> buffer(static_cast<std::size_t>(n));
        for (long r = first; r < last; ++r) {
            RandomEngine eng(
                derive_stream_seed(master_seed, cell_index, static_cast<std::uint64_t>(r)));
            sample_into(true_spec, buffer, eng);
            try {
                out[static_cast<std::size_t>(r)] = statistic(buffer);
            } catch (const data_error&) {
                out[static_cast<std::size_t>(r)] = std::numeric_limits<double>::quiet_NaN();
            } catch (const convergence_error&) {
                out[static_cast<std::size_t>(r)] = std::numeric_limits<double>::quiet_NaN();
            } catch (const parameter_error&) {
                // degenerate sample pushed an estimate onto a parameter boundary
                out[static_cast<std::size_t>(r)] = std::numeric_limits<double>::quiet_NaN();
            }
        }
    };

    if (threads == 1) {
        worker(0, replicates);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        const long chunk = (replicates + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const long first = static_cast<long>(t) * chunk;
            const long last = std::min(replicates, first + chunk);
            if (first >= last) break;
            pool.emplace_back(worker, first, last);
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

namespace detail {

// Mean and variance of the successful replicates, reduced in index order.
inline void summarize_cell(const std::vector<double>& d_values, double reject_lo,
                           double reject_hi, CellSummary& cell) {
    CompensatedSum sum;
    long ok = 0;
    for (double d : d_values) {
        if (std::isnan(d)) continue;
        sum.add(d);
        ++ok;
    }
    cell.replicates = static_cast<long>(d_values.size());
    cell.failed_fits = cell.replicates - ok;
    cell.flagged = cell.failed_fits * 1000 > cell.replicates;
    if (ok == 0) {
        cell.mean_d = std::numeric_limits<double>::quiet_NaN();
        cell.var_d = std::numeric_limits<double>::quiet_NaN();
        cell.rejection_count = 0;
        return;
    }
    cell.mean_d = sum.value() / static_cast<double>(ok);
    CompensatedSum ss;
    long rejections = 0;
    for (double d : d_values) {
        if (std::isnan(d)) continue;
        ss.add((d - cell.mean_d) * (d - cell.mean_d));
        if (d < reject_lo || d > reject_hi) ++rejections;
    }
    cell.var_d = ok > 1 ? ss.value() / static_cast<double>(ok - 1) : 0.0;
    cell.rejection_count = rejections;
}

inline FitFamily config_fit_family(const ExperimentConfig& config) {
    return fit_family_from_string(config.fit_family.empty() ? config.family
                                                            : config.fit_family);
}

inline long binomial_size_from(const std::map<std::string, double>& params) {
    const auto it = params.find("size");
    return it == params.end() ? 0 : static_cast<long>(std::llround(it->second));
}

// D for one sample: full MLE fit of fit_family, then divide the centered sum
// of squares by the fitted model's population variance.
inline double mle_plugin_statistic(std::span<const double> sample, FitFamily fit_family,
                                   long binomial_size) {
    const FitResult fit = fit_mle(fit_family, sample, binomial_size);
    return statistic_d(sample, fit.plug_in_variance);
}

}  // namespace detail

// Reject when D leaves [chi2_quantile(n-1, level/2), chi2_quantile(n-1, 1-level/2)],
// the two-sided equal-tail region at the claimed chi-square(n-1) null.
struct RejectionRegion {
    double lower = 0.0;
    double upper = 0.0;
};

inline RejectionRegion chi2_rejection_region(long n, double level) {
    if (n < 2) throw parameter_error("chi2_rejection_region: n must be >= 2");
    if (!(level > 0.0 && level < 1.0))
        throw parameter_error("chi2_rejection_region: level must lie in (0,1)");
    const double df = static_cast<double>(n - 1);
    return {chi2_quantile(df, 0.5 * level), chi2_quantile(df, 1.0 - 0.5 * level)};
}

// Sweep (sample size x grid value): sample the null family, refit it by full
// MLE, and aggregate D. Cells appear in sample-size-major order; the cell
// index in the stream derivation matches that order.
inline ExperimentSummary run_table1(const ExperimentConfig& config, int threads = 1) {
    if (config.parameter_grid.empty())
        throw parameter_error("run_table1: parameter grid must be non-empty");
    if (config.sample_sizes.empty())
        throw parameter_error("run_table1: sample sizes must be non-empty");
    const FitFamily fit_family = fit_family_from_string(config.family);

    ExperimentSummary summary;
    summary.master_seed = config.master_seed;
    std::uint64_t cell_index = 0;
    for (long n : config.sample_sizes) {
        const RejectionRegion region = chi2_rejection_region(n, config.level);
        for (double value : config.parameter_grid) {
            auto params = config.fixed_params;
            params[config.varying_param] = value;
            const DistributionSpec spec = make_spec(config.family, params);
            const long binomial_size = detail::binomial_size_from(params);
            const auto d_values = run_replicates(
                spec, n, config.replicates, config.master_seed, cell_index,
                [&](std::span<const double> sample) {
                    return detail::mle_plugin_statistic(sample, fit_family, binomial_size);
                },
                threads);
            CellSummary cell;
            cell.family = config.family;
            cell.params = params;
            cell.n = n;
            detail::summarize_cell(d_values, region.lower, region.upper, cell);
            summary.cells.push_back(std::move(cell));
            ++cell_index;
        }
    }
    return summary;
}

// Sample true_spec, fit fit_family, count rejections of the claimed
// chi-square(n-1) null. One cell per sample size.
inline ExperimentSummary run_rejection_experiment(const ExperimentConfig& config,
                                                  const DistributionSpec& true_spec,
                                                  FitFamily fit_family, int threads = 1,
                                                  std::uint64_t cell_index_base = 0) {
    if (config.sample_sizes.empty())
        throw parameter_error("run_rejection_experiment: sample sizes must be non-empty");
    validate(true_spec);

    ExperimentSummary summary;
    summary.master_seed = config.master_seed;
    std::uint64_t cell_index = cell_index_base;
    for (long n : config.sample_sizes) {
        const RejectionRegion region = chi2_rejection_region(n, config.level);
        // the fitted binomial size comes from the config, falling back to the
        // sampled spec when the true family is itself binomial
        long binomial_size = detail::binomial_size_from(config.fixed_params);
        if (binomial_size == 0)
            if (const auto* bin = std::get_if<Binomial>(&true_spec)) binomial_size = bin->size;
        const auto d_values = run_replicates(
            true_spec, n, config.replicates, config.master_seed, cell_index,
            [&](std::span<const double> sample) {
                return detail::mle_plugin_statistic(sample, fit_family, binomial_size);
            },
            threads);
        CellSummary cell;
        cell.family = family_name(true_spec);
        cell.params = spec_params(true_spec);
        cell.n = n;
        detail::summarize_cell(d_values, region.lower, region.upper, cell);
        summary.cells.push_back(std::move(cell));
        ++cell_index;
    }
    return summary;
}

// The two canned rejection studies: a level-0.05 test of the claimed
// chi-square(n-1) null applied to (a) genuine Gamma(shape 0.5, scale 2)
// samples of size 100, where the test over-rejects massively, and (b)
// samples of size 30 from a well-separated three-component gamma mixture,
// where a gamma fit is wrongly accepted.
struct RejectionScenario {
    DistributionSpec true_spec;
    FitFamily fit_family = FitFamily::gamma;
    ExperimentConfig config;
};

inline DistributionSpec build_gamma_mixture(std::span<const double> modes,
                                            double component_variance,
                                            std::span<const double> weights);

inline RejectionScenario mooley_false_reject_scenario() {
    RejectionScenario s;
    s.true_spec = Gamma{0.5, 2.0};
    s.fit_family = FitFamily::gamma;
    s.config.family = "gamma";
    s.config.sample_sizes = {100};
    s.config.replicates = 100000;
    s.config.level = 0.05;
    return s;
}

inline RejectionScenario mooley_false_accept_scenario() {
    RejectionScenario s;
    const double modes[] = {1.0, 5.0, 9.0};
    const double weights[] = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    s.true_spec = build_gamma_mixture(modes, 1.0, weights);
    s.fit_family = FitFamily::gamma;
    s.config.family = "gamma_mixture";
    s.config.sample_sizes = {30};
    s.config.replicates = 100000;
    s.config.level = 0.05;
    return s;
}

// Gamma mixture from component modes and a common component variance v:
// for mode m, the shape is the root > 1 of  v a^2 - (2v + m^2) a + v = 0
// (equivalently a^2 - (2 + m^2) a + 1 = 0 when v = 1), and scale = m/(a-1),
// which enforces (a-1)*scale = m and a*scale^2 = v.
inline DistributionSpec build_gamma_mixture(std::span<const double> modes,
                                            double component_variance,
                                            std::span<const double> weights) {
    if (modes.size() != weights.size() || modes.empty())
        throw parameter_error("build_gamma_mixture: need matching, non-empty modes and weights");
    if (!(component_variance > 0.0))
        throw parameter_error("build_gamma_mixture: component variance must be > 0");
    GammaMixture mix;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const double m = modes[i];
        if (!(m > 0.0)) throw parameter_error("build_gamma_mixture: modes must be > 0");
        const double v = component_variance;
        const double disc = m * m * (m * m + 4.0 * v);
        const double shape = ((2.0 * v + m * m) + std::sqrt(disc)) / (2.0 * v);
        if (!(shape > 1.0))
            throw parameter_error("build_gamma_mixture: no admissible shape > 1 for mode " +
                                  std::to_string(m));
        mix.components.push_back({weights[i], shape, m / (shape - 1.0)});
    }
    DistributionSpec spec{mix};
    validate(spec);
    return spec;
}

}  // namespace dispersia
