// Command-line surface for the dispersia library: MLE fits, the
// variance-ratio test with its validity verdict, the asymptotic validity
// calculator, Monte Carlo experiments, and chi-square / Kolmogorov-Smirnov
// goodness-of-fit tests.
//
// Exit codes: 0 success, 2 fit failure, 64 usage error, 65 data error,
// 66 config error.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dispersia/dispersia.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_fit_failure = 2;
constexpr int exit_usage = 64;
constexpr int exit_data = 65;
constexpr int exit_config = 66;

struct SeedChoice {
    std::optional<std::uint64_t> cli_seed;

    // Precedence: --seed flag, then DISPERSIA_SEED, then the config value.
    std::uint64_t resolve(std::uint64_t config_seed) const {
        if (cli_seed) return *cli_seed;
        if (const char* env = std::getenv("DISPERSIA_SEED")) {
            try {
                return std::stoull(env);
            } catch (const std::exception&) {
                throw dispersia::config_error(
                    "DISPERSIA_SEED must be a non-negative integer, got '" + std::string(env) +
                    "'");
            }
        }
        return config_seed;
    }
};

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

void print_fit(const dispersia::FitResult& fit) {
    std::cout << "family:           " << dispersia::family_name(fit.spec) << "\n";
    for (const auto& [name, value] : dispersia::spec_params(fit.spec))
        std::cout << "  " << name << std::string(name.size() < 16 ? 16 - name.size() : 1, ' ')
                  << fmt(value, "%.10g") << "\n";
    std::cout << "log-likelihood:   " << fmt(fit.log_likelihood, "%.10g") << "\n"
              << "plug-in variance: " << fmt(fit.plug_in_variance, "%.10g") << "\n"
              << "iterations:       " << fit.iterations << "\n"
              << "converged:        " << (fit.converged ? "yes" : "no") << "\n"
              << "score residual:   " << fmt(fit.gradient_norm, "%.3g") << "\n";
}

dispersia::SeriesDataset load_series(const std::string& input, const std::string& column) {
    auto series = dispersia::load_csv_series(input, column);
    std::cout << "series:           " << series.label << " (n = " << series.values.size()
              << ") from " << series.source_path << "\n";
    return series;
}

dispersia::ReportTable summary_table(const dispersia::ExperimentSummary& summary) {
    dispersia::ReportTable table;
    table.columns = {"family", "params", "n",          "mean_D",    "var_D",
                     "rejections", "replicates", "n_failed", "flagged"};
    for (const auto& cell : summary.cells) {
        std::string params;
        for (const auto& [name, value] : cell.params)
            params += (params.empty() ? "" : " ") + name + "=" + fmt(value, "%.6g");
        table.add_row({cell.family, params, static_cast<std::int64_t>(cell.n), cell.mean_d,
                       cell.var_d, static_cast<std::int64_t>(cell.rejection_count),
                       static_cast<std::int64_t>(cell.replicates),
                       static_cast<std::int64_t>(cell.failed_fits),
                       std::string(cell.flagged ? "yes" : "no")});
    }
    return table;
}

void emit_summary(const dispersia::ExperimentSummary& summary, const std::string& out_path) {
    auto table = summary_table(summary);
    dispersia::emit_report(table, dispersia::ReportFormat::text, std::cout);
    if (!out_path.empty()) {
        dispersia::emit_report(table, dispersia::ReportFormat::csv, out_path);
        std::cout << "csv written to " << out_path << "\n";
    }
}

void print_verdict(const dispersia::ValidityVerdict& verdict, const std::string& family_label) {
    std::cout << "alpha (asymptotic Var(D)/n): " << fmt(verdict.alpha) << "\n"
              << "tolerance |alpha - 2| <= " << fmt(verdict.tolerance) << "\n";
    if (verdict.valid) {
        std::cout << "verdict: VALID - the chi-square(n-1) reference distribution is justified "
                     "for "
                  << family_label << "\n";
    } else {
        std::cout << "verdict: INVALID - the chi-square(n-1) approximation is unjustified for "
                  << family_label << "\n"
                  << "WARNING: p-values that refer D to chi-square(n-1) (and the "
                     "sqrt(2D)-sqrt(2nu-1) normal approximation) are unreliable here; prefer "
                     "the chi-square goodness-of-fit test, or the Kolmogorov-Smirnov test when "
                     "the null parameters are fully specified.\n";
    }
}

long resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<long>(hw);
}

// ---------------------------------------------------------------------------

int cmd_fit(const std::string& family, const std::string& input, const std::string& column,
            long binomial_size) {
    const auto series = load_series(input, column);
    try {
        const auto fit =
            dispersia::fit_mle(dispersia::fit_family_from_string(family), series.values,
                               binomial_size);
        print_fit(fit);
        return exit_ok;
    } catch (const dispersia::convergence_error& e) {
        std::cerr << "fit failed: " << e.what() << "\n";
        std::cerr << "last iterate:";
        for (double v : e.last_iterate) std::cerr << " " << fmt(v);
        std::cerr << " after " << e.iterations << " iterations\n";
        return exit_fit_failure;
    }
}

int cmd_vartest(const std::string& family, const std::string& input, const std::string& column,
                const std::string& df_convention, double tolerance, long binomial_size) {
    const auto series = load_series(input, column);
    dispersia::FitResult fit;
    try {
        fit = dispersia::fit_mle(dispersia::fit_family_from_string(family), series.values,
                                 binomial_size);
    } catch (const dispersia::convergence_error& e) {
        std::cerr << "fit failed: " << e.what() << "\n";
        return exit_fit_failure;
    }
    print_fit(fit);

    const double d = dispersia::statistic_d(series.values, fit.plug_in_variance);
    const std::size_t n = series.values.size();
    std::cout << "D = " << fmt(d, "%.6f") << "  (n = " << n << ")\n";
    std::cout << "p-value, nu = n   (2nu-1 = " << 2 * n - 1
              << "): " << fmt(dispersia::mooley_pvalue(d, n, dispersia::DfConvention::n), "%.4f")
              << "\n";
    std::cout << "p-value, nu = n-1 (2nu-1 = " << 2 * n - 3 << "): "
              << fmt(dispersia::mooley_pvalue(d, n, dispersia::DfConvention::n_minus_1), "%.4f")
              << "\n";
    std::cout << "reported convention: " << df_convention << "\n";

    const auto f = dispersia::variance_function_for(fit.spec);
    const double alpha = dispersia::alpha_condition(dispersia::moments(fit.spec), f);
    print_verdict(dispersia::validity_verdict(alpha, tolerance),
                  family + " (shape parameters held at their estimates)");
    return exit_ok;
}

int cmd_validity(const std::string& family, long size, double shape, double mean, double prob,
                 double tolerance) {
    dispersia::DistributionSpec spec;
    std::string label = family;
    if (family == "poisson") {
        spec = dispersia::Poisson{mean};
    } else if (family == "exponential") {
        spec = dispersia::Exponential{mean};
    } else if (family == "binomial") {
        if (size < 1)
            throw dispersia::parameter_error("validity --family binomial requires --size M");
        spec = dispersia::Binomial{size, prob};
        label += " (size " + std::to_string(size) + ")";
    } else if (family == "gamma-known-shape") {
        if (!(shape > 0.0))
            throw dispersia::parameter_error(
                "validity --family gamma-known-shape requires --shape K > 0");
        spec = dispersia::Gamma{shape, 1.0};
        label += " (shape " + fmt(shape) + ")";
    } else {
        throw dispersia::parameter_error(
            "validity: family must be one of poisson, binomial, exponential, gamma-known-shape");
    }
    const double alpha =
        dispersia::alpha_condition(dispersia::moments(spec), dispersia::variance_function_for(spec));
    print_verdict(dispersia::validity_verdict(alpha, tolerance), label);
    return exit_ok;
}

int cmd_simulate_table1(const std::string& config_path, int threads, const SeedChoice& seed,
                        long replicates_override, const std::string& out_path) {
    auto config = dispersia::parse_config(config_path);
    if (replicates_override > 0) config.replicates = replicates_override;
    config.master_seed = seed.resolve(config.master_seed);
    std::cout << "master seed: " << config.master_seed << "\n";
    const long n_threads = resolve_threads(threads);
    const auto summary = dispersia::run_table1(config, static_cast<int>(n_threads));
    emit_summary(summary, out_path);
    return exit_ok;
}

void emit_histogram(const std::vector<double>& d_values, const dispersia::RejectionRegion& region,
                    const std::string& path) {
    std::vector<double> ok;
    ok.reserve(d_values.size());
    for (double d : d_values)
        if (!std::isnan(d)) ok.push_back(d);
    if (ok.empty()) throw dispersia::data_error("histogram: no successful replicates");
    const auto [mn, mx] = std::minmax_element(ok.begin(), ok.end());
    const int bins = 60;
    const double lo = *mn, hi = std::max(*mx, *mn + 1e-12);
    std::vector<long> counts(bins, 0);
    for (double d : ok) {
        int b = static_cast<int>(static_cast<double>(bins) * (d - lo) / (hi - lo));
        b = std::clamp(b, 0, bins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    dispersia::ReportTable table;
    table.columns = {"bin_lower", "bin_upper", "count", "cutoff_lower", "cutoff_upper"};
    for (int b = 0; b < bins; ++b) {
        const double w = (hi - lo) / bins;
        table.add_row({lo + b * w, lo + (b + 1) * w, static_cast<std::int64_t>(counts[b]),
                       region.lower, region.upper});
    }
    dispersia::emit_report(table, dispersia::ReportFormat::csv, path);
    std::cout << "histogram csv written to " << path << "\n";
}

int cmd_simulate_rejection(const std::string& scenario, const std::string& config_path,
                           int threads, const SeedChoice& seed, long replicates_override,
                           const std::string& out_path, const std::string& histogram_path) {
    const long n_threads = resolve_threads(threads);
    dispersia::ExperimentSummary summary;
    dispersia::RejectionScenario preset;
    bool have_preset = false;

    if (scenario == "mooley-false-reject" || scenario == "mooley-false-accept") {
        preset = scenario == "mooley-false-reject" ? dispersia::mooley_false_reject_scenario()
                                                   : dispersia::mooley_false_accept_scenario();
        if (!config_path.empty()) {
            const auto config = dispersia::parse_config(config_path);
            preset.config.replicates = config.replicates;
            preset.config.level = config.level;
            preset.config.master_seed = config.master_seed;
        }
        if (replicates_override > 0) preset.config.replicates = replicates_override;
        preset.config.master_seed = seed.resolve(preset.config.master_seed);
        have_preset = true;
        std::cout << "scenario: " << scenario << "  (true family "
                  << dispersia::family_name(preset.true_spec) << ", fit "
                  << dispersia::to_string(preset.fit_family) << ", n "
                  << preset.config.sample_sizes.front() << ", level " << preset.config.level
                  << ")\n";
        std::cout << "master seed: " << preset.config.master_seed << "\n";
        summary = dispersia::run_rejection_experiment(preset.config, preset.true_spec,
                                                      preset.fit_family,
                                                      static_cast<int>(n_threads));
    } else if (scenario == "custom") {
        if (config_path.empty())
            throw dispersia::config_error("simulate rejection --scenario custom needs --config");
        auto config = dispersia::parse_config(config_path);
        if (replicates_override > 0) config.replicates = replicates_override;
        config.master_seed = seed.resolve(config.master_seed);
        std::cout << "master seed: " << config.master_seed << "\n";
        const auto fit_family = dispersia::fit_family_from_string(
            config.fit_family.empty() ? config.family : config.fit_family);
        summary.master_seed = config.master_seed;
        std::uint64_t base = 0;
        for (double value : config.parameter_grid) {
            auto params = config.fixed_params;
            params[config.varying_param] = value;
            const auto spec = dispersia::make_spec(config.family, params);
            auto part = dispersia::run_rejection_experiment(config, spec, fit_family,
                                                            static_cast<int>(n_threads), base);
            base += config.sample_sizes.size();
            for (auto& cell : part.cells) summary.cells.push_back(std::move(cell));
        }
    } else {
        throw dispersia::parameter_error(
            "simulate rejection: scenario must be mooley-false-reject, mooley-false-accept or "
            "custom");
    }

    emit_summary(summary, out_path);
    for (const auto& cell : summary.cells) {
        const long ok = cell.replicates - cell.failed_fits;
        const double rate =
            ok > 0 ? static_cast<double>(cell.rejection_count) / static_cast<double>(ok) : 0.0;
        const double se = ok > 0 ? std::sqrt(std::max(rate * (1.0 - rate), 0.0) /
                                             static_cast<double>(ok))
                                 : 0.0;
        std::cout << "rejection rate (n = " << cell.n << "): " << fmt(rate, "%.5f")
                  << "  (MC std. error " << fmt(se, "%.5f") << ")\n";
    }

    if (!histogram_path.empty()) {
        if (!have_preset)
            throw dispersia::parameter_error("--histogram is available for preset scenarios only");
        const auto region = dispersia::chi2_rejection_region(preset.config.sample_sizes.front(),
                                                             preset.config.level);
        const long binomial_size = 0;
        const auto fit_family = preset.fit_family;
        const auto d_values = dispersia::run_replicates(
            preset.true_spec, preset.config.sample_sizes.front(), preset.config.replicates,
            preset.config.master_seed, 0,
            [&](std::span<const double> sample) {
                const auto fit = dispersia::fit_mle(fit_family, sample, binomial_size);
                return dispersia::statistic_d(sample, fit.plug_in_variance);
            },
            static_cast<int>(n_threads));
        emit_histogram(d_values, region, histogram_path);
    }
    return exit_ok;
}

std::map<std::string, double> params_from_list(const std::string& family,
                                               const std::vector<double>& values) {
    const auto& names = dispersia::param_names(family);
    if (values.size() != names.size()) {
        std::string expected;
        for (const auto& name : names) expected += (expected.empty() ? "" : " ") + name;
        throw dispersia::parameter_error("--params for family '" + family + "' needs " +
                                         std::to_string(names.size()) + " values in order: " +
                                         expected);
    }
    std::map<std::string, double> params;
    for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = values[i];
    return params;
}

int cmd_gof(const std::string& kind, const std::string& family, const std::string& input,
            const std::string& column, const std::vector<double>& params, double min_expected,
            long binomial_size, const std::string& out_path) {
    const auto series = load_series(input, column);

    dispersia::DistributionSpec spec;
    int fitted_count = 0;
    bool fitted = false;
    if (!params.empty()) {
        spec = dispersia::make_spec(family, params_from_list(family, params));
        std::cout << "null parameters: fully specified\n";
    } else {
        dispersia::FitResult fit;
        try {
            fit = dispersia::fit_mle(dispersia::fit_family_from_string(family), series.values,
                                     binomial_size);
        } catch (const dispersia::convergence_error& e) {
            std::cerr << "fit failed: " << e.what() << "\n";
            return exit_fit_failure;
        }
        spec = fit.spec;
        fitted = true;
        fitted_count = static_cast<int>(dispersia::param_names(family).size());
        if (family == "binomial") fitted_count = 1;  // size is supplied, only prob is estimated
        print_fit(fit);
    }

    if (kind == "chi2") {
        const auto result =
            dispersia::pearson_chi2(series.values, spec, fitted_count, min_expected);
        dispersia::ReportTable table;
        table.title = "chi-square goodness-of-fit bins";
        table.columns = {"lower", "upper", "observed", "expected"};
        for (const auto& bin : result.bins)
            table.add_row({bin.lower, bin.upper, static_cast<std::int64_t>(bin.observed),
                           bin.expected});
        dispersia::emit_report(table, dispersia::ReportFormat::text, std::cout);
        std::cout << "chi2 statistic = " << fmt(result.statistic, "%.4f")
                  << "  df = " << fmt(result.df, "%.0f")
                  << "  p-value = " << fmt(result.p_value, "%.4f") << "\n";
        if (!out_path.empty()) {
            dispersia::emit_report(table, dispersia::ReportFormat::csv, out_path);
            std::cout << "csv written to " << out_path << "\n";
        }
    } else {
        const auto result = dispersia::ks_test(series.values, spec);
        std::cout << "KS statistic D_n = " << fmt(result.statistic, "%.6f")
                  << "  p-value = " << fmt(result.p_value, "%.4f") << "\n";
        if (fitted)
            std::cout << "WARNING: the KS p-value assumes fully specified null parameters; with "
                         "parameters estimated from this sample it is not valid (biased towards "
                         "acceptance). Pass --params to specify the null.\n";
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dispersia: variance-ratio (index-of-dispersion) goodness-of-fit toolkit"};
    app.require_subcommand(1);

    std::string family, input, column, df_convention = "n", scenario, config_path;
    std::string out_path, histogram_path;
    std::vector<double> params;
    double tolerance = 0.1, shape = 0.0, mean = 1.0, prob = 0.5, min_expected = 5.0;
    long size = 0, replicates_override = 0;
    int threads = 0;
    SeedChoice seed;
    std::uint64_t seed_value = 0;

    auto add_series_options = [&](CLI::App* cmd) {
        cmd->add_option("--family", family, "distribution family")->required();
        cmd->add_option("--input", input, "CSV file")->required();
        cmd->add_option("--column", column, "CSV column with the observations")->required();
        cmd->add_option("--size", size, "binomial trial count (binomial family only)");
    };

    auto* fit_cmd = app.add_subcommand("fit", "maximum-likelihood fit of one family");
    add_series_options(fit_cmd);

    auto* vartest_cmd =
        app.add_subcommand("vartest", "variance-ratio test with validity verdict");
    add_series_options(vartest_cmd);
    vartest_cmd->add_option("--df-convention", df_convention, "nu convention: n or n-1")
        ->check(CLI::IsMember({"n", "n-1"}));
    vartest_cmd->add_option("--tolerance", tolerance, "validity tolerance on |alpha - 2|");

    auto* validity_cmd =
        app.add_subcommand("validity", "asymptotic validity (alpha) for a family");
    validity_cmd->add_option("--family", family,
                             "poisson | binomial | exponential | gamma-known-shape")
        ->required();
    validity_cmd->add_option("--size", size, "binomial trial count");
    validity_cmd->add_option("--shape", shape, "gamma shape (gamma-known-shape)");
    validity_cmd->add_option("--mean", mean, "representative mean (default 1)");
    validity_cmd->add_option("--prob", prob, "binomial success probability (default 0.5)");
    validity_cmd->add_option("--tolerance", tolerance, "validity tolerance on |alpha - 2|");

    auto* simulate_cmd = app.add_subcommand("simulate", "deterministic Monte Carlo experiments");
    simulate_cmd->require_subcommand(1);
    auto* table1_cmd = simulate_cmd->add_subcommand(
        "table1", "empirical mean/variance of D over a parameter grid");
    table1_cmd->add_option("--config", config_path, "experiment config JSON")->required();
    table1_cmd->add_option("--threads", threads, "worker threads (default: hardware)");
    auto* table1_seed = table1_cmd->add_option("--seed", seed_value, "master seed override");
    table1_cmd->add_option("--replicates", replicates_override, "replicate count override");
    table1_cmd->add_option("--out", out_path, "write the summary as CSV");

    auto* rejection_cmd =
        simulate_cmd->add_subcommand("rejection", "rejection-rate studies of the claimed null");
    rejection_cmd
        ->add_option("--scenario", scenario,
                     "mooley-false-reject | mooley-false-accept | custom")
        ->required();
    rejection_cmd->add_option("--config", config_path, "experiment config JSON");
    rejection_cmd->add_option("--threads", threads, "worker threads (default: hardware)");
    auto* rejection_seed = rejection_cmd->add_option("--seed", seed_value, "master seed override");
    rejection_cmd->add_option("--replicates", replicates_override, "replicate count override");
    rejection_cmd->add_option("--out", out_path, "write the summary as CSV");
    rejection_cmd->add_option("--histogram", histogram_path,
                              "write a histogram of D with the cutoffs as CSV");

    auto* gof_cmd = app.add_subcommand("gof", "goodness-of-fit tests");
    gof_cmd->require_subcommand(1);
    auto* chi2_cmd = gof_cmd->add_subcommand("chi2", "Pearson chi-square, equal-probability bins");
    add_series_options(chi2_cmd);
    chi2_cmd->add_option("--params", params,
                         "null parameters in family order (omit to fit by MLE)");
    chi2_cmd->add_option("--min-expected", min_expected, "minimum expected count per bin");
    chi2_cmd->add_option("--out", out_path, "write the bin table as CSV");
    auto* ks_cmd = gof_cmd->add_subcommand("ks", "one-sample Kolmogorov-Smirnov");
    add_series_options(ks_cmd);
    ks_cmd->add_option("--params", params,
                       "null parameters in family order (omit to fit by MLE)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    if (table1_seed->count() || rejection_seed->count()) seed.cli_seed = seed_value;

    try {
        if (fit_cmd->parsed()) return cmd_fit(family, input, column, size);
        if (vartest_cmd->parsed())
            return cmd_vartest(family, input, column, df_convention, tolerance, size);
        if (validity_cmd->parsed())
            return cmd_validity(family, size, shape, mean, prob, tolerance);
        if (simulate_cmd->parsed()) {
            if (table1_cmd->parsed())
                return cmd_simulate_table1(config_path, threads, seed, replicates_override,
                                           out_path);
            return cmd_simulate_rejection(scenario, config_path, threads, seed,
                                          replicates_override, out_path, histogram_path);
        }
        if (gof_cmd->parsed())
            return cmd_gof(chi2_cmd->parsed() ? "chi2" : "ks", family, input, column, params,
                           min_expected, size, out_path);
        std::cerr << "no subcommand\n";
        return exit_usage;
    } catch (const dispersia::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const dispersia::io_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const dispersia::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const dispersia::parameter_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const dispersia::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_data;
    }
}
