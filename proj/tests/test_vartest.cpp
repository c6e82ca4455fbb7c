// Variance-ratio statistic, the Fisher-Yates/Mooley p-value, the exact
// exponential-null moments (with an independent high-precision evaluation),
// the conditional moment formulas (with a Monte Carlo oracle), and the
// asymptotic validity alpha.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dispersia/csv.hpp"
#include "dispersia/fitting.hpp"
#include "dispersia/vartest.hpp"
#include "support/oracles.hpp"

using Catch::Approx;
using namespace dispersia;

namespace {
const std::string k_data_dir = DISPERSIA_DATA_DIR;
}

TEST_CASE("statistic_d basics") {
    const std::vector<double> xs = {1.0, 3.0};
    CHECK(statistic_d(xs, 1.0) == 2.0);  // mean 2, (1)^2 + (1)^2

    const std::vector<double> constant = {4.0, 4.0, 4.0};
    CHECK(statistic_d(constant, 2.0) == 0.0);

    const std::vector<double> varied = {1.0, 2.0, 2.5};
    CHECK(statistic_d(varied, 2.0) > 0.0);  // zero iff constant

    CHECK_THROWS_AS(statistic_d(xs, 0.0), parameter_error);
    CHECK_THROWS_AS(statistic_d(xs, -1.0), parameter_error);
    const std::vector<double> single = {1.0};
    CHECK_THROWS_AS(statistic_d(single, 1.0), data_error);
}

TEST_CASE("rainfall series: D and the Mooley p-value") {
    const auto series =
        load_csv_series(k_data_dir + "/monsoon_rainfall_1901_2009.csv", "rainfall");
    const auto fit = fit_mle(FitFamily::gamma, series.values);
    const double d = statistic_d(series.values, fit.plug_in_variance);
    CHECK(d == Approx(107.2916).margin(0.01));

    const auto outcome = var_ratio_test(series.values, fit.plug_in_variance, DfConvention::n);
    CHECK(outcome.p_value_mooley == Approx(0.9344).margin(5e-4));
    CHECK(outcome.n == 109);
}

TEST_CASE("mooley_pvalue conventions and limits") {
    // with n = 109 and the nu = n convention, 2 nu - 1 = 217
    CHECK(mooley_pvalue(107.2916, 109, DfConvention::n) == Approx(0.9344).margin(5e-4));
    // zero z-score: D = (2 nu - 1)/2
    CHECK(mooley_pvalue(217.0 / 2.0, 109, DfConvention::n) == 1.0);
    CHECK(mooley_pvalue(215.0 / 2.0, 109, DfConvention::n_minus_1) == 1.0);
    // D = 0 at n = 100: |z| = sqrt(199), astronomically significant
    CHECK(mooley_pvalue(0.0, 100, DfConvention::n) < 1e-40);
    // the two conventions differ
    CHECK(mooley_pvalue(107.2916, 109, DfConvention::n) !=
          mooley_pvalue(107.2916, 109, DfConvention::n_minus_1));
    CHECK_THROWS_AS(mooley_pvalue(-1.0, 10, DfConvention::n), parameter_error);
    CHECK_THROWS_AS(mooley_pvalue(1.0, 1, DfConvention::n), parameter_error);
}

TEST_CASE("exponential-null mean and variance of D") {
    // independent evaluation of the same quantities from the integer-rational
    // forms n(n-1)/(n+1) and 4(n-1)n^4 / ((n+1)^2 (n+2)(n+3)) in long double
    auto mean_ld = [](long n) {
        return static_cast<double>(static_cast<long double>(n) * (n - 1.0L) / (n + 1.0L));
    };
    auto var_ld = [](long n) {
        const long double nn = static_cast<long double>(n);
        return static_cast<double>(4.0L * (nn - 1.0L) * nn * nn * nn * nn /
                                   ((nn + 1.0L) * (nn + 1.0L) * (nn + 2.0L) * (nn + 3.0L)));
    };
    for (long n : {2L, 10L, 100L, 200L, 5000L}) {
        CHECK(exp_null_mean_d(static_cast<std::size_t>(n)) ==
              Approx(mean_ld(n)).epsilon(1e-12));
        CHECK(exp_null_var_d(static_cast<std::size_t>(n)) == Approx(var_ld(n)).epsilon(1e-12));
    }
    CHECK(exp_null_mean_d(100) == Approx(98.01980198019802).epsilon(1e-9));
    CHECK(exp_null_var_d(100) == Approx(369.5005097707411).epsilon(1e-9));
    CHECK(exp_null_mean_d(200) == Approx(198.00995024875623).epsilon(1e-9));
    CHECK(exp_null_var_d(200) == Approx(768.7648680414201).epsilon(1e-9));

    // limit: Var(D) / (4(n-1)) -> 1
    const double ratio = exp_null_var_d(1000000) / (4.0 * (1000000.0 - 1.0));
    CHECK(std::fabs(ratio - 1.0) < 1e-5);

    CHECK_THROWS_AS(exp_null_mean_d(1), parameter_error);
}

TEST_CASE("conditional S^2, S^4 moments under the exponential null") {
    SECTION("smallest n") {
        const auto m = exp_conditional_s_moments(2, 1.0);
        CHECK(m.e_s2 == Approx(1.0 / 6.0).epsilon(1e-14));
    }
    SECTION("homogeneity: E(S^4 | T=t)/t^4 does not depend on t") {
        const double base = exp_conditional_s_moments(7, 1.0).e_s4;
        for (double t : {0.3, 2.0, 17.0})
            CHECK(exp_conditional_s_moments(7, t).e_s4 / std::pow(t, 4) ==
                  Approx(base).epsilon(1e-12));
    }
    SECTION("integrating the conditional moments against the density of T recovers E(S^2)") {
        // T ~ Gamma(n, lambda); integrate E(S^2 | T=t) f_T(t) dt by quadrature
        const std::size_t n = 5;
        const double lambda = 1.3;
        const DistributionSpec t_density{Gamma{static_cast<double>(n), lambda}};
        const double integrated = oracle::integrate_against_pdf(
            t_density, [&](double t) { return exp_conditional_s_moments(n, t).e_s2; });
        CHECK(integrated ==
              Approx(exp_unconditional_s_moments(n, lambda).e_s2).epsilon(1e-9));
        const double integrated4 = oracle::integrate_against_pdf(
            t_density, [&](double t) { return exp_conditional_s_moments(n, t).e_s4; });
        CHECK(integrated4 ==
              Approx(exp_unconditional_s_moments(n, lambda).e_s4).epsilon(1e-9));
    }
    SECTION("Monte Carlo oracle for E(S^4) at n = 50, lambda = 1") {
        const std::size_t n = 50;
        const long reps = 1000000;
        const DistributionSpec spec{Exponential{1.0}};
        RandomEngine eng(RngStream{314, 0});
        std::vector<double> buf(n);
        double sum = 0.0, sum_sq = 0.0;
        for (long r = 0; r < reps; ++r) {
            sample_into(spec, buf, eng);
            double mean = 0.0;
            for (double x : buf) mean += x;
            mean /= static_cast<double>(n);
            double s2 = 0.0;
            for (double x : buf) s2 += (x - mean) * (x - mean);
            const double s4 = s2 * s2;
            sum += s4;
            sum_sq += s4 * s4;
        }
        const double mc_mean = sum / static_cast<double>(reps);
        const double mc_var = sum_sq / static_cast<double>(reps) - mc_mean * mc_mean;
        const double se = std::sqrt(mc_var / static_cast<double>(reps));
        const double expected = exp_unconditional_s_moments(n, 1.0).e_s4;
        CHECK(expected == Approx(49.0 * (2500.0 + 350.0 - 6.0) / 50.0).epsilon(1e-14));
        CHECK(mc_mean == Approx(expected).margin(3.0 * se));
    }
}

TEST_CASE("alpha_condition anchors") {
    SECTION("poisson: exactly 2, any mean") {
        for (double lambda : {0.5, 1.0, 7.0}) {
            const DistributionSpec spec{Poisson{lambda}};
            CHECK(alpha_condition(moments(spec), variance_function_for(spec)) ==
                  Approx(2.0).epsilon(1e-12));
        }
    }
    SECTION("exponential: exactly 4, independent of the mean") {
        for (double lambda : {1.0, 5.0, 10.0, 15.0, 20.0}) {
            const DistributionSpec spec{Exponential{lambda}};
            CHECK(alpha_condition(moments(spec), variance_function_for(spec)) ==
                  Approx(4.0).epsilon(1e-12));
        }
    }
    SECTION("gamma with known shape: 2 + 2/shape") {
        for (double k : {0.5, 1.0, 2.0, 4.0, 9.8663, 50.0}) {
            const DistributionSpec spec{Gamma{k, 3.7}};
            CHECK(alpha_condition(moments(spec), variance_function_for(spec)) ==
                  Approx(2.0 + 2.0 / k).epsilon(1e-11));
        }
    }
    SECTION("binomial: within O(1/size) of 2, either sign") {
        for (long size : {10L, 20L, 50L}) {
            const DistributionSpec spec{Binomial{size, 0.3}};
            const double alpha = alpha_condition(moments(spec), variance_function_for(spec));
            CHECK(std::fabs(alpha - 2.0) <= 3.0 / static_cast<double>(size));
        }
    }
}

TEST_CASE("alpha_condition derivative and cross-term variants") {
    SECTION("finite-difference derivative matches analytic within 1e-5 relative") {
        const DistributionSpec specs[] = {DistributionSpec{Exponential{3.0}},
                                          DistributionSpec{Gamma{4.0, 2.0}},
                                          DistributionSpec{Poisson{6.0}},
                                          DistributionSpec{Binomial{20, 0.3}}};
        for (const auto& spec : specs) {
            auto f = variance_function_for(spec);
            const double with_analytic = alpha_condition(moments(spec), f);
            f.derivative = nullptr;  // force the central finite difference
            const double with_fd = alpha_condition(moments(spec), f);
            CHECK(with_fd == Approx(with_analytic).epsilon(1e-5));
        }
    }
    SECTION("mean-weighted cross term: equal for poisson, different elsewhere") {
        const DistributionSpec pois{Poisson{4.0}};
        CHECK(alpha_condition(moments(pois), variance_function_for(pois),
                              AlphaCrossTerm::mean_weighted) == Approx(2.0).epsilon(1e-12));
        const DistributionSpec expo{Exponential{2.0}};
        const double printed = alpha_condition(moments(expo), variance_function_for(expo),
                                               AlphaCrossTerm::mean_weighted);
        CHECK(printed != Approx(4.0).epsilon(1e-6));  // not scale-invariant, not 4
    }
    SECTION("model inconsistency is rejected") {
        // exponential variance law against gamma(2, 3) moments: f(mu) = 36 != 18
        CHECK_THROWS_AS(alpha_condition(moments(DistributionSpec{Gamma{2.0, 3.0}}),
                                        variance_function_for(DistributionSpec{Exponential{1.0}})),
                        model_error);
    }
    SECTION("gamma mixture has no variance-vs-mean function") {
        const DistributionSpec mix{GammaMixture{{{0.5, 2.0, 1.0}, {0.5, 3.0, 0.5}}}};
        CHECK_THROWS_AS(variance_function_for(mix), model_error);
    }
}

TEST_CASE("validity_verdict") {
    CHECK(validity_verdict(2.0, 0.1).valid);
    CHECK_FALSE(validity_verdict(4.0, 0.1).valid);  // the exponential value
    CHECK(validity_verdict(2.0 + 1.0 / 50.0, 0.1).valid);
    CHECK(validity_verdict(2.09, 0.1).valid);
    CHECK_FALSE(validity_verdict(2.11, 0.1).valid);
    CHECK(validity_verdict(4.0, 2.5).valid);  // tolerance is caller policy
    CHECK_THROWS_AS(validity_verdict(2.0, 0.0), parameter_error);
}

TEST_CASE("scale invariance of D with the MLE plug-in") {
    const auto xs = sample(DistributionSpec{Gamma{3.0, 2.0}}, 300, RngStream{55, 0});
    const FitFamily families[] = {FitFamily::exponential, FitFamily::gamma, FitFamily::weibull,
                                  FitFamily::lognormal};
    for (FitFamily family : families) {
        const auto base_fit = fit_mle(family, xs);
        const double base_d = statistic_d(xs, base_fit.plug_in_variance);
        for (double c : {0.1, 7.0, 1000.0}) {
            std::vector<double> scaled(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) scaled[i] = c * xs[i];
            const auto fit = fit_mle(family, scaled);
            const double d = statistic_d(scaled, fit.plug_in_variance);
            CHECK(d == Approx(base_d).epsilon(1e-9));
        }
    }
}
