#include <cmath>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "mlgain/analytics.hpp"
#include "mlgain/dgp.hpp"
#include "mlgain/quadrature.hpp"

using namespace mlgain;

namespace {
const double kDelta = std::log(0.25);  // assignment intercept for a ~20% treated share
}

TEST_CASE("Gauss-Hermite rule integrates polynomial moments exactly") {
    const QuadratureRule rule = gauss_hermite(32);
    // Standard-normal moments: E[1]=1, E[a^2]=1, E[a^4]=3, E[a^6]=15.
    CHECK(gauss_hermite_normal_expectation(rule, [](double) { return 1.0; }) ==
          Catch::Approx(1.0).margin(1e-12));
    CHECK(gauss_hermite_normal_expectation(rule, [](double a) { return a; }) ==
          Catch::Approx(0.0).margin(1e-12));
    CHECK(gauss_hermite_normal_expectation(rule, [](double a) { return a * a; }) ==
          Catch::Approx(1.0).margin(1e-12));
    CHECK(gauss_hermite_normal_expectation(rule, [](double a) { return a * a * a * a; }) ==
          Catch::Approx(3.0).margin(1e-10));
    CHECK(gauss_hermite_normal_expectation(
              rule, [](double a) { return a * a * a * a * a * a; }) ==
          Catch::Approx(15.0).margin(1e-9));
}

TEST_CASE("treated moments: symmetry and frozen regression values") {
    const TreatedMoments sym = treated_ability_moments(0.0, 0.0);
    CHECK(sym.pi == Catch::Approx(0.5).margin(1e-12));
    CHECK(sym.mean_ability_treated == Catch::Approx(0.0).margin(1e-12));

    const TreatedMoments pos = treated_ability_moments(1.5, 0.0);
    const TreatedMoments neg = treated_ability_moments(-1.5, 0.0);
    CHECK(pos.pi == Catch::Approx(neg.pi).margin(1e-12));
    CHECK(pos.mean_ability_treated == Catch::Approx(-neg.mean_ability_treated).margin(1e-12));
    CHECK(pos.mean_ability_treated > 0);

    // Frozen quadrature values at the canonical assignment parameters,
    // cross-checked against a 1e7-draw Monte Carlo oracle
    // (pi = 0.238671, E(A|Z=1) = 0.650949) at the MC tolerance.
    const TreatedMoments m = treated_ability_moments(1.0, kDelta);
    CHECK(m.pi == Catch::Approx(0.23874375628153957).margin(1e-12));
    CHECK(m.mean_ability_treated == Catch::Approx(0.6512135964093875).margin(1e-12));
    CHECK(m.pi == Catch::Approx(0.238671).margin(1e-3));
    CHECK(m.mean_ability_treated == Catch::Approx(0.6509487904873245).margin(1e-3));
    CHECK(m.pi > 0.20);
    CHECK(m.pi < 0.26);
}

TEST_CASE("treated moments: node-doubling stability") {
    for (double alpha : {0.3, 1.0, 2.5}) {
        for (double delta : {-2.0, kDelta, 0.0, 1.0}) {
            const TreatedMoments coarse = detail::treated_moments_with_nodes(alpha, delta, 128);
            const TreatedMoments fine = detail::treated_moments_with_nodes(alpha, delta, 256);
            CHECK(std::abs(coarse.pi - fine.pi) < 1e-10);
            CHECK(std::abs(coarse.mean_ability_treated - fine.mean_ability_treated) < 1e-10);
        }
    }
    CHECK_THROWS_AS(treated_ability_moments(std::nan(""), 0.0), std::invalid_argument);
}

TEST_CASE("reliability formulas: boundary cases and paper magnitude") {
    CHECK(reliability_pretest(16, 6) == Catch::Approx(256.0 / 292.0).margin(1e-15));
    CHECK(reliability_pretest(16, 0) == 1.0);
    CHECK(reliability_pretest(0, 1) == 0.0);
    CHECK_THROWS_AS(reliability_pretest(0, 0), std::invalid_argument);

    DgpConfig cfg = builtin_configuration(Scenario::IndividualTreatment, ConfigId::I, 100);
    CHECK(reliability_overall_multilevel(cfg, 0.7, 0.3) == 1.0);  // lambda1 = 0

    // Single-level reduction: psi1 = 0, sigma2_u1 = 0, all variance within.
    cfg.lambda1 = 6;
    cfg.var_u1 = 0;
    CHECK(reliability_overall_multilevel(cfg, 1.0, 0.0) ==
          Catch::Approx(reliability_pretest(16, 6)).margin(1e-15));
}

TEST_CASE("cluster-mean reliability is monotone in n and tends to one") {
    double prev = 0.0;
    for (int n : {1, 2, 4, 10, 100, 1000, 100000}) {
        const double r = reliability_cluster_mean(16.0, 0.02, 1.0, 6.0, 1.0, n);
        CHECK(r > prev);
        CHECK(r <= 1.0);
        prev = r;
    }
    CHECK(prev > 0.9999);
    CHECK(reliability_cluster_mean(16.0, 0.02, 1.0, 0.0, 1.0, 4) == 1.0);
    // High sorted-allocation between-variance: already near the n -> inf
    // limit at n = 100.
    const double at100 = reliability_cluster_mean(16.0, 0.8, 1.0, 6.0, 1.0, 100);
    CHECK(at100 >= 0.995);
}

TEST_CASE("bias formula identities over randomized parameter draws") {
    std::mt19937_64 gen(20240815);
    std::uniform_real_distribution<double> unif(0.2, 3.0);
    int checked = 0;
    for (int k = 0; k < 1000; ++k) {
        const double tau = unif(gen), alpha = unif(gen);
        const double beta1 = 4.0 * unif(gen), beta2 = 4.0 * unif(gen);
        const double lambda1 = unif(gen), lambda2 = unif(gen);
        const double var_Z = 1.0 + unif(gen);
        const double rho = reliability_pretest(beta1, lambda1);

        // lambda-form vs rho-form of the continuous bias.
        const double lhs =
            bias_conditioning_continuous(tau, alpha, beta1, beta2, lambda1, 0.0, var_Z)
                .expected_coefficient;
        const double rhs =
            bias_conditioning_continuous_rho_form(tau, alpha, beta2, rho, var_Z)
                .expected_coefficient;
        CHECK(lhs == Catch::Approx(rhs).margin(1e-12 * (1.0 + std::abs(lhs))));

        // The general form with E(A Z) = alpha reduces to the continuous one.
        const double general = bias_conditioning_general(tau, beta2, rho, alpha, var_Z)
                                   .expected_coefficient;
        CHECK(general == Catch::Approx(lhs).margin(1e-12 * (1.0 + std::abs(lhs))));

        // Two-term and single-fraction common-error forms agree.
        const double two = bias_conditioning_general_common_error_two_term(
                               tau, beta1, beta2, lambda1, lambda2, alpha, var_Z)
                               .expected_coefficient;
        const double one = bias_conditioning_general_common_error_single_fraction(
                               tau, beta1, beta2, lambda1, lambda2, alpha, var_Z)
                               .expected_coefficient;
        CHECK(two == Catch::Approx(one).margin(1e-12 * (1.0 + std::abs(two))));

        // Common trend + equal error loadings: binary common-error bias vanishes.
        const BiasPrediction same =
            bias_conditioning_binary(tau, alpha, kDelta, beta1, beta1, lambda1, lambda1);
        CHECK(same.bias == Catch::Approx(0.0).margin(1e-12));
        CHECK(same.expected_coefficient == Catch::Approx(tau).margin(1e-12));
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("bias predictions: zero-bias cases and internal consistency") {
    const BiasPrediction no_err = bias_conditioning_binary(2, 1, kDelta, 16, 16, 0, 0);
    CHECK(no_err.expected_coefficient == 2.0);
    CHECK(no_err.bias == 0.0);

    const BiasPrediction common = bias_gain_binary(2, 1, kDelta, 16, 16);
    CHECK(common.expected_coefficient == 2.0);

    const BiasPrediction indep = bias_gain_binary(2, 0, 0, 16, 24);
    CHECK(indep.bias == Catch::Approx(0.0).margin(1e-12));

    // Worked continuous example: tau + 1*16*36 / (1*292 - 256) = 18.
    const BiasPrediction worked = bias_conditioning_continuous(2, 1, 16, 16, 6, 0, 1);
    CHECK(worked.expected_coefficient == Catch::Approx(18.0).margin(1e-12));

    // bias = expected - tau by construction for every formula.
    const BiasPrediction b = bias_conditioning_binary(2, 1, kDelta, 16, 24, 6, 3);
    CHECK(b.bias == b.expected_coefficient - 2.0);
}

TEST_CASE("conditioning bias decreases as reliability increases") {
    double prev = 1e300;
    for (double rho : {0.3, 0.5, 0.7, 0.9, 0.99}) {
        const double bias = bias_conditioning_general(0, 16, rho, 0.65, 1.0).bias;
        CHECK(bias >= 0);
        CHECK(bias < prev);
        prev = bias;
    }
    CHECK(bias_conditioning_general(0, 16, 1.0, 0.65, 1.0).bias == 0.0);
}

TEST_CASE("a common measurement error reduces the conditioning bias") {
    for (double lambda2 : {0.5, 2.0, 4.0, 6.0}) {
        const double with_common =
            bias_conditioning_binary(2, 1, kDelta, 16, 16, 6, lambda2).bias;
        const double without = bias_conditioning_binary(2, 1, kDelta, 16, 16, 6, 0).bias;
        CHECK(std::abs(with_common) <= std::abs(without));
    }
}

TEST_CASE("frozen canonical bias values") {
    // Conditioning, measurement error on Y1 only.
    CHECK(bias_conditioning_binary(2, 1, kDelta, 16, 16, 6, 0).expected_coefficient ==
          Catch::Approx(3.9101862).margin(1e-6));
    // Gain score without common trend.
    CHECK(bias_gain_binary(2, 1, kDelta, 16, 24).expected_coefficient ==
          Catch::Approx(8.8435679).margin(1e-6));
}
