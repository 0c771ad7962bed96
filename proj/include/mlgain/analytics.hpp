#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "mlgain/config.hpp"
#include "mlgain/quadrature.hpp"

namespace mlgain {

enum class BiasFormula {
    Eq5Continuous,
    Eq8General,
    Eq10Binary,
    Eq13ContinuousCommonError,
    Eq14BinaryCommonError,
    GainBinaryDerived,
};

inline const char* to_string(BiasFormula f) {
    switch (f) {
        case BiasFormula::Eq5Continuous: return "continuous";
        case BiasFormula::Eq8General: return "general";
        case BiasFormula::Eq10Binary: return "binary";
        case BiasFormula::Eq13ContinuousCommonError: return "continuous-common-error";
        case BiasFormula::Eq14BinaryCommonError: return "binary-common-error";
        case BiasFormula::GainBinaryDerived: return "gain-binary";
    }
    return "?";
}

// Expectation of the OLS treatment coefficient under one of the
// closed-form results, together with its deviation from the target tau.
struct BiasPrediction {
    double expected_coefficient = 0.0;
    double bias = 0.0;
    BiasFormula formula_id = BiasFormula::Eq5Continuous;
};

// Marginal treated share pi = E(pi_ij) and the treated-group ability mean
// E(A | Z = 1) under the logistic assignment model with standard-normal
// ability.
struct TreatedMoments {
    double pi = 0.0;
    double mean_ability_treated = 0.0;
};

namespace detail {

inline double logistic_prob(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline TreatedMoments treated_moments_with_nodes(double alpha, double delta, int nodes) {
    const QuadratureRule& rule = cached_gauss_hermite(nodes);
    const double pi = gauss_hermite_normal_expectation(
        rule, [&](double a) { return logistic_prob(delta + alpha * a); });
    const double first = gauss_hermite_normal_expectation(
        rule, [&](double a) { return a * logistic_prob(delta + alpha * a); });
    return {pi, first / pi};
}

}  // namespace detail

// Quadrature evaluation with a node-doubling convergence check.
inline TreatedMoments treated_ability_moments(double alpha, double delta, int nodes = 256) {
    if (!std::isfinite(alpha) || !std::isfinite(delta))
        throw std::invalid_argument("treated_ability_moments: alpha and delta must be finite");
    const TreatedMoments coarse = detail::treated_moments_with_nodes(alpha, delta, nodes);
    const TreatedMoments fine = detail::treated_moments_with_nodes(alpha, delta, 2 * nodes);
    if (std::abs(coarse.pi - fine.pi) >= 1e-10 ||
        std::abs(coarse.mean_ability_treated - fine.mean_ability_treated) >= 1e-10)
        throw std::runtime_error(
            "treated_ability_moments: quadrature not converged under node doubling");
    return fine;
}

// rho = beta1^2 var_A / (beta1^2 var_A + lambda1^2 var_e).
inline double reliability_pretest(double beta1, double lambda1, double var_A = 1.0,
                                  double var_e = 1.0) {
    const double true_var = beta1 * beta1 * var_A;
    const double total = true_var + lambda1 * lambda1 * var_e;
    if (!(total > 0)) throw std::invalid_argument("reliability_pretest: zero total variance");
    return true_var / total;
}

// Overall reliability of the pre-test in the two-level model, given the
// within/between decomposition of the ability variance. beta_between is
// beta1 + psi1.
inline double reliability_overall_multilevel(const DgpConfig& c, double var_within,
                                             double var_between) {
    const double beta_w = c.beta1;
    const double beta_b = c.beta1 + c.psi1;
    const double var_true = beta_w * beta_w * var_within + beta_b * beta_b * var_between +
                            c.var_u1;
    const double var_obs = var_true + c.lambda1 * c.lambda1 * c.var_e;
    if (!(var_obs > 0))
        throw std::invalid_argument("reliability_overall_multilevel: zero variance");
    return var_true / var_obs;
}

// Reliability of the cluster mean of the pre-test; increases in n and
// tends to 1 because the averaged measurement error vanishes.
inline double reliability_cluster_mean(double beta_between, double var_between, double var_u1,
                                       double lambda1, double var_e, int n) {
    if (n < 1) throw std::invalid_argument("reliability_cluster_mean: n must be >= 1");
    const double var_true = beta_between * beta_between * var_between + var_u1;
    const double var_obs = var_true + lambda1 * lambda1 * var_e / n;
    if (!(var_obs > 0)) throw std::invalid_argument("reliability_cluster_mean: zero denominator");
    return var_true / var_obs;
}

// Continuous-treatment conditioning bias (no common error when lambda2=0):
// tau + alpha (beta2 lambda1^2 - beta1 lambda1 lambda2)
//         / (Var(Z)(beta1^2+lambda1^2) - alpha^2 beta1^2).
inline BiasPrediction bias_conditioning_continuous(double tau, double alpha, double beta1,
                                                   double beta2, double lambda1, double lambda2,
                                                   double var_Z) {
    const double denom = var_Z * (beta1 * beta1 + lambda1 * lambda1) - alpha * alpha * beta1 * beta1;
    if (denom == 0.0)
        throw std::invalid_argument("bias_conditioning_continuous: degenerate treatment variance");
    const double numer = alpha * (beta2 * lambda1 * lambda1 - beta1 * lambda1 * lambda2);
    BiasPrediction p;
    p.formula_id = lambda2 == 0.0 ? BiasFormula::Eq5Continuous
                                  : BiasFormula::Eq13ContinuousCommonError;
    p.expected_coefficient = tau + numer / denom;
    p.bias = p.expected_coefficient - tau;
    return p;
}

// Reliability-form of the continuous-treatment bias; algebraically equal
// to the lambda-form above. Kept separate for the identity checks.
inline BiasPrediction bias_conditioning_continuous_rho_form(double tau, double alpha, double beta2,
                                                            double rho, double var_Z) {
    const double denom = var_Z - alpha * alpha * rho;
    if (denom == 0.0)
        throw std::invalid_argument("bias_conditioning_continuous_rho_form: zero denominator");
    BiasPrediction p;
    p.formula_id = BiasFormula::Eq5Continuous;
    p.expected_coefficient = tau + alpha * beta2 * (1.0 - rho) / denom;
    p.bias = p.expected_coefficient - tau;
    return p;
}

// General-treatment form: depends on Z only through E(A Z) and Var(Z).
inline BiasPrediction bias_conditioning_general(double tau, double beta2, double rho, double e_az,
                                                double var_Z) {
    const double denom = var_Z - rho * e_az * e_az;
    if (denom == 0.0)
        throw std::invalid_argument("bias_conditioning_general: zero denominator");
    BiasPrediction p;
    p.formula_id = BiasFormula::Eq8General;
    p.expected_coefficient = tau + beta2 * (1.0 - rho) * e_az / denom;
    p.bias = p.expected_coefficient - tau;
    return p;
}

// General form with common measurement error, two-term variant.
inline BiasPrediction bias_conditioning_general_common_error_two_term(
    double tau, double beta1, double beta2, double lambda1, double lambda2, double e_az,
    double var_Z, double var_A = 1.0, double var_e = 1.0) {
    const double var_Y1 = beta1 * beta1 * var_A + lambda1 * lambda1 * var_e;
    const double rho = reliability_pretest(beta1, lambda1, var_A, var_e);
    const double denom = var_Z - rho * e_az * e_az;
    if (denom == 0.0 || var_Y1 == 0.0)
        throw std::invalid_argument(
            "bias_conditioning_general_common_error_two_term: zero denominator");
    BiasPrediction p;
    p.formula_id = BiasFormula::Eq13ContinuousCommonError;
    p.expected_coefficient = tau + beta2 * (1.0 - rho) * e_az / denom -
                             beta1 * lambda1 * lambda2 * e_az / (denom * var_Y1);
    p.bias = p.expected_coefficient - tau;
    return p;
}

// Same quantity collected over the common denominator (single fraction).
inline BiasPrediction bias_conditioning_general_common_error_single_fraction(
    double tau, double beta1, double beta2, double lambda1, double lambda2, double e_az,
    double var_Z, double var_A = 1.0, double var_e = 1.0) {
    const double var_Y1 = beta1 * beta1 * var_A + lambda1 * lambda1 * var_e;
    const double rho = reliability_pretest(beta1, lambda1, var_A, var_e);
    const double denom = (var_Z - rho * e_az * e_az) * var_Y1;
    if (denom == 0.0)
        throw std::invalid_argument(
            "bias_conditioning_general_common_error_single_fraction: zero denominator");
    BiasPrediction p;
    p.formula_id = BiasFormula::Eq13ContinuousCommonError;
    p.expected_coefficient =
        tau + e_az * (beta2 * (1.0 - rho) * var_Y1 - beta1 * lambda1 * lambda2) / denom;
    p.bias = p.expected_coefficient - tau;
    return p;
}

// Binary-treatment conditioning bias under logistic assignment:
// tau + E(A|Z=1)(beta2 lambda1^2 - beta1 lambda1 lambda2)
//         / ((1-pi)(beta1^2+lambda1^2) - pi E(A|Z=1)^2 beta1^2).
inline BiasPrediction bias_conditioning_binary(double tau, double alpha, double delta,
                                               double beta1, double beta2, double lambda1,
                                               double lambda2) {
    const TreatedMoments m = treated_ability_moments(alpha, delta);
    const double e1 = m.mean_ability_treated;
    const double denom = (1.0 - m.pi) * (beta1 * beta1 + lambda1 * lambda1) -
                         m.pi * e1 * e1 * beta1 * beta1;
    if (denom == 0.0)
        throw std::invalid_argument("bias_conditioning_binary: zero denominator");
    BiasPrediction p;
    p.formula_id =
        lambda2 == 0.0 ? BiasFormula::Eq10Binary : BiasFormula::Eq14BinaryCommonError;
    p.expected_coefficient =
        tau + e1 * (beta2 * lambda1 * lambda1 - beta1 * lambda1 * lambda2) / denom;
    p.bias = p.expected_coefficient - tau;
    return p;
}

// Binary-treatment gain-score bias, obtained from the OLS slope of
// G = (mu2-mu1) + (beta2-beta1) A + tau Z + noise on binary Z:
// slope = tau + (beta2-beta1) Cov(A,Z)/Var(Z) = tau + (beta2-beta1) E(A|Z=1) / (1-pi).
inline BiasPrediction bias_gain_binary(double tau, double alpha, double delta, double beta1,
                                       double beta2) {
    const TreatedMoments m = treated_ability_moments(alpha, delta);
    if (m.pi >= 1.0) throw std::invalid_argument("bias_gain_binary: degenerate pi = 1");
    BiasPrediction p;
    p.formula_id = BiasFormula::GainBinaryDerived;
    p.expected_coefficient =
        tau + (beta2 - beta1) * m.mean_ability_treated / (1.0 - m.pi);
    p.bias = p.expected_coefficient - tau;
    return p;
}

}  // namespace mlgain
