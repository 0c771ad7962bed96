#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlgain/dgp.hpp"
#include "mlgain/model.hpp"
#include "mlgain/ols.hpp"

namespace mlgain {

// Response and regressors for one model specification.
// Conditioning: Y2 ~ [1, Z, Y1 (, Y1bar)]; Gain: G ~ [1, Z (, Y1bar)].
inline Design build_design(const Dataset& d, const ModelSpec& spec) {
    const Eigen::Index n = static_cast<Eigen::Index>(d.size());
    Design out;
    out.cluster_of = d.cluster_of;
    out.n_clusters = d.n_clusters;
    out.column_names = {"intercept", "Z"};
    if (spec.approach == Approach::Conditioning) out.column_names.push_back("Y1");
    if (spec.include_cluster_mean) out.column_names.push_back("Y1bar");

    out.response.resize(n);
    out.regressors.resize(n, static_cast<Eigen::Index>(out.column_names.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        out.response[i] =
            spec.approach == Approach::Conditioning ? d.posttest[i] : d.gain[i];
        Eigen::Index k = 0;
        out.regressors(i, k++) = 1.0;
        out.regressors(i, k++) = d.treatment[i];
        if (spec.approach == Approach::Conditioning) out.regressors(i, k++) = d.pretest[i];
        if (spec.include_cluster_mean)
            out.regressors(i, k++) = d.pretest_cluster_mean[d.cluster_of[i]];
    }
    return out;
}

// Per-cluster sufficient statistics of the random-intercept likelihood.
// For V_j = sigma2_eps * (I + psi * 1 1'), the inverse applies analytically:
// V_j^{-1} = (I - c_j 1 1') / sigma2_eps with c_j = psi / (1 + n_j psi),
// so all GLS quantities are linear combinations of the statistics below.
struct ClusterSuffStats {
    int n_obs = 0;
    int n_clusters = 0;
    int p = 0;
    Eigen::MatrixXd xtx;                // sum over all rows of x x'
    Eigen::VectorXd xty;                // sum of x y
    double yty = 0.0;                   // sum of y^2
    std::vector<Eigen::VectorXd> s;     // per-cluster column sums of X
    std::vector<double> t;              // per-cluster sums of y
    std::vector<int> size;              // per-cluster row counts
};

inline ClusterSuffStats accumulate_cluster_stats(const Design& d) {
    ClusterSuffStats st;
    st.n_obs = static_cast<int>(d.regressors.rows());
    st.n_clusters = d.n_clusters;
    st.p = static_cast<int>(d.regressors.cols());
    st.xtx = d.regressors.transpose() * d.regressors;
    st.xty = d.regressors.transpose() * d.response;
    st.yty = d.response.squaredNorm();
    st.s.assign(st.n_clusters, Eigen::VectorXd::Zero(st.p));
    st.t.assign(st.n_clusters, 0.0);
    st.size.assign(st.n_clusters, 0);
    for (Eigen::Index i = 0; i < d.regressors.rows(); ++i) {
        const int j = d.cluster_of[i];
        st.s[j] += d.regressors.row(i).transpose();
        st.t[j] += d.response[i];
        ++st.size[j];
    }
    return st;
}

struct ProfilePoint {
    double loglik = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd beta;
    double sigma2_eps = 0.0;
};

// Exact profiled log-likelihood at a candidate variance ratio
// psi = sigma2_u / sigma2_eps. O(J p^2 + p^3) per call.
inline ProfilePoint profile_loglik(double psi, const ClusterSuffStats& st, bool reml = false) {
    const double n = st.n_obs;
    Eigen::MatrixXd a = st.xtx;
    Eigen::VectorXd b = st.xty;
    double yy = st.yty;
    double logdet_v = 0.0;  // log det of blockdiag(I + psi 1 1') = sum log(1 + n_j psi)
    for (int j = 0; j < st.n_clusters; ++j) {
        const double cj = psi / (1.0 + st.size[j] * psi);
        a.noalias() -= cj * (st.s[j] * st.s[j].transpose());
        b.noalias() -= cj * st.t[j] * st.s[j];
        yy -= cj * st.t[j] * st.t[j];
        logdet_v += std::log1p(st.size[j] * psi);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw FitError("profile_loglik: singular GLS normal equations");

    ProfilePoint pt;
    pt.beta = ldlt.solve(b);
    const double rss = std::max(yy - pt.beta.dot(b), 1e-300);
    if (reml) {
        const double dof = n - st.p;
        pt.sigma2_eps = rss / dof;
        double logdet_a = 0.0;
        for (int k = 0; k < st.p; ++k) logdet_a += std::log(ldlt.vectorD()[k]);
        pt.loglik = -0.5 * dof * (std::log(2.0 * std::numbers::pi * pt.sigma2_eps) + 1.0) -
                    0.5 * logdet_v - 0.5 * logdet_a;
    } else {
        pt.sigma2_eps = rss / n;
        pt.loglik = -0.5 * n * (std::log(2.0 * std::numbers::pi * pt.sigma2_eps) + 1.0) -
                    0.5 * logdet_v;
    }
    return pt;
}

namespace detail {

constexpr double kPsiFloor = 1e-12;   // shift for the log reparametrization
constexpr double kPsiCeiling = 1e6;

inline double psi_from_log(double g) { return std::max(0.0, std::exp(g) - kPsiFloor); }

// Golden-section maximization of f over [lo, hi]; f is the profiled
// log-likelihood as a function of g = log(psi + floor).
template <class F>
inline double golden_section_max(F&& f, double lo, double hi, double rel_tol, int max_iter) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < max_iter && (hi - lo) > rel_tol * (1.0 + std::abs(lo) + std::abs(hi));
         ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = f(x1);
        }
    }
    return f1 > f2 ? x1 : x2;
}

}  // namespace detail

// ML fit of y = X beta + u_cluster + eps via 1-D search on the profiled
// likelihood: 20-point coarse pre-scan on log(psi + 1e-12) over
// psi in [0, 1e6] (unimodality guard), golden-section refinement around
// the best bracket, and an explicit psi = 0 boundary evaluation.
inline FitResult fit_random_intercept_ml(const Design& d, bool reml = false) {
    if (d.n_clusters < 2) throw FitError("fit_random_intercept_ml: need at least 2 clusters");
    // Rank check (and collinear-column naming) on the raw design.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.regressors);
    qr.setThreshold(1e-10);
    detail::check_full_rank(qr, d.column_names);

    const ClusterSuffStats st = accumulate_cluster_stats(d);
    auto objective = [&](double g) { return profile_loglik(detail::psi_from_log(g), st, reml).loglik; };

    const double g_lo = std::log(detail::kPsiFloor);
    const double g_hi = std::log(detail::kPsiCeiling + detail::kPsiFloor);
    constexpr int kPrescan = 20;
    double best_g = g_lo;
    double best_f = objective(g_lo);
    for (int k = 1; k < kPrescan; ++k) {
        const double g = g_lo + (g_hi - g_lo) * k / (kPrescan - 1);
        const double f = objective(g);
        if (f > best_f) {
            best_f = f;
            best_g = g;
        }
    }
    const double step = (g_hi - g_lo) / (kPrescan - 1);
    const double lo = std::max(g_lo, best_g - step);
    const double hi = std::min(g_hi, best_g + step);
    double g_star = detail::golden_section_max(objective, lo, hi, 1e-10, 200);
    double psi_star = detail::psi_from_log(g_star);

    // The boundary psi = 0 (no cluster variance) is a valid ML solution;
    // prefer it whenever it is at least as good as the interior point.
    ProfilePoint interior = profile_loglik(psi_star, st, reml);
    ProfilePoint boundary = profile_loglik(0.0, st, reml);
    const ProfilePoint& opt = boundary.loglik >= interior.loglik ? boundary : interior;
    if (boundary.loglik >= interior.loglik) psi_star = 0.0;

    FitResult r;
    for (int k = 0; k < st.p; ++k) r.coefficients[d.column_names[k]] = opt.beta[k];
    r.sigma2_eps = opt.sigma2_eps;
    r.sigma2_u = psi_star * opt.sigma2_eps;
    r.loglik = opt.loglik;
    r.converged = std::isfinite(opt.loglik);
    r.n_obs = st.n_obs;
    r.n_clusters = st.n_clusters;
    return r;
}

inline FitResult fit_model(const Dataset& data, const ModelSpec& spec) {
    const Design d = build_design(data, spec);
    return spec.estimator == EstimatorKind::Ols ? fit_ols(d) : fit_random_intercept_ml(d);
}

}  // namespace mlgain
