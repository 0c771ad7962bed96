#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlgain/model.hpp"

namespace mlgain {

// Named design matrix: response, regressors (column 0 is always the
// intercept) and the cluster index of every row.
struct Design {
    Eigen::VectorXd response;
    Eigen::MatrixXd regressors;
    std::vector<std::string> column_names;
    std::vector<int> cluster_of;
    int n_clusters = 0;
};

namespace detail {

inline void check_full_rank(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr,
                            const std::vector<std::string>& column_names) {
    const auto p = qr.cols();
    if (qr.rank() == p) return;
    // The permutation moves dependent columns last; name the first of them.
    const auto& perm = qr.colsPermutation().indices();
    std::string offenders;
    for (Eigen::Index k = qr.rank(); k < p; ++k) {
        if (!offenders.empty()) offenders += ", ";
        offenders += column_names[perm[k]];
    }
    throw FitError("rank-deficient design: column(s) " + offenders +
                   " collinear with the preceding columns");
}

inline double gaussian_loglik(double rss, double n) {
    const double sigma2 = rss / n;
    return -0.5 * n * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
}

}  // namespace detail

inline FitResult fit_ols(const Design& d) {
    const Eigen::Index n = d.regressors.rows();
    const Eigen::Index p = d.regressors.cols();
    if (n <= p) throw FitError("fit_ols: need more observations than regressors");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.regressors);
    qr.setThreshold(1e-10);
    detail::check_full_rank(qr, d.column_names);
    const Eigen::VectorXd beta = qr.solve(d.response);
    const double rss = (d.response - d.regressors * beta).squaredNorm();

    FitResult r;
    for (Eigen::Index k = 0; k < p; ++k) r.coefficients[d.column_names[k]] = beta[k];
    r.sigma2_u = 0.0;
    r.sigma2_eps = rss / static_cast<double>(n);
    r.loglik = detail::gaussian_loglik(rss, static_cast<double>(n));
    r.converged = true;
    r.n_obs = static_cast<int>(n);
    r.n_clusters = d.n_clusters;
    return r;
}

}  // namespace mlgain
