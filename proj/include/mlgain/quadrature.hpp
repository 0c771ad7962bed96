#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace mlgain {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Hermite rule (physicists' weight exp(-x^2)) via the Golub-Welsch
// eigendecomposition of the Jacobi matrix: nodes are its eigenvalues,
// weights are sqrt(pi) times the squared first eigenvector components.
inline QuadratureRule gauss_hermite(int n_nodes) {
    if (n_nodes < 1) throw std::invalid_argument("gauss_hermite: need at least one node");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
    for (int k = 1; k < n_nodes; ++k) {
        const double off = std::sqrt(k / 2.0);
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("gauss_hermite: eigendecomposition failed");
    QuadratureRule rule;
    rule.nodes.resize(n_nodes);
    rule.weights.resize(n_nodes);
    const double mu0 = std::sqrt(std::numbers::pi);
    for (int i = 0; i < n_nodes; ++i) {
        rule.nodes[i] = eig.eigenvalues()[i];
        const double v0 = eig.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

// Memoized accessor: rules depend only on the node count and the
// eigendecomposition is the expensive part.
inline const QuadratureRule& cached_gauss_hermite(int n_nodes) {
    static std::mutex mutex;
    static std::map<int, QuadratureRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n_nodes);
    if (it == cache.end()) it = cache.emplace(n_nodes, gauss_hermite(n_nodes)).first;
    return it->second;
}

// E[f(A)] for A ~ N(0,1) by substituting a = sqrt(2) x into the
// Gauss-Hermite rule.
template <class F>
inline double gauss_hermite_normal_expectation(const QuadratureRule& rule, F&& f) {
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        acc += rule.weights[i] * f(std::numbers::sqrt2 * rule.nodes[i]);
    return inv_sqrt_pi * acc;
}

}  // namespace mlgain
