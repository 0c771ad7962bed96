#pragma once

#include <map>
#include <stdexcept>
#include <string>

namespace mlgain {

enum class Approach { Conditioning, Gain };
enum class EstimatorKind { Ols, RandomInterceptMl };

// Which estimation model to fit on a simulated dataset.
// Conditioning: Y2 ~ 1 + Z + Y1 [+ Y1bar]; Gain: G ~ 1 + Z [+ Y1bar].
struct ModelSpec {
    Approach approach = Approach::Conditioning;
    bool include_cluster_mean = false;
    EstimatorKind estimator = EstimatorKind::RandomInterceptMl;

    std::string label() const {
        std::string s = approach == Approach::Conditioning ? "conditioning" : "gain";
        s += estimator == EstimatorKind::Ols ? "-ols" : "-ml";
        if (include_cluster_mean) s += "+y1bar";
        return s;
    }

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct FitResult {
    std::map<std::string, double> coefficients;
    double sigma2_u = 0.0;
    double sigma2_eps = 0.0;
    double loglik = 0.0;
    bool converged = false;
    int n_obs = 0;
    int n_clusters = 0;

    double tau_hat() const { return coefficients.at("Z"); }
};

class FitError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mlgain
