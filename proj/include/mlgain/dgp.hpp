#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlgain/config.hpp"
#include "mlgain/rng.hpp"

namespace mlgain {

// One simulated population. Immutable after construction; safe to share
// read-only across threads.
struct Dataset {
    int n_clusters = 0;
    int cluster_size = 0;
    std::vector<int> cluster_of;              // individual -> cluster
    std::vector<double> ability;              // A_ij
    std::vector<double> ability_within;       // A_ij - mean_j
    std::vector<double> ability_cluster_mean; // per cluster
    std::vector<int> treatment;               // per individual (broadcast for cluster treatment)
    std::vector<int> cluster_treatment;       // per cluster; empty for individual treatment
    std::vector<double> pretest;              // Y1
    std::vector<double> posttest;             // Y2
    std::vector<double> gain;                 // Y2 - Y1
    std::vector<double> pretest_cluster_mean; // per cluster
    std::vector<double> true_score_pre;       // Y1 minus its measurement error; test use only
    std::uint64_t seed = 0;
    std::string generator = "mt19937_64";

    std::size_t size() const { return ability.size(); }
};

inline std::vector<double> gen_abilities(RandomStream& stream, std::size_t count, double variance) {
    if (!(variance > 0)) throw std::invalid_argument("gen_abilities: variance must be > 0");
    const double sd = std::sqrt(variance);
    std::vector<double> a(count);
    for (auto& x : a) x = stream.normal(0.0, sd);
    return a;
}

// Splits the population into J balanced clusters of size n. A random pool
// of size N*(1-sorted_fraction) is drawn first; the rest is stably sorted
// by ability and sliced into consecutive blocks of n*sorted_fraction
// assigned to clusters 0..J-1 in order; the random pool then fills the
// remaining slots uniformly.
inline std::vector<int> allocate_clusters(RandomStream& stream, std::span<const double> abilities,
                                          int n_clusters, int cluster_size, double sorted_fraction) {
    const std::size_t n_total = abilities.size();
    if (static_cast<std::size_t>(n_clusters) * cluster_size != n_total)
        throw std::invalid_argument("allocate_clusters: J * n must equal the population size");
    const double sorted_per_cluster_real = cluster_size * sorted_fraction;
    const long sorted_per_cluster = std::lround(sorted_per_cluster_real);
    if (std::abs(sorted_per_cluster_real - sorted_per_cluster) > 1e-9)
        throw std::invalid_argument("allocate_clusters: n * sorted_fraction must be an integer");
    const std::size_t random_per_cluster = cluster_size - sorted_per_cluster;
    const std::size_t n_random = random_per_cluster * n_clusters;

    std::vector<std::size_t> random_pool = stream.sample_without_replacement(n_total, n_random);
    std::vector<char> in_random(n_total, 0);
    for (std::size_t i : random_pool) in_random[i] = 1;

    std::vector<std::size_t> sorted_pool;
    sorted_pool.reserve(n_total - n_random);
    for (std::size_t i = 0; i < n_total; ++i)
        if (!in_random[i]) sorted_pool.push_back(i);
    // Ties broken by original index: the pool is index-ordered and the
    // sort is stable.
    std::stable_sort(sorted_pool.begin(), sorted_pool.end(),
                     [&](std::size_t a, std::size_t b) { return abilities[a] < abilities[b]; });

    std::vector<int> cluster_of(n_total, -1);
    std::size_t pos = 0;
    for (int j = 0; j < n_clusters; ++j)
        for (long k = 0; k < sorted_per_cluster; ++k) cluster_of[sorted_pool[pos++]] = j;
    // The random pool is already in uniformly sampled order; pair it with
    // the open slots cluster by cluster.
    std::size_t r = 0;
    for (int j = 0; j < n_clusters; ++j)
        for (std::size_t k = 0; k < random_per_cluster; ++k) cluster_of[random_pool[r++]] = j;
    return cluster_of;
}

namespace detail {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline std::vector<int> bernoulli_by_score(RandomStream& stream, std::span<const double> scores,
                                           double alpha, double delta) {
    std::vector<int> z(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        z[i] = stream.bernoulli(logistic(delta + alpha * scores[i])) ? 1 : 0;
    return z;
}

inline std::vector<double> cluster_means(std::span<const double> values,
                                         std::span<const int> cluster_of, int n_clusters) {
    std::vector<long double> acc(n_clusters, 0.0L);
    std::vector<int> count(n_clusters, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc[cluster_of[i]] += values[i];
        ++count[cluster_of[i]];
    }
    std::vector<double> mean(n_clusters);
    for (int j = 0; j < n_clusters; ++j)
        mean[j] = count[j] ? static_cast<double>(acc[j] / count[j]) : 0.0;
    return mean;
}

}  // namespace detail

inline std::vector<int> assign_treatment_individual(RandomStream& stream,
                                                    std::span<const double> abilities,
                                                    double alpha, double delta) {
    return detail::bernoulli_by_score(stream, abilities, alpha, delta);
}

inline std::vector<int> assign_treatment_cluster(RandomStream& stream,
                                                 std::span<const double> ability_cluster_means,
                                                 double alpha, double delta) {
    return detail::bernoulli_by_score(stream, ability_cluster_means, alpha, delta);
}

struct ScoreDraws {
    std::vector<double> pretest;
    std::vector<double> posttest;
    std::vector<double> true_score_pre;
};

// Draws the error terms and assembles both test scores. The same e_ij
// realization enters the pre-test (scaled by lambda1) and the post-test
// (scaled by lambda2).
inline ScoreDraws gen_scores(RandomStream& stream, const DgpConfig& cfg,
                             std::span<const int> cluster_of, std::span<const double> ability,
                             std::span<const double> ability_cluster_mean,
                             std::span<const int> treatment_of_individual) {
    if (cfg.cov_u12 * cfg.cov_u12 > cfg.var_u1 * cfg.var_u2 + 1e-12)
        throw std::invalid_argument("gen_scores: cluster-error covariance not positive semidefinite");
    const std::size_t n_total = ability.size();
    const int n_clusters = cfg.n_clusters;

    // Lower-triangular square root of the 2x2 cluster-error covariance.
    const double l11 = std::sqrt(cfg.var_u1);
    const double l21 = l11 > 0 ? cfg.cov_u12 / l11 : 0.0;
    const double l22 = std::sqrt(std::max(0.0, cfg.var_u2 - l21 * l21));
    std::vector<double> u1(n_clusters), u2(n_clusters);
    for (int j = 0; j < n_clusters; ++j) {
        const double g1 = stream.normal();
        const double g2 = stream.normal();
        u1[j] = l11 * g1;
        u2[j] = l21 * g1 + l22 * g2;
    }

    const double sd_e = std::sqrt(cfg.var_e);
    const double sd_v = std::sqrt(cfg.var_v);
    ScoreDraws out;
    out.pretest.resize(n_total);
    out.posttest.resize(n_total);
    out.true_score_pre.resize(n_total);
    for (std::size_t i = 0; i < n_total; ++i) {
        const int j = cluster_of[i];
        const double e = stream.normal(0.0, sd_e);
        const double v = stream.normal(0.0, sd_v);
        const double abar = ability_cluster_mean[j];
        const double t1 = cfg.mu1 + cfg.beta1 * ability[i] + cfg.psi1 * abar + u1[j];
        out.pretest[i] = t1 + cfg.lambda1 * e;
        out.true_score_pre[i] = t1;
        out.posttest[i] = cfg.mu2 + cfg.beta2 * ability[i] + cfg.psi2 * abar +
                          cfg.tau * treatment_of_individual[i] + u2[j] + cfg.lambda2 * e + v;
    }
    return out;
}

// Composition of the four generation steps. Pure function of (config, seed).
inline Dataset make_dataset(const DgpConfig& cfg, std::uint64_t seed) {
    if (auto violations = validate(cfg); !violations.empty())
        throw std::invalid_argument("make_dataset: invalid config: " + violations.front());

    RandomStream stream(seed);
    Dataset d;
    d.seed = seed;
    d.n_clusters = cfg.n_clusters;
    d.cluster_size = cfg.cluster_size;

    d.ability = gen_abilities(stream, cfg.population_size(), cfg.var_ability);
    d.cluster_of = allocate_clusters(stream, d.ability, cfg.n_clusters, cfg.cluster_size,
                                     cfg.sorted_fraction);
    d.ability_cluster_mean = detail::cluster_means(d.ability, d.cluster_of, cfg.n_clusters);
    d.ability_within.resize(d.ability.size());
    for (std::size_t i = 0; i < d.ability.size(); ++i)
        d.ability_within[i] = d.ability[i] - d.ability_cluster_mean[d.cluster_of[i]];

    if (cfg.scenario == Scenario::IndividualTreatment) {
        d.treatment = assign_treatment_individual(stream, d.ability, cfg.alpha, cfg.delta);
    } else {
        d.cluster_treatment =
            assign_treatment_cluster(stream, d.ability_cluster_mean, cfg.alpha, cfg.delta);
        d.treatment.resize(d.ability.size());
        for (std::size_t i = 0; i < d.ability.size(); ++i)
            d.treatment[i] = d.cluster_treatment[d.cluster_of[i]];
    }

    ScoreDraws scores = gen_scores(stream, cfg, d.cluster_of, d.ability, d.ability_cluster_mean,
                                   d.treatment);
    d.pretest = std::move(scores.pretest);
    d.posttest = std::move(scores.posttest);
    d.true_score_pre = std::move(scores.true_score_pre);
    d.gain.resize(d.pretest.size());
    for (std::size_t i = 0; i < d.pretest.size(); ++i) d.gain[i] = d.posttest[i] - d.pretest[i];
    d.pretest_cluster_mean = detail::cluster_means(d.pretest, d.cluster_of, cfg.n_clusters);
    return d;
}

// Columnar dump for external cross-checking: one row per individual.
inline void write_dataset(const Dataset& d, std::ostream& os) {
    os << "cluster,ability,treatment,pretest,posttest,gain\n";
    os.precision(12);
    for (std::size_t i = 0; i < d.size(); ++i) {
        os << d.cluster_of[i] << ',' << d.ability[i] << ',' << d.treatment[i] << ','
           << d.pretest[i] << ',' << d.posttest[i] << ',' << d.gain[i] << '\n';
    }
}

}  // namespace mlgain
