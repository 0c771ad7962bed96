#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mlgain/analytics.hpp"
#include "mlgain/config.hpp"
#include "mlgain/dgp.hpp"
#include "mlgain/lmm.hpp"
#include "mlgain/model.hpp"

namespace mlgain {

// Aggregate over K replications for one model specification.
struct McSummary {
    std::string config_label;  // "I".."VIII" or "custom"
    Scenario scenario = Scenario::IndividualTreatment;
    int cluster_size = 0;
    ModelSpec spec;
    int replications = 0;           // K
    double tau_hat_mean = 0.0;      // MC mean of tau-hat
    double tau_hat_sd = 0.0;
    double mc_se = 0.0;             // sd / sqrt(n_converged)
    double pct_err = 0.0;           // (mean - tau)/tau * 100
    double tau_true = 0.0;
    int n_converged = 0;
    bool valid = false;             // false if every replication failed
};

// One fitted model on one replication; rows of the replication log.
struct ReplicationRecord {
    int replication = 0;
    std::uint64_t seed = 0;
    ModelSpec spec;
    double tau_hat = 0.0;
    bool converged = false;
};

struct McRunResult {
    std::vector<McSummary> summaries;
    std::vector<ReplicationRecord> records;  // ordered by (replication, spec index)
};

// Generates one dataset and fits every spec on it. Deterministic in
// (config, specs, seed). Fit failures are recorded, not fatal.
inline std::vector<ReplicationRecord> run_replication(const DgpConfig& config,
                                                      const std::vector<ModelSpec>& specs,
                                                      std::uint64_t seed, int replication = 0) {
    const Dataset data = make_dataset(config, seed);
    std::vector<ReplicationRecord> out;
    out.reserve(specs.size());
    for (const auto& spec : specs) {
        ReplicationRecord rec;
        rec.replication = replication;
        rec.seed = seed;
        rec.spec = spec;
        try {
            const FitResult fit = fit_model(data, spec);
            rec.tau_hat = fit.tau_hat();
            rec.converged = fit.converged;
        } catch (const FitError&) {
            rec.converged = false;
        }
        out.push_back(rec);
    }
    return out;
}

// Runs K seeded replications, optionally across threads. Replication r
// always uses replication_seed(master_seed, r), and aggregation walks the
// records in replication order, so the result is identical for every
// parallelism degree.
inline McRunResult run_mc(const DgpConfig& config, const std::vector<ModelSpec>& specs, int K,
                          std::uint64_t master_seed, int max_parallelism = 1,
                          std::optional<ConfigId> config_id = std::nullopt) {
    if (K < 1) throw std::invalid_argument("run_mc: K must be >= 1");
    if (specs.empty()) throw std::invalid_argument("run_mc: no model specs given");
    if (auto violations = validate(config); !violations.empty())
        throw std::invalid_argument("run_mc: invalid config: " + violations.front());

    const std::size_t n_specs = specs.size();
    std::vector<ReplicationRecord> records(static_cast<std::size_t>(K) * n_specs);
    const int n_threads = std::max(1, std::min(max_parallelism, K));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int r = next.fetch_add(1); r < K; r = next.fetch_add(1)) {
            auto rows = run_replication(config, specs, replication_seed(master_seed, r), r);
            for (std::size_t s = 0; s < n_specs; ++s)
                records[static_cast<std::size_t>(r) * n_specs + s] = rows[s];
        }
    };
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    McRunResult out;
    out.records = std::move(records);
    for (std::size_t s = 0; s < n_specs; ++s) {
        McSummary sum;
        sum.config_label = config_id ? to_string(*config_id) : "custom";
        sum.scenario = config.scenario;
        sum.cluster_size = config.cluster_size;
        sum.spec = specs[s];
        sum.replications = K;
        sum.tau_true = config.tau;
        double acc = 0.0;
        int n_ok = 0;
        for (int r = 0; r < K; ++r) {
            const auto& rec = out.records[static_cast<std::size_t>(r) * n_specs + s];
            if (!rec.converged) continue;
            acc += rec.tau_hat;
            ++n_ok;
        }
        sum.n_converged = n_ok;
        if (n_ok > 0) {
            sum.valid = true;
            sum.tau_hat_mean = acc / n_ok;
            double ss = 0.0;
            for (int r = 0; r < K; ++r) {
                const auto& rec = out.records[static_cast<std::size_t>(r) * n_specs + s];
                if (!rec.converged) continue;
                const double d = rec.tau_hat - sum.tau_hat_mean;
                ss += d * d;
            }
            sum.tau_hat_sd = n_ok > 1 ? std::sqrt(ss / (n_ok - 1)) : 0.0;
            sum.mc_se = sum.tau_hat_sd / std::sqrt(static_cast<double>(n_ok));
            sum.pct_err = config.tau != 0.0
                              ? (sum.tau_hat_mean - config.tau) / config.tau * 100.0
                              : 0.0;
        }
        out.summaries.push_back(std::move(sum));
    }
    return out;
}

enum class TableId { Table3, Table4 };

struct TableRow {
    ConfigId config_id = ConfigId::I;
    std::vector<McSummary> cells;  // one per column spec, in column order
};

struct TableResult {
    TableId table = TableId::Table3;
    Scenario scenario = Scenario::IndividualTreatment;
    int cluster_size = 0;
    int replications = 0;
    std::uint64_t master_seed = 0;
    std::vector<ModelSpec> columns;
    std::vector<TableRow> rows;  // configurations I..VIII in order
};

inline std::vector<ModelSpec> table_columns(TableId table) {
    if (table == TableId::Table3)
        return {{Approach::Conditioning, false, EstimatorKind::RandomInterceptMl},
                {Approach::Gain, false, EstimatorKind::RandomInterceptMl}};
    return {{Approach::Conditioning, false, EstimatorKind::RandomInterceptMl},
            {Approach::Conditioning, true, EstimatorKind::RandomInterceptMl},
            {Approach::Gain, false, EstimatorKind::RandomInterceptMl},
            {Approach::Gain, true, EstimatorKind::RandomInterceptMl}};
}

// Runs all eight configurations of one results table.
inline TableResult reproduce_table(TableId table, int cluster_size, int K,
                                   std::uint64_t master_seed, int max_parallelism = 1) {
    TableResult out;
    out.table = table;
    out.scenario =
        table == TableId::Table3 ? Scenario::IndividualTreatment : Scenario::ClusterTreatment;
    out.cluster_size = cluster_size;
    out.replications = K;
    out.master_seed = master_seed;
    out.columns = table_columns(table);
    for (ConfigId id : kAllConfigIds) {
        const DgpConfig config = builtin_configuration(out.scenario, id, cluster_size);
        // Distinct master seed per configuration so rows are independent.
        const std::uint64_t row_seed =
            splitmix64(master_seed ^ (0x1000 + static_cast<std::uint64_t>(id)));
        TableRow row;
        row.config_id = id;
        row.cells = run_mc(config, out.columns, K, row_seed, max_parallelism, id).summaries;
        out.rows.push_back(std::move(row));
    }
    return out;
}

// Side-by-side view of the single-level analytic prediction and the MC
// result. Assertions belong to the caller: exact in single-cluster mode,
// descriptive for true multilevel configurations.
struct AnalyticsComparison {
    ModelSpec spec;
    BiasPrediction prediction;
    double mc_mean = 0.0;
    double mc_se = 0.0;
    double discrepancy_se = 0.0;  // (mc_mean - prediction) / mc_se
    bool single_level = false;    // J == 1: the formula is exact
};

inline AnalyticsComparison compare_to_analytics(const DgpConfig& config,
                                                const McSummary& summary) {
    AnalyticsComparison cmp;
    cmp.spec = summary.spec;
    if (summary.spec.approach == Approach::Conditioning) {
        cmp.prediction = bias_conditioning_binary(config.tau, config.alpha, config.delta,
                                                  config.beta1, config.beta2, config.lambda1,
                                                  config.lambda2);
    } else {
        cmp.prediction = bias_gain_binary(config.tau, config.alpha, config.delta, config.beta1,
                                          config.beta2);
    }
    cmp.mc_mean = summary.tau_hat_mean;
    cmp.mc_se = summary.mc_se;
    cmp.discrepancy_se = summary.mc_se > 0
                             ? (summary.tau_hat_mean - cmp.prediction.expected_coefficient) /
                                   summary.mc_se
                             : 0.0;
    cmp.single_level = config.n_clusters == 1;
    return cmp;
}

}  // namespace mlgain
