#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlgain/model.hpp"

namespace mlgain {

enum class Scenario { IndividualTreatment, ClusterTreatment };

enum class ConfigId { I, II, III, IV, V, VI, VII, VIII };

inline const char* to_string(Scenario s) {
    return s == Scenario::IndividualTreatment ? "scenario1" : "scenario2";
}

inline const char* to_string(ConfigId c) {
    static const char* names[] = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII"};
    return names[static_cast<int>(c)];
}

inline std::optional<Scenario> parse_scenario(const std::string& s) {
    if (s == "scenario1" || s == "1" || s == "individual") return Scenario::IndividualTreatment;
    if (s == "scenario2" || s == "2" || s == "cluster") return Scenario::ClusterTreatment;
    return std::nullopt;
}

inline std::optional<ConfigId> parse_config_id(const std::string& s) {
    static const char* names[] = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII"};
    for (int i = 0; i < 8; ++i)
        if (s == names[i]) return static_cast<ConfigId>(i);
    return std::nullopt;
}

inline constexpr std::array<ConfigId, 8> kAllConfigIds = {
    ConfigId::I,   ConfigId::II, ConfigId::III, ConfigId::IV,
    ConfigId::V,   ConfigId::VI, ConfigId::VII, ConfigId::VIII};

// All structural parameters of the generating models plus the population
// layout. Immutable value type; share freely across threads.
struct DgpConfig {
    Scenario scenario = Scenario::IndividualTreatment;
    int n_clusters = 100;    // J
    int cluster_size = 100;  // n (balanced)
    double mu1 = 60.0, mu2 = 60.0;
    double tau = 2.0;
    double beta1 = 16.0, beta2 = 16.0;
    double psi1 = 0.0, psi2 = 0.0;
    double lambda1 = 0.0, lambda2 = 0.0;
    double alpha = 1.0;
    double delta = std::log(0.2 / 0.8);
    double var_ability = 1.0, var_e = 1.0, var_v = 1.0;
    double var_u1 = 1.0, var_u2 = 1.0, cov_u12 = 0.8;
    double sorted_fraction = 0.75;

    int population_size() const { return n_clusters * cluster_size; }
};

// Empty vector iff every invariant holds.
inline std::vector<std::string> validate(const DgpConfig& c) {
    std::vector<std::string> v;
    if (c.n_clusters <= 0) v.push_back("n_clusters: J must be positive");
    if (c.cluster_size <= 0) v.push_back("cluster_size: n must be positive");
    if (c.lambda1 < 0) v.push_back("lambda1: must be >= 0");
    if (c.lambda2 < 0) v.push_back("lambda2: must be >= 0");
    if (!(c.var_ability > 0)) v.push_back("var_ability: must be > 0");
    if (!(c.var_e > 0)) v.push_back("var_e: must be > 0");
    if (!(c.var_v > 0)) v.push_back("var_v: must be > 0");
    if (c.var_u1 < 0) v.push_back("var_u1: must be >= 0");
    if (c.var_u2 < 0) v.push_back("var_u2: must be >= 0");
    if (c.cov_u12 * c.cov_u12 > c.var_u1 * c.var_u2 + 1e-12)
        v.push_back("cov_u12: cluster-error covariance matrix not positive semidefinite");
    if (c.sorted_fraction < 0 || c.sorted_fraction > 1)
        v.push_back("sorted_fraction: must lie in [0, 1]");
    else {
        const double sorted_per_cluster = c.cluster_size * c.sorted_fraction;
        if (std::abs(sorted_per_cluster - std::round(sorted_per_cluster)) > 1e-9)
            v.push_back("sorted_fraction: cluster_size * sorted_fraction must be an integer");
    }
    if (!std::isfinite(c.alpha) || !std::isfinite(c.delta))
        v.push_back("alpha/delta: must be finite");
    return v;
}

// Canonical parameter registry: eight configurations, shared by both
// scenarios. Total population fixed at 10,000; J = 10,000 / n.
//
// The individual-treatment builtins allocate clusters at random
// (sorted_fraction 0); the cluster-treatment builtins use the 75%
// ability-sorted allocation. See README for the rationale.
inline DgpConfig builtin_configuration(Scenario scenario, ConfigId id, int cluster_size) {
    constexpr int kPopulation = 10000;
    if (cluster_size <= 0 || kPopulation % cluster_size != 0) {
        std::ostringstream msg;
        msg << "cluster_size " << cluster_size << " does not divide the fixed population size "
            << kPopulation << "; choose a divisor (canonical values: 100 and 4)";
        throw std::invalid_argument(msg.str());
    }
    DgpConfig c;
    c.scenario = scenario;
    c.cluster_size = cluster_size;
    c.n_clusters = kPopulation / cluster_size;
    c.sorted_fraction = scenario == Scenario::ClusterTreatment ? 0.75 : 0.0;
    if (scenario == Scenario::IndividualTreatment && cluster_size % 4 != 0)
        c.sorted_fraction = 0.0;  // already 0; keep n*f integral for any divisor
    switch (id) {
        case ConfigId::I: break;
        case ConfigId::II: c.lambda1 = 6; break;
        case ConfigId::III: c.beta2 = 24; break;
        case ConfigId::IV: c.psi2 = 8; break;
        case ConfigId::V: c.beta2 = 24; c.lambda1 = 6; break;
        case ConfigId::VI: c.psi2 = 8; c.lambda1 = 6; break;
        case ConfigId::VII: c.beta2 = 24; c.psi1 = 8; c.psi2 = 4; break;
        case ConfigId::VIII: c.lambda1 = 6; c.lambda2 = 6; break;
    }
    // Sorted allocation needs n * 0.75 integral; guard non-canonical sizes.
    if (c.sorted_fraction > 0 && (cluster_size * 3) % 4 != 0) {
        std::ostringstream msg;
        msg << "cluster_size " << cluster_size << " is not compatible with the 75% sorted "
            << "allocation (n * 0.75 must be an integer)";
        throw std::invalid_argument(msg.str());
    }
    return c;
}

// One experiment: a generating configuration, a replication budget, a seed
// and the model specifications to fit on every replication.
struct ExperimentEntry {
    DgpConfig config;
    std::optional<ConfigId> config_id;  // set when derived from a builtin
    int replications = 1000;
    std::uint64_t master_seed = 1;
    std::vector<ModelSpec> specs;
};

struct ExperimentPlan {
    std::vector<ExperimentEntry> experiments;
};

class PlanError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline ModelSpec spec_from_json(const nlohmann::json& j, const std::string& path) {
    ModelSpec s;
    const std::string approach = j.value("approach", "conditioning");
    if (approach == "conditioning") s.approach = Approach::Conditioning;
    else if (approach == "gain") s.approach = Approach::Gain;
    else throw PlanError(path + ".approach: unknown value '" + approach + "'");
    const std::string est = j.value("estimator", "ml");
    if (est == "ml") s.estimator = EstimatorKind::RandomInterceptMl;
    else if (est == "ols") s.estimator = EstimatorKind::Ols;
    else throw PlanError(path + ".estimator: unknown value '" + est + "'");
    s.include_cluster_mean = j.value("cluster_mean", false);
    return s;
}

inline nlohmann::json spec_to_json(const ModelSpec& s) {
    return {{"approach", s.approach == Approach::Conditioning ? "conditioning" : "gain"},
            {"estimator", s.estimator == EstimatorKind::Ols ? "ols" : "ml"},
            {"cluster_mean", s.include_cluster_mean}};
}

inline void apply_override(DgpConfig& c, const std::string& key, const nlohmann::json& value,
                           const std::string& path) {
    auto num = [&]() -> double {
        if (!value.is_number()) throw PlanError(path + "." + key + ": expected a number");
        return value.get<double>();
    };
    if (key == "mu1") c.mu1 = num();
    else if (key == "mu2") c.mu2 = num();
    else if (key == "tau") c.tau = num();
    else if (key == "beta1") c.beta1 = num();
    else if (key == "beta2") c.beta2 = num();
    else if (key == "psi1") c.psi1 = num();
    else if (key == "psi2") c.psi2 = num();
    else if (key == "lambda1") c.lambda1 = num();
    else if (key == "lambda2") c.lambda2 = num();
    else if (key == "alpha") c.alpha = num();
    else if (key == "delta") c.delta = num();
    else if (key == "var_ability") c.var_ability = num();
    else if (key == "var_e") c.var_e = num();
    else if (key == "var_v") c.var_v = num();
    else if (key == "var_u1") c.var_u1 = num();
    else if (key == "var_u2") c.var_u2 = num();
    else if (key == "cov_u12") c.cov_u12 = num();
    else if (key == "sorted_fraction") c.sorted_fraction = num();
    else if (key == "n_clusters") c.n_clusters = static_cast<int>(num());
    else if (key == "cluster_size") c.cluster_size = static_cast<int>(num());
    else throw PlanError(path + "." + key + ": unknown parameter");
}

}  // namespace detail

// Parses an experiment document (JSON). Defaults come from the builtin
// registry; "overrides" patches individual generating parameters.
inline ExperimentPlan load_experiment(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw PlanError(std::string("parse failure: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("experiments"))
        throw PlanError("experiments: missing top-level array");
    const auto& items = doc["experiments"];
    if (!items.is_array() || items.empty()) throw PlanError("no experiments defined");

    ExperimentPlan plan;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const std::string path = "experiments[" + std::to_string(i) + "]";
        const auto& item = items[i];
        if (!item.is_object()) throw PlanError(path + ": expected an object");
        ExperimentEntry entry;
        auto scenario = parse_scenario(item.value("scenario", "scenario1"));
        if (!scenario) throw PlanError(path + ".scenario: unknown value");
        auto id = parse_config_id(item.value("config", "I"));
        if (!id) throw PlanError(path + ".config: expected a label I..VIII");
        const int n = item.value("cluster_size", 100);
        try {
            entry.config = builtin_configuration(*scenario, *id, n);
        } catch (const std::invalid_argument& e) {
            throw PlanError(path + ".cluster_size: " + e.what());
        }
        entry.config_id = *id;
        entry.replications = item.value("replications", 1000);
        if (entry.replications < 1) throw PlanError(path + ".replications: must be >= 1");
        entry.master_seed = item.value("master_seed", std::uint64_t{1});
        if (item.contains("overrides")) {
            for (const auto& [key, value] : item["overrides"].items())
                detail::apply_override(entry.config, key, value, path + ".overrides");
            entry.config_id.reset();
        }
        for (const auto& violation : validate(entry.config))
            throw PlanError(path + ": " + violation);
        if (item.contains("specs")) {
            const auto& specs = item["specs"];
            if (!specs.is_array()) throw PlanError(path + ".specs: expected an array");
            for (std::size_t k = 0; k < specs.size(); ++k)
                entry.specs.push_back(detail::spec_from_json(
                    specs[k], path + ".specs[" + std::to_string(k) + "]"));
        }
        if (entry.specs.empty()) {
            entry.specs = {{Approach::Conditioning, false, EstimatorKind::RandomInterceptMl},
                           {Approach::Gain, false, EstimatorKind::RandomInterceptMl}};
        }
        plan.experiments.push_back(std::move(entry));
    }
    return plan;
}

inline std::string save_experiment(const ExperimentPlan& plan) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& e : plan.experiments) {
        nlohmann::json item;
        item["scenario"] = to_string(e.config.scenario);
        item["config"] = e.config_id ? to_string(*e.config_id) : "I";
        item["cluster_size"] = e.config_id ? e.config.cluster_size : 100;
        item["replications"] = e.replications;
        item["master_seed"] = e.master_seed;
        nlohmann::json specs = nlohmann::json::array();
        for (const auto& s : e.specs) specs.push_back(detail::spec_to_json(s));
        item["specs"] = specs;
        if (!e.config_id) {
            const DgpConfig base = builtin_configuration(e.config.scenario, ConfigId::I, 100);
            nlohmann::json ov = nlohmann::json::object();
            auto put = [&](const char* key, double have, double def) {
                if (have != def) ov[key] = have;
            };
            put("mu1", e.config.mu1, base.mu1);
            put("mu2", e.config.mu2, base.mu2);
            put("tau", e.config.tau, base.tau);
            put("beta1", e.config.beta1, base.beta1);
            put("beta2", e.config.beta2, base.beta2);
            put("psi1", e.config.psi1, base.psi1);
            put("psi2", e.config.psi2, base.psi2);
            put("lambda1", e.config.lambda1, base.lambda1);
            put("lambda2", e.config.lambda2, base.lambda2);
            put("alpha", e.config.alpha, base.alpha);
            put("delta", e.config.delta, base.delta);
            put("var_ability", e.config.var_ability, base.var_ability);
            put("var_e", e.config.var_e, base.var_e);
            put("var_v", e.config.var_v, base.var_v);
            put("var_u1", e.config.var_u1, base.var_u1);
            put("var_u2", e.config.var_u2, base.var_u2);
            put("cov_u12", e.config.cov_u12, base.cov_u12);
            put("sorted_fraction", e.config.sorted_fraction, base.sorted_fraction);
            put("cluster_size", e.config.cluster_size, base.cluster_size);
            put("n_clusters", e.config.n_clusters, base.n_clusters);
            item["overrides"] = ov;
        }
        items.push_back(std::move(item));
    }
    return nlohmann::json{{"experiments", items}}.dump(2) + "\n";
}

}  // namespace mlgain
