#include <catch2/catch_amalgamated.hpp>

#include "mlgain/analytics.hpp"
#include "mlgain/config.hpp"

using namespace mlgain;

TEST_CASE("builtin registry matches the canonical parameter patterns") {
    // (id, beta2, psi1, psi2, lambda1, lambda2)
    struct Row {
        ConfigId id;
        double beta2, psi1, psi2, lambda1, lambda2;
    };
    const Row rows[] = {
        {ConfigId::I, 16, 0, 0, 0, 0},  {ConfigId::II, 16, 0, 0, 6, 0},
        {ConfigId::III, 24, 0, 0, 0, 0}, {ConfigId::IV, 16, 0, 8, 0, 0},
        {ConfigId::V, 24, 0, 0, 6, 0},  {ConfigId::VI, 16, 0, 8, 6, 0},
        {ConfigId::VII, 24, 8, 4, 0, 0}, {ConfigId::VIII, 16, 0, 0, 6, 6},
    };
    for (const auto& r : rows) {
        for (Scenario sc : {Scenario::IndividualTreatment, Scenario::ClusterTreatment}) {
            const DgpConfig c = builtin_configuration(sc, r.id, 100);
            INFO("config " << to_string(r.id) << " scenario " << to_string(sc));
            CHECK(c.beta2 == r.beta2);
            CHECK(c.psi1 == r.psi1);
            CHECK(c.psi2 == r.psi2);
            CHECK(c.lambda1 == r.lambda1);
            CHECK(c.lambda2 == r.lambda2);
            CHECK(c.mu1 == 60.0);
            CHECK(c.mu2 == 60.0);
            CHECK(c.tau == 2.0);
            CHECK(c.beta1 == 16.0);
            CHECK(c.alpha == 1.0);
            CHECK(c.delta == Catch::Approx(std::log(0.25)).margin(1e-15));
            CHECK(c.cov_u12 == 0.8);
            CHECK(c.population_size() == 10000);
            CHECK(validate(c).empty());
        }
    }
}

TEST_CASE("builtin cluster sizes") {
    CHECK(builtin_configuration(Scenario::ClusterTreatment, ConfigId::VII, 4).n_clusters == 2500);
    CHECK(builtin_configuration(Scenario::IndividualTreatment, ConfigId::I, 100).n_clusters ==
          100);
    CHECK_THROWS_AS(builtin_configuration(Scenario::IndividualTreatment, ConfigId::I, 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(builtin_configuration(Scenario::IndividualTreatment, ConfigId::I, 0),
                    std::invalid_argument);
}

TEST_CASE("validate reports violations") {
    DgpConfig c = builtin_configuration(Scenario::IndividualTreatment, ConfigId::I, 100);
    CHECK(validate(c).empty());

    c.lambda1 = -1;
    auto v = validate(c);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("lambda1") != std::string::npos);

    c = builtin_configuration(Scenario::IndividualTreatment, ConfigId::I, 100);
    c.n_clusters = 0;
    v = validate(c);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("positive") != std::string::npos);

    c = builtin_configuration(Scenario::IndividualTreatment, ConfigId::I, 100);
    c.cov_u12 = 2.0;  // var_u1 = var_u2 = 1
    v = validate(c);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("positive semidefinite") != std::string::npos);

    c = builtin_configuration(Scenario::ClusterTreatment, ConfigId::I, 100);
    c.sorted_fraction = 0.503;  // n * f not integral
    CHECK_FALSE(validate(c).empty());
}

TEST_CASE("load_experiment parses, defaults and validates") {
    const auto plan = load_experiment(R"({"experiments":[
        {"scenario":"scenario1","config":"II","replications":1000,"master_seed":7}]})");
    REQUIRE(plan.experiments.size() == 1);
    const auto& e = plan.experiments[0];
    CHECK(e.replications == 1000);
    CHECK(e.master_seed == 7);
    CHECK(e.config.lambda1 == 6);
    REQUIRE(e.specs.size() == 2);  // defaults: conditioning-ml and gain-ml
    CHECK(e.specs[0].approach == Approach::Conditioning);
    CHECK(e.specs[1].approach == Approach::Gain);

    CHECK_THROWS_AS(load_experiment("{}"), PlanError);
    CHECK_THROWS_AS(load_experiment(R"({"experiments":[]})"), PlanError);
    CHECK_THROWS_AS(load_experiment("not json"), PlanError);
    CHECK_THROWS_WITH(
        load_experiment(R"({"experiments":[{"overrides":{"cov_u12":2}}]})"),
        Catch::Matchers::ContainsSubstring("positive semidefinite"));
    CHECK_THROWS_WITH(load_experiment(R"({"experiments":[{"config":"IX"}]})"),
                      Catch::Matchers::ContainsSubstring("experiments[0].config"));
}

TEST_CASE("experiment plan round-trips through serialization") {
    ExperimentPlan plan = load_experiment(R"({"experiments":[
        {"scenario":"scenario2","config":"VI","cluster_size":4,"replications":50,
         "master_seed":99,
         "specs":[{"approach":"gain","estimator":"ols","cluster_mean":true}]},
        {"scenario":"scenario1","config":"I","replications":10,
         "overrides":{"tau":0.0,"beta2":24,"n_clusters":1,"cluster_size":1000}}]})");
    const std::string text = save_experiment(plan);
    const ExperimentPlan back = load_experiment(text);
    REQUIRE(back.experiments.size() == plan.experiments.size());
    for (std::size_t i = 0; i < plan.experiments.size(); ++i) {
        const auto &a = plan.experiments[i], &b = back.experiments[i];
        CHECK(a.replications == b.replications);
        CHECK(a.master_seed == b.master_seed);
        CHECK(a.specs == b.specs);
        CHECK(a.config.scenario == b.config.scenario);
        CHECK(a.config.tau == b.config.tau);
        CHECK(a.config.beta2 == b.config.beta2);
        CHECK(a.config.lambda1 == b.config.lambda1);
        CHECK(a.config.n_clusters == b.config.n_clusters);
        CHECK(a.config.cluster_size == b.config.cluster_size);
        CHECK(a.config.sorted_fraction == b.config.sorted_fraction);
    }
}

TEST_CASE("implied pre-test reliability of the error configurations") {
    const DgpConfig c = builtin_configuration(Scenario::IndividualTreatment, ConfigId::II, 100);
    const double rho = reliability_pretest(c.beta1, c.lambda1, c.var_ability, c.var_e);
    CHECK(rho == Catch::Approx(256.0 / 292.0).margin(1e-15));
    CHECK(rho == Catch::Approx(0.88).margin(0.005));  // rounded display value
}
