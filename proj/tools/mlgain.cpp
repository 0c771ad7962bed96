// Command-line front end: simulation runs, results-table reproduction and
// the closed-form bias/reliability calculators.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mlgain/analytics.hpp"
#include "mlgain/config.hpp"
#include "mlgain/dgp.hpp"
#include "mlgain/harness.hpp"
#include "mlgain/report.hpp"

namespace {

using namespace mlgain;

struct SimulateOptions {
    std::string scenario = "scenario1";
    std::string config = "I";
    int cluster_size = 100;
    int k = 1000;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out;
    std::string estimator = "ml";
    bool with_cluster_mean = false;
    std::string plan_file;
};

struct TableOptions {
    int table = 3;
    int cluster_size = 100;
    int k = 1000;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out = "results";
};

struct BiasOptions {
    std::string formula = "binary";
    double tau = 2, alpha = 1, delta = std::log(0.2 / 0.8);
    double beta1 = 16, beta2 = 16, lambda1 = 0, lambda2 = 0;
    double var_z = 1;
};

struct ReliabilityOptions {
    bool cluster_mean = false;
    int n = 100;
    double beta1 = 16, lambda1 = 6, var_a = 1, var_e = 1;
    double beta_b = 16, var_b = 0, var_u1 = 1;
};

struct DumpOptions {
    std::string scenario = "scenario1";
    std::string config = "I";
    int cluster_size = 100;
    std::uint64_t seed = 1;
    std::string out = "dataset.csv";
};

EstimatorKind parse_estimator(const std::string& s) {
    if (s == "ml") return EstimatorKind::RandomInterceptMl;
    if (s == "ols") return EstimatorKind::Ols;
    throw CLI::ValidationError("--estimator", "expected 'ols' or 'ml'");
}

DgpConfig resolve_config(const std::string& scenario, const std::string& config,
                         int cluster_size, ConfigId* id_out = nullptr) {
    const auto sc = parse_scenario(scenario);
    if (!sc) throw CLI::ValidationError("--scenario", "expected scenario1 or scenario2");
    const auto id = parse_config_id(config);
    if (!id) throw CLI::ValidationError("--config", "expected a label I..VIII");
    if (id_out) *id_out = *id;
    return builtin_configuration(*sc, *id, cluster_size);
}

int run_simulate(const SimulateOptions& opt) {
    ExperimentPlan plan;
    if (!opt.plan_file.empty()) {
        std::ifstream is(opt.plan_file);
        if (!is) {
            std::cerr << "error: cannot read plan file " << opt.plan_file << '\n';
            return 2;
        }
        std::stringstream buf;
        buf << is.rdbuf();
        plan = load_experiment(buf.str());
    } else {
        ExperimentEntry entry;
        ConfigId id;
        entry.config = resolve_config(opt.scenario, opt.config, opt.cluster_size, &id);
        entry.config_id = id;
        entry.replications = opt.k;
        entry.master_seed = opt.seed;
        const EstimatorKind est = parse_estimator(opt.estimator);
        entry.specs = {{Approach::Conditioning, opt.with_cluster_mean, est},
                       {Approach::Gain, opt.with_cluster_mean, est}};
        plan.experiments.push_back(std::move(entry));
    }

    std::vector<McSummary> all;
    std::vector<ReplicationRecord> log;
    for (const auto& e : plan.experiments) {
        McRunResult res =
            run_mc(e.config, e.specs, e.replications, e.master_seed, opt.jobs, e.config_id);
        all.insert(all.end(), res.summaries.begin(), res.summaries.end());
        log.insert(log.end(), res.records.begin(), res.records.end());
    }
    std::cout << render_summaries_text(all);
    if (!opt.out.empty()) {
        const std::filesystem::path dir(opt.out);
        atomic_write(dir / "summary.csv", render_summaries_csv(all));
        atomic_write(dir / "summary.txt", render_summaries_text(all));
        atomic_write(dir / "summary.json", render_summaries_json(all));
        atomic_write(dir / "replications.csv", render_replication_log(log));
    }
    return 0;
}

int run_table(const TableOptions& opt) {
    if (opt.table != 3 && opt.table != 4) {
        std::cerr << "error: --table must be 3 or 4\n";
        return 1;
    }
    const TableId id = opt.table == 3 ? TableId::Table3 : TableId::Table4;
    const TableResult res = reproduce_table(id, opt.cluster_size, opt.k, opt.seed, opt.jobs);
    std::cout << render_table_text(res);
    const std::filesystem::path dir(opt.out);
    const std::string stem =
        "table" + std::to_string(opt.table) + "_n" + std::to_string(opt.cluster_size);
    atomic_write(dir / (stem + ".csv"), render_table_csv(res));
    atomic_write(dir / (stem + ".txt"), render_table_text(res));
    return 0;
}

int run_bias(const BiasOptions& opt) {
    BiasPrediction p;
    if (opt.formula == "continuous" || opt.formula == "eq5" || opt.formula == "eq13") {
        p = bias_conditioning_continuous(opt.tau, opt.alpha, opt.beta1, opt.beta2, opt.lambda1,
                                         opt.lambda2, opt.var_z);
    } else if (opt.formula == "binary" || opt.formula == "eq10" || opt.formula == "eq14") {
        p = bias_conditioning_binary(opt.tau, opt.alpha, opt.delta, opt.beta1, opt.beta2,
                                     opt.lambda1, opt.lambda2);
    } else if (opt.formula == "gain") {
        p = bias_gain_binary(opt.tau, opt.alpha, opt.delta, opt.beta1, opt.beta2);
    } else {
        std::cerr << "error: unknown --formula '" << opt.formula
                  << "' (expected continuous, binary or gain)\n";
        return 1;
    }
    std::cout.precision(12);
    std::cout << "formula:              " << to_string(p.formula_id) << '\n'
              << "expected_coefficient: " << p.expected_coefficient << '\n'
              << "bias:                 " << p.bias << '\n';
    return 0;
}

int run_reliability(const ReliabilityOptions& opt) {
    std::cout.precision(12);
    if (opt.cluster_mean) {
        std::cout << reliability_cluster_mean(opt.beta_b, opt.var_b, opt.var_u1, opt.lambda1,
                                              opt.var_e, opt.n)
                  << '\n';
    } else {
        std::cout << reliability_pretest(opt.beta1, opt.lambda1, opt.var_a, opt.var_e) << '\n';
    }
    return 0;
}

int run_dump(const DumpOptions& opt) {
    const DgpConfig config = resolve_config(opt.scenario, opt.config, opt.cluster_size);
    const Dataset data = make_dataset(config, opt.seed);
    std::ostringstream os;
    write_dataset(data, os);
    atomic_write(opt.out, os.str());
    std::cout << "wrote " << data.size() << " rows to " << opt.out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Seeded Monte Carlo laboratory for pre-test/post-test treatment-effect "
                 "estimation in two-level data"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* c_sim = app.add_subcommand("simulate", "Run a Monte Carlo experiment");
    c_sim->add_option("--scenario", sim.scenario, "scenario1 (individual) or scenario2 (cluster)")
        ->capture_default_str();
    c_sim->add_option("--config", sim.config, "configuration label I..VIII")->capture_default_str();
    c_sim->add_option("--n", sim.cluster_size, "cluster size")->capture_default_str();
    c_sim->add_option("--k", sim.k, "number of replications")->capture_default_str();
    c_sim->add_option("--seed", sim.seed, "master seed")->capture_default_str();
    c_sim->add_option("--jobs", sim.jobs, "worker threads")->capture_default_str();
    c_sim->add_option("--out", sim.out, "output directory (omit to print only)");
    c_sim->add_option("--estimator", sim.estimator, "ols or ml")->capture_default_str();
    c_sim->add_flag("--with-cluster-mean", sim.with_cluster_mean,
                    "add the cluster mean of the pre-test as a regressor");
    c_sim->add_option("--plan", sim.plan_file, "JSON experiment plan (overrides other options)");

    TableOptions tab;
    auto* c_tab = app.add_subcommand("reproduce-table", "Reproduce a full results table");
    c_tab->add_option("--table", tab.table, "3 or 4")->capture_default_str();
    c_tab->add_option("--n", tab.cluster_size, "cluster size")->capture_default_str();
    c_tab->add_option("--k", tab.k, "number of replications")->capture_default_str();
    c_tab->add_option("--seed", tab.seed, "master seed")->capture_default_str();
    c_tab->add_option("--jobs", tab.jobs, "worker threads")->capture_default_str();
    c_tab->add_option("--out", tab.out, "output directory")->capture_default_str();

    BiasOptions bias;
    auto* c_bias = app.add_subcommand("bias", "Evaluate a closed-form bias prediction");
    c_bias->add_option("--formula", bias.formula, "continuous, binary or gain")
        ->capture_default_str();
    c_bias->add_option("--tau", bias.tau)->capture_default_str();
    c_bias->add_option("--alpha", bias.alpha)->capture_default_str();
    c_bias->add_option("--delta", bias.delta)->capture_default_str();
    c_bias->add_option("--beta1", bias.beta1)->capture_default_str();
    c_bias->add_option("--beta2", bias.beta2)->capture_default_str();
    c_bias->add_option("--lambda1", bias.lambda1)->capture_default_str();
    c_bias->add_option("--lambda2", bias.lambda2)->capture_default_str();
    c_bias->add_option("--var-z", bias.var_z, "treatment variance (continuous formula)")
        ->capture_default_str();

    ReliabilityOptions rel;
    auto* c_rel = app.add_subcommand("reliability", "Evaluate a reliability formula");
    c_rel->add_flag("--cluster-mean", rel.cluster_mean,
                    "reliability of the cluster mean instead of the individual pre-test");
    c_rel->add_option("--n", rel.n, "cluster size (cluster-mean form)")->capture_default_str();
    c_rel->add_option("--beta1", rel.beta1)->capture_default_str();
    c_rel->add_option("--lambda1", rel.lambda1)->capture_default_str();
    c_rel->add_option("--var-a", rel.var_a)->capture_default_str();
    c_rel->add_option("--var-e", rel.var_e)->capture_default_str();
    c_rel->add_option("--beta-b", rel.beta_b, "between-level ability effect")
        ->capture_default_str();
    c_rel->add_option("--var-b", rel.var_b, "between-cluster ability variance")
        ->capture_default_str();
    c_rel->add_option("--var-u1", rel.var_u1)->capture_default_str();

    DumpOptions dump;
    auto* c_dump = app.add_subcommand("dump-dataset", "Write one simulated dataset as CSV");
    c_dump->add_option("--scenario", dump.scenario)->capture_default_str();
    c_dump->add_option("--config", dump.config)->capture_default_str();
    c_dump->add_option("--n", dump.cluster_size)->capture_default_str();
    c_dump->add_option("--seed", dump.seed)->capture_default_str();
    c_dump->add_option("--out", dump.out, "output file")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (c_sim->parsed()) return run_simulate(sim);
        if (c_tab->parsed()) return run_table(tab);
        if (c_bias->parsed()) return run_bias(bias);
        if (c_rel->parsed()) return run_reliability(rel);
        if (c_dump->parsed()) return run_dump(dump);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
