// lcdb: simulate data, run causal estimators under stability selection,
// evaluate predictions against knockout ground truth, query graph oracles.

#include <iostream>

#include "CLI11.hpp"
#include "lcdb/cli.hpp"

namespace {

using namespace lcdb;

template <class F>
int guarded(F&& f) {
    try {
        return f();
    } catch (const cli::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return cli::kUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return cli::kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal discovery with LCD / ICP estimators on pooled observational and knockout data"};
    app.require_subcommand(1);

    cli::SimulateOptions sim;
    std::string fixture;
    auto* simulate = app.add_subcommand("simulate", "Simulate a dataset and write <out>.tsv plus <out>.graph");
    simulate->add_option("--fixture", fixture, "Fixture graph")->check(CLI::IsMember(fixture_names()));
    simulate->add_option("--p", sim.p, "Number of genes (random panel)");
    simulate->add_option("--edge-prob", sim.edge_prob, "Edge probability (random panel)");
    simulate->add_option("--weight-low", sim.weight_low, "Smallest absolute edge weight");
    simulate->add_option("--weight-high", sim.weight_high, "Largest absolute edge weight");
    simulate->add_option("--noise-low", sim.noise_low, "Smallest noise standard deviation");
    simulate->add_option("--noise-high", sim.noise_high, "Largest noise standard deviation");
    simulate->add_option("--intercept-low", sim.intercept_low, "Smallest baseline level");
    simulate->add_option("--intercept-high", sim.intercept_high, "Largest baseline level");
    simulate->add_option("--interventions", sim.interventions, "Knockout rows, one per distinct target");
    simulate->add_option("--n-obs", sim.n_obs, "Observational rows");
    simulate->add_option("--n-int", sim.n_int, "Context rows (fixtures)");
    simulate->add_option("--seed", sim.seed, "Random seed");
    simulate->add_option("--out", sim.out, "Output prefix")->required();

    cli::RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Run an estimator under stability selection");
    std::vector<std::string> names(kEstimatorNames.begin(), kEstimatorNames.end());
    run_cmd->add_option("--estimator", run.estimator, "Estimator")->required()->check(CLI::IsMember(names));
    run_cmd->add_option("--alpha", run.alpha, "Test level")->capture_default_str();
    run_cmd->add_option("--subsamples", run.subsamples, "Stability subsamples")->capture_default_str();
    run_cmd->add_option("--fraction", run.fraction, "Subsample fraction")->capture_default_str();
    run_cmd->add_option("--max-vars", run.max_vars, "Boosting preselection size")->capture_default_str();
    run_cmd->add_option("--mstop", run.mstop, "Boosting iterations")->capture_default_str();
    run_cmd->add_option("--nu", run.nu, "Boosting step size")->capture_default_str();
    run_cmd->add_flag("!--no-stop-if-empty", run.stop_if_empty, "Scan every ICP subset");
    run_cmd->add_option("--seed", run.seed, "Subsampling seed");
    run_cmd->add_option("--threads", run.threads, "Worker threads (0 = all cores)")->capture_default_str();
    run_cmd->add_option("--folds", run.folds, "Number of folds (0 = train on everything)");
    run_cmd->add_option("--fold-seed", run.fold_seed, "Fold assignment seed");
    run_cmd->add_option("--test-fold", run.test_fold, "Held-out fold");
    run_cmd->add_option("--table", run.table, "Expression table")->required();
    run_cmd->add_option("--out", run.out, "Prediction file")->required();

    cli::EvaluateOptions eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score per-fold predictions against knockout ground truth");
    eval_cmd->add_option("predictions", eval.predictions, "Prediction files, one per test fold")->required();
    eval_cmd->add_option("--table", eval.table, "Expression table")->required();
    eval_cmd->add_option("--folds", eval.folds, "Number of folds")->capture_default_str();
    eval_cmd->add_option("--fold-seed", eval.fold_seed, "Fold assignment seed");
    eval_cmd->add_option("--prevalence", eval.prevalences, "Prevalence levels")->capture_default_str();
    eval_cmd->add_option("--confidence", eval.confidence, "Random band confidence")->capture_default_str();
    eval_cmd->add_option("--max-fpr", eval.max_fpr, "Partial AUC limit")->capture_default_str();
    eval_cmd->add_option("--grid", eval.grid, "Band grid size")->capture_default_str();
    eval_cmd->add_option("--out", eval.out, "Output prefix")->required();

    cli::OracleOptions oracle;
    std::string ancestors_of;
    auto* oracle_cmd = app.add_subcommand("oracle", "d-separation and ancestor queries on a graph sidecar");
    oracle_cmd->add_option("--graph", oracle.graph, "Graph file")->required();
    auto* dsep = oracle_cmd->add_option("--dsep", oracle.dsep, "Two nodes")->expected(2);
    oracle_cmd->add_option("--given", oracle.given, "Conditioning nodes")->needs(dsep);
    oracle_cmd->add_option("--ancestors", ancestors_of, "Node")->excludes(dsep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kUsage;
    }

    if (*simulate) {
        if (!fixture.empty()) sim.fixture = fixture;
        return guarded([&] { return cli::cmd_simulate(sim); });
    }
    if (*run_cmd) return guarded([&] { return cli::cmd_run(run); });
    if (*eval_cmd) return guarded([&] { return cli::cmd_evaluate(eval); });
    if (!ancestors_of.empty()) oracle.ancestors_of = ancestors_of;
    return guarded([&] {
        std::cout << cli::cmd_oracle(oracle);
        return static_cast<int>(cli::kOk);
    });
}
