// Miniature end-to-end run: generate a short dataset, train a small policy,
// evaluate a four-entry roster on two held-out days, and print the table
// that `ewhbench evaluate` would write to report.csv. Finishes in well under
// a minute on one core.
#include <cstdio>

#include "ewhbench/bench.hpp"

using namespace ewhbench;

int main() {
    ExperimentConfig cfg;
    cfg.seed = 21;
    cfg.total_days = 9;
    cfg.train_days = 7;
    cfg.num_scenarios = 3;
    cfg.scenario_source = ScenarioSource::kmeans;
    cfg.roster = parse_roster("prdb,es,pf:30,opt");
    cfg.es.pairs = 8;
    cfg.es.iterations = 40;
    cfg.mpc_node_limit = 5;
    cfg.opt_node_limit = 20;

    const EvalReport rep = run_experiment(cfg);

    std::printf("training fitness: policy %.4f, reactive deadband %.4f\n\n",
                rep.es_train_fitness, rep.prdb_train_fitness);
    std::printf("%-8s %4s %10s %10s\n", "ctrl", "day", "cost", "fallbacks");
    for (const EvalRow& r : rep.rows)
        std::printf("%-8s %4d %10.4f %10ld\n", r.controller.c_str(), r.day, r.cost,
                    r.fallbacks);
    std::printf("\n%-8s %12s %12s\n", "ctrl", "mean_cost", "median_cost");
    for (const ControllerAggregate& a : aggregate_report(rep))
        std::printf("%-8s %12.4f %12.4f\n", a.controller.c_str(), a.mean_cost,
                    a.median_cost);
    return 0;
}
