// Serial vs OpenMP timings of the solver kernels on the g x g grid.

#include "qposs/grid_bench.hpp"
#include "qposs/pi_momdp.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <omp.h>

namespace {

using namespace qposs;

double best_of(std::size_t reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void report(const char* name, double serial, double parallel) {
    std::printf("%-28s %10.3f ms %10.3f ms %7.2fx\n", name, serial, parallel, serial / parallel);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kernel timings", "qposs_bench"};
    int g = 10;
    std::size_t reps = 3;
    std::size_t runs = 2000;
    app.add_option("--g", g, "grid side length")->capture_default_str();
    app.add_option("--reps", reps, "repetitions, best time reported")->capture_default_str();
    app.add_option("--runs", runs, "simulation runs")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    GridConfig cfg;
    cfg.g = g;
    cfg.validate();
    std::printf("threads: %d, grid %dx%d\n", omp_get_max_threads(), g, g);
    std::printf("%-28s %13s %13s %8s\n", "kernel", "serial", "parallel", "speedup");

    auto model = build_possibilistic_grid(cfg);
    auto time_build = [&](Execution e) {
        return best_of(reps, [&] { build_mixed_belief_mdp(model, e); });
    };
    report("mixed belief-MDP build", time_build(Execution::kSerial),
           time_build(Execution::kParallel));

    auto mixed = build_mixed_belief_mdp(model);
    auto time_vi = [&](Execution e) {
        return best_of(reps, [&] {
            value_iteration(mixed.mdp, {PolicyUpdate::kOnStrictImprovement, e});
        });
    };
    report("possibilistic value iter.", time_vi(Execution::kSerial), time_vi(Execution::kParallel));

    auto prob = build_probabilistic_grid(cfg);
    auto time_baseline = [&](Execution e) {
        BaselineOptions options;
        options.execution = e;
        return best_of(reps, [&] { solve_prob_baseline(prob, options); });
    };
    report("baseline value iteration", time_baseline(Execution::kSerial),
           time_baseline(Execution::kParallel));

    auto solvers = solve_grid(cfg);
    PossibilisticAgent agent(solvers.poss_model, solvers.poss_solution,
                             PossibilityDistribution::ignorance(2, solvers.poss_model.scale()));
    auto time_sim = [&](Execution e) {
        SimulationOptions options;
        options.n_runs = runs;
        options.execution = e;
        return best_of(reps, [&] { simulate(cfg, agent, options); });
    };
    report("simulation (possibilistic)", time_sim(Execution::kSerial),
           time_sim(Execution::kParallel));
    return 0;
}
