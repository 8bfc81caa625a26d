#include "qposs/errors.hpp"
#include "qposs/grid_bench.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <random>
#include <string>

namespace qposs {

using namespace grid;

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class RunRng {
public:
    RunRng(std::uint64_t seed, std::uint64_t run) {
        std::uint64_t state = seed;
        const std::uint64_t a = splitmix64(state);
        state = a ^ (run * 0xd1b54a32d192ed03ULL);
        engine_.seed(splitmix64(state));
    }
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

class PossibilisticRun final : public AgentRun {
public:
    PossibilisticRun(const PiMomdpModel& model, const MixedValueSolution& solution,
                     MixedBelief belief)
        : model_(model), solution_(solution), belief_(std::move(belief)) {}

    ActionIndex act(StateIndex /*cell*/) override { return solution_.action(belief_); }

    void observe(ActionIndex a, StateIndex cell, ObservationIndex o) override {
        try {
            belief_ = mixed_belief_update(model_, belief_, a, cell, o);
        } catch (const ImpossibleObservationError&) {
            belief_.visible = cell;
            ++fallbacks_;
        }
    }

    std::size_t fallback_events() const noexcept override { return fallbacks_; }

private:
    const PiMomdpModel& model_;
    const MixedValueSolution& solution_;
    MixedBelief belief_;
    std::size_t fallbacks_ = 0;
};

// Keeps the exact Bayes posterior and snaps it to the policy grid on lookup.
class ProbabilisticRun final : public AgentRun {
public:
    ProbabilisticRun(const ProbGridModel& model, const ProbPolicy& policy, double prob_a1)
        : model_(model), policy_(policy), belief_(prob_a1) {}

    ActionIndex act(StateIndex cell) override {
        return policy_.action(cell, policy_.belief_index(belief_));
    }

    void observe(ActionIndex a, StateIndex cell, ObservationIndex o) override {
        const double j0 =
            model_.terminal(cell, kA1) ? 0.0 : belief_ * model_.observation(cell, kA1, a, o);
        const double j1 =
            model_.terminal(cell, kA2) ? 0.0 : (1.0 - belief_) * model_.observation(cell, kA2, a, o);
        if (!(j0 + j1 > 0.0)) {
            ++fallbacks_;
            return;
        }
        belief_ = j0 / (j0 + j1);
    }

    std::size_t fallback_events() const noexcept override { return fallbacks_; }

private:
    const ProbGridModel& model_;
    const ProbPolicy& policy_;
    double belief_;
    std::size_t fallbacks_ = 0;
};

struct RunOutcome {
    std::size_t steps = 0;
    bool capped = false;
    std::size_t fallbacks = 0;
};

RunOutcome run_episode(const GridConfig& cfg, const GridGeometry& geo, const GridAgent& agent,
                       const SimulationOptions& options, std::uint64_t run) {
    RunRng rng(options.seed, run);
    const StateIndex truth = options.fixed_truth
                                 ? *options.fixed_truth
                                 : (rng.uniform() < 0.5 ? StateIndex{kA1} : StateIndex{kA2});
    const Cell goal = geo.target(truth == kA1 ? 0 : 1);
    auto episode = agent.start();
    Cell cell = geo.start();
    RunOutcome out;
    while (out.steps < options.max_steps) {
        const ActionIndex a = episode->act(geo.index(cell));
        cell = geo.move(cell, a);
        ++out.steps;
        if (cell == goal) {
            out.fallbacks = episode->fallback_events();
            return out;
        }
        ObservationIndex o = kNothing;
        if (a != kStay) {
            const double u1 = rng.uniform();
            const double u2 = rng.uniform();
            o = sample_truth_observation(cfg, geo, geo.index(cell), truth, u1, u2);
        }
        episode->observe(a, geo.index(cell), o);
    }
    out.capped = true;
    out.fallbacks = episode->fallback_events();
    return out;
}

} // namespace

PossibilisticAgent::PossibilisticAgent(const PiMomdpModel& model,
                                       const MixedValueSolution& solution,
                                       PossibilityDistribution initial_hidden)
    : model_(&model), solution_(&solution), initial_hidden_(std::move(initial_hidden)) {
    if (initial_hidden_.size() != model.num_hidden())
        throw DimensionError("initial hidden belief has wrong length");
}

std::unique_ptr<AgentRun> PossibilisticAgent::start() const {
    return std::make_unique<PossibilisticRun>(
        *model_, *solution_, MixedBelief{model_->initial().visible, initial_hidden_});
}

ProbabilisticAgent::ProbabilisticAgent(const ProbGridModel& model, const ProbPolicy& policy,
                                       double initial_prob_a1)
    : model_(&model), policy_(&policy), initial_prob_a1_(initial_prob_a1) {
    if (!(initial_prob_a1 >= 0.0 && initial_prob_a1 <= 1.0))
        throw PreconditionError("initial probability must lie in [0, 1]");
}

std::unique_ptr<AgentRun> ProbabilisticAgent::start() const {
    return std::make_unique<ProbabilisticRun>(*model_, *policy_, initial_prob_a1_);
}

ObservationIndex sample_truth_observation(const GridConfig& cfg, const GridGeometry& geo,
                                          StateIndex cell, StateIndex truth, double u1,
                                          double u2) {
    const Cell c = geo.cell(cell);
    const double dist[2] = {geo.distance(c, geo.target(0)), geo.distance(c, geo.target(1))};
    const bool far = dist[0] > cfg.c && dist[1] > cfg.c;
    const double u[2] = {u1, u2};
    bool seen_b[2];
    for (int t = 0; t < 2; ++t) {
        double p_good = far ? 1.0 - cfg.p_bad : 0.5 * (1.0 + std::exp(-dist[t] / cfg.d));
        if (c == geo.target(t))
            p_good = 1.0;
        const bool is_b = truth == kA1 ? t == 1 : t == 0;
        seen_b[t] = u[t] < p_good ? is_b : !is_b;
    }
    return static_cast<ObservationIndex>((seen_b[0] ? 2 : 0) + (seen_b[1] ? 1 : 0));
}

SimulationReport simulate(const GridConfig& cfg, const GridAgent& agent,
                          const SimulationOptions& options) {
    cfg.validate();
    if (options.fixed_truth && *options.fixed_truth >= kNumHidden)
        throw PreconditionError("fixed truth must be A1 or A2");
    const GridGeometry geo(cfg.g);
    const std::size_t n = options.n_runs;
    std::vector<RunOutcome> outcomes(n);

    if (options.execution == Execution::kParallel) {
        std::exception_ptr failure;
        const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
        for (std::int64_t r = 0; r < count; ++r) {
            try {
                outcomes[r] = run_episode(cfg, geo, agent, options, std::uint64_t(r));
            } catch (...) {
#pragma omp critical
                failure = std::current_exception();
            }
        }
        if (failure)
            std::rethrow_exception(failure);
    } else {
        for (std::size_t r = 0; r < n; ++r)
            outcomes[r] = run_episode(cfg, geo, agent, options, r);
    }

    SimulationReport report;
    report.steps.reserve(n);
    report.rewards.reserve(n);
    for (const auto& o : outcomes) {
        report.steps.push_back(o.steps);
        report.rewards.push_back(cfg.reward_goal - double(o.steps) * cfg.step_cost);
        report.fallback_events += o.fallbacks;
        report.capped_runs += o.capped ? 1 : 0;
    }
    if (n > 0) {
        double sum = 0.0;
        for (double r : report.rewards)
            sum += r;
        const double mean = sum / double(n);
        double sq = 0.0;
        for (double r : report.rewards)
            sq += (r - mean) * (r - mean);
        report.mean = mean;
        report.stddev = std::sqrt(sq / double(n));
    }
    return report;
}

GridSolvers solve_grid(const GridConfig& cfg, const BaselineOptions& baseline,
                       Execution execution) {
    auto poss_model = build_possibilistic_grid(cfg);
    auto poss_solution = momdp_value_iteration(
        poss_model, ValueIterationOptions{PolicyUpdate::kOnStrictImprovement, execution});
    auto prob_model = build_probabilistic_grid(cfg);
    auto prob_policy = solve_prob_baseline(prob_model, baseline);
    return GridSolvers{std::move(poss_model), std::move(poss_solution), std::move(prob_model),
                       std::move(prob_policy)};
}

PossibilityDistribution wrong_initial_belief(const QualitativeScale& scale, double wrongness) {
    if (!(wrongness >= 0.5 && wrongness < 1.0))
        throw PreconditionError("wrongness must lie in [0.5, 1)");
    const double cut = 2.0 * (1.0 - wrongness);
    Level a1 = scale.bottom();
    for (std::size_t i = 0; i < scale.size(); ++i) {
        const Level l{static_cast<std::uint16_t>(i)};
        if (scale.label(l) <= cut + 1e-12)
            a1 = l;
    }
    std::vector<Level> values(kNumHidden);
    values[kA1] = a1;
    values[kA2] = scale.top();
    return PossibilityDistribution(std::move(values), scale);
}

std::vector<SweepRow> sweep_pbad(const GridConfig& cfg, const GridSolvers& solvers,
                                 std::span<const double> pbad_values, std::size_t n_runs,
                                 std::uint64_t seed, std::size_t max_steps) {
    const PossibilisticAgent poss(solvers.poss_model, solvers.poss_solution,
                                  PossibilityDistribution::ignorance(kNumHidden,
                                                                     solvers.poss_model.scale()));
    const ProbabilisticAgent prob(solvers.prob_model, solvers.prob_policy, 0.5);
    std::vector<SweepRow> rows;
    for (double p : pbad_values) {
        GridConfig point = cfg;
        point.p_bad = p;
        SimulationOptions options;
        options.seed = seed;
        options.n_runs = n_runs;
        options.max_steps = max_steps;
        rows.push_back({p, simulate(point, poss, options), simulate(point, prob, options), n_runs,
                        seed});
    }
    return rows;
}

std::vector<SweepRow> sweep_pbad(const GridConfig& cfg, std::span<const double> pbad_values,
                                 std::size_t n_runs, std::uint64_t seed, std::size_t max_steps) {
    return sweep_pbad(cfg, solve_grid(cfg), pbad_values, n_runs, seed, max_steps);
}

std::vector<SweepRow> sweep_initial_belief(const GridConfig& cfg, const GridSolvers& solvers,
                                           std::span<const double> wrongness,
                                           std::size_t n_runs, std::uint64_t seed,
                                           std::size_t max_steps) {
    std::vector<SweepRow> rows;
    for (double w : wrongness) {
        const PossibilisticAgent poss(solvers.poss_model, solvers.poss_solution,
                                      wrong_initial_belief(solvers.poss_model.scale(), w));
        const ProbabilisticAgent prob(solvers.prob_model, solvers.prob_policy, 1.0 - w);
        SimulationOptions options;
        options.seed = seed;
        options.n_runs = n_runs;
        options.max_steps = max_steps;
        options.fixed_truth = kA1;
        rows.push_back({w, simulate(cfg, poss, options), simulate(cfg, prob, options), n_runs,
                        seed});
    }
    return rows;
}

std::vector<SweepRow> sweep_initial_belief(const GridConfig& cfg,
                                           std::span<const double> wrongness,
                                           std::size_t n_runs, std::uint64_t seed,
                                           std::size_t max_steps) {
    return sweep_initial_belief(cfg, solve_grid(cfg), wrongness, n_runs, seed, max_steps);
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "sweep_parameter,poss_mean_reward,poss_std,prob_mean_reward,prob_std,"
           "poss_fallback_count,capped_runs_poss,capped_runs_prob,n_runs,seed\n";
    for (const auto& r : rows) {
        if (r.n_runs == 0 || !r.poss.mean || !r.prob.mean)
            continue;
        out << fmt(r.parameter) << ',' << fmt(*r.poss.mean) << ',' << fmt(*r.poss.stddev) << ','
            << fmt(*r.prob.mean) << ',' << fmt(*r.prob.stddev) << ',' << r.poss.fallback_events
            << ',' << r.poss.capped_runs << ',' << r.prob.capped_runs << ',' << r.n_runs << ','
            << r.seed << '\n';
    }
}

} // namespace qposs
