#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qposs/errors.hpp"
#include "qposs/grid_bench.hpp"

#include <cmath>
#include <sstream>

using namespace qposs;
using namespace qposs::grid;

namespace {

GridConfig small(int g) {
    GridConfig cfg;
    cfg.g = g;
    return cfg;
}

std::size_t count_lines(const std::string& text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

} // namespace

TEST_CASE("configuration validation") {
    CHECK_NOTHROW(GridConfig{}.validate());
    auto bad = [](auto edit) {
        GridConfig cfg;
        edit(cfg);
        return cfg;
    };
    CHECK_THROWS_AS(bad([](GridConfig& c) { c.g = 1; }).validate(), PreconditionError);
    CHECK_THROWS_AS(bad([](GridConfig& c) { c.g = 129; }).validate(), PreconditionError);
    CHECK_THROWS_AS(bad([](GridConfig& c) { c.d = 0; }).validate(), PreconditionError);
    CHECK_THROWS_AS(bad([](GridConfig& c) { c.p_bad = 1.5; }).validate(), PreconditionError);
    CHECK_THROWS_AS(bad([](GridConfig& c) { c.gamma = 1.0; }).validate(), PreconditionError);
}

TEST_CASE("grid geometry") {
    const GridGeometry geo(10);
    CHECK(geo.num_cells() == 100);
    CHECK(geo.target(0) == Cell{1, 10});
    CHECK(geo.target(1) == Cell{10, 1});
    CHECK(geo.index(Cell{1, 1}) == 0);
    CHECK(geo.index(Cell{2, 1}) == 10);
    for (StateIndex i = 0; i < geo.num_cells(); ++i)
        CHECK(geo.index(geo.cell(i)) == i);
    CHECK(geo.move({1, 1}, kNorth) == Cell{1, 2});
    CHECK(geo.move({1, 1}, kEast) == Cell{2, 1});
    CHECK(geo.move({1, 1}, kSouth) == Cell{1, 1});
    CHECK(geo.move({1, 1}, kWest) == Cell{1, 1});
    CHECK(geo.move({10, 10}, kNorth) == Cell{10, 10});
    CHECK(geo.move({4, 4}, kStay) == Cell{4, 4});
    CHECK(geo.squared_distance({1, 1}, {4, 5}) == 25);
    CHECK(geo.distance({1, 1}, {4, 5}) == doctest::Approx(5.0));
}

TEST_CASE("possibilistic grid model") {
    for (int g : {2, 3, 5, 10}) {
        auto m = build_possibilistic_grid(small(g));
        const GridGeometry geo(g);
        const auto& s = m.scale();
        CHECK(m.num_visible() == geo.num_cells());
        CHECK(m.num_hidden() == 2);
        CHECK(m.num_actions() == 5);
        CHECK(m.num_hidden_observations() == 5);
        CHECK(s.label(s.bottom()) == 0.0);
        CHECK(s.label(s.top()) == 1.0);
        CHECK(m.initial().visible == geo.index(geo.start()));
        CHECK(m.initial().hidden == PossibilityDistribution::ignorance(2, s));

        // At target 1's cell under A1 (target 1 is A), misreading target 1 is impossible.
        const auto t1 = m.state_index(geo.index(geo.target(0)), kA1);
        auto row = m.hidden_observation_row(t1, kNorth);
        CHECK(row[kAB] == s.top());
        CHECK(row[kBB] == s.bottom());
        CHECK(row[kAA] == s.top()); // target 2 is a full diagonal away
        // At target 2's cell, target 1 sits in the opposite corner.
        const auto t2 = m.state_index(geo.index(geo.target(1)), kA1);
        CHECK(m.hidden_observation_row(t2, kEast)[kBB] == s.top());
        CHECK(m.hidden_observation_row(t2, kEast)[kAA] == s.bottom());
        CHECK(m.hidden_observation_row(t2, kEast)[kBA] == s.bottom());

        for (StateIndex st = 0; st < m.num_visible() * 2; ++st)
            for (ActionIndex a = 0; a < m.num_actions(); ++a) {
                auto r = m.hidden_observation_row(st, a);
                CHECK(is_normalized(r, s));
                if (a == kStay) {
                    CHECK(r[kNothing] == s.top());
                    CHECK(max_level(r.first(kNothing)) == s.bottom());
                } else {
                    CHECK(r[kNothing] == s.bottom());
                }
            }
        CHECK(m.preference(geo.index(geo.target(0)), kA1) == s.top());
        CHECK(m.preference(geo.index(geo.target(1)), kA2) == s.top());
        CHECK(m.preference(geo.index(geo.target(0)), kA2) == s.bottom());
    }
    CHECK(build_possibilistic_grid(small(3)).scale().size() == 6);
}

TEST_CASE("probabilistic grid model") {
    const ProbGridModel m(small(10));
    const auto& geo = m.geometry();
    CHECK(m.good(geo.index(geo.target(0)), 0) == doctest::Approx(1.0));
    CHECK(m.good(0, 0) == doctest::Approx(0.5 * (1 + std::exp(-0.9))));
    for (StateIndex v = 0; v < geo.num_cells(); ++v)
        for (StateIndex h = 0; h < 2; ++h)
            for (ActionIndex a = 0; a < kNumActions; ++a) {
                double sum = 0;
                for (ObservationIndex o = 0; o < kNumObservations; ++o) {
                    CHECK(m.observation(v, h, a, o) >= 0.0);
                    sum += m.observation(v, h, a, o);
                }
                CHECK(std::abs(sum - 1.0) < 1e-9);
            }
    const auto t1 = geo.index(geo.target(0));
    const auto t2 = geo.index(geo.target(1));
    CHECK(m.reward(t1, kA1) == 99.0);
    CHECK(m.reward(t1, kA2) == -101.0);
    CHECK(m.reward(0, kA1) == -1.0);
    CHECK(m.terminal(t1, kA1));
    CHECK_FALSE(m.terminal(t1, kA2));
    CHECK(m.terminal(t2, kA2));
}

TEST_CASE("baseline with a certain belief walks a shortest path") {
    const ProbGridModel m(small(6));
    auto policy = solve_prob_baseline(m);
    CHECK(policy.residual < 1e-6);
    const auto& geo = m.geometry();
    const std::size_t certain = policy.resolution - 1;
    CHECK(policy.belief_index(1.0) == certain);
    CHECK(policy.belief_index(0.0) == 0);
    CHECK(policy.belief_index(0.5) == policy.resolution / 2);
    for (StateIndex v = 0; v < geo.num_cells(); ++v) {
        Cell c = geo.cell(v);
        if (c == geo.target(0))
            continue;
        const int expected = std::abs(c.x - 1) + std::abs(c.y - geo.g());
        int steps = 0;
        while (!(c == geo.target(0)) && steps < 100) {
            c = geo.move(c, policy.action(geo.index(c), certain));
            ++steps;
        }
        CHECK(steps == expected);
    }
}

TEST_CASE("baseline values are symmetric under the diagonal swap") {
    const ProbGridModel m(small(5));
    BaselineOptions opts;
    opts.resolution = 101;
    auto policy = solve_prob_baseline(m, opts);
    const auto& geo = m.geometry();
    for (StateIndex v = 0; v < geo.num_cells(); ++v) {
        const Cell c = geo.cell(v);
        const StateIndex mirror = geo.index(Cell{c.y, c.x});
        for (std::size_t b = 0; b < policy.resolution; ++b)
            CHECK(std::abs(policy.value(v, b) - policy.value(mirror, policy.resolution - 1 - b)) <
                  1e-4);
    }
}

TEST_CASE("baseline edge cases") {
    const ProbGridModel m(small(3));
    BaselineOptions opts;
    opts.resolution = 2;
    auto policy = solve_prob_baseline(m, opts);
    CHECK(policy.values.size() == 9 * 2);
    opts.resolution = 1;
    CHECK_THROWS_AS(solve_prob_baseline(m, opts), PreconditionError);
    opts.resolution = 51;
    opts.max_iterations = 2;
    CHECK_THROWS_AS(solve_prob_baseline(m, opts), NonConvergenceError);
    opts.max_iterations = 100000;
    opts.execution = Execution::kSerial;
    auto serial = solve_prob_baseline(m, opts);
    opts.execution = Execution::kParallel;
    auto parallel = solve_prob_baseline(m, opts);
    CHECK(serial.values == parallel.values);
    CHECK(serial.actions == parallel.actions);
}

TEST_CASE("truth observation sampling") {
    GridConfig cfg = small(10);
    const GridGeometry geo(10);
    const StateIndex middle = geo.index(Cell{5, 5});
    cfg.p_bad = 0.0;
    CHECK(sample_truth_observation(cfg, geo, middle, kA1, 0.5, 0.5) == kAB);
    CHECK(sample_truth_observation(cfg, geo, middle, kA2, 0.5, 0.5) == kBA);
    cfg.p_bad = 1.0;
    CHECK(sample_truth_observation(cfg, geo, middle, kA1, 0.5, 0.5) == kBA);
    // A target's own cell reveals it even when every reading is bad far away.
    const StateIndex t1 = geo.index(geo.target(0));
    for (double u : {0.0, 0.3, 0.999}) {
        CHECK(sample_truth_observation(cfg, geo, t1, kA1, u, 0.0) == kAB);
        CHECK(sample_truth_observation(cfg, geo, t1, kA2, u, 0.0) == kBA);
    }
}

TEST_CASE("wrong initial belief") {
    auto s = build_possibilistic_grid(small(10)).scale();
    CHECK(wrong_initial_belief(s, 0.5) == PossibilityDistribution::ignorance(2, s));
    auto b = wrong_initial_belief(s, 0.9);
    CHECK(b.values()[kA2] == s.top());
    CHECK(s.label(b.values()[kA1]) <= 0.2 + 1e-12);
    CHECK(s.label(b.values()[kA1]) > 0.0);
    CHECK(wrong_initial_belief(s, 0.99).values()[kA1] == s.bottom());
    CHECK_THROWS_AS(wrong_initial_belief(s, 1.0), PreconditionError);
    CHECK_THROWS_AS(wrong_initial_belief(s, 0.4), PreconditionError);
}

TEST_CASE("simulation reports") {
    const auto cfg = small(5);
    auto solvers = solve_grid(cfg);
    const PossibilisticAgent poss(solvers.poss_model, solvers.poss_solution,
                                  solvers.poss_model.initial().hidden);
    const ProbabilisticAgent prob(solvers.prob_model, solvers.prob_policy, 0.5);

    SimulationOptions opts;
    opts.seed = 7;
    opts.n_runs = 0;
    auto empty = simulate(cfg, poss, opts);
    CHECK(empty.n_runs() == 0);
    CHECK_FALSE(empty.mean.has_value());
    CHECK_FALSE(empty.stddev.has_value());

    opts.n_runs = 300;
    for (const GridAgent* agent : {static_cast<const GridAgent*>(&poss),
                                   static_cast<const GridAgent*>(&prob)}) {
        opts.execution = Execution::kParallel;
        auto a = simulate(cfg, *agent, opts);
        opts.execution = Execution::kSerial;
        auto b = simulate(cfg, *agent, opts);
        CHECK(a == b);
        CHECK(a == simulate(cfg, *agent, opts));
        REQUIRE(a.n_runs() == 300);
        double sum = 0, sq = 0;
        std::size_t capped = 0;
        for (std::size_t i = 0; i < a.n_runs(); ++i) {
            CHECK(a.rewards[i] == 100.0 - double(a.steps[i]));
            CHECK(a.steps[i] >= 1);
            CHECK(a.steps[i] <= opts.max_steps);
            capped += a.steps[i] == opts.max_steps;
            sum += a.rewards[i];
        }
        const double mean = sum / 300.0;
        for (double r : a.rewards)
            sq += (r - mean) * (r - mean);
        CHECK(*a.mean == doctest::Approx(mean));
        CHECK(*a.stddev == doctest::Approx(std::sqrt(sq / 300.0)));
        CHECK(a.capped_runs == capped);
        opts.seed = 8;
        CHECK_FALSE(simulate(cfg, *agent, opts) == a);
        opts.seed = 7;
    }

    opts.fixed_truth = kA2;
    opts.max_steps = 3;
    auto capped = simulate(cfg, poss, opts);
    CHECK(capped.capped_runs == 300);
    for (double r : capped.rewards)
        CHECK(r == 97.0);
}

TEST_CASE("sweep CSV output") {
    const auto cfg = small(4);
    auto solvers = solve_grid(cfg);
    const double pbads[] = {0.5, 0.9};
    std::ostringstream none;
    write_sweep_csv(none, sweep_pbad(cfg, solvers, pbads, 0, 3));
    CHECK(none.str() ==
          "sweep_parameter,poss_mean_reward,poss_std,prob_mean_reward,prob_std,"
          "poss_fallback_count,capped_runs_poss,capped_runs_prob,n_runs,seed\n");

    auto rows = sweep_pbad(cfg, solvers, pbads, 50, 3);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].parameter == 0.5);
    CHECK(rows[1].n_runs == 50);
    CHECK(rows[1].seed == 3);
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    CHECK(count_lines(csv.str()) == 3);
    std::istringstream in(csv.str());
    std::string line;
    while (std::getline(in, line))
        CHECK(std::count(line.begin(), line.end(), ',') == 9);
    CHECK(csv.str().find("\n0.9,") != std::string::npos);

    const double ws[] = {0.5, 0.9};
    auto wrong = sweep_initial_belief(cfg, solvers, ws, 40, 3);
    REQUIRE(wrong.size() == 2);
    CHECK(wrong[0].poss.n_runs() == 40);
    CHECK(sweep_initial_belief(cfg, ws, 40, 3)[1].prob == wrong[1].prob);
}
