// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include "qposs/belief_space.hpp"
#include "qposs/errors.hpp"
#include "qposs/grid_bench.hpp"
#include "qposs/model_io.hpp"
#include "qposs/pi_mdp.hpp"
#include "qposs/pi_momdp.hpp"
#include "qposs/pi_pomdp.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#ifndef QPOSS_CLI
#error "QPOSS_CLI must name the command-line binary"
#endif

using namespace qposs;
using namespace qposs::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Collects failure messages for one criterion.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok && failures_.size() < 5)
            failures_.push_back(what);
        failed_ = failed_ || !ok;
    }
    bool ok() const { return !failed_; }
    std::string failures() const {
        std::string out;
        for (const auto& f : failures_)
            out += "\n    " + f;
        return out;
    }

private:
    bool failed_ = false;
    std::vector<std::string> failures_;
};

int g_failed = 0;

void report(int id, const char* title, const Check& c, const std::string& detail) {
    std::cout << (c.ok() ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " ("
              << detail << ")" << (c.ok() ? "" : c.failures()) << std::endl;
    if (!c.ok())
        ++g_failed;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Runs a shell command and returns its standard output and exit status.
std::pair<std::string, int> run_command(const std::string& cmd) {
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe)
        return {"", -1};
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0)
        out.append(buf, n);
    const int status = pclose(pipe);
    return {out, WIFEXITED(status) ? WEXITSTATUS(status) : -1};
}

std::string cli() { return QPOSS_CLI; }

std::filesystem::path scratch_dir() {
    auto dir = std::filesystem::temp_directory_path() / "qposs_acceptance";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string value_text(const ValueSolution& s) {
    std::string out;
    for (std::size_t i = 0; i < s.values.size(); ++i)
        out += std::to_string(s.values[i].index) + ":" + std::to_string(s.policy[i]) + ",";
    return out + std::to_string(s.iterations);
}

Level L(int i) { return Level{static_cast<std::uint16_t>(i)}; }

// Two states; action 0 (stay) self-loops, action 1 moves to s2; mu = (0, 1).
PiMdpModel two_state_model() {
    const double labels[] = {0, 1};
    const Level table[] = {L(1), L(0), L(0), L(1), L(0), L(1), L(0), L(1)};
    return PiMdpModel::from_dense(make_scale(labels), 2, 2, table, {L(0), L(1)}, ActionIndex{0});
}

// Records the bound and monotonicity facts checked under criterion 3.
struct BoundsLog {
    Check check;
    std::size_t instances = 0;

    // Monotonicity is checked up to the sweep bound, or up to `horizon` when given.
    void add(const PiMdpModel& m, std::size_t iterations, const std::string& tag,
             std::optional<std::size_t> horizon = std::nullopt) {
        ++instances;
        const auto bound = m.num_states() * m.scale().size();
        check.expect(iterations <= bound, tag + ": " + std::to_string(iterations) +
                                              " sweeps exceed " + std::to_string(bound));
        const auto p_max = std::min(bound, horizon.value_or(bound));
        auto fh = finite_horizon_solve(m, p_max);
        for (std::size_t p = 0; p < p_max; ++p)
            for (StateIndex s = 0; s < m.num_states(); ++s)
                check.expect(fh.values[p][s] <= fh.values[p + 1][s],
                             tag + ": finite-horizon value decreased at p=" + std::to_string(p));
    }
};

BoundsLog g_bounds;

void criterion_1() {
    Check c;
    auto m = two_state_model();
    value_iteration(m); // warm-up
    const auto t0 = Clock::now();
    auto sol = value_iteration(m, {PolicyUpdate::kOnStrictImprovement, Execution::kSerial});
    const double elapsed = seconds_since(t0);
    c.expect(sol.values == std::vector<Level>{L(1), L(1)}, "u* != (1, 1)");
    c.expect(sol.policy == StationaryPolicy{1, 0}, "policy != (b, stay)");
    auto mutated = value_iteration(m, {PolicyUpdate::kEverySweep, Execution::kSerial});
    c.expect(mutated.policy[0] == 0, "solver without the guard did not pick stay at s1");
    c.expect(elapsed < 1e-3, "solve took " + fmt("%.3g", elapsed) + " s");
    g_bounds.add(m, sol.iterations, "two-state");
    report(1, "two-state counterexample", c,
           "policy (b, stay), values (1, 1); unguarded solver picks stay at s1; " +
               fmt("%.1f", elapsed * 1e6) + " us");
}

void criterion_2() {
    Check c;
    Rng rng(2024);
    const auto t0 = Clock::now();
    const int instances = 250;
    for (int trial = 0; trial < instances; ++trial) {
        auto m = random_mdp(rng, {5, 3, 2, 4, true});
        const std::string tag = "mdp#" + std::to_string(trial);
        auto sol = value_iteration(m);
        auto widest = widest_path_values(m);
        const std::size_t n = m.num_states();
        for (StateIndex s = 0; s < n; ++s) {
            c.expect(lvl(sol.values[s]) == widest[s], tag + ": value differs from widest path");
            c.expect(lvl(sol.values[s]) ==
                         enumerate_best(m, s, std::max<std::size_t>(n - 1, 1), int(m.scale().k())),
                     tag + ": value differs from path enumeration");
            Level best{0};
            for (std::size_t p = 1; p <= n; ++p) {
                std::vector<StationaryPolicy> stages(p, sol.policy);
                best = std::max(best, evaluate_policy_optimistic(m, s, stages));
            }
            c.expect(best == sol.values[s], tag + ": policy does not attain u*");
        }
        g_bounds.add(m, sol.iterations, tag);
    }
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 5.0, "took " + fmt("%.2f", elapsed) + " s");
    report(2, "value iteration matches the oracles", c,
           std::to_string(instances) + " models, " + fmt("%.2f", elapsed) + " s");
}

// Every flat belief with support in exactly one visible column, as a seed set.
std::vector<PossibilityDistribution> factored_seeds(const PiMomdpModel& m) {
    std::vector<PossibilityDistribution> out;
    auto hidden = enumerate_hidden_beliefs(m);
    for (StateIndex v = 0; v < m.num_visible(); ++v)
        for (std::size_t i = 0; i < hidden.size(); ++i) {
            std::vector<Level> flat(m.num_visible() * m.num_hidden(), m.scale().bottom());
            for (StateIndex h = 0; h < m.num_hidden(); ++h)
                flat[m.state_index(v, h)] = hidden[i][h];
            out.emplace_back(std::move(flat), m.scale());
        }
    return out;
}

// Splits a flat belief into (visible, hidden) when it lives on one column.
std::optional<MixedBelief> factor(const PiMomdpModel& m, std::span<const Level> flat) {
    std::optional<StateIndex> column;
    for (StateIndex v = 0; v < m.num_visible(); ++v)
        for (StateIndex h = 0; h < m.num_hidden(); ++h)
            if (flat[m.state_index(v, h)] != m.scale().bottom()) {
                if (column && *column != v)
                    return std::nullopt;
                column = v;
            }
    if (!column)
        return std::nullopt;
    std::vector<Level> hidden(flat.begin() + m.state_index(*column, 0),
                              flat.begin() + m.state_index(*column, 0) + m.num_hidden());
    if (!is_normalized(hidden, m.scale()))
        return std::nullopt;
    return MixedBelief{*column, PossibilityDistribution(std::move(hidden), m.scale())};
}

void check_momdp(Check& c, const PiMomdpModel& m, const std::string& tag, std::size_t& beliefs) {
    auto flat = flatten_momdp_to_pomdp(m);

    // (a) beliefs reachable from the initial belief factor over the visible part.
    const PossibilityDistribution start[] = {flat.initial_belief()};
    for (const auto& b : reachable_beliefs(flat, start))
        c.expect(factor(m, b.values()).has_value(), tag + ": reachable belief does not factor");

    // (b) mixed value iteration agrees with the flat pipeline on reachable beliefs.
    auto seeds = factored_seeds(m);
    auto belief_mdp = flatten_pomdp_to_mdp_reachable(flat, seeds);
    c.expect(belief_mdp.mdp.stay_action().has_value(), tag + ": flat belief MDP lost stay");
    if (!belief_mdp.mdp.stay_action())
        return;
    auto flat_sol = value_iteration(belief_mdp.mdp);
    auto mixed_sol = momdp_value_iteration(m);
    for (StateIndex i = 0; i < belief_mdp.size(); ++i) {
        auto mb = factor(m, belief_mdp.belief(i));
        c.expect(mb.has_value(), tag + ": flat belief MDP state does not factor");
        if (!mb)
            continue;
        ++beliefs;
        c.expect(mixed_sol.value(*mb) == flat_sol.values[i],
                 tag + ": mixed and flat values differ");
    }
    g_bounds.add(belief_mdp.mdp, flat_sol.iterations, tag + " (flat)");
    auto mixed = build_mixed_belief_mdp(m);
    g_bounds.add(mixed.mdp, mixed_sol.iterations, tag + " (mixed)");
}

void criterion_4() {
    Check c;
    Rng rng(4048);
    const auto t0 = Clock::now();
    std::size_t beliefs = 0;
    const int instances = 60;
    for (int trial = 0; trial < instances; ++trial)
        check_momdp(c, random_momdp(rng, {3, 2, 3, 3, 3}), "momdp#" + std::to_string(trial),
                    beliefs);
    GridConfig cfg;
    cfg.g = 2;
    check_momdp(c, build_possibilistic_grid(cfg), "grid g=2", beliefs);
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 60.0, "took " + fmt("%.2f", elapsed) + " s");
    report(4, "mixed belief factorization and mixed/flat equivalence", c,
           std::to_string(instances) + " random models + g=2 grid, " + std::to_string(beliefs) +
               " reachable beliefs compared, " + fmt("%.2f", elapsed) + " s");
}

void criterion_3() {
    report(3, "finite-horizon monotonicity and sweep bound", g_bounds.check,
           std::to_string(g_bounds.instances) + " solved instances");
}

std::uint64_t pow_u(std::uint64_t b, std::uint64_t e) {
    std::uint64_t r = 1;
    while (e--)
        r *= b;
    return r;
}

// Value printed after `key` on its own line of CLI output.
std::optional<std::string> field(const std::string& text, const std::string& key) {
    auto pos = text.find(key);
    if (pos == std::string::npos)
        return std::nullopt;
    pos += key.size();
    return text.substr(pos, text.find('\n', pos) - pos);
}

void criterion_5() {
    Check c;
    const auto t0 = Clock::now();
    for (std::size_t levels = 2; levels <= 4; ++levels)
        for (std::size_t states = 1; states <= 3; ++states) {
            const auto formula = pow_u(levels, states) - pow_u(levels - 1, states);
            const auto scale = even_scale(levels);
            const std::string tag = "L=" + std::to_string(levels) + " S=" + std::to_string(states);
            c.expect(BeliefSpace(states, scale).size() == formula, tag + ": enumeration");
            c.expect(count_normalized(levels, states) == formula, tag + ": brute force");
            c.expect(belief_space_cardinality(levels, states) == formula, tag + ": closed form");
        }
    Rng rng(5);
    for (std::size_t levels = 2; levels <= 4; ++levels)
        for (std::size_t hidden = 1; hidden <= 3; ++hidden)
            for (int rep = 0; rep < 3; ++rep) {
                auto m = random_momdp(rng, {3, hidden, 2, 2, levels});
                const auto formula =
                    m.num_visible() * (pow_u(levels, hidden) - pow_u(levels - 1, hidden));
                c.expect(build_mixed_belief_mdp(m).mdp.num_states() == formula,
                         "mixed count L=" + std::to_string(levels) +
                             " H=" + std::to_string(hidden));
            }

    GridConfig cfg;
    cfg.g = 3;
    const auto path = scratch_dir() / "grid3.json";
    std::ofstream(path) << serialize_model(make_grid_document(cfg));
    auto [out, status] = run_command(cli() + " enumerate " + path.string() + " --levels 5");
    c.expect(status == 0, "enumerate exited with " + std::to_string(status));
    const auto mixed = field(out, "mixed belief states: ");
    const auto flat = field(out, "flat belief states: ");
    c.expect(mixed == std::to_string(9 * (2 * 5 - 1)), "mixed count " + mixed.value_or("missing"));
    double flat_count = 0;
    try {
        flat_count = std::stod(flat.value_or("0"));
    } catch (const std::exception&) {
    }
    c.expect(flat_count > 3.7e12, "flat count " + flat.value_or("missing"));
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 1.0, "took " + fmt("%.2f", elapsed) + " s");
    report(5, "belief-space cardinalities", c,
           "3x3 grid at 5 levels: mixed " + mixed.value_or("?") + ", flat " + flat.value_or("?") +
               ", " + fmt("%.3f", elapsed) + " s");
}

struct BenchmarkResults {
    std::string pbad_csv;
    std::string wrong_csv;
};

BenchmarkResults criterion_6() {
    Check c;
    GridConfig cfg;
    cfg.g = 10;
    cfg.d = 10;
    cfg.c = 4;
    cfg.p_bad = 0.8;
    const std::size_t runs = 10'000;
    const std::uint64_t seed = 20240601;

    const auto t0 = Clock::now();
    auto poss_model = build_possibilistic_grid(cfg);
    auto poss_solution = momdp_value_iteration(poss_model);
    const double solve_time = seconds_since(t0);
    c.expect(solve_time <= 10.0, "possibilistic solve took " + fmt("%.2f", solve_time) + " s");
    g_bounds.add(build_mixed_belief_mdp(poss_model).mdp, poss_solution.iterations, "grid g=10",
                 poss_solution.iterations + 2);

    auto solvers = solve_grid(cfg);
    c.expect(solvers.poss_solution.values == poss_solution.values, "grid solve not reproducible");

    const double pbad[] = {0.8};
    auto pbad_rows = sweep_pbad(cfg, solvers, pbad, runs, seed);
    const auto& a = pbad_rows.front();
    c.expect(*a.poss.mean > *a.prob.mean, "p_bad=0.8: possibilistic " + fmt("%.3f", *a.poss.mean) +
                                              " <= probabilistic " + fmt("%.3f", *a.prob.mean));

    // Above w = 1 - l1 / 2, with l1 the smallest positive scale level, the
    // possibilistic initial belief rules the true state out entirely.
    const double l1 = poss_model.scale().label(Level{1});
    const double degenerate_from = 1.0 - l1 / 2.0;
    const double wrongness[] = {0.9, 0.92, 0.94, 0.96};
    auto wrong_rows = sweep_initial_belief(cfg, solvers, wrongness, runs, seed);
    std::string wrong_detail;
    for (const auto& r : wrong_rows) {
        c.expect(r.parameter < degenerate_from, "w in the degenerate range");
        c.expect(*r.poss.mean >= *r.prob.mean,
                 "w=" + fmt("%g", r.parameter) + ": possibilistic " + fmt("%.3f", *r.poss.mean) +
                     " < probabilistic " + fmt("%.3f", *r.prob.mean));
        wrong_detail += " w=" + fmt("%g", r.parameter) + ": " + fmt("%.2f", *r.poss.mean) +
                        " vs " + fmt("%.2f", *r.prob.mean) + ";";
    }
    const double elapsed = seconds_since(t0);

    BenchmarkResults out;
    std::ostringstream p, w;
    write_sweep_csv(p, pbad_rows);
    write_sweep_csv(w, wrong_rows);
    out.pbad_csv = p.str();
    out.wrong_csv = w.str();

    report(6, "grid benchmark ordering", c,
           "solve " + fmt("%.2f", solve_time) + " s; p_bad=0.8: " + fmt("%.2f", *a.poss.mean) +
               " vs " + fmt("%.2f", *a.prob.mean) + ";" + wrong_detail + " total " +
               fmt("%.1f", elapsed) + " s");

    // Outside the checked range the possibilistic agent cannot revise its belief.
    const double beyond[] = {0.97, 0.99};
    auto info = sweep_initial_belief(cfg, solvers, beyond, 1000, seed);
    for (const auto& r : info)
        std::cout << "  info: w=" << fmt("%g", r.parameter) << " (beyond "
                  << fmt("%.4f", degenerate_from) << ", A1 ruled out initially): possibilistic "
                  << fmt("%.2f", *r.poss.mean) << " (" << r.poss.fallback_events
                  << " fallbacks, " << r.poss.capped_runs << " capped), probabilistic "
                  << fmt("%.2f", *r.prob.mean) << " over " << r.n_runs << " runs" << std::endl;
    return out;
}

void criterion_7(const BenchmarkResults& first) {
    Check c;

    // Library solves and reports repeat exactly, serial or parallel.
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        auto m = random_mdp(rng);
        auto a = value_iteration(m, {PolicyUpdate::kOnStrictImprovement, Execution::kParallel});
        auto b = value_iteration(m, {PolicyUpdate::kOnStrictImprovement, Execution::kSerial});
        c.expect(value_text(a) == value_text(b), "mdp solve differs between runs");
        auto mm = random_momdp(rng);
        auto x = momdp_value_iteration(mm);
        auto y = momdp_value_iteration(mm, {PolicyUpdate::kOnStrictImprovement, Execution::kSerial});
        c.expect(x.values == y.values && x.policy == y.policy, "momdp solve differs between runs");
    }

    GridConfig cfg;
    cfg.g = 10;
    auto solvers = solve_grid(cfg);
    const double pbad[] = {0.8};
    const double wrongness[] = {0.9, 0.92, 0.94, 0.96};
    std::ostringstream p, w;
    write_sweep_csv(p, sweep_pbad(cfg, solvers, pbad, 10'000, 20240601));
    write_sweep_csv(w, sweep_initial_belief(cfg, solvers, wrongness, 10'000, 20240601));
    c.expect(p.str() == first.pbad_csv, "p_bad sweep CSV differs between runs");
    c.expect(w.str() == first.wrong_csv, "wrongness sweep CSV differs between runs");

    GridConfig small;
    small.g = 4;
    auto s1 = solve_grid(small, {}, Execution::kSerial);
    const PossibilisticAgent agent(s1.poss_model, s1.poss_solution, s1.poss_model.initial().hidden);
    SimulationOptions opts;
    opts.n_runs = 500;
    opts.seed = 99;
    opts.execution = Execution::kSerial;
    auto r1 = simulate(small, agent, opts);
    opts.execution = Execution::kParallel;
    c.expect(simulate(small, agent, opts) == r1, "simulation differs between serial and parallel");

    // The command-line tool produces byte-identical output.
    const auto dir = scratch_dir();
    const auto model = dir / "grid3.json";
    const auto model2 = dir / "grid3_again.json";
    c.expect(run_command(cli() + " gen-grid --g 3 --out " + model.string()).second == 0,
             "gen-grid failed");
    c.expect(run_command(cli() + " gen-grid --g 3 --out " + model2.string()).second == 0,
             "gen-grid failed");
    c.expect(read_file(model) == read_file(model2), "gen-grid output differs between runs");
    const auto solve_cmd = cli() + " solve " + model.string() + " --infinite --json -";
    auto solve1 = run_command(solve_cmd);
    auto solve2 = run_command(solve_cmd);
    c.expect(solve1.second == 0 && solve1 == solve2, "solve output differs between runs");
    for (const char* sub : {"b1", "b2"}) {
        const auto out = dir / sub;
        std::filesystem::remove_all(out);
        auto r = run_command(cli() + " bench --g 6 --pbad-list 0.6,0.8 --wrongness-list 0.7,0.9 " +
                             "--runs 300 --seed 11 --out " + out.string());
        c.expect(r.second == 0, "bench failed");
    }
    for (const char* file : {"pbad_sweep.csv", "wrongness_sweep.csv"})
        c.expect(read_file(dir / "b1" / file) == read_file(dir / "b2" / file) &&
                     !read_file(dir / "b1" / file).empty(),
                 std::string(file) + " differs between runs");

    report(7, "determinism", c,
           "library solves, 10^4-run sweeps, simulations and CLI output repeat byte for byte");
}

} // namespace

int main() {
    try {
        criterion_1();
        criterion_2();
        criterion_4();
        criterion_5();
        auto bench = criterion_6();
        criterion_3();
        criterion_7(bench);
    } catch (const std::exception& e) {
        std::cout << "FAIL unexpected exception: " << e.what() << std::endl;
        return 1;
    }
    std::cout << (g_failed == 0 ? "all criteria passed" : std::to_string(g_failed) + " failed")
              << std::endl;
    return g_failed == 0 ? 0 : 1;
}
