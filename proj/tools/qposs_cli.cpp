#include "qposs/belief_space.hpp"
#include "qposs/errors.hpp"
#include "qposs/grid_bench.hpp"
#include "qposs/model_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace qposs;
using Json = nlohmann::ordered_json;

enum ExitCode { kOk = 0, kUsage = 1, kValidation = 2, kSolver = 3 };

struct Row {
    std::string state;
    std::string value;
    std::string action;
};

struct SolveReport {
    std::string mode;
    std::size_t horizon = 0;
    std::optional<std::size_t> iterations;
    std::vector<Row> rows;
    std::optional<Row> initial;
};

std::string belief_text(const QualitativeScale& scale, std::span<const Level> belief) {
    std::string out = "[";
    for (std::size_t i = 0; i < belief.size(); ++i) {
        if (i)
            out += ",";
        out += format_label(scale.label(belief[i]));
    }
    return out + "]";
}

std::string value_text(const QualitativeScale& scale, Level l) {
    return format_label(scale.label(l));
}

// Values and first-stage actions of a plain MDP under the requested mode.
struct MdpResult {
    std::vector<Level> values;
    std::vector<std::optional<ActionIndex>> actions;
    std::optional<std::size_t> iterations;
};

MdpResult solve_mdp(const PiMdpModel& mdp, std::optional<std::size_t> horizon) {
    MdpResult out;
    if (horizon) {
        auto sol = finite_horizon_solve(mdp, *horizon);
        out.values = sol.values.back();
        out.actions.resize(mdp.num_states());
        if (*horizon > 0)
            for (std::size_t s = 0; s < mdp.num_states(); ++s)
                out.actions[s] = sol.policy.front()[s];
    } else {
        auto sol = value_iteration(mdp);
        out.values = sol.values;
        out.iterations = sol.iterations;
        out.actions.assign(sol.policy.begin(), sol.policy.end());
    }
    return out;
}

SolveReport solve_document(const ModelDocument& doc, std::optional<std::size_t> horizon) {
    SolveReport report;
    report.mode = horizon ? "horizon" : "infinite";
    report.horizon = horizon.value_or(0);
    const auto& scale = doc.scale();
    const auto& names = doc.names;
    auto action_name = [&](std::optional<ActionIndex> a) {
        return a ? names.actions[*a] : std::string("-");
    };

    switch (doc.kind()) {
    case ModelKind::kPiMdp: {
        const auto& m = std::get<PiMdpModel>(doc.model);
        if (!horizon && !m.stay_action())
            throw PreconditionError("--infinite requires a stay action in the model");
        auto r = solve_mdp(m, horizon);
        report.iterations = r.iterations;
        for (std::size_t s = 0; s < m.num_states(); ++s)
            report.rows.push_back(
                {names.states[s], value_text(scale, r.values[s]), action_name(r.actions[s])});
        break;
    }
    case ModelKind::kPiPomdp: {
        const auto& m = std::get<PiPomdpModel>(doc.model);
        if (!horizon && (!m.stay_action() || !m.stay_observation()))
            throw PreconditionError(
                "--infinite requires a stay action and a stay observation in the model");
        auto flat = flatten_pomdp_to_mdp(m);
        auto r = solve_mdp(flat.mdp, horizon);
        report.iterations = r.iterations;
        for (std::size_t i = 0; i < flat.size(); ++i)
            report.rows.push_back({belief_text(scale, flat.belief(i)),
                                   value_text(scale, r.values[i]), action_name(r.actions[i])});
        if (auto i0 = flat.find(m.initial_belief().values()))
            report.initial = report.rows[*i0];
        break;
    }
    case ModelKind::kPiMomdp: {
        const auto& m = std::get<PiMomdpModel>(doc.model);
        if (!horizon && (!m.stay_action() || !m.stay_observation()))
            throw PreconditionError(
                "--infinite requires a stay action and a stay observation in the model");
        auto mixed = build_mixed_belief_mdp(m);
        auto r = solve_mdp(mixed.mdp, horizon);
        report.iterations = r.iterations;
        const auto& beliefs = mixed.hidden_beliefs;
        for (StateIndex v = 0; v < m.num_visible(); ++v)
            for (std::size_t bi = 0; bi < beliefs.size(); ++bi) {
                const auto s = mixed.state(v, bi);
                report.rows.push_back({names.visible[v] + " " + belief_text(scale, beliefs[bi]),
                                       value_text(scale, r.values[s]), action_name(r.actions[s])});
            }
        if (auto b0 = beliefs.index_of(m.initial().hidden.values()))
            report.initial = report.rows[mixed.state(m.initial().visible, *b0)];
        break;
    }
    }
    return report;
}

Json report_json(const ModelDocument& doc, const SolveReport& r) {
    Json out;
    out["kind"] = std::string(to_string(doc.kind()));
    out["mode"] = r.mode;
    if (r.mode == "horizon")
        out["horizon"] = r.horizon;
    if (r.iterations)
        out["iterations"] = *r.iterations;
    Json rows = Json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"state", row.state}, {"value", row.value}, {"action", row.action}});
    out["rows"] = std::move(rows);
    if (r.initial)
        out["initial"] = {{"state", r.initial->state},
                          {"value", r.initial->value},
                          {"action", r.initial->action}};
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text) || !out.flush())
        throw IoError("cannot write '" + path + "'");
}

std::string cardinality_text(std::uint64_t levels, std::uint64_t states) {
    if (auto exact = belief_space_cardinality(levels, states))
        return std::to_string(*exact);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", belief_space_cardinality_approx(levels, states));
    return buf;
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size())
            throw CLI::ValidationError(flag, "'" + item + "' is not a number");
        out.push_back(v);
    }
    return out;
}

struct GridFlags {
    GridConfig cfg;
    void add(CLI::App* app) {
        app->add_option("--g", cfg.g, "grid side length")->capture_default_str();
        app->add_option("--d", cfg.d, "observation range of the probabilistic model")
            ->capture_default_str();
        app->add_option("--c", cfg.c, "truth-model proximity threshold")->capture_default_str();
        app->add_option("--p-bad", cfg.p_bad, "truth-model misreading probability far away")
            ->capture_default_str();
    }
};

void summary_line(const char* name, const SweepRow& row) {
    auto num = [](const std::optional<double>& v) {
        char buf[32];
        if (!v)
            return std::string("n/a");
        std::snprintf(buf, sizeof buf, "%.6g", *v);
        return std::string(buf);
    };
    std::cout << name << "=" << format_label(row.parameter) << " poss=" << num(row.poss.mean)
              << " (sd " << num(row.poss.stddev) << ") prob=" << num(row.prob.mean) << " (sd "
              << num(row.prob.stddev) << ") fallbacks=" << row.poss.fallback_events
              << " capped=" << row.poss.capped_runs << "/" << row.prob.capped_runs << "\n";
}

void validate_flags(const GridConfig& cfg) {
    try {
        cfg.validate();
    } catch (const PreconditionError& e) {
        throw CLI::ValidationError("grid", e.what());
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Qualitative possibilistic (PO/MO)MDP solvers and grid benchmark", "qposs"};
    app.require_subcommand(1);

    auto* solve = app.add_subcommand("solve", "solve a model file");
    std::string solve_path;
    std::size_t horizon = 0;
    std::string json_path;
    solve->add_option("model", solve_path, "model file")->required();
    auto* horizon_opt = solve->add_option("--horizon", horizon, "finite horizon p");
    auto* infinite_flag = solve->add_flag("--infinite", "infinite-horizon value iteration");
    horizon_opt->excludes(infinite_flag);
    solve->add_option("--json", json_path, "write a JSON dump to this path ('-' for stdout)");
    bool solve_summary = false;
    solve->add_flag("--summary", solve_summary, "print only the initial-belief row and counts");

    auto* enumerate = app.add_subcommand("enumerate", "belief-space statistics of a model");
    std::string enum_path;
    std::size_t levels_override = 0;
    enumerate->add_option("model", enum_path, "model file")->required();
    enumerate->add_option("--levels", levels_override,
                          "evaluate the closed forms with this number of levels")
        ->check(CLI::Range(std::size_t{2}, std::size_t{65535}));

    auto* gen = app.add_subcommand("gen-grid", "write the possibilistic grid model");
    GridFlags gen_flags;
    std::string gen_out = "-";
    gen->add_option("--g", gen_flags.cfg.g, "grid side length")->capture_default_str();
    gen->add_option("--out", gen_out, "output path ('-' for stdout)")->capture_default_str();

    auto* bench = app.add_subcommand("bench", "run the reward sweeps and write CSV files");
    GridFlags bench_flags;
    bench_flags.add(bench);
    std::string pbad_list, wrongness_list, bench_out = ".";
    std::size_t runs = 10000, max_steps = 400;
    std::uint64_t seed = 1;
    bench->add_option("--pbad-list", pbad_list, "comma-separated p_bad values");
    bench->add_option("--wrongness-list", wrongness_list,
                      "comma-separated initial-belief wrongness values in [0.5, 1)");
    bench->add_option("--runs", runs, "simulations per sweep point")->capture_default_str();
    bench->add_option("--seed", seed, "base seed")->capture_default_str();
    bench->add_option("--max-steps", max_steps, "step cap per run")->capture_default_str();
    bench->add_option("--out", bench_out, "output directory")->capture_default_str();

    auto* sim = app.add_subcommand("simulate", "simulate both agents at one configuration");
    GridFlags sim_flags;
    sim_flags.add(sim);
    std::size_t sim_runs = 1000, sim_max_steps = 400;
    std::uint64_t sim_seed = 1;
    std::optional<double> sim_wrongness;
    sim->add_option("--runs", sim_runs, "number of runs")->capture_default_str();
    sim->add_option("--seed", sim_seed, "base seed")->capture_default_str();
    sim->add_option("--max-steps", sim_max_steps, "step cap per run")->capture_default_str();
    sim->add_option("--wrongness", sim_wrongness,
                    "fix the truth to A1 and start from a wrong initial belief");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*solve) {
            if (!*horizon_opt && !*infinite_flag) {
                std::cerr << "solve: one of --horizon or --infinite is required\n";
                return kUsage;
            }
            auto doc = load_model(solve_path);
            auto report = solve_document(
                doc, *horizon_opt ? std::optional<std::size_t>(horizon) : std::nullopt);
            std::cout << "kind: " << to_string(doc.kind()) << "\n";
            if (report.mode == "horizon")
                std::cout << "horizon: " << report.horizon << "\n";
            else
                std::cout << "converged after " << *report.iterations << " iterations\n";
            std::cout << "states: " << report.rows.size() << "\n";
            if (report.initial)
                std::cout << "initial: " << report.initial->state << " value "
                          << report.initial->value << " action " << report.initial->action << "\n";
            if (!solve_summary) {
                std::cout << "state\tvalue\taction\n";
                for (const auto& r : report.rows)
                    std::cout << r.state << "\t" << r.value << "\t" << r.action << "\n";
            }
            if (!json_path.empty())
                write_text(json_path, report_json(doc, report).dump(2) + "\n");
        } else if (*enumerate) {
            auto doc = load_model(enum_path);
            const std::uint64_t model_levels = doc.scale().size();
            const std::uint64_t levels = levels_override ? levels_override : model_levels;
            std::cout << "kind: " << to_string(doc.kind()) << "\n";
            std::cout << "levels: " << levels;
            if (levels != model_levels)
                std::cout << " (model scale has " << model_levels << ")";
            std::cout << "\n";
            switch (doc.kind()) {
            case ModelKind::kPiMdp:
                std::cout << "fully observable; belief space = state space ("
                          << std::get<PiMdpModel>(doc.model).num_states() << " states)\n";
                break;
            case ModelKind::kPiPomdp: {
                const auto& m = std::get<PiPomdpModel>(doc.model);
                std::cout << "flat belief states: " << cardinality_text(levels, m.num_states())
                          << "\n";
                break;
            }
            case ModelKind::kPiMomdp: {
                const auto& m = std::get<PiMomdpModel>(doc.model);
                const auto per_visible = belief_space_cardinality(levels, m.num_hidden());
                std::cout << "hidden beliefs per visible state: "
                          << cardinality_text(levels, m.num_hidden()) << "\n";
                std::string mixed;
                if (per_visible) {
                    std::uint64_t total = 0;
                    if (!__builtin_mul_overflow(*per_visible, std::uint64_t(m.num_visible()),
                                                &total))
                        mixed = std::to_string(total);
                }
                if (mixed.empty()) {
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "%.6e",
                                  double(m.num_visible()) *
                                      belief_space_cardinality_approx(levels, m.num_hidden()));
                    mixed = buf;
                }
                std::cout << "mixed belief states: " << mixed << "\n";
                std::cout << "flat belief states: "
                          << cardinality_text(levels, m.num_visible() * m.num_hidden()) << "\n";
                break;
            }
            }
        } else if (*gen) {
            validate_flags(gen_flags.cfg);
            write_text(gen_out, serialize_model(make_grid_document(gen_flags.cfg)));
        } else if (*bench) {
            auto pbads = pbad_list.empty() ? std::vector<double>{} : parse_list(pbad_list, "--pbad-list");
            auto wrong = wrongness_list.empty() ? std::vector<double>{}
                                                : parse_list(wrongness_list, "--wrongness-list");
            for (double w : wrong)
                if (!(w >= 0.5 && w < 1.0))
                    throw CLI::ValidationError("--wrongness-list", "values must lie in [0.5, 1)");
            for (double p : pbads)
                if (!(p >= 0.0 && p <= 1.0))
                    throw CLI::ValidationError("--pbad-list", "values must lie in [0, 1]");
            validate_flags(bench_flags.cfg);
            std::filesystem::create_directories(bench_out);
            auto solvers = solve_grid(bench_flags.cfg);
            std::cout << "solved: possibilistic " << solvers.poss_solution.iterations
                      << " sweeps, baseline " << solvers.prob_policy.iterations << " sweeps\n";
            auto emit = [&](const char* name, const char* file, const std::vector<SweepRow>& rows) {
                for (const auto& r : rows)
                    summary_line(name, r);
                std::ostringstream csv;
                write_sweep_csv(csv, rows);
                const auto path = (std::filesystem::path(bench_out) / file).string();
                write_text(path, csv.str());
                std::cout << "wrote " << path << "\n";
            };
            if (!pbad_list.empty())
                emit("p_bad", "pbad_sweep.csv",
                     sweep_pbad(bench_flags.cfg, solvers, pbads, runs, seed, max_steps));
            if (!wrongness_list.empty())
                emit("wrongness", "wrongness_sweep.csv",
                     sweep_initial_belief(bench_flags.cfg, solvers, wrong, runs, seed, max_steps));
        } else if (*sim) {
            validate_flags(sim_flags.cfg);
            auto solvers = solve_grid(sim_flags.cfg);
            SweepRow row;
            if (sim_wrongness) {
                const double w[] = {*sim_wrongness};
                row = sweep_initial_belief(sim_flags.cfg, solvers, w, sim_runs, sim_seed,
                                           sim_max_steps)
                          .front();
                summary_line("wrongness", row);
            } else {
                const double p[] = {sim_flags.cfg.p_bad};
                row = sweep_pbad(sim_flags.cfg, solvers, p, sim_runs, sim_seed, sim_max_steps)
                          .front();
                summary_line("p_bad", row);
            }
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kValidation;
    } catch (const UnknownLabelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const ModelError& e) {
        std::cerr << "invalid model: " << e.what() << "\n";
        return kValidation;
    } catch (const DimensionError& e) {
        std::cerr << "invalid model: " << e.what() << "\n";
        return kValidation;
    } catch (const InvalidScaleError& e) {
        std::cerr << "invalid scale: " << e.what() << "\n";
        return kValidation;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const Error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kSolver;
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    return run(argc, argv);
}
