#include "qposs/pi_mdp.hpp"

#include "kernels/bellman_sweep.hpp"
#include "qposs/errors.hpp"

#include <algorithm>
#include <string>

namespace qposs {

PiMdpModel::PiMdpModel(QualitativeScale scale, std::size_t num_states, std::size_t num_actions,
                       std::vector<std::vector<Successor>> rows, std::vector<Level> preference,
                       std::optional<ActionIndex> stay_action)
    : scale_(std::move(scale)), num_states_(num_states), num_actions_(num_actions),
      preference_(std::move(preference)), stay_action_(stay_action) {
    if (num_states_ == 0 || num_actions_ == 0)
        throw ModelError("model needs at least one state and one action");
    if (rows.size() != num_states_ * num_actions_)
        throw DimensionError("transition table has " + std::to_string(rows.size()) +
                             " rows, expected " + std::to_string(num_states_ * num_actions_));
    if (preference_.size() != num_states_)
        throw DimensionError("preference has wrong length");
    for (Level l : preference_)
        if (!scale_.contains(l))
            throw ModelError("preference level outside the scale");

    offsets_.reserve(rows.size() + 1);
    offsets_.push_back(0);
    for (std::size_t row = 0; row < rows.size(); ++row) {
        auto& succ = rows[row];
        const std::size_t s = row / num_actions_;
        const std::size_t a = row % num_actions_;
        for (const Successor& e : succ) {
            if (e.state >= num_states_)
                throw ModelError("transition row (s=" + std::to_string(s) + ", a=" +
                                 std::to_string(a) + ") references an unknown state");
            if (!scale_.contains(e.possibility))
                throw ModelError("transition level outside the scale");
        }
        std::sort(succ.begin(), succ.end(),
                  [](const Successor& x, const Successor& y) { return x.state < y.state; });
        Level row_max{0};
        const std::size_t first = entries_.size();
        for (const Successor& e : succ) {
            row_max = std::max(row_max, e.possibility);
            if (e.possibility == scale_.bottom())
                continue;
            if (entries_.size() > first && entries_.back().state == e.state)
                entries_.back().possibility = std::max(entries_.back().possibility, e.possibility);
            else
                entries_.push_back(e);
        }
        if (row_max != scale_.top())
            throw ModelError("transition row (s=" + std::to_string(s) + ", a=" +
                             std::to_string(a) + ") not normalized");
        offsets_.push_back(entries_.size());
    }

    if (stay_action_) {
        if (*stay_action_ >= num_actions_)
            throw ModelError("stay action index out of range");
        for (StateIndex s = 0; s < num_states_; ++s) {
            auto row = successors(s, *stay_action_);
            if (row.size() != 1 || row[0].state != s || row[0].possibility != scale_.top())
                throw ModelError("stay action does not keep state " + std::to_string(s) +
                                 " in place with possibility 1");
        }
    }
}

PiMdpModel PiMdpModel::from_dense(QualitativeScale scale, std::size_t num_states,
                                  std::size_t num_actions, std::span<const Level> table,
                                  std::vector<Level> preference,
                                  std::optional<ActionIndex> stay_action) {
    if (table.size() != num_states * num_actions * num_states)
        throw DimensionError("dense transition table has wrong size");
    std::vector<std::vector<Successor>> rows(num_states * num_actions);
    for (std::size_t row = 0; row < rows.size(); ++row)
        for (std::size_t next = 0; next < num_states; ++next) {
            Level p = table[row * num_states + next];
            if (p != Level{0})
                rows[row].push_back({static_cast<StateIndex>(next), p});
        }
    return PiMdpModel(std::move(scale), num_states, num_actions, std::move(rows),
                      std::move(preference), stay_action);
}

Level PiMdpModel::possibility(StateIndex s, ActionIndex a, StateIndex next) const noexcept {
    auto row = successors(s, a);
    auto it = std::lower_bound(row.begin(), row.end(), next,
                               [](const Successor& e, StateIndex v) { return e.state < v; });
    if (it != row.end() && it->state == next)
        return it->possibility;
    return Level{0};
}

FiniteHorizonSolution finite_horizon_solve(const PiMdpModel& model, std::size_t horizon,
                                           Execution execution) {
    const std::size_t n = model.num_states();
    FiniteHorizonSolution out;
    out.values.reserve(horizon + 1);
    out.values.emplace_back(model.preference().begin(), model.preference().end());
    out.policy.assign(horizon, StationaryPolicy(n, 0));
    for (std::size_t i = 1; i <= horizon; ++i) {
        std::vector<Level> next(n);
        kernels::bellman_sweep(execution, model, out.values.back(), next,
                               out.policy[horizon - i]);
        out.values.push_back(std::move(next));
    }
    return out;
}

ValueSolution value_iteration(const PiMdpModel& model, const ValueIterationOptions& options) {
    if (!model.stay_action())
        throw PreconditionError("value iteration requires a stay action");
    const std::size_t n = model.num_states();
    const std::size_t bound = n * model.scale().size();

    std::vector<Level> current(n, model.scale().bottom());
    std::vector<Level> candidate(model.preference().begin(), model.preference().end());
    StationaryPolicy policy(n, *model.stay_action());
    StationaryPolicy greedy(n, 0);

    std::size_t iterations = 0;
    while (current != candidate) {
        if (++iterations > bound)
            throw InvariantError("value iteration exceeded " + std::to_string(bound) +
                                 " sweeps; the stay action assumption is violated");
        current.swap(candidate);
        kernels::bellman_sweep(options.execution, model, current, candidate, greedy);
        for (std::size_t s = 0; s < n; ++s) {
            if (options.policy_update == PolicyUpdate::kEverySweep || candidate[s] > current[s])
                policy[s] = greedy[s];
        }
    }
    return {std::move(current), std::move(policy), iterations};
}

namespace {

bool pow_within(std::uint64_t base, std::size_t exponent, std::uint64_t cap) {
    std::uint64_t acc = 1;
    for (std::size_t i = 0; i < exponent; ++i) {
        if (base != 0 && acc > cap / base)
            return false;
        acc *= base;
    }
    return acc <= cap;
}

// Exhaustive walk over every trajectory (s_1, ..., s_p), including those with
// possibility 0; `reach` is the running min of transition possibilities.
Level enumerate_trajectories(const PiMdpModel& model, std::span<const StationaryPolicy> policy,
                             std::size_t stage, StateIndex s, Level reach) {
    if (stage == policy.size())
        return std::min(reach, model.preference(s));
    Level best{0};
    const ActionIndex a = policy[stage][s];
    for (StateIndex next = 0; next < model.num_states(); ++next) {
        Level step = std::min(reach, model.possibility(s, a, next));
        best = std::max(best, enumerate_trajectories(model, policy, stage + 1, next, step));
    }
    return best;
}

} // namespace

Level evaluate_policy_optimistic(const PiMdpModel& model, StateIndex s0,
                                 std::span<const StationaryPolicy> policy, EvaluationMode mode,
                                 std::uint64_t enumeration_cap) {
    if (policy.empty())
        throw PreconditionError("policy must have at least one stage");
    if (s0 >= model.num_states())
        throw DimensionError("initial state out of range");
    for (const auto& rule : policy) {
        if (rule.size() != model.num_states())
            throw DimensionError("decision rule has wrong length");
        for (ActionIndex a : rule)
            if (a >= model.num_actions())
                throw DimensionError("decision rule references an unknown action");
    }

    if (mode == EvaluationMode::kAuto)
        mode = pow_within(model.num_states(), policy.size(), enumeration_cap)
                   ? EvaluationMode::kEnumerate
                   : EvaluationMode::kStageDp;

    if (mode == EvaluationMode::kEnumerate)
        return enumerate_trajectories(model, policy, 0, s0, model.scale().top());

    std::vector<Level> value(model.preference().begin(), model.preference().end());
    std::vector<Level> next(value.size());
    for (std::size_t t = policy.size(); t-- > 0;) {
        for (StateIndex s = 0; s < model.num_states(); ++s) {
            Level best{0};
            for (const Successor& e : model.successors(s, policy[t][s]))
                best = std::max(best, std::min(e.possibility, value[e.state]));
            next[s] = best;
        }
        value.swap(next);
    }
    return value[s0];
}

} // namespace qposs
