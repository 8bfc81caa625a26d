#include "qposs/pi_momdp.hpp"

#include "qposs/errors.hpp"

#include <algorithm>
#include <exception>
#include <string>

namespace qposs {

PiMomdpModel::PiMomdpModel(QualitativeScale scale, std::size_t num_visible,
                           std::size_t num_hidden, std::size_t num_actions,
                           std::size_t num_hidden_observations,
                           std::vector<std::vector<Successor>> transition_rows,
                           std::vector<Level> hidden_observation, std::vector<Level> preference,
                           MixedBelief initial, std::optional<ActionIndex> stay_action,
                           std::optional<ObservationIndex> stay_observation)
    : dynamics_(std::move(scale), num_visible * num_hidden, num_actions,
                std::move(transition_rows), std::move(preference), stay_action),
      num_visible_(num_visible), num_hidden_(num_hidden),
      num_hidden_observations_(num_hidden_observations),
      hidden_observation_(std::move(hidden_observation)), initial_(std::move(initial)),
      stay_observation_(stay_observation) {
    const auto& sc = dynamics_.scale();
    const std::size_t num_states = num_visible_ * num_hidden_;
    if (num_hidden_observations_ == 0)
        throw ModelError("model needs at least one hidden observation");
    if (hidden_observation_.size() != num_states * num_actions * num_hidden_observations_)
        throw DimensionError("hidden observation table has wrong size");
    for (Level l : hidden_observation_)
        if (!sc.contains(l))
            throw ModelError("observation level outside the scale");
    for (StateIndex s = 0; s < num_states; ++s)
        for (ActionIndex a = 0; a < num_actions; ++a)
            if (!is_normalized(hidden_observation_row(s, a), sc))
                throw ModelError("observation row (s'=" + std::to_string(s) +
                                 ", a=" + std::to_string(a) + ") not normalized");
    if (initial_.visible >= num_visible_)
        throw ModelError("initial visible state out of range");
    if (initial_.hidden.size() != num_hidden_)
        throw DimensionError("initial hidden belief has wrong length");

    if (stay_observation_) {
        if (!stay_action)
            throw ModelError("a stay observation requires a stay action");
        if (*stay_observation_ >= num_hidden_observations_)
            throw ModelError("stay observation index out of range");
        for (StateIndex s = 0; s < num_states; ++s) {
            auto row = hidden_observation_row(s, *stay_action);
            for (ObservationIndex o = 0; o < num_hidden_observations_; ++o) {
                Level expected = o == *stay_observation_ ? sc.top() : sc.bottom();
                if (row[o] != expected)
                    throw ModelError("stay action must emit only the stay observation (s'=" +
                                     std::to_string(s) + ")");
            }
        }
    }
}

std::vector<Level> mixed_predict(const PiMomdpModel& model, const MixedBelief& belief,
                                 ActionIndex a) {
    if (belief.visible >= model.num_visible() || belief.hidden.size() != model.num_hidden())
        throw DimensionError("mixed belief does not fit the model");
    std::vector<Level> out(model.num_visible() * model.num_hidden(), Level{0});
    for (StateIndex h = 0; h < model.num_hidden(); ++h) {
        const Level bh = belief.hidden[h];
        if (bh == Level{0})
            continue;
        for (const Successor& e : model.dynamics().successors(model.state_index(belief.visible, h), a))
            out[e.state] = std::max(out[e.state], std::min(e.possibility, bh));
    }
    if (!is_normalized(out, model.scale()))
        throw InvariantError("mixed prediction lost normalization");
    return out;
}

std::vector<Level> mixed_joint_observation(const PiMomdpModel& model,
                                           std::span<const Level> predicted, ActionIndex a) {
    const std::size_t nh = model.num_hidden();
    const std::size_t no = model.num_hidden_observations();
    if (predicted.size() != model.num_visible() * nh)
        throw DimensionError("predicted table has wrong size");
    std::vector<Level> out(model.num_visible() * no, Level{0});
    for (StateIndex s = 0; s < predicted.size(); ++s) {
        if (predicted[s] == Level{0})
            continue;
        auto row = model.hidden_observation_row(s, a);
        Level* cell = out.data() + (s / nh) * no;
        for (ObservationIndex o = 0; o < no; ++o)
            cell[o] = std::max(cell[o], std::min(row[o], predicted[s]));
    }
    if (!is_normalized(out, model.scale()))
        throw InvariantError("joint observation table lost normalization");
    return out;
}

namespace {

// Conditions column `visible` of `predicted` on o; false when impossible.
bool condition_column(const PiMomdpModel& model, std::span<const Level> predicted, ActionIndex a,
                      StateIndex visible, ObservationIndex o, std::vector<Level>& out) {
    const std::size_t nh = model.num_hidden();
    out.resize(nh);
    Level best{0};
    for (StateIndex h = 0; h < nh; ++h) {
        const StateIndex s = model.state_index(visible, h);
        out[h] = std::min(model.hidden_observation_row(s, a)[o], predicted[s]);
        best = std::max(best, out[h]);
    }
    if (best == Level{0})
        return false;
    for (Level& l : out)
        if (l == best)
            l = model.scale().top();
    return true;
}

} // namespace

MixedBelief mixed_belief_update(const PiMomdpModel& model, const MixedBelief& belief,
                                ActionIndex a, StateIndex next_visible, ObservationIndex o) {
    if (next_visible >= model.num_visible() || o >= model.num_hidden_observations())
        throw DimensionError("observation out of range");
    auto predicted = mixed_predict(model, belief, a);
    std::vector<Level> hidden;
    if (!condition_column(model, predicted, a, next_visible, o, hidden))
        throw ImpossibleObservationError("visible state " + std::to_string(next_visible) +
                                         " with hidden observation " + std::to_string(o) +
                                         " has possibility 0");
    return MixedBelief{next_visible, PossibilityDistribution(std::move(hidden), model.scale())};
}

Level mixed_preference(const PiMomdpModel& model, const MixedBelief& belief) {
    const std::size_t nh = model.num_hidden();
    auto all = model.dynamics().preference();
    return pessimistic_preference(model.scale(), all.subspan(belief.visible * nh, nh),
                                  belief.hidden.values());
}

BeliefSpace enumerate_hidden_beliefs(const PiMomdpModel& model, std::uint64_t cap) {
    return BeliefSpace(model.num_hidden(), model.scale(), cap);
}

MixedBeliefMdp build_mixed_belief_mdp(const PiMomdpModel& model, Execution execution,
                                      std::uint64_t cap) {
    BeliefSpace beliefs = enumerate_hidden_beliefs(model, cap);
    const std::size_t nv = model.num_visible();
    const std::size_t nb = beliefs.size();
    const std::size_t na = model.num_actions();
    const std::size_t no = model.num_hidden_observations();
    const std::size_t count = nv * nb;
    std::vector<std::vector<Successor>> rows(count * na);
    std::vector<Level> preference(count);

    auto build_one = [&](std::size_t state) {
        const auto v = static_cast<StateIndex>(state / nb);
        const std::size_t bi = state % nb;
        auto hidden = beliefs[bi];
        MixedBelief b{v, PossibilityDistribution({hidden.begin(), hidden.end()}, model.scale())};
        preference[state] = mixed_preference(model, b);
        std::vector<Level> updated;
        for (ActionIndex a = 0; a < na; ++a) {
            auto predicted = mixed_predict(model, b, a);
            auto joint = mixed_joint_observation(model, predicted, a);
            auto& row = rows[state * na + a];
            for (StateIndex v2 = 0; v2 < nv; ++v2) {
                for (ObservationIndex o = 0; o < no; ++o) {
                    const Level p = joint[v2 * no + o];
                    if (p == Level{0})
                        continue;
                    condition_column(model, predicted, a, v2, o, updated);
                    auto next = beliefs.index_of(updated);
                    if (!next)
                        throw InvariantError("updated hidden belief is not normalized");
                    row.push_back({static_cast<StateIndex>(v2 * nb + *next), p});
                }
            }
        }
    };

    if (execution == Execution::kParallel) {
        const auto n = static_cast<std::int64_t>(count);
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 64)
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                build_one(static_cast<std::size_t>(i));
            } catch (...) {
#pragma omp critical
                failure = std::current_exception();
            }
        }
        if (failure)
            std::rethrow_exception(failure);
    } else {
        for (std::size_t i = 0; i < count; ++i)
            build_one(i);
    }

    // With a stay action and a stay observation every mixed belief loops onto
    // itself under the stay action; the PiMdpModel constructor re-checks this.
    std::optional<ActionIndex> stay;
    if (model.stay_action() && model.stay_observation())
        stay = model.stay_action();
    PiMdpModel mdp(model.scale(), count, na, std::move(rows), std::move(preference), stay);
    return MixedBeliefMdp{std::move(beliefs), std::move(mdp)};
}

ActionIndex MixedValueSolution::action(const MixedBelief& belief) const {
    auto idx = hidden_beliefs.index_of(belief.hidden.values());
    if (!idx || belief.visible >= num_visible)
        throw DimensionError("mixed belief is outside the solved space");
    return action(belief.visible, *idx);
}

Level MixedValueSolution::value(const MixedBelief& belief) const {
    auto idx = hidden_beliefs.index_of(belief.hidden.values());
    if (!idx || belief.visible >= num_visible)
        throw DimensionError("mixed belief is outside the solved space");
    return value(belief.visible, *idx);
}

MixedValueSolution momdp_value_iteration(const PiMomdpModel& model,
                                         const ValueIterationOptions& options,
                                         std::uint64_t cap) {
    if (!model.stay_action() || !model.stay_observation())
        throw PreconditionError("mixed value iteration requires a stay action and a stay "
                                "observation");
    auto belief_mdp = build_mixed_belief_mdp(model, options.execution, cap);
    auto solution = value_iteration(belief_mdp.mdp, options);
    return MixedValueSolution{model.num_visible(), std::move(belief_mdp.hidden_beliefs),
                              std::move(solution.values), std::move(solution.policy),
                              solution.iterations};
}

} // namespace qposs
