#pragma once

#include "qposs/belief_space.hpp"
#include "qposs/pi_mdp.hpp"
#include "qposs/pi_pomdp.hpp"

#include <optional>
#include <span>
#include <vector>

namespace qposs {

/// Belief state of a mixed-observable model: the visible state is known
/// exactly and only the hidden component carries a possibility distribution.
struct MixedBelief {
    StateIndex visible = 0;
    PossibilityDistribution hidden;

    friend bool operator==(const MixedBelief&, const MixedBelief&) = default;
};

/// Possibilistic mixed-observable MDP over S_v x S_h.
///
/// Product state (v, h) has index v * |S_h| + h. Transitions are sparse rows
/// over product states; hidden observation rows are dense, laid out
/// [(v', h')][a][o_h]. The visible component is observed exactly.
class PiMomdpModel {
public:
    /// `transition_rows[(v * |S_h| + h) * |A| + a]` lists product successors.
    /// Throws ModelError on any violated invariant, including a stay
    /// observation that is not emitted deterministically after the stay action.
    PiMomdpModel(QualitativeScale scale, std::size_t num_visible, std::size_t num_hidden,
                 std::size_t num_actions, std::size_t num_hidden_observations,
                 std::vector<std::vector<Successor>> transition_rows,
                 std::vector<Level> hidden_observation, std::vector<Level> preference,
                 MixedBelief initial, std::optional<ActionIndex> stay_action,
                 std::optional<ObservationIndex> stay_observation);

    /// The product-state dynamics and preference as a fully observable model.
    const PiMdpModel& dynamics() const noexcept { return dynamics_; }
    const QualitativeScale& scale() const noexcept { return dynamics_.scale(); }
    std::size_t num_visible() const noexcept { return num_visible_; }
    std::size_t num_hidden() const noexcept { return num_hidden_; }
    std::size_t num_actions() const noexcept { return dynamics_.num_actions(); }
    std::size_t num_hidden_observations() const noexcept { return num_hidden_observations_; }
    std::optional<ActionIndex> stay_action() const noexcept { return dynamics_.stay_action(); }
    std::optional<ObservationIndex> stay_observation() const noexcept { return stay_observation_; }
    const MixedBelief& initial() const noexcept { return initial_; }

    StateIndex state_index(StateIndex visible, StateIndex hidden) const noexcept {
        return static_cast<StateIndex>(visible * num_hidden_ + hidden);
    }
    Level preference(StateIndex visible, StateIndex hidden) const noexcept {
        return dynamics_.preference(state_index(visible, hidden));
    }
    /// pi(. | s', a) over hidden observations, s' a product state index.
    std::span<const Level> hidden_observation_row(StateIndex next, ActionIndex a) const noexcept {
        return {hidden_observation_.data() +
                    (std::size_t{next} * num_actions() + a) * num_hidden_observations_,
                num_hidden_observations_};
    }

    friend bool operator==(const PiMomdpModel&, const PiMomdpModel&) = default;

private:
    PiMdpModel dynamics_;
    std::size_t num_visible_;
    std::size_t num_hidden_;
    std::size_t num_hidden_observations_;
    std::vector<Level> hidden_observation_;
    MixedBelief initial_;
    std::optional<ObservationIndex> stay_observation_;
};

/// beta^a(v', h') = max_h min(pi((v',h') | (v,h), a), beta_h(h)), laid out v' * |S_h| + h'.
std::vector<Level> mixed_predict(const PiMomdpModel& model, const MixedBelief& belief,
                                 ActionIndex a);

/// beta^a(v', o_h) = max_h' min(pi(o_h | (v',h'), a), beta^a(v',h')), laid out v' * |O_h| + o_h.
std::vector<Level> mixed_joint_observation(const PiMomdpModel& model,
                                           std::span<const Level> predicted, ActionIndex a);

/// Hidden-belief revision after observing the new visible state and o_h.
/// Throws ImpossibleObservationError when beta^a(v', o_h) is 0.
MixedBelief mixed_belief_update(const PiMomdpModel& model, const MixedBelief& belief,
                                ActionIndex a, StateIndex next_visible, ObservationIndex o);

/// min_h max(mu(v,h), n(beta_h(h))).
Level mixed_preference(const PiMomdpModel& model, const MixedBelief& belief);

/// All hidden beliefs, in the canonical order of BeliefSpace.
BeliefSpace enumerate_hidden_beliefs(const PiMomdpModel& model,
                                     std::uint64_t cap = kDefaultBeliefCap);

/// The mixed model as a possibilistic MDP over S_v x B_h.
/// State (v, i) has index v * |B_h| + i, where i indexes `hidden_beliefs`.
struct MixedBeliefMdp {
    BeliefSpace hidden_beliefs;
    PiMdpModel mdp;

    StateIndex state(StateIndex visible, std::size_t belief_index) const noexcept {
        return static_cast<StateIndex>(visible * hidden_beliefs.size() + belief_index);
    }
};

MixedBeliefMdp build_mixed_belief_mdp(const PiMomdpModel& model,
                                      Execution execution = Execution::kParallel,
                                      std::uint64_t cap = kDefaultBeliefCap);

struct MixedValueSolution {
    std::size_t num_visible = 0;
    BeliefSpace hidden_beliefs;
    /// Indexed v * |B_h| + i.
    std::vector<Level> values;
    StationaryPolicy policy;
    std::size_t iterations = 0;

    Level value(StateIndex visible, std::size_t belief_index) const noexcept {
        return values[visible * hidden_beliefs.size() + belief_index];
    }
    ActionIndex action(StateIndex visible, std::size_t belief_index) const noexcept {
        return policy[visible * hidden_beliefs.size() + belief_index];
    }
    /// Action for an arbitrary mixed belief; the hidden part must be normalized.
    ActionIndex action(const MixedBelief& belief) const;
    Level value(const MixedBelief& belief) const;
};

/// Infinite-horizon value iteration over S_v x B_h.
///
/// Requires both the stay action and the stay observation (PreconditionError
/// otherwise). Same strict-improvement policy rule and sweep bound as
/// value_iteration.
MixedValueSolution momdp_value_iteration(const PiMomdpModel& model,
                                         const ValueIterationOptions& options = {},
                                         std::uint64_t cap = kDefaultBeliefCap);

} // namespace qposs
