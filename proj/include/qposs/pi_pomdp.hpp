#pragma once

#include "qposs/belief_space.hpp"
#include "qposs/execution.hpp"
#include "qposs/pi_mdp.hpp"

#include <optional>
#include <span>
#include <vector>

namespace qposs {

using ObservationIndex = std::uint32_t;

class PiMomdpModel;

/// Partially observable possibilistic MDP.
///
/// Observation rows are dense, laid out [s'][a][o], and must be normalized.
/// A declared stay observation requires a stay action and must be the only
/// observation emitted (with possibility 1) after the stay action.
class PiPomdpModel {
public:
    PiPomdpModel(PiMdpModel dynamics, std::size_t num_observations,
                 std::vector<Level> observation, PossibilityDistribution initial_belief,
                 std::optional<ObservationIndex> stay_observation);

    const PiMdpModel& dynamics() const noexcept { return dynamics_; }
    const QualitativeScale& scale() const noexcept { return dynamics_.scale(); }
    std::size_t num_states() const noexcept { return dynamics_.num_states(); }
    std::size_t num_actions() const noexcept { return dynamics_.num_actions(); }
    std::size_t num_observations() const noexcept { return num_observations_; }
    std::optional<ActionIndex> stay_action() const noexcept { return dynamics_.stay_action(); }
    std::optional<ObservationIndex> stay_observation() const noexcept { return stay_observation_; }
    const PossibilityDistribution& initial_belief() const noexcept { return initial_belief_; }

    /// pi(. | s', a) over observations.
    std::span<const Level> observation_row(StateIndex next, ActionIndex a) const noexcept {
        return {observation_.data() + (std::size_t{next} * num_actions() + a) * num_observations_,
                num_observations_};
    }
    Level observation(StateIndex next, ActionIndex a, ObservationIndex o) const noexcept {
        return observation_row(next, a)[o];
    }

    friend bool operator==(const PiPomdpModel&, const PiPomdpModel&) = default;

private:
    PiMdpModel dynamics_;
    std::size_t num_observations_;
    std::vector<Level> observation_;
    PossibilityDistribution initial_belief_;
    std::optional<ObservationIndex> stay_observation_;
};

/// beta^a(s') = max_s min(pi(s'|s,a), beta(s)).
std::vector<Level> belief_predict(const PiPomdpModel& model, std::span<const Level> belief,
                                  ActionIndex a);

/// beta^a(o') = max_s' min(pi(o'|s',a), beta^a(s')).
std::vector<Level> observation_possibility(const PiPomdpModel& model,
                                           std::span<const Level> predicted, ActionIndex a);

/// Qualitative conditioning on observation `o` after action `a`.
///
/// States whose joint possibility min(pi(o|s',a), beta^a(s')) reaches the
/// maximum are raised to 1; the others keep their joint possibility. Throws
/// ImpossibleObservationError when that maximum is 0.
PossibilityDistribution belief_update(const PiPomdpModel& model, std::span<const Level> belief,
                                      ActionIndex a, ObservationIndex o);

/// min_s max(mu(s), n(beta(s))) for an arbitrary preference vector.
Level pessimistic_preference(const QualitativeScale& scale, std::span<const Level> preference,
                             std::span<const Level> belief);

/// Preference of a belief: high only when unsatisfactory states are implausible.
Level belief_preference(const PiPomdpModel& model, std::span<const Level> belief);

/// A possibilistic MDP whose states are beliefs of a POMDP.
struct BeliefMdp {
    std::size_t dimension = 0;
    /// Beliefs in canonical order, flattened; state i is beliefs[i*dim, (i+1)*dim).
    std::vector<Level> beliefs;
    PiMdpModel mdp;

    std::size_t size() const noexcept { return mdp.num_states(); }
    std::span<const Level> belief(std::size_t i) const noexcept {
        return {beliefs.data() + i * dimension, dimension};
    }
    std::optional<StateIndex> find(std::span<const Level> belief) const noexcept;
};

/// Belief MDP over the full belief space. Transition possibilities are
/// pi(b'|b,a) = max over observations o with b^{a,o} = b' of b^a(o). The result
/// carries the POMDP's stay action only if it is a true self-loop on every belief.
BeliefMdp flatten_pomdp_to_mdp(const PiPomdpModel& model, std::uint64_t cap = kDefaultBeliefCap,
                               Execution execution = Execution::kParallel);

/// Same translation restricted to the beliefs reachable from `seeds`.
BeliefMdp flatten_pomdp_to_mdp_reachable(const PiPomdpModel& model,
                                         std::span<const PossibilityDistribution> seeds,
                                         std::size_t limit = 1'000'000);

/// Breadth-first closure of `seeds` under every (action, possible observation).
/// Throws TooLargeError past `limit` beliefs.
std::vector<PossibilityDistribution> reachable_beliefs(
    const PiPomdpModel& model, std::span<const PossibilityDistribution> seeds,
    std::size_t limit = 1'000'000);

/// Mixed-observable model seen as a plain POMDP over S_v x S_h.
///
/// Flat state (v, h) has index v * |S_h| + h; flat observation (o_v, o_h) has
/// index o_v * |O_h| + o_h, where the visible part is observed exactly.
PiPomdpModel flatten_momdp_to_pomdp(const PiMomdpModel& model);

} // namespace qposs
