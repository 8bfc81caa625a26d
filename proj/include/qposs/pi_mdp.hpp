#pragma once

#include "qposs/execution.hpp"
#include "qposs/scale.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace qposs {

using StateIndex = std::uint32_t;
using ActionIndex = std::uint32_t;

/// A successor state with non-zero transition possibility.
struct Successor {
    StateIndex state = 0;
    Level possibility;

    friend bool operator==(const Successor&, const Successor&) = default;
};

/// Fully observable possibilistic MDP with sparse transition rows.
///
/// Row (s, a) lists the successors s' with pi(s'|s,a) > 0, sorted by state.
/// Every row must be normalized. When a stay action is declared it must map
/// each state onto itself with possibility 1 and nowhere else.
class PiMdpModel {
public:
    /// `rows[s * num_actions + a]` holds the successors of (s, a). Entries at
    /// the bottom level are dropped and duplicates are merged by max.
    /// Throws ModelError on any violated invariant.
    PiMdpModel(QualitativeScale scale, std::size_t num_states, std::size_t num_actions,
               std::vector<std::vector<Successor>> rows, std::vector<Level> preference,
               std::optional<ActionIndex> stay_action);

    /// Builds from a dense table laid out as [s][a][s'].
    static PiMdpModel from_dense(QualitativeScale scale, std::size_t num_states,
                                 std::size_t num_actions, std::span<const Level> table,
                                 std::vector<Level> preference,
                                 std::optional<ActionIndex> stay_action);

    const QualitativeScale& scale() const noexcept { return scale_; }
    std::size_t num_states() const noexcept { return num_states_; }
    std::size_t num_actions() const noexcept { return num_actions_; }
    std::optional<ActionIndex> stay_action() const noexcept { return stay_action_; }

    std::span<const Successor> successors(StateIndex s, ActionIndex a) const noexcept {
        const std::size_t row = std::size_t{s} * num_actions_ + a;
        return {entries_.data() + offsets_[row], entries_.data() + offsets_[row + 1]};
    }
    /// pi(s'|s,a), bottom when s' is not listed.
    Level possibility(StateIndex s, ActionIndex a, StateIndex next) const noexcept;

    std::span<const Level> preference() const noexcept { return preference_; }
    Level preference(StateIndex s) const noexcept { return preference_[s]; }

    friend bool operator==(const PiMdpModel&, const PiMdpModel&) = default;

private:
    QualitativeScale scale_;
    std::size_t num_states_;
    std::size_t num_actions_;
    std::vector<Successor> entries_;
    std::vector<std::size_t> offsets_;
    std::vector<Level> preference_;
    std::optional<ActionIndex> stay_action_;
};

using StationaryPolicy = std::vector<ActionIndex>;

struct ValueSolution {
    std::vector<Level> values;
    StationaryPolicy policy;
    /// Number of sweeps of the main loop, including the one detecting the fixpoint.
    std::size_t iterations = 0;
};

struct FiniteHorizonSolution {
    /// values[i] is the optimal i-step value table; values[0] is the preference.
    std::vector<std::vector<Level>> values;
    /// policy[t] is the decision rule applied at stage t, t = 0 .. horizon-1.
    std::vector<StationaryPolicy> policy;
};

/// Backward induction over `horizon` stages. Ties go to the lowest action.
FiniteHorizonSolution finite_horizon_solve(const PiMdpModel& model, std::size_t horizon,
                                           Execution execution = Execution::kSerial);

/// How the policy is refreshed during value iteration.
enum class PolicyUpdate {
    /// Only at sweeps where the state's value strictly increases. Required
    /// for the returned stationary policy to be optimal.
    kOnStrictImprovement,
    /// Greedy argmax at every sweep. Kept to reproduce the failure of the
    /// older update rule on cyclic models; do not use for planning.
    kEverySweep,
};

struct ValueIterationOptions {
    PolicyUpdate policy_update = PolicyUpdate::kOnStrictImprovement;
    Execution execution = Execution::kParallel;
};

/// Infinite-horizon value iteration for the optimistic criterion.
///
/// Starts from u* = 0, u^c = mu, policy = stay and sweeps synchronously until
/// u^c equals u*. Requires a stay action (PreconditionError otherwise) and
/// throws InvariantError if more than num_states * num_levels sweeps run.
ValueSolution value_iteration(const PiMdpModel& model, const ValueIterationOptions& options = {});

/// Evaluation strategy for a fixed finite policy.
enum class EvaluationMode { kAuto, kEnumerate, kStageDp };

inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

/// Optimistic criterion of a p-stage policy from s0:
/// max over trajectories of min(trajectory possibility, mu(last state)).
///
/// `policy[t][s]` is the action at stage t. kEnumerate walks all |S|^p
/// trajectories; kStageDp runs backward induction along the fixed policy;
/// kAuto enumerates when |S|^p <= enumeration_cap.
Level evaluate_policy_optimistic(const PiMdpModel& model, StateIndex s0,
                                 std::span<const StationaryPolicy> policy,
                                 EvaluationMode mode = EvaluationMode::kAuto,
                                 std::uint64_t enumeration_cap = kDefaultEnumerationCap);

} // namespace qposs
