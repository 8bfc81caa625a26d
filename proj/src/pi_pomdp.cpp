#include "qposs/pi_pomdp.hpp"

#include "qposs/errors.hpp"
#include "qposs/pi_momdp.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <set>
#include <string>

namespace qposs {

PiPomdpModel::PiPomdpModel(PiMdpModel dynamics, std::size_t num_observations,
                           std::vector<Level> observation, PossibilityDistribution initial_belief,
                           std::optional<ObservationIndex> stay_observation)
    : dynamics_(std::move(dynamics)), num_observations_(num_observations),
      observation_(std::move(observation)), initial_belief_(std::move(initial_belief)),
      stay_observation_(stay_observation) {
    const auto& scale = dynamics_.scale();
    if (num_observations_ == 0)
        throw ModelError("model needs at least one observation");
    if (observation_.size() != num_states() * num_actions() * num_observations_)
        throw DimensionError("observation table has wrong size");
    if (initial_belief_.size() != num_states())
        throw DimensionError("initial belief has wrong length");
    for (Level l : observation_)
        if (!scale.contains(l))
            throw ModelError("observation level outside the scale");
    for (StateIndex s = 0; s < num_states(); ++s)
        for (ActionIndex a = 0; a < num_actions(); ++a)
            if (!is_normalized(observation_row(s, a), scale))
                throw ModelError("observation row (s'=" + std::to_string(s) +
                                 ", a=" + std::to_string(a) + ") not normalized");

    if (stay_observation_) {
        if (!stay_action())
            throw ModelError("a stay observation requires a stay action");
        if (*stay_observation_ >= num_observations_)
            throw ModelError("stay observation index out of range");
        for (StateIndex s = 0; s < num_states(); ++s) {
            auto row = observation_row(s, *stay_action());
            for (ObservationIndex o = 0; o < num_observations_; ++o) {
                Level expected = o == *stay_observation_ ? scale.top() : scale.bottom();
                if (row[o] != expected)
                    throw ModelError("stay action must emit only the stay observation (s'=" +
                                     std::to_string(s) + ")");
            }
        }
    }
}

std::vector<Level> belief_predict(const PiPomdpModel& model, std::span<const Level> belief,
                                  ActionIndex a) {
    if (belief.size() != model.num_states())
        throw DimensionError("belief has wrong length");
    std::vector<Level> out(model.num_states(), Level{0});
    for (StateIndex s = 0; s < model.num_states(); ++s) {
        if (belief[s] == Level{0})
            continue;
        for (const Successor& e : model.dynamics().successors(s, a))
            out[e.state] = std::max(out[e.state], std::min(e.possibility, belief[s]));
    }
    if (is_normalized(belief, model.scale()) && !is_normalized(out, model.scale()))
        throw InvariantError("predicted belief lost normalization");
    return out;
}

std::vector<Level> observation_possibility(const PiPomdpModel& model,
                                           std::span<const Level> predicted, ActionIndex a) {
    if (predicted.size() != model.num_states())
        throw DimensionError("predicted belief has wrong length");
    std::vector<Level> out(model.num_observations(), Level{0});
    for (StateIndex s = 0; s < model.num_states(); ++s) {
        if (predicted[s] == Level{0})
            continue;
        auto row = model.observation_row(s, a);
        for (ObservationIndex o = 0; o < out.size(); ++o)
            out[o] = std::max(out[o], std::min(row[o], predicted[s]));
    }
    if (is_normalized(predicted, model.scale()) && !is_normalized(out, model.scale()))
        throw InvariantError("observation possibility lost normalization");
    return out;
}

namespace {

// Conditions `predicted` on observation o; returns false when o is impossible.
bool condition(const PiPomdpModel& model, std::span<const Level> predicted, ActionIndex a,
               ObservationIndex o, std::vector<Level>& out) {
    const std::size_t n = model.num_states();
    out.resize(n);
    Level best{0};
    for (StateIndex s = 0; s < n; ++s) {
        out[s] = std::min(model.observation(s, a, o), predicted[s]);
        best = std::max(best, out[s]);
    }
    if (best == Level{0})
        return false;
    for (Level& l : out)
        if (l == best)
            l = model.scale().top();
    return true;
}

} // namespace

PossibilityDistribution belief_update(const PiPomdpModel& model, std::span<const Level> belief,
                                      ActionIndex a, ObservationIndex o) {
    if (o >= model.num_observations())
        throw DimensionError("observation index out of range");
    auto predicted = belief_predict(model, belief, a);
    std::vector<Level> out;
    if (!condition(model, predicted, a, o, out))
        throw ImpossibleObservationError("observation " + std::to_string(o) +
                                         " has possibility 0 after action " + std::to_string(a));
    return PossibilityDistribution(std::move(out), model.scale());
}

Level pessimistic_preference(const QualitativeScale& scale, std::span<const Level> preference,
                             std::span<const Level> belief) {
    if (preference.size() != belief.size())
        throw DimensionError("preference and belief lengths differ");
    Level worst = scale.top();
    for (std::size_t s = 0; s < belief.size(); ++s)
        worst = std::min(worst, std::max(preference[s], scale.reverse(belief[s])));
    return worst;
}

Level belief_preference(const PiPomdpModel& model, std::span<const Level> belief) {
    return pessimistic_preference(model.scale(), model.dynamics().preference(), belief);
}

namespace {

// Descending lexicographic order on level vectors: the canonical belief order.
bool canonical_less(std::span<const Level> x, std::span<const Level> y) {
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(),
                                        [](Level l, Level r) { return l > r; });
}

using BeliefLookup = std::function<std::optional<StateIndex>(std::span<const Level>)>;

// Builds the belief-MDP rows for the beliefs stored in `beliefs` (flattened).
BeliefMdp build_belief_mdp(const PiPomdpModel& model, std::vector<Level> beliefs,
                           const BeliefLookup& lookup, Execution execution) {
    const std::size_t dim = model.num_states();
    const std::size_t count = beliefs.size() / dim;
    const std::size_t num_actions = model.num_actions();
    std::vector<std::vector<Successor>> rows(count * num_actions);
    std::vector<Level> preference(count);

    auto build_one = [&](std::size_t i) {
        std::span<const Level> b(beliefs.data() + i * dim, dim);
        preference[i] = belief_preference(model, b);
        std::vector<Level> updated;
        for (ActionIndex a = 0; a < num_actions; ++a) {
            auto predicted = belief_predict(model, b, a);
            auto obs = observation_possibility(model, predicted, a);
            auto& row = rows[i * num_actions + a];
            for (ObservationIndex o = 0; o < obs.size(); ++o) {
                if (obs[o] == Level{0})
                    continue;
                condition(model, predicted, a, o, updated);
                auto next = lookup(updated);
                if (!next)
                    throw InvariantError("updated belief is missing from the belief set");
                row.push_back({*next, obs[o]});
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

    std::optional<ActionIndex> stay;
    if (auto a = model.stay_action()) {
        bool self_loops = true;
        for (std::size_t i = 0; i < count && self_loops; ++i) {
            const auto& row = rows[i * num_actions + *a];
            self_loops = std::all_of(row.begin(), row.end(), [&](const Successor& e) {
                return e.state == i && e.possibility == model.scale().top();
            });
        }
        if (self_loops)
            stay = a;
    }

    PiMdpModel mdp(model.scale(), count, num_actions, std::move(rows), std::move(preference),
                   stay);
    return BeliefMdp{dim, std::move(beliefs), std::move(mdp)};
}

} // namespace

std::optional<StateIndex> BeliefMdp::find(std::span<const Level> belief) const noexcept {
    if (belief.size() != dimension)
        return std::nullopt;
    std::size_t lo = 0;
    std::size_t hi = size();
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (canonical_less(this->belief(mid), belief))
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo < size() && std::equal(belief.begin(), belief.end(), this->belief(lo).begin()))
        return static_cast<StateIndex>(lo);
    return std::nullopt;
}

BeliefMdp flatten_pomdp_to_mdp(const PiPomdpModel& model, std::uint64_t cap,
                               Execution execution) {
    BeliefSpace space(model.num_states(), model.scale(), cap);
    std::vector<Level> beliefs;
    beliefs.reserve(space.size() * space.dimension());
    for (std::size_t i = 0; i < space.size(); ++i) {
        auto b = space[i];
        beliefs.insert(beliefs.end(), b.begin(), b.end());
    }
    BeliefLookup lookup = [&space](std::span<const Level> b) -> std::optional<StateIndex> {
        if (auto idx = space.index_of(b))
            return static_cast<StateIndex>(*idx);
        return std::nullopt;
    };
    return build_belief_mdp(model, std::move(beliefs), lookup, execution);
}

std::vector<PossibilityDistribution> reachable_beliefs(
    const PiPomdpModel& model, std::span<const PossibilityDistribution> seeds,
    std::size_t limit) {
    std::set<std::vector<Level>> seen;
    std::deque<std::vector<Level>> frontier;
    std::vector<PossibilityDistribution> out;
    auto visit = [&](std::vector<Level> b) {
        if (seen.insert(b).second) {
            if (seen.size() > limit)
                throw TooLargeError("reachable belief set exceeds " + std::to_string(limit));
            out.emplace_back(b, model.scale());
            frontier.push_back(std::move(b));
        }
    };
    for (const auto& s : seeds) {
        if (s.size() != model.num_states())
            throw DimensionError("seed belief has wrong length");
        visit({s.values().begin(), s.values().end()});
    }
    std::vector<Level> updated;
    while (!frontier.empty()) {
        std::vector<Level> b = std::move(frontier.front());
        frontier.pop_front();
        for (ActionIndex a = 0; a < model.num_actions(); ++a) {
            auto predicted = belief_predict(model, b, a);
            for (ObservationIndex o = 0; o < model.num_observations(); ++o)
                if (condition(model, predicted, a, o, updated))
                    visit(updated);
        }
    }
    return out;
}

BeliefMdp flatten_pomdp_to_mdp_reachable(const PiPomdpModel& model,
                                         std::span<const PossibilityDistribution> seeds,
                                         std::size_t limit) {
    auto reached = reachable_beliefs(model, seeds, limit);
    std::sort(reached.begin(), reached.end(),
              [](const PossibilityDistribution& x, const PossibilityDistribution& y) {
                  return canonical_less(x.values(), y.values());
              });
    const std::size_t dim = model.num_states();
    std::vector<Level> beliefs;
    beliefs.reserve(reached.size() * dim);
    for (const auto& b : reached)
        beliefs.insert(beliefs.end(), b.values().begin(), b.values().end());

    // The lookup needs the sorted storage, which moves into the result; keep a copy.
    auto sorted = std::make_shared<std::vector<Level>>(beliefs);
    BeliefLookup lookup = [sorted, dim](std::span<const Level> b) -> std::optional<StateIndex> {
        const std::size_t count = sorted->size() / dim;
        std::size_t lo = 0, hi = count;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (canonical_less(std::span<const Level>(sorted->data() + mid * dim, dim), b))
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo < count && std::equal(b.begin(), b.end(), sorted->begin() + lo * dim))
            return static_cast<StateIndex>(lo);
        return std::nullopt;
    };
    return build_belief_mdp(model, std::move(beliefs), lookup, Execution::kSerial);
}

PiPomdpModel flatten_momdp_to_pomdp(const PiMomdpModel& model) {
    const std::size_t nv = model.num_visible();
    const std::size_t nh = model.num_hidden();
    const std::size_t na = model.num_actions();
    const std::size_t noh = model.num_hidden_observations();
    const std::size_t num_states = nv * nh;
    const std::size_t num_obs = nv * noh;

    std::vector<Level> observation(num_states * na * num_obs, Level{0});
    for (StateIndex s = 0; s < num_states; ++s) {
        const std::size_t visible = s / nh;
        for (ActionIndex a = 0; a < na; ++a) {
            auto hidden_row = model.hidden_observation_row(s, a);
            Level* row = observation.data() + (std::size_t{s} * na + a) * num_obs;
            std::copy(hidden_row.begin(), hidden_row.end(), row + visible * noh);
        }
    }

    std::vector<Level> initial(num_states, Level{0});
    const auto& b0 = model.initial();
    for (std::size_t h = 0; h < nh; ++h)
        initial[model.state_index(b0.visible, static_cast<StateIndex>(h))] = b0.hidden[h];

    return PiPomdpModel(model.dynamics(), num_obs, std::move(observation),
                        PossibilityDistribution(std::move(initial), model.scale()), std::nullopt);
}

} // namespace qposs
