#include "bellman_sweep.hpp"

#include <algorithm>
#include <cstdint>

namespace qposs::kernels {
namespace {

inline void backup_state(const PiMdpModel& model, StateIndex s, std::span<const Level> current,
                         Level& value, ActionIndex& action) {
    Level best{0};
    ActionIndex best_action = 0;
    const auto num_actions = static_cast<ActionIndex>(model.num_actions());
    for (ActionIndex a = 0; a < num_actions; ++a) {
        Level q{0};
        for (const Successor& next : model.successors(s, a))
            q = std::max(q, std::min(next.possibility, current[next.state]));
        if (q > best || a == 0) {
            best = q;
            best_action = a;
        }
    }
    value = best;
    action = best_action;
}

} // namespace

void bellman_sweep_serial(const PiMdpModel& model, std::span<const Level> current,
                          std::span<Level> next, std::span<ActionIndex> greedy) {
    const auto n = static_cast<StateIndex>(model.num_states());
    for (StateIndex s = 0; s < n; ++s)
        backup_state(model, s, current, next[s], greedy[s]);
}

void bellman_sweep_parallel(const PiMdpModel& model, std::span<const Level> current,
                            std::span<Level> next, std::span<ActionIndex> greedy) {
    const auto n = static_cast<std::int64_t>(model.num_states());
#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < n; ++s)
        backup_state(model, static_cast<StateIndex>(s), current, next[s], greedy[s]);
}

} // namespace qposs::kernels
