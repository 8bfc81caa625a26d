#pragma once

#include "qposs/pi_mdp.hpp"

#include <span>

namespace qposs::kernels {

// next[s] = max_a max_s' min(pi(s'|s,a), current[s']); greedy[s] is the
// lowest maximizing action. Reads only `current`, so the sweep is Jacobi-style.
void bellman_sweep_serial(const PiMdpModel& model, std::span<const Level> current,
                          std::span<Level> next, std::span<ActionIndex> greedy);

void bellman_sweep_parallel(const PiMdpModel& model, std::span<const Level> current,
                            std::span<Level> next, std::span<ActionIndex> greedy);

inline void bellman_sweep(Execution execution, const PiMdpModel& model,
                          std::span<const Level> current, std::span<Level> next,
                          std::span<ActionIndex> greedy) {
    if (execution == Execution::kParallel)
        bellman_sweep_parallel(model, current, next, greedy);
    else
        bellman_sweep_serial(model, current, next, greedy);
}

} // namespace qposs::kernels
