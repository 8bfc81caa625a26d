#pragma once

#include "qposs/execution.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qposs::kernels {

/// Precomputed one-step model of a discrete-state discounted MDP.
/// Row t = state * num_actions + a has expected reward `reward[t]` and
/// discounted successor weights entries[offsets[t], offsets[t+1]).
struct DiscountedRows {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> reward;
    std::vector<std::uint32_t> offsets;
    std::vector<double> weight;
    std::vector<std::uint32_t> target;
};

/// One Jacobi backup of every state. Writes the greedy action (lowest index on
/// ties) and returns the sup-norm change.
double baseline_sweep_serial(const DiscountedRows& rows, std::span<const double> values,
                             std::span<double> next, std::span<std::uint32_t> policy);
double baseline_sweep_parallel(const DiscountedRows& rows, std::span<const double> values,
                               std::span<double> next, std::span<std::uint32_t> policy);

inline double baseline_sweep(Execution execution, const DiscountedRows& rows,
                             std::span<const double> values, std::span<double> next,
                             std::span<std::uint32_t> policy) {
    return execution == Execution::kParallel ? baseline_sweep_parallel(rows, values, next, policy)
                                             : baseline_sweep_serial(rows, values, next, policy);
}

} // namespace qposs::kernels
