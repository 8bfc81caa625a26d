#include "baseline_sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qposs::kernels {

namespace {

inline double backup(const DiscountedRows& rows, std::span<const double> values, std::size_t s,
                     std::uint32_t& action) {
    double best = -std::numeric_limits<double>::infinity();
    std::uint32_t best_a = 0;
    for (std::size_t a = 0; a < rows.num_actions; ++a) {
        const std::size_t t = s * rows.num_actions + a;
        double q = rows.reward[t];
        for (std::uint32_t e = rows.offsets[t]; e < rows.offsets[t + 1]; ++e)
            q += rows.weight[e] * values[rows.target[e]];
        if (q > best) {
            best = q;
            best_a = static_cast<std::uint32_t>(a);
        }
    }
    action = best_a;
    return best;
}

} // namespace

double baseline_sweep_serial(const DiscountedRows& rows, std::span<const double> values,
                             std::span<double> next, std::span<std::uint32_t> policy) {
    double residual = 0.0;
    for (std::size_t s = 0; s < rows.num_states; ++s) {
        next[s] = backup(rows, values, s, policy[s]);
        residual = std::max(residual, std::abs(next[s] - values[s]));
    }
    return residual;
}

double baseline_sweep_parallel(const DiscountedRows& rows, std::span<const double> values,
                               std::span<double> next, std::span<std::uint32_t> policy) {
    double residual = 0.0;
    const auto n = static_cast<std::int64_t>(rows.num_states);
#pragma omp parallel for schedule(static) reduction(max : residual)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto s = static_cast<std::size_t>(i);
        next[s] = backup(rows, values, s, policy[s]);
        residual = std::max(residual, std::abs(next[s] - values[s]));
    }
    return residual;
}

} // namespace qposs::kernels
