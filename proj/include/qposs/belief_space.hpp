#pragma once

#include "qposs/scale.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace qposs {

inline constexpr std::uint64_t kDefaultBeliefCap = 10'000'000;

/// Number of normalized distributions over `num_states` elements valued in a
/// scale of `num_levels` levels: L^S - (L-1)^S. nullopt on 64-bit overflow.
std::optional<std::uint64_t> belief_space_cardinality(std::uint64_t num_levels,
                                                      std::uint64_t num_states);

/// Same count as a floating-point approximation, usable when the exact value overflows.
double belief_space_cardinality_approx(std::uint64_t num_levels, std::uint64_t num_states);

/// Every normalized distribution over a finite domain, in canonical order.
///
/// The canonical order is lexicographic on level indices, from the top level
/// down: with 3 levels over 2 states it is (1,1) (1,l1) (1,0) (l1,1) (0,1).
/// Beliefs are interned, so `index_of` is a single table lookup.
class BeliefSpace {
public:
    /// Throws TooLargeError when L^S exceeds `cap`.
    BeliefSpace(std::size_t dimension, const QualitativeScale& scale,
                std::uint64_t cap = kDefaultBeliefCap);

    std::size_t size() const noexcept { return count_; }
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t num_levels() const noexcept { return num_levels_; }

    std::span<const Level> operator[](std::size_t i) const noexcept {
        return {levels_.data() + i * dimension_, dimension_};
    }
    PossibilityDistribution distribution(std::size_t i, const QualitativeScale& scale) const;

    /// Position of `belief` in the canonical order; nullopt if it is not a
    /// normalized distribution of this space.
    std::optional<std::size_t> index_of(std::span<const Level> belief) const noexcept;

private:
    std::size_t dimension_;
    std::size_t num_levels_;
    std::size_t count_ = 0;
    std::vector<Level> levels_;
    // Base-L code of a vector -> index, -1 for non-normalized vectors.
    std::vector<std::int32_t> index_by_code_;
};

std::vector<PossibilityDistribution> enumerate_belief_space(std::size_t num_states,
                                                            const QualitativeScale& scale,
                                                            std::uint64_t cap = kDefaultBeliefCap);

} // namespace qposs
