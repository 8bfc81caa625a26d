#include "qposs/belief_space.hpp"

#include "qposs/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace qposs {
namespace {

std::optional<std::uint64_t> checked_pow(std::uint64_t base, std::uint64_t exponent) {
    std::uint64_t acc = 1;
    for (std::uint64_t i = 0; i < exponent; ++i)
        if (__builtin_mul_overflow(acc, base, &acc))
            return std::nullopt;
    return acc;
}

} // namespace

std::optional<std::uint64_t> belief_space_cardinality(std::uint64_t num_levels,
                                                      std::uint64_t num_states) {
    auto all = checked_pow(num_levels, num_states);
    auto without_top = checked_pow(num_levels - 1, num_states);
    if (!all || !without_top)
        return std::nullopt;
    return *all - *without_top;
}

double belief_space_cardinality_approx(std::uint64_t num_levels, std::uint64_t num_states) {
    const long double l = num_levels;
    const long double s = num_states;
    return static_cast<double>(std::pow(l, s) - std::pow(l - 1, s));
}

BeliefSpace::BeliefSpace(std::size_t dimension, const QualitativeScale& scale, std::uint64_t cap)
    : dimension_(dimension), num_levels_(scale.size()) {
    if (dimension_ == 0)
        throw DimensionError("belief space over an empty domain");
    auto raw = checked_pow(num_levels_, dimension_);
    if (!raw || *raw > cap || *raw > std::uint64_t(std::numeric_limits<std::int32_t>::max())) {
        auto card = belief_space_cardinality(num_levels_, dimension_);
        std::string count = card ? std::to_string(*card)
                                 : std::to_string(belief_space_cardinality_approx(num_levels_,
                                                                                  dimension_));
        throw TooLargeError("belief space of " + std::to_string(num_levels_) + "^" +
                            std::to_string(dimension_) + " vectors exceeds the cap " +
                            std::to_string(cap) + " (" + count + " normalized beliefs)");
    }

    const std::uint64_t total = *raw;
    const auto top = static_cast<std::uint16_t>(num_levels_ - 1);
    index_by_code_.assign(total, -1);
    levels_.reserve(static_cast<std::size_t>(*belief_space_cardinality(num_levels_, dimension_)) *
                    dimension_);

    // Descending codes visit vectors in descending lexicographic order because
    // the first coordinate is the most significant digit.
    std::vector<Level> digits(dimension_);
    for (std::uint64_t code = total; code-- > 0;) {
        std::uint64_t rest = code;
        bool normalized = false;
        for (std::size_t i = dimension_; i-- > 0;) {
            digits[i] = Level{static_cast<std::uint16_t>(rest % num_levels_)};
            rest /= num_levels_;
            normalized = normalized || digits[i].index == top;
        }
        if (!normalized)
            continue;
        index_by_code_[code] = static_cast<std::int32_t>(count_++);
        levels_.insert(levels_.end(), digits.begin(), digits.end());
    }

    if (count_ != *belief_space_cardinality(num_levels_, dimension_))
        throw InvariantError("belief enumeration does not match the closed-form cardinality");
}

PossibilityDistribution BeliefSpace::distribution(std::size_t i,
                                                  const QualitativeScale& scale) const {
    auto b = (*this)[i];
    return PossibilityDistribution(std::vector<Level>(b.begin(), b.end()), scale);
}

std::optional<std::size_t> BeliefSpace::index_of(std::span<const Level> belief) const noexcept {
    if (belief.size() != dimension_)
        return std::nullopt;
    std::uint64_t code = 0;
    for (Level l : belief) {
        if (l.index >= num_levels_)
            return std::nullopt;
        code = code * num_levels_ + l.index;
    }
    const std::int32_t idx = index_by_code_[code];
    if (idx < 0)
        return std::nullopt;
    return static_cast<std::size_t>(idx);
}

std::vector<PossibilityDistribution> enumerate_belief_space(std::size_t num_states,
                                                            const QualitativeScale& scale,
                                                            std::uint64_t cap) {
    BeliefSpace space(num_states, scale, cap);
    std::vector<PossibilityDistribution> out;
    out.reserve(space.size());
    for (std::size_t i = 0; i < space.size(); ++i)
        out.push_back(space.distribution(i, scale));
    return out;
}

} // namespace qposs
