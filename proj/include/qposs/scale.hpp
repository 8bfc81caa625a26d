#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace qposs {

/// An element of a qualitative scale, identified by its rank.
///
/// Levels are compared by index only; the numeric label attached to a rank
/// lives in the owning QualitativeScale.
struct Level {
    std::uint16_t index = 0;

    friend constexpr auto operator<=>(Level, Level) = default;
};

/// Finite totally ordered scale with least element 0 and greatest element 1.
class QualitativeScale {
public:
    /// Sorts and deduplicates `labels`, inserting 0 and 1 when missing.
    /// Throws InvalidScaleError for labels outside [0,1] or non-finite values.
    static QualitativeScale make(std::span<const double> labels);

    std::size_t size() const noexcept { return labels_.size(); }
    /// Index of the greatest level (number of levels minus one).
    std::size_t k() const noexcept { return labels_.size() - 1; }

    Level bottom() const noexcept { return Level{0}; }
    Level top() const noexcept { return Level{static_cast<std::uint16_t>(k())}; }
    bool contains(Level l) const noexcept { return l.index < labels_.size(); }

    /// Order-reversing involution: index i maps to index k - i.
    Level reverse(Level l) const;

    double label(Level l) const;
    std::span<const double> labels() const noexcept { return labels_; }

    /// Level whose label is exactly `value`, if any.
    std::optional<Level> find(double value) const noexcept;

    friend bool operator==(const QualitativeScale&, const QualitativeScale&) = default;

private:
    explicit QualitativeScale(std::vector<double> labels) : labels_(std::move(labels)) {}
    std::vector<double> labels_;
};

QualitativeScale make_scale(std::span<const double> labels);
Level order_reverse(const QualitativeScale& scale, Level l);

Level max_level(std::span<const Level> values) noexcept;
bool is_normalized(std::span<const Level> values, const QualitativeScale& scale) noexcept;

/// A normalized scale-valued map over {0, ..., size-1}.
class PossibilityDistribution {
public:
    /// Throws ModelError when max(values) is not the top of `scale`.
    PossibilityDistribution(std::vector<Level> values, const QualitativeScale& scale);

    /// All-top distribution (total ignorance).
    static PossibilityDistribution ignorance(std::size_t size, const QualitativeScale& scale);
    /// Top on `element`, bottom elsewhere.
    static PossibilityDistribution certain(std::size_t size, std::size_t element,
                                           const QualitativeScale& scale);

    std::size_t size() const noexcept { return values_.size(); }
    Level operator[](std::size_t i) const noexcept { return values_[i]; }
    std::span<const Level> values() const noexcept { return values_; }

    friend bool operator==(const PossibilityDistribution&, const PossibilityDistribution&) = default;

private:
    std::vector<Level> values_;
};

/// Optimistic Sugeno integral: max_i min(possibilities[i], utilities[i]).
/// Throws DimensionError on length mismatch or empty input.
Level sugeno_optimistic(std::span<const Level> possibilities, std::span<const Level> utilities);

} // namespace qposs
