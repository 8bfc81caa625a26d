#include "qposs/scale.hpp"

#include "qposs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qposs {

QualitativeScale QualitativeScale::make(std::span<const double> labels) {
    std::vector<double> sorted;
    sorted.reserve(labels.size() + 2);
    for (double v : labels) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw InvalidScaleError("scale label " + std::to_string(v) + " is outside [0,1]");
        sorted.push_back(v);
    }
    sorted.push_back(0.0);
    sorted.push_back(1.0);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    if (sorted.size() > std::numeric_limits<std::uint16_t>::max())
        throw InvalidScaleError("scale has too many levels");
    return QualitativeScale(std::move(sorted));
}

Level QualitativeScale::reverse(Level l) const {
    return Level{static_cast<std::uint16_t>(k() - l.index)};
}

double QualitativeScale::label(Level l) const { return labels_.at(l.index); }

std::optional<Level> QualitativeScale::find(double value) const noexcept {
    auto it = std::lower_bound(labels_.begin(), labels_.end(), value);
    if (it == labels_.end() || *it != value)
        return std::nullopt;
    return Level{static_cast<std::uint16_t>(it - labels_.begin())};
}

QualitativeScale make_scale(std::span<const double> labels) {
    return QualitativeScale::make(labels);
}

Level order_reverse(const QualitativeScale& scale, Level l) { return scale.reverse(l); }

Level max_level(std::span<const Level> values) noexcept {
    Level best{0};
    for (Level v : values)
        best = std::max(best, v);
    return best;
}

bool is_normalized(std::span<const Level> values, const QualitativeScale& scale) noexcept {
    return !values.empty() && max_level(values) == scale.top();
}

PossibilityDistribution::PossibilityDistribution(std::vector<Level> values,
                                                 const QualitativeScale& scale)
    : values_(std::move(values)) {
    for (Level v : values_)
        if (!scale.contains(v))
            throw ModelError("possibility level outside the scale");
    if (!is_normalized(values_, scale))
        throw ModelError("possibility distribution is not normalized");
}

PossibilityDistribution PossibilityDistribution::ignorance(std::size_t size,
                                                           const QualitativeScale& scale) {
    return PossibilityDistribution(std::vector<Level>(size, scale.top()), scale);
}

PossibilityDistribution PossibilityDistribution::certain(std::size_t size, std::size_t element,
                                                         const QualitativeScale& scale) {
    std::vector<Level> v(size, scale.bottom());
    v.at(element) = scale.top();
    return PossibilityDistribution(std::move(v), scale);
}

Level sugeno_optimistic(std::span<const Level> possibilities, std::span<const Level> utilities) {
    if (possibilities.size() != utilities.size() || possibilities.empty())
        throw DimensionError("sugeno_optimistic: sequences must have equal non-zero length");
    Level best{0};
    for (std::size_t i = 0; i < possibilities.size(); ++i)
        best = std::max(best, std::min(possibilities[i], utilities[i]));
    return best;
}

} // namespace qposs
