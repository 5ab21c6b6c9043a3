#pragma once

#include <span>

namespace liber {

inline constexpr double kLogLossClip = 1e-7;

// P(score(pos) > score(neg)) with ties counted as 1/2.
// Throws MetricError unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

// Mean binary cross-entropy with scores clipped to [1e-7, 1 - 1e-7].
double log_loss(std::span<const double> scores, std::span<const int> labels);

}  // namespace liber
