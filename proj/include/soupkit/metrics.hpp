#pragma once

#include <cstdint>
#include <span>

namespace soupkit {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Label 1 is the positive (check-worthy) class.
ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> golds);

// Zero-denominator convention: precision, recall and F1 are 0 when undefined,
// so the all-negative predictor scores cleanly instead of dividing by zero.
Metrics metrics(const ConfusionCounts& c);

}  // namespace soupkit
