#include "soupkit/metrics.hpp"

#include "soupkit/errors.hpp"

namespace soupkit {

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> golds) {
    if (predictions.size() != golds.size()) {
        throw DomainError("confusion: prediction/gold length mismatch");
    }
    if (predictions.empty()) {
        throw DomainError("confusion: empty inputs");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int p = predictions[i];
        const int g = golds[i];
        if ((p != 0 && p != 1) || (g != 0 && g != 1)) {
            throw DomainError("confusion: labels must be 0 or 1");
        }
        if (p == 1 && g == 1) {
            ++c.tp;
        } else if (p == 1 && g == 0) {
            ++c.fp;
        } else if (p == 0 && g == 1) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

Metrics metrics(const ConfusionCounts& c) {
    if (c.total() == 0) {
        throw DomainError("metrics: no evaluated items");
    }
    Metrics m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    m.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp)
                                    : 0.0;
    m.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn)
                                 : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

}  // namespace soupkit
