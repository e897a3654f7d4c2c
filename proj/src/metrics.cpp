#include "inspector/metrics.hpp"

#include "inspector/error.hpp"

#include <algorithm>
#include <map>

namespace inspector {

Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.empty()) throw Error(ErrorKind::invalid_argument, "metrics need at least one sample");
    if (y_true.size() != y_pred.size()) throw Error(ErrorKind::dimension_mismatch, "y_true and y_pred differ in length");

    struct Counts {
        int tp = 0, fp = 0, fn = 0, support = 0;
    };
    std::map<int, Counts> per_class;
    int correct = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        auto& t = per_class[y_true[i]];
        ++t.support;
        if (y_true[i] == y_pred[i]) {
            ++correct;
            ++t.tp;
        } else {
            ++t.fn;
        }
    }
    // Predictions of classes absent from y_true only lower other classes' recall.
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] == y_pred[i]) continue;
        auto it = per_class.find(y_pred[i]);
        if (it != per_class.end()) ++it->second.fp;
    }

    Metrics m;
    const double n = static_cast<double>(y_true.size());
    m.accuracy = correct / n;
    for (const auto& [cls, c] : per_class) {
        const double precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
        const double recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
        const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
        m.macro_f1 += f1;
        m.weighted_f1 += f1 * c.support;
    }
    m.macro_f1 /= static_cast<double>(per_class.size());
    m.weighted_f1 /= n;
    return m;
}

double majority_baseline(std::span<const int> y) {
    if (y.empty()) return 0.0;
    std::map<int, int> counts;
    for (int v : y) ++counts[v];
    int best = 0;
    for (const auto& [_, c] : counts) best = std::max(best, c);
    return static_cast<double>(best) / static_cast<double>(y.size());
}

}  // namespace inspector
