#pragma once

#include <span>

namespace inspector {

struct Metrics {
    double accuracy = 0;
    double macro_f1 = 0;     // unweighted mean over classes present in y_true
    double weighted_f1 = 0;  // support-weighted mean
};

Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred);

// Accuracy of always predicting the most frequent class.
double majority_baseline(std::span<const int> y);

}  // namespace inspector
