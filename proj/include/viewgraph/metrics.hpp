#pragma once

#include <span>

namespace viewgraph {

/// Rank-based (Mann-Whitney) area under the ROC curve; tied scores count as
/// half-concordant. Throws ArgumentError unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

struct Confusion {
    long tp = 0, fp = 0, fn = 0, tn = 0;
};

Confusion confusion(std::span<const int> preds, std::span<const int> labels);

struct MetricValue {
    double value = 0.0;
    bool degenerate = false;  // a zero denominator forced the value to 0
};

MetricValue mcc(std::span<const int> preds, std::span<const int> labels);
MetricValue balanced_accuracy(std::span<const int> preds, std::span<const int> labels);
MetricValue f1(std::span<const int> preds, std::span<const int> labels);

MetricValue mcc(const Confusion& c);
MetricValue balanced_accuracy(const Confusion& c);
MetricValue f1(const Confusion& c);

}  // namespace viewgraph
