#include "viewgraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "viewgraph/error.hpp"

namespace viewgraph {

namespace {

void check_binary(std::span<const int> labels) {
    for (int y : labels)
        if (y != 0 && y != 1) throw ArgumentError("labels must be 0 or 1");
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ArgumentError("scores and labels differ in length");
    check_binary(labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks (1-based) over tie groups.
    double positive_rank_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double rank = 0.5 * double(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1) {
                positive_rank_sum += rank;
                ++positives;
            }
        }
        i = j + 1;
    }
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) throw ArgumentError("AUROC needs both classes");
    const double p = double(positives);
    return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * double(negatives));
}

Confusion confusion(std::span<const int> preds, std::span<const int> labels) {
    if (preds.size() != labels.size()) throw ArgumentError("predictions and labels differ in length");
    if (preds.empty()) throw ArgumentError("metrics need at least one sample");
    check_binary(preds);
    check_binary(labels);
    Confusion c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == 1) (labels[i] == 1 ? c.tp : c.fp)++;
        else (labels[i] == 1 ? c.fn : c.tn)++;
    }
    return c;
}

MetricValue mcc(const Confusion& c) {
    const double tp = double(c.tp), fp = double(c.fp), fn = double(c.fn), tn = double(c.tn);
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom == 0.0) return {0.0, true};
    return {(tp * tn - fp * fn) / std::sqrt(denom), false};
}

MetricValue balanced_accuracy(const Confusion& c) {
    const double pos = double(c.tp + c.fn), neg = double(c.tn + c.fp);
    if (pos == 0.0 || neg == 0.0) {
        // Only one class present: fall back to the recall of that class.
        const double recall = pos > 0.0 ? double(c.tp) / pos : double(c.tn) / neg;
        return {recall, true};
    }
    return {0.5 * (double(c.tp) / pos + double(c.tn) / neg), false};
}

MetricValue f1(const Confusion& c) {
    const double denom = double(2 * c.tp + c.fp + c.fn);
    if (denom == 0.0) return {0.0, true};
    return {2.0 * double(c.tp) / denom, false};
}

MetricValue mcc(std::span<const int> preds, std::span<const int> labels) { return mcc(confusion(preds, labels)); }
MetricValue balanced_accuracy(std::span<const int> preds, std::span<const int> labels) {
    return balanced_accuracy(confusion(preds, labels));
}
MetricValue f1(std::span<const int> preds, std::span<const int> labels) { return f1(confusion(preds, labels)); }

}  // namespace viewgraph
