#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "viewgraph/model.hpp"

namespace viewgraph {

/// SGD recipe: linear warm-up to the peak rate, then multiplicative decay
/// whenever validation AUROC stalls for longer than `plateau_patience` epochs.
struct TrainConfig {
    double weight_decay = 1e-3;
    int batch_size = 16;
    int epochs = 300;
    double peak_lr = 1e-3;
    int warmup_epochs = 100;
    double plateau_factor = 0.95;
    int plateau_patience = 5;
    std::uint64_t seed = 0;
    std::size_t param_budget = kParameterBudget;
    std::size_t hidden = 0;  // 0: largest width within param_budget

    void validate() const;
};

/// Learning-rate schedule with 1-based epochs. During warm-up the rate for
/// epoch e is peak * e / warmup. Plateau monitoring starts with the first
/// epoch after warm-up: the first observation sets the reference, and more
/// than `patience` consecutive non-improving epochs trigger one decay and
/// reset the counter.
class LrSchedule {
public:
    explicit LrSchedule(const TrainConfig& cfg);

    double lr_for_epoch(int epoch) const;
    /// Report the validation score at the end of `epoch`.
    void observe(int epoch, double val_auroc);
    int decays() const noexcept { return decays_; }

private:
    double peak_;
    int warmup_;
    double factor_;
    int patience_;
    double current_;
    std::optional<double> best_;
    int bad_epochs_ = 0;
    int decays_ = 0;
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_auroc = 0.0;
};

struct TrainedHead {
    Head head;
    std::vector<EpochRecord> trace;
    int best_epoch = 0;
    double best_val_auroc = 0.0;
};

/// One prepared training example; `input` comes from prepare_input.
struct Example {
    Eigen::MatrixXd input;
    int label = 0;
};

/// Mini-batch SGD on the mean binary cross-entropy of the batch, with weight
/// decay added to the gradient of every parameter. Returns the parameters
/// from the epoch with the best validation AUROC (earliest on ties).
TrainedHead train(HeadKind kind, std::size_t dim, std::size_t n_nodes, std::span<const Example> examples,
                  std::span<const std::size_t> train_idx, std::span<const std::size_t> val_idx,
                  const TrainConfig& cfg);

std::vector<double> predict(const Head& head, std::span<const Example> examples, std::span<const std::size_t> idx);

void write_trace_csv(std::ostream& out, std::span<const EpochRecord> trace);

}  // namespace viewgraph
