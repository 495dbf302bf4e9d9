#include "viewgraph/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "viewgraph/error.hpp"
#include "viewgraph/metrics.hpp"

namespace viewgraph {

void TrainConfig::validate() const {
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (!(peak_lr > 0.0)) throw ConfigError("peak_lr must be positive");
    if (warmup_epochs < 0 || warmup_epochs >= epochs) throw ConfigError("warmup_epochs must be in [0, epochs)");
    if (!(plateau_factor > 0.0 && plateau_factor <= 1.0)) throw ConfigError("plateau_factor must be in (0, 1]");
    if (plateau_patience < 0) throw ConfigError("plateau_patience must be non-negative");
}

LrSchedule::LrSchedule(const TrainConfig& cfg)
    : peak_(cfg.peak_lr),
      warmup_(cfg.warmup_epochs),
      factor_(cfg.plateau_factor),
      patience_(cfg.plateau_patience),
      current_(cfg.peak_lr) {}

double LrSchedule::lr_for_epoch(int epoch) const {
    if (epoch <= warmup_) return peak_ * double(epoch) / double(warmup_);
    return current_;
}

void LrSchedule::observe(int epoch, double val_auroc) {
    if (epoch <= warmup_) return;
    if (!best_ || val_auroc > *best_) {
        best_ = val_auroc;
        bad_epochs_ = 0;
        return;
    }
    if (++bad_epochs_ > patience_) {
        current_ *= factor_;
        ++decays_;
        bad_epochs_ = 0;
    }
}

namespace {

struct Batch {
    Eigen::MatrixXd stacked;
    std::vector<Eigen::Index> rows;
};

Batch stack(std::span<const Example> examples, std::span<const std::size_t> idx) {
    Batch b;
    Eigen::Index total = 0;
    for (std::size_t i : idx) {
        b.rows.push_back(examples[i].input.rows());
        total += examples[i].input.rows();
    }
    const Eigen::Index cols = idx.empty() ? 0 : examples[idx.front()].input.cols();
    b.stacked.resize(total, cols);
    Eigen::Index offset = 0;
    for (std::size_t i : idx) {
        const Eigen::MatrixXd& in = examples[i].input;
        if (in.cols() != cols) throw ArgumentError("examples have inconsistent input widths");
        b.stacked.middleRows(offset, in.rows()) = in;
        offset += in.rows();
    }
    return b;
}

}  // namespace

std::vector<double> predict(const Head& head, std::span<const Example> examples, std::span<const std::size_t> idx) {
    if (idx.empty()) return {};
    const Batch b = stack(examples, idx);
    const Eigen::VectorXd logits = head.forward_batch(b.stacked, b.rows);
    return {logits.data(), logits.data() + logits.size()};
}

TrainedHead train(HeadKind kind, std::size_t dim, std::size_t n_nodes, std::span<const Example> examples,
                  std::span<const std::size_t> train_idx, std::span<const std::size_t> val_idx,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (train_idx.empty() || val_idx.empty()) throw ArgumentError("training and validation sets must be nonempty");
    const auto positives = std::count_if(train_idx.begin(), train_idx.end(),
                                         [&](std::size_t i) { return examples[i].label == 1; });
    if (positives == 0 || positives == std::ptrdiff_t(train_idx.size())) {
        throw ArgumentError("training split contains a single class");
    }

    const std::size_t hidden = cfg.hidden > 0 ? cfg.hidden
                               : kind == HeadKind::sage ? default_sage_hidden(dim, cfg.param_budget)
                                                        : default_mlp_hidden(n_nodes, dim, cfg.param_budget);
    std::mt19937_64 rng(cfg.seed);
    TrainedHead result{Head::random(kind, dim, hidden, n_nodes, rng(), cfg.param_budget), {}, 0, -1.0};
    Head& head = result.head;
    Head best = head;

    std::vector<int> val_labels;
    for (std::size_t i : val_idx) val_labels.push_back(examples[i].label);
    const Batch val = stack(examples, val_idx);

    LrSchedule schedule(cfg);
    std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
    Eigen::VectorXd grad(head.params().size());

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = schedule.lr_for_epoch(epoch);
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch_size));
            const double inv = 1.0 / double(end - start);
            const std::span<const std::size_t> members(order.data() + start, end - start);
            const Batch batch = stack(examples, members);
            grad.setZero();
            head.backward_batch(batch.stacked, batch.rows,
                                [&](Eigen::Index s, double logit) {
                                    const int label = examples[members[std::size_t(s)]].label;
                                    loss_sum += bce_with_logit(logit, label);
                                    return (sigmoid(logit) - double(label)) * inv;
                                },
                                grad);
            grad += cfg.weight_decay * head.params();
            head.params() -= lr * grad;
        }
        if (!head.params().allFinite()) {
            throw NumericError("training diverged at epoch " + std::to_string(epoch));
        }

        const Eigen::VectorXd val_logits = head.forward_batch(val.stacked, val.rows);
        const double val_auroc =
            auroc(std::vector<double>(val_logits.data(), val_logits.data() + val_logits.size()), val_labels);
        result.trace.push_back({epoch, lr, loss_sum / double(order.size()), val_auroc});
        if (val_auroc > result.best_val_auroc) {
            result.best_val_auroc = val_auroc;
            result.best_epoch = epoch;
            best = head;
        }
        schedule.observe(epoch, val_auroc);
    }
    result.head = std::move(best);
    return result;
}

void write_trace_csv(std::ostream& out, std::span<const EpochRecord> trace) {
    std::ostringstream os;
    os << std::setprecision(17) << "epoch,lr,train_loss,val_auroc\n";
    for (const auto& r : trace) os << r.epoch << ',' << r.lr << ',' << r.train_loss << ',' << r.val_auroc << '\n';
    out << os.str();
}

}  // namespace viewgraph
