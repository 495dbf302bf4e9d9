#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "viewgraph/encoder.hpp"
#include "viewgraph/graph_topology.hpp"

namespace viewgraph {

inline constexpr std::size_t kParameterBudget = 100000;

enum class HeadKind { sage, mlp };

std::string_view to_string(HeadKind k);
HeadKind parse_head(std::string_view name);

/// Parameter count of a SAGE head: W is H x 3D plus bias, readout H -> 1.
std::size_t sage_param_count(std::size_t dim, std::size_t hidden);
/// Parameter count of the two-layer MLP over N concatenated D-vectors.
std::size_t mlp_param_count(std::size_t n_slices, std::size_t dim, std::size_t hidden);

/// Largest hidden width that keeps the head within `budget` parameters.
std::size_t default_sage_hidden(std::size_t dim, std::size_t budget = kParameterBudget);
std::size_t default_mlp_hidden(std::size_t n_slices, std::size_t dim, std::size_t budget = kParameterBudget);

/// Both heads share one shape: every input row r goes through
/// relu(W r + b), the rows are mean-pooled and a linear readout gives the
/// logit. The SAGE head feeds one row per node, [x_i | mean_i | max_i]; the
/// MLP feeds a single row, the concatenation of all slice features.
///
/// Parameters live in one flat vector laid out as
/// [W (H x K, column-major) | b (H) | readout weights (H) | readout bias].
class Head {
public:
    Head(HeadKind kind, std::size_t dim, std::size_t hidden, std::size_t n_nodes,
         std::size_t budget = kParameterBudget);

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation.
    static Head random(HeadKind kind, std::size_t dim, std::size_t hidden, std::size_t n_nodes,
                       std::uint64_t seed, std::size_t budget = kParameterBudget);

    HeadKind kind() const noexcept { return kind_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t hidden() const noexcept { return hidden_; }
    std::size_t n_nodes() const noexcept { return n_nodes_; }
    /// Width K of one input row.
    std::size_t input_width() const noexcept { return kind_ == HeadKind::sage ? 3 * dim_ : n_nodes_ * dim_; }
    std::size_t param_count() const noexcept { return std::size_t(params_.size()); }

    Eigen::VectorXd& params() noexcept { return params_; }
    const Eigen::VectorXd& params() const noexcept { return params_; }

    Eigen::Map<const Eigen::MatrixXd> w() const;
    Eigen::Map<const Eigen::VectorXd> b() const;
    Eigen::Map<const Eigen::VectorXd> readout_w() const;
    double readout_b() const { return params_[params_.size() - 1]; }

    Eigen::Map<Eigen::MatrixXd> w();
    Eigen::Map<Eigen::VectorXd> b();
    Eigen::Map<Eigen::VectorXd> readout_w();
    double& readout_b() { return params_[params_.size() - 1]; }

    /// Logit for an already prepared input (rows x K).
    double forward(const Eigen::MatrixXd& input) const;

    /// Adds d(logit)/d(params) * upstream into `grad`; returns the logit.
    double backward(const Eigen::MatrixXd& input, double upstream, Eigen::VectorXd& grad) const;

    /// Several samples stacked row-wise; sample s owns `rows[s]` consecutive rows.
    Eigen::VectorXd forward_batch(const Eigen::MatrixXd& stacked, std::span<const Eigen::Index> rows) const;

    /// Batched backward pass: `upstream_fn(s, logit_s)` returns the upstream
    /// gradient of sample s. Returns the logits.
    template <typename UpstreamFn>
    Eigen::VectorXd backward_batch(const Eigen::MatrixXd& stacked, std::span<const Eigen::Index> rows,
                                   UpstreamFn&& upstream_fn, Eigen::VectorXd& grad) const;

private:
    Eigen::MatrixXd pre_activation(const Eigen::MatrixXd& stacked) const;
    Eigen::MatrixXd pool(const Eigen::MatrixXd& act, std::span<const Eigen::Index> rows) const;
    void accumulate(const Eigen::MatrixXd& stacked, const Eigen::MatrixXd& pre, const Eigen::MatrixXd& pooled,
                    std::span<const Eigen::Index> rows, const Eigen::VectorXd& upstream, Eigen::VectorXd& grad) const;

    HeadKind kind_;
    std::size_t dim_, hidden_, n_nodes_;
    Eigen::VectorXd params_;
};

template <typename UpstreamFn>
Eigen::VectorXd Head::backward_batch(const Eigen::MatrixXd& stacked, std::span<const Eigen::Index> rows,
                                     UpstreamFn&& upstream_fn, Eigen::VectorXd& grad) const {
    const Eigen::MatrixXd pre = pre_activation(stacked);
    const Eigen::MatrixXd pooled = pool(pre.cwiseMax(0.0), rows);  // samples x H
    Eigen::VectorXd logits = (pooled * readout_w()).array() + readout_b();
    Eigen::VectorXd upstream(logits.size());
    for (Eigen::Index s = 0; s < logits.size(); ++s) upstream[s] = upstream_fn(s, logits[s]);
    accumulate(stacked, pre, pooled, rows, upstream, grad);
    return logits;
}

/// Per-node SAGE input [x_i | weighted mean of neighbours | max over
/// neighbours]. Neighbours are j with w_ij > 0; the mean uses the edge
/// weights, the max only uses membership. Isolated nodes get zero aggregates.
Eigen::MatrixXd sage_aggregate(const FeatureMatrix& features, const ViewGraph& graph);

/// Row-concatenation of all slice features (1 x N*D).
Eigen::MatrixXd mlp_input(const FeatureMatrix& features);

Eigen::MatrixXd prepare_input(const Head& head, const FeatureMatrix& features, const ViewGraph* graph);

double sage_forward(const Head& head, const FeatureMatrix& features, const ViewGraph& graph);
double mlp_forward(const Head& head, const FeatureMatrix& features);

/// Numerically stable binary cross-entropy on a logit; label in {0, 1}.
double bce_with_logit(double logit, int label);
double sigmoid(double z);

/// Compares backprop gradients of the BCE loss with central differences
/// (step h) and returns the largest relative error
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
double grad_check(const Head& head, const Eigen::MatrixXd& input, int label, double h = 1e-5);

// Serialized as "<kind> <D> <H> <N>\n" followed by little-endian float64 parameters.
void write_head(std::ostream& out, const Head& head);
Head read_head(std::istream& in);

}  // namespace viewgraph
