#include "viewgraph/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "viewgraph/error.hpp"

namespace viewgraph {

std::string_view to_string(HeadKind k) { return k == HeadKind::sage ? "sage" : "mlp"; }

HeadKind parse_head(std::string_view name) {
    if (name == "sage") return HeadKind::sage;
    if (name == "mlp") return HeadKind::mlp;
    throw ArgumentError("unknown head kind: " + std::string(name));
}

std::size_t sage_param_count(std::size_t dim, std::size_t hidden) {
    return (3 * dim + 1) * hidden + hidden + 1;
}

std::size_t mlp_param_count(std::size_t n_slices, std::size_t dim, std::size_t hidden) {
    return (n_slices * dim + 1) * hidden + hidden + 1;
}

std::size_t default_sage_hidden(std::size_t dim, std::size_t budget) {
    if (budget < 1) return 0;
    return (budget - 1) / (3 * dim + 2);
}

std::size_t default_mlp_hidden(std::size_t n_slices, std::size_t dim, std::size_t budget) {
    if (budget < 1) return 0;
    return (budget - 1) / (n_slices * dim + 2);
}

Head::Head(HeadKind kind, std::size_t dim, std::size_t hidden, std::size_t n_nodes, std::size_t budget)
    : kind_(kind), dim_(dim), hidden_(hidden), n_nodes_(n_nodes) {
    if (dim == 0 || hidden == 0 || n_nodes == 0) throw ArgumentError("head dimensions must be positive");
    const std::size_t count = kind == HeadKind::sage ? sage_param_count(dim, hidden)
                                                     : mlp_param_count(n_nodes, dim, hidden);
    if (count > budget) {
        throw ArgumentError(std::string(to_string(kind)) + " head with D=" + std::to_string(dim) +
                            ", H=" + std::to_string(hidden) + " has " + std::to_string(count) +
                            " parameters, over the budget of " + std::to_string(budget));
    }
    params_ = Eigen::VectorXd::Zero(Eigen::Index(count));
}

Head Head::random(HeadKind kind, std::size_t dim, std::size_t hidden, std::size_t n_nodes, std::uint64_t seed,
                  std::size_t budget) {
    Head head(kind, dim, hidden, n_nodes, budget);
    std::mt19937_64 rng(seed);
    const double k_in = 1.0 / std::sqrt(double(head.input_width()));
    const double k_hidden = 1.0 / std::sqrt(double(hidden));
    std::uniform_real_distribution<double> in_dist(-k_in, k_in);
    std::uniform_real_distribution<double> out_dist(-k_hidden, k_hidden);
    const Eigen::Index hidden_end = Eigen::Index(hidden * head.input_width() + hidden);
    for (Eigen::Index i = 0; i < head.params_.size(); ++i) {
        head.params_[i] = i < hidden_end ? in_dist(rng) : out_dist(rng);
    }
    return head;
}

Eigen::Map<const Eigen::MatrixXd> Head::w() const {
    return {params_.data(), Eigen::Index(hidden_), Eigen::Index(input_width())};
}
Eigen::Map<const Eigen::VectorXd> Head::b() const {
    return {params_.data() + hidden_ * input_width(), Eigen::Index(hidden_)};
}
Eigen::Map<const Eigen::VectorXd> Head::readout_w() const {
    return {params_.data() + hidden_ * input_width() + hidden_, Eigen::Index(hidden_)};
}
Eigen::Map<Eigen::MatrixXd> Head::w() { return {params_.data(), Eigen::Index(hidden_), Eigen::Index(input_width())}; }
Eigen::Map<Eigen::VectorXd> Head::b() {
    return {params_.data() + hidden_ * input_width(), Eigen::Index(hidden_)};
}
Eigen::Map<Eigen::VectorXd> Head::readout_w() {
    return {params_.data() + hidden_ * input_width() + hidden_, Eigen::Index(hidden_)};
}

namespace {

void check_input(const Head& head, const Eigen::MatrixXd& input) {
    if (input.cols() != Eigen::Index(head.input_width()) || input.rows() < 1) {
        throw ArgumentError("head input has width " + std::to_string(input.cols()) + ", expected " +
                            std::to_string(head.input_width()));
    }
}

// Sums that do not depend on the order of the terms: values are sorted
// before accumulation, so relabelling nodes reproduces the result bit for bit.
double sorted_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

}  // namespace

Eigen::MatrixXd Head::pre_activation(const Eigen::MatrixXd& stacked) const {
    check_input(*this, stacked);
    Eigen::MatrixXd pre(stacked.rows(), Eigen::Index(hidden_));
    pre.noalias() = stacked * w().transpose();
    pre.rowwise() += b().transpose();
    return pre;
}

Eigen::MatrixXd Head::pool(const Eigen::MatrixXd& act, std::span<const Eigen::Index> rows) const {
    Eigen::MatrixXd pooled(Eigen::Index(rows.size()), act.cols());
    Eigen::Index offset = 0;
    for (std::size_t s = 0; s < rows.size(); ++s) {
        if (offset + rows[s] > act.rows()) break;
        pooled.row(Eigen::Index(s)) = act.middleRows(offset, rows[s]).colwise().mean();
        offset += rows[s];
    }
    if (offset != act.rows()) throw ArgumentError("batch row counts do not cover the stacked input");
    return pooled;
}

void Head::accumulate(const Eigen::MatrixXd& stacked, const Eigen::MatrixXd& pre, const Eigen::MatrixXd& pooled,
                      std::span<const Eigen::Index> rows, const Eigen::VectorXd& upstream,
                      Eigen::VectorXd& grad) const {
    if (grad.size() != params_.size()) throw ArgumentError("gradient buffer has the wrong size");
    const Eigen::Index k = Eigen::Index(input_width());
    const Eigen::Index h = Eigen::Index(hidden_);
    Eigen::Map<Eigen::MatrixXd> gw(grad.data(), h, k);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + h * k, h);
    Eigen::Map<Eigen::VectorXd> gr(grad.data() + h * k + h, h);
    gr.noalias() += pooled.transpose() * upstream;
    grad[grad.size() - 1] += upstream.sum();

    // d logit_s / d pre(r, c) = readout_w(c) / rows_s wherever pre(r, c) > 0
    Eigen::MatrixXd d_pre = (pre.array() > 0.0).cast<double>().matrix();
    Eigen::Index offset = 0;
    for (std::size_t s = 0; s < rows.size(); ++s) {
        const Eigen::RowVectorXd scale = (upstream[Eigen::Index(s)] / double(rows[s])) * readout_w().transpose();
        d_pre.middleRows(offset, rows[s]).array().rowwise() *= scale.array();
        offset += rows[s];
    }
    gw.noalias() += d_pre.transpose() * stacked;
    gb += d_pre.colwise().sum().transpose();
}

Eigen::VectorXd Head::forward_batch(const Eigen::MatrixXd& stacked, std::span<const Eigen::Index> rows) const {
    const Eigen::MatrixXd pooled = pool(pre_activation(stacked).cwiseMax(0.0), rows);
    return (pooled * readout_w()).array() + readout_b();
}

double Head::forward(const Eigen::MatrixXd& input) const {
    check_input(*this, input);
    // Row by row rather than one GEMM, and a sorted readout sum, so the
    // logit does not depend on the order of the rows.
    Eigen::MatrixXd pre(input.rows(), Eigen::Index(hidden_));
    Eigen::VectorXd x(input.cols());
    for (Eigen::Index r = 0; r < input.rows(); ++r) {
        x = input.row(r).transpose();
        pre.row(r) = (w() * x + b()).transpose();
    }
    double logit = readout_b();
    std::vector<double> column;
    for (Eigen::Index c = 0; c < pre.cols(); ++c) {
        const auto act = pre.col(c).cwiseMax(0.0);
        column.assign(act.begin(), act.end());
        logit += readout_w()[c] * (sorted_sum(column) / double(input.rows()));
    }
    return logit;
}

double Head::backward(const Eigen::MatrixXd& input, double upstream, Eigen::VectorXd& grad) const {
    const Eigen::Index rows[1] = {input.rows()};
    return backward_batch(input, rows, [&](Eigen::Index, double) { return upstream; }, grad)[0];
}

Eigen::MatrixXd sage_aggregate(const FeatureMatrix& features, const ViewGraph& graph) {
    const Eigen::Index n = features.count();
    const Eigen::Index d = features.dim();
    if (graph.n_nodes != n || graph.adjacency.rows() != n || graph.adjacency.cols() != n) {
        throw ArgumentError("graph has " + std::to_string(graph.n_nodes) + " nodes but there are " +
                            std::to_string(n) + " feature rows");
    }
    const Eigen::MatrixXd x = features.rows.cast<double>();
    Eigen::MatrixXd out(n, 3 * d);
    out.leftCols(d) = x;
    std::vector<Eigen::Index> nbr;
    std::vector<double> terms;
    for (Eigen::Index i = 0; i < n; ++i) {
        nbr.clear();
        terms.clear();
        for (Eigen::Index j = 0; j < n; ++j) {
            const double wij = graph.adjacency(i, j);
            if (j == i || !(wij > 0.0)) continue;
            nbr.push_back(j);
            terms.push_back(wij);
        }
        if (nbr.empty()) {
            out.block(i, d, 1, 2 * d).setZero();
            continue;
        }
        const double weight_total = sorted_sum(terms);
        for (Eigen::Index c = 0; c < d; ++c) {
            terms.clear();
            double max = -std::numeric_limits<double>::infinity();
            for (Eigen::Index j : nbr) {
                terms.push_back(graph.adjacency(i, j) * x(j, c));
                max = std::max(max, x(j, c));
            }
            out(i, d + c) = sorted_sum(terms) / weight_total;
            out(i, 2 * d + c) = max;
        }
    }
    return out;
}

Eigen::MatrixXd mlp_input(const FeatureMatrix& features) {
    const Eigen::Index n = features.count();
    const Eigen::Index d = features.dim();
    Eigen::MatrixXd out(1, n * d);
    for (Eigen::Index i = 0; i < n; ++i) out.block(0, i * d, 1, d) = features.rows.row(i).cast<double>();
    return out;
}

Eigen::MatrixXd prepare_input(const Head& head, const FeatureMatrix& features, const ViewGraph* graph) {
    if (std::size_t(features.dim()) != head.dim()) {
        throw ArgumentError("feature dimension " + std::to_string(features.dim()) + " does not match head dimension " +
                            std::to_string(head.dim()));
    }
    if (head.kind() == HeadKind::sage) {
        if (graph == nullptr) throw ArgumentError("sage head needs a graph");
        return sage_aggregate(features, *graph);
    }
    if (std::size_t(features.count()) != head.n_nodes()) {
        throw ArgumentError("mlp head expects " + std::to_string(head.n_nodes()) + " slices, got " +
                            std::to_string(features.count()));
    }
    return mlp_input(features);
}

double sage_forward(const Head& head, const FeatureMatrix& features, const ViewGraph& graph) {
    if (head.kind() != HeadKind::sage) throw ArgumentError("sage_forward needs a sage head");
    return head.forward(prepare_input(head, features, &graph));
}

double mlp_forward(const Head& head, const FeatureMatrix& features) {
    if (head.kind() != HeadKind::mlp) throw ArgumentError("mlp_forward needs an mlp head");
    return head.forward(prepare_input(head, features, nullptr));
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double bce_with_logit(double logit, int label) {
    return std::max(logit, 0.0) - logit * double(label) + std::log1p(std::exp(-std::abs(logit)));
}

double grad_check(const Head& head, const Eigen::MatrixXd& input, int label, double h) {
    Eigen::VectorXd analytic = Eigen::VectorXd::Zero(head.params().size());
    const double logit = head.forward(input);
    head.backward(input, sigmoid(logit) - double(label), analytic);

    Head probe = head;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < probe.params().size(); ++i) {
        const double saved = probe.params()[i];
        probe.params()[i] = saved + h;
        const double up = bce_with_logit(probe.forward(input), label);
        probe.params()[i] = saved - h;
        const double down = bce_with_logit(probe.forward(input), label);
        probe.params()[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
        const double err = std::abs(analytic[i] - numeric) / denom;
        if (!std::isfinite(err)) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, err);
    }
    return worst;
}

static_assert(std::endian::native == std::endian::little, "head I/O assumes a little-endian host");

void write_head(std::ostream& out, const Head& head) {
    out << to_string(head.kind()) << ' ' << head.dim() << ' ' << head.hidden() << ' ' << head.n_nodes() << '\n';
    out.write(reinterpret_cast<const char*>(head.params().data()),
              std::streamsize(head.params().size() * Eigen::Index(sizeof(double))));
    if (!out) throw IoError("failed to write head parameters");
}

Head read_head(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("head file: missing header");
    std::istringstream hs(line);
    std::string kind;
    std::size_t d = 0, h = 0, n = 0;
    if (!(hs >> kind >> d >> h >> n)) throw FormatError("head file: malformed header: " + line);
    Head head(parse_head(kind), d, h, n, std::numeric_limits<std::size_t>::max());
    const auto bytes = std::streamsize(head.params().size() * Eigen::Index(sizeof(double)));
    in.read(reinterpret_cast<char*>(head.params().data()), bytes);
    if (in.gcount() != bytes) throw FormatError("head file: parameters truncated");
    return head;
}

}  // namespace viewgraph
