#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "viewgraph/error.hpp"
#include "viewgraph/graph_topology.hpp"
#include "viewgraph/model.hpp"
#include "viewgraph/sphere_sampler.hpp"

using namespace viewgraph;

namespace {

FeatureMatrix features(std::initializer_list<std::initializer_list<float>> rows) {
    FeatureMatrix f;
    f.rows.resize(Eigen::Index(rows.size()), Eigen::Index(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (float x : r) f.rows(i, j++) = x;
        ++i;
    }
    return f;
}

FeatureMatrix random_features(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    FeatureMatrix f;
    f.rows.resize(n, d);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g;
    for (Eigen::Index i = 0; i < f.rows.size(); ++i) f.rows.data()[i] = g(rng);
    return f;
}

ViewGraph two_node_graph() { return chain_graph(2, Topology::complete, Weighting::inverse); }

}  // namespace

TEST_CASE("parameter counts and budget") {
    CHECK(sage_param_count(384, 86) == 99245);
    CHECK(default_sage_hidden(384) == 86);
    CHECK(sage_param_count(384, 87) > kParameterBudget);
    CHECK_THROWS_AS(Head(HeadKind::sage, 384, 87, 24), ArgumentError);
    CHECK_NOTHROW(Head(HeadKind::sage, 384, 86, 24));

    const std::size_t h = default_mlp_hidden(24, 64);
    CHECK(mlp_param_count(24, 64, h) <= kParameterBudget);
    CHECK(mlp_param_count(24, 64, h + 1) > kParameterBudget);
    CHECK(Head(HeadKind::mlp, 64, h, 24).param_count() == mlp_param_count(24, 64, h));
    CHECK_THROWS_AS(Head(HeadKind::mlp, 64, h + 1, 24), ArgumentError);
    CHECK(Head(HeadKind::sage, 4, 3, 6).param_count() == (3 * 4 + 1) * 3 + 3 + 1);
}

TEST_CASE("zero parameters give a zero logit") {
    const FeatureMatrix f = random_features(5, 3, 1);
    const ViewGraph g = chain_graph(5, Topology::complete, Weighting::uniform);
    CHECK(sage_forward(Head(HeadKind::sage, 3, 4, 5), f, g) == 0.0);
    CHECK(mlp_forward(Head(HeadKind::mlp, 3, 4, 5), f) == 0.0);
}

TEST_CASE("two-node SAGE logit by hand") {
    // x0 = (1, 2), x1 = (3, -1); each node's only neighbour is the other, so
    // both aggregates of node 0 are x1 and both of node 1 are x0.
    const FeatureMatrix f = features({{1, 2}, {3, -1}});
    Head head(HeadKind::sage, 2, 2, 2);
    // unit 0 sums the node's own feature; unit 1 reads mean[0] - max[0] + max[1]
    const double w[2][6] = {{1, 1, 0, 0, 0, 0}, {0, 0, 1, 0, -1, 1}};
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 6; ++c) head.w()(r, c) = w[r][c];
    head.b() << 0.0, -1.0;
    head.readout_w() << 1.0, -2.0;
    head.readout_b() = 0.5;
    // node 0: unit0 = 1 + 2 = 3, unit1 = 3 - 3 - 1 - 1 = -2 -> 0
    // node 1: unit0 = 3 - 1 = 2, unit1 = 1 - 1 + 2 - 1 = 1
    // mean pool (2.5, 0.5) -> 2.5 - 1.0 + 0.5 = 2.0
    CHECK(sage_forward(head, f, two_node_graph()) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("two-slice MLP logit by hand, and order sensitivity") {
    const FeatureMatrix f = features({{1, 2}, {3, -1}});
    Head head(HeadKind::mlp, 2, 2, 2);
    const double w[2][4] = {{1, 0, 0, 1}, {0, 1, 1, 0}};
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 4; ++c) head.w()(r, c) = w[r][c];
    head.b() << 0.5, -6.0;
    head.readout_w() << 2.0, 3.0;
    head.readout_b() = -0.25;
    // [1, 2, 3, -1]: unit0 = 1 - 1 + 0.5 = 0.5, unit1 = 2 + 3 - 6 = -1 -> 0
    CHECK(mlp_forward(head, f) == doctest::Approx(0.75).epsilon(1e-15));
    // [3, -1, 1, 2]: unit0 = 3 + 2 + 0.5 = 5.5, unit1 = -1 + 1 - 6 -> 0
    const FeatureMatrix swapped = features({{3, -1}, {1, 2}});
    CHECK(mlp_forward(head, swapped) == doctest::Approx(10.75).epsilon(1e-15));
}

TEST_CASE("SAGE is invariant to node relabelling") {
    const auto pts = canonical_sphere(12, 0);
    const ViewGraph g = build_view_graph(pts, Topology::complete, Weighting::inverse);
    const FeatureMatrix f = random_features(12, 5, 2);
    const Head head = Head::random(HeadKind::sage, 5, 7, 12, 9);
    const double base = sage_forward(head, f, g);

    std::vector<int> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(4);
    for (int t = 0; t < 5; ++t) {
        std::shuffle(perm.begin(), perm.end(), rng);
        FeatureMatrix pf = f;
        ViewGraph pg = g;
        for (int i = 0; i < 12; ++i) {
            pf.rows.row(i) = f.rows.row(perm[std::size_t(i)]);
            for (int j = 0; j < 12; ++j) pg.adjacency(i, j) = g.adjacency(perm[std::size_t(i)], perm[std::size_t(j)]);
        }
        CHECK(sage_forward(head, pf, pg) == base);
    }
}

TEST_CASE("weighted mean of constant neighbours is the constant") {
    FeatureMatrix f;
    f.rows = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Constant(6, 3, 0.375f);
    for (auto w : {Weighting::linear_decay, Weighting::inverse, Weighting::inverse_square}) {
        const ViewGraph g = chain_graph(6, Topology::complete, w);
        const Eigen::MatrixXd in = sage_aggregate(f, g);
        CHECK((in.middleCols(3, 3).array() - 0.375).abs().maxCoeff() < 1e-15);
    }
    // isolated nodes get zero aggregates
    const ViewGraph lonely = chain_graph(1, Topology::local, Weighting::uniform);
    FeatureMatrix one;
    one.rows = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Constant(1, 3, 2.0f);
    const Eigen::MatrixXd iso = sage_aggregate(one, lonely);
    CHECK(iso.rightCols(6).isZero(0.0));
}

TEST_CASE("max aggregation ignores weight magnitude") {
    const FeatureMatrix f = features({{0, 0}, {5, -1}, {1, 4}});
    const ViewGraph g = chain_graph(3, Topology::complete, Weighting::inverse_square);
    const Eigen::MatrixXd in = sage_aggregate(f, g);
    // node 0 neighbours: node 1 (w 1) and node 2 (w 1/4)
    CHECK(in(0, 4) == 5.0);
    CHECK(in(0, 5) == 4.0);
    CHECK(in(0, 2) == doctest::Approx((5.0 + 0.25 * 1.0) / 1.25));
}

TEST_CASE("gradient checks") {
    const auto pts = canonical_sphere(6, 1);
    const ViewGraph g = build_view_graph(pts, Topology::complete, Weighting::inverse);
    const FeatureMatrix f = random_features(6, 4, 3);
    const Head sage = Head::random(HeadKind::sage, 4, 4, 6, 5);
    const Eigen::MatrixXd sin = prepare_input(sage, f, &g);
    CHECK(grad_check(sage, sin, 1) < 1e-5);
    CHECK(grad_check(sage, sin, 0) < 1e-5);

    const Head mlp = Head::random(HeadKind::mlp, 4, 5, 6, 6);
    const Eigen::MatrixXd min = prepare_input(mlp, f, nullptr);
    CHECK(grad_check(mlp, min, 1) < 1e-5);
    CHECK(grad_check(mlp, min, 0) < 1e-5);

    const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(6, 12);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(Eigen::Index(sage.param_count()));
    sage.backward(zeros, 0.5, grad);
    CHECK(grad.allFinite());
    CHECK(std::isfinite(grad_check(sage, zeros, 1)));
}

TEST_CASE("batched passes equal per-sample passes") {
    const Head head = Head::random(HeadKind::sage, 3, 6, 4, 1);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    std::vector<Eigen::MatrixXd> inputs;
    for (Eigen::Index rows : {4, 2, 5}) {
        Eigen::MatrixXd m(rows, 9);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
        inputs.push_back(m);
    }
    Eigen::MatrixXd stacked(11, 9);
    stacked << inputs[0], inputs[1], inputs[2];
    const Eigen::Index rows[3] = {4, 2, 5};
    const double up[3] = {0.3, -1.2, 0.7};

    Eigen::VectorXd single = Eigen::VectorXd::Zero(Eigen::Index(head.param_count()));
    for (int s = 0; s < 3; ++s) head.backward(inputs[std::size_t(s)], up[s], single);
    Eigen::VectorXd batched = Eigen::VectorXd::Zero(Eigen::Index(head.param_count()));
    const Eigen::VectorXd logits = head.backward_batch(stacked, rows, [&](Eigen::Index s, double) { return up[s]; }, batched);
    CHECK((single - batched).cwiseAbs().maxCoeff() < 1e-12);
    for (int s = 0; s < 3; ++s) CHECK(logits[s] == doctest::Approx(head.forward(inputs[std::size_t(s)])).epsilon(1e-12));
    CHECK((head.forward_batch(stacked, rows) - logits).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("loss helpers") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(bce_with_logit(0.0, 1) == doctest::Approx(std::log(2.0)));
    CHECK(bce_with_logit(800.0, 1) == doctest::Approx(0.0));
    CHECK(bce_with_logit(800.0, 0) == doctest::Approx(800.0));
    CHECK(std::isfinite(bce_with_logit(-800.0, 1)));
}

TEST_CASE("input validation") {
    const Head sage = Head::random(HeadKind::sage, 4, 3, 6, 1);
    CHECK_THROWS_AS(sage_forward(sage, random_features(6, 5, 1), chain_graph(6, Topology::local, Weighting::uniform)),
                    ArgumentError);
    CHECK_THROWS_AS(sage_forward(sage, random_features(5, 4, 1), chain_graph(6, Topology::local, Weighting::uniform)),
                    ArgumentError);
    const Head mlp = Head::random(HeadKind::mlp, 4, 3, 6, 1);
    CHECK_THROWS_AS(mlp_forward(mlp, random_features(5, 4, 1)), ArgumentError);
    CHECK_THROWS_AS(parse_head("gat"), ArgumentError);
}

TEST_CASE("head serialization round trip") {
    const Head head = Head::random(HeadKind::sage, 4, 3, 6, 11);
    std::stringstream ss;
    write_head(ss, head);
    const Head back = read_head(ss);
    CHECK(back.kind() == head.kind());
    CHECK(back.dim() == 4);
    CHECK(back.hidden() == 3);
    CHECK(back.n_nodes() == 6);
    CHECK(back.params() == head.params());
}
