#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "viewgraph/error.hpp"
#include "viewgraph/metrics.hpp"
#include "viewgraph/training.hpp"

using namespace viewgraph;

namespace {

// Two Gaussian blobs in 4-d, one row per example (MLP with a single slice).
std::vector<Example> separable(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.3);
    std::vector<Example> out;
    for (int i = 0; i < n; ++i) {
        const int label = i % 2;
        Eigen::MatrixXd x(1, 4);
        for (int c = 0; c < 4; ++c) x(0, c) = (label ? 1.0 : -1.0) + g(rng);
        out.push_back({x, label});
    }
    return out;
}

std::vector<std::size_t> range(std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> v;
    for (std::size_t i = lo; i < hi; ++i) v.push_back(i);
    return v;
}

}  // namespace

TEST_CASE("warm-up is linear to the peak rate") {
    const TrainConfig cfg;
    const LrSchedule s(cfg);
    CHECK(s.lr_for_epoch(1) == doctest::Approx(1e-5));
    CHECK(s.lr_for_epoch(50) == doctest::Approx(0.0005));
    CHECK(s.lr_for_epoch(100) == doctest::Approx(0.001));
    CHECK(s.lr_for_epoch(101) == doctest::Approx(0.001));
}

TEST_CASE("plateau decay fires after more than patience epochs") {
    const TrainConfig cfg;
    LrSchedule s(cfg);
    for (int e = 1; e <= 100; ++e) s.observe(e, 0.5 + 0.001 * e);  // warm-up is ignored
    s.observe(101, 0.8);
    for (int e = 102; e <= 106; ++e) s.observe(e, 0.8);
    CHECK(s.decays() == 0);
    s.observe(107, 0.79);  // sixth epoch without improvement
    CHECK(s.decays() == 1);
    CHECK(s.lr_for_epoch(108) == doctest::Approx(0.00095));
    s.observe(108, 0.81);
    CHECK(s.decays() == 1);
}

TEST_CASE("training config validation") {
    TrainConfig cfg;
    cfg.warmup_epochs = cfg.epochs;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_NOTHROW(TrainConfig{}.validate());
}

TEST_CASE("separable toy set: loss halves within 50 epochs") {
    const auto ex = separable(40, 1);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.warmup_epochs = 5;
    cfg.peak_lr = 0.05;
    cfg.hidden = 8;
    const auto train_idx = range(0, 30);
    const auto val_idx = range(30, 40);
    const TrainedHead r = train(HeadKind::mlp, 4, 1, ex, train_idx, val_idx, cfg);
    REQUIRE(r.trace.size() == 50);
    CHECK(r.trace.back().train_loss <= 0.5 * r.trace.front().train_loss);
    CHECK(r.best_val_auroc == 1.0);
}

TEST_CASE("trace, snapshot selection and determinism") {
    const auto ex = separable(60, 2);
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.warmup_epochs = 10;
    cfg.peak_lr = 0.005;
    cfg.hidden = 6;
    cfg.seed = 3;
    const auto train_idx = range(0, 40);
    const auto val_idx = range(40, 60);
    const TrainedHead a = train(HeadKind::mlp, 4, 1, ex, train_idx, val_idx, cfg);
    const TrainedHead b = train(HeadKind::mlp, 4, 1, ex, train_idx, val_idx, cfg);
    CHECK(a.head.params() == b.head.params());
    CHECK(a.best_val_auroc == b.best_val_auroc);

    for (std::size_t e = 0; e < a.trace.size(); ++e) {
        CHECK(a.trace[e].epoch == int(e) + 1);
        if (a.trace[e].epoch <= cfg.warmup_epochs) {
            CHECK(a.trace[e].lr == doctest::Approx(cfg.peak_lr * double(e + 1) / cfg.warmup_epochs));
        }
    }
    const auto best = std::max_element(a.trace.begin(), a.trace.end(),
                                       [](const EpochRecord& x, const EpochRecord& y) { return x.val_auroc < y.val_auroc; });
    CHECK(a.best_epoch == best->epoch);
    CHECK(a.best_val_auroc == best->val_auroc);

    std::vector<int> labels;
    for (std::size_t i : val_idx) labels.push_back(ex[i].label);
    CHECK(auroc(predict(a.head, ex, val_idx), labels) == a.best_val_auroc);

    std::ostringstream csv;
    write_trace_csv(csv, a.trace);
    CHECK(csv.str().rfind("epoch,lr,train_loss,val_auroc\n", 0) == 0);
}

TEST_CASE("single-class training split is rejected") {
    const auto ex = separable(20, 3);
    std::vector<std::size_t> zeros;
    for (std::size_t i = 0; i < 20; i += 2) zeros.push_back(i);
    const auto val = range(0, 4);
    CHECK_THROWS_AS(train(HeadKind::mlp, 4, 1, ex, zeros, val, TrainConfig{}), ArgumentError);
}
