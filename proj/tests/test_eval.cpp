#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "viewgraph/benchmark.hpp"
#include "viewgraph/config.hpp"
#include "viewgraph/error.hpp"
#include "viewgraph/folds.hpp"
#include "viewgraph/metrics.hpp"
#include "viewgraph/phantom.hpp"

using namespace viewgraph;

namespace {

// Fraction of (positive, negative) pairs ordered correctly, ties count half.
double pair_count_auroc(const std::vector<double>& s, const std::vector<int>& y) {
    double good = 0.0, total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                total += 1.0;
                good += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
    return good / total;
}

}  // namespace

TEST_CASE("AUROC") {
    CHECK(auroc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}) == 0.75);
    CHECK(auroc(std::vector<double>{0.1, 0.2, 0.3, 0.4}, std::vector<int>{0, 0, 1, 1}) == 1.0);
    CHECK(auroc(std::vector<double>{1, 1, 1, 1}, std::vector<int>{0, 1, 0, 1}) == 0.5);
    CHECK_THROWS_AS(auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), ArgumentError);

    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> coarse(0, 5);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> s;
        std::vector<int> y;
        for (int i = 0; i < 30; ++i) {
            s.push_back(coarse(rng));  // plenty of ties
            y.push_back(i % 3 == 0);
        }
        CHECK(auroc(s, y) == doctest::Approx(pair_count_auroc(s, y)).epsilon(1e-12));
        std::vector<double> as_score(y.begin(), y.end());
        CHECK(auroc(as_score, y) == 1.0);
    }
}

TEST_CASE("confusion metrics") {
    const Confusion c{2, 1, 1, 2};
    CHECK(mcc(c).value == doctest::Approx(1.0 / 3.0));
    CHECK(f1(c).value == doctest::Approx(2.0 / 3.0));
    CHECK(balanced_accuracy(c).value == doctest::Approx(2.0 / 3.0));

    const std::vector<int> y{1, 0, 1, 1, 0, 0};
    CHECK(mcc(y, y).value == 1.0);
    CHECK(f1(y, y).value == 1.0);
    CHECK(balanced_accuracy(y, y).value == 1.0);
    std::vector<int> flip;
    for (int v : y) flip.push_back(1 - v);
    CHECK(mcc(flip, y).value == -1.0);

    const std::vector<int> p{1, 1, 0, 1, 0, 1};
    std::vector<int> pf;
    for (int v : p) pf.push_back(1 - v);
    CHECK(mcc(pf, flip).value == doctest::Approx(mcc(p, y).value));

    const std::vector<int> none{0, 0, 0, 0};
    const std::vector<int> labels{0, 1, 0, 1};
    const auto m = mcc(none, labels);
    CHECK(m.value == 0.0);
    CHECK(m.degenerate);
    CHECK(f1(none, std::vector<int>{0, 0, 0, 0}).degenerate);
}

TEST_CASE("stratified folds") {
    std::vector<int> ten{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    const FoldSplit s = make_folds(ten, 5, 0);
    for (int f = 0; f < 5; ++f) {
        const auto m = s.members(f);
        REQUIRE(m.size() == 2);
        CHECK(ten[m[0]] + ten[m[1]] == 1);
    }
    std::vector<int> labels;
    for (int i = 0; i < 203; ++i) labels.push_back(i % 7 < 3);
    const FoldSplit big = make_folds(labels, 5, 9);
    const double pos = double(std::count(labels.begin(), labels.end(), 1));
    std::set<std::size_t> all;
    for (int f = 0; f < 5; ++f) {
        const auto m = big.members(f);
        long p = 0;
        for (auto i : m) {
            CHECK(all.insert(i).second);
            p += labels[i];
        }
        const double expected = pos * double(m.size()) / double(labels.size());
        CHECK(std::abs(double(p) - expected) <= 1.0);
        CHECK(std::abs(double(m.size()) - 203.0 / 5.0) <= 1.0);
    }
    CHECK(all.size() == labels.size());
    CHECK(make_folds(labels, 5, 9).fold_of == big.fold_of);
    CHECK(make_folds(labels, 5, 10).fold_of != big.fold_of);

    int test_hits[5] = {}, val_hits[5] = {};
    for (int r = 0; r < 5; ++r) {
        const auto roles = big.roles(r);
        test_hits[big.fold_of[roles.test.front()]]++;
        val_hits[big.fold_of[roles.val.front()]]++;
        CHECK(roles.train.size() + roles.val.size() + roles.test.size() == labels.size());
        std::set<std::size_t> seen(roles.train.begin(), roles.train.end());
        for (auto i : roles.val) CHECK(seen.insert(i).second);
        for (auto i : roles.test) CHECK(seen.insert(i).second);
    }
    for (int f = 0; f < 5; ++f) {
        CHECK(test_hits[f] == 1);
        CHECK(val_hits[f] == 1);
    }
    CHECK_THROWS_AS(make_folds(std::vector<int>{0, 0, 0, 0, 0, 1}, 5, 0), ArgumentError);
}

TEST_CASE("phantom construction") {
    PhantomSpec spec;
    spec.grid.dims = {48, 48, 48};
    spec.centroid = spec.grid.center();
    spec.noise_sigma = 0.0;
    spec.label = 0;
    const Phantom p0 = generate_phantom(spec);
    spec.label = 1;
    const Phantom p1 = generate_phantom(spec);
    CHECK(p0.mask.data().size() == p1.mask.data().size());
    CHECK(std::equal(p0.mask.data().begin(), p0.mask.data().end(), p1.mask.data().begin()));
    bool inside_differs = false;
    for (std::size_t i = 0; i < p0.volume.data().size(); ++i) {
        if (!p0.mask.data()[i]) CHECK(p0.volume.data()[i] == p1.volume.data()[i]);
        else if (p0.volume.data()[i] != p1.volume.data()[i]) inside_differs = true;
    }
    CHECK(inside_differs);

    CHECK(z_axis_alignment(p0.mask).value > 0.99);
    const double analytic = 4.0 / 3.0 * std::numbers::pi * 7.0 * 7.0 * 18.0;
    CHECK(std::abs(double(mask_count(p0.mask)) - analytic) / analytic < 0.05);

    spec.noise_sigma = 0.1;
    spec.seed = 4;
    const Phantom a = generate_phantom(spec);
    const Phantom b = generate_phantom(spec);
    CHECK(std::equal(a.volume.data().begin(), a.volume.data().end(), b.volume.data().begin()));

    spec.semi_axes = Vec3(7, 7, 30);
    CHECK_THROWS_AS(generate_phantom(spec), ArgumentError);
}

TEST_CASE("phantom set draws oblique lesions with balanced labels") {
    PhantomSetConfig cfg;
    cfg.n = 40;
    const auto specs = phantom_specs(cfg);
    REQUIRE(specs.size() == 40);
    int ones = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        CHECK(specs[i].label == int(i % 2));
        ones += specs[i].label;
        const double tilt = std::acos(std::abs(specs[i].major_axis().z())) * 180.0 / std::numbers::pi;
        CHECK(tilt >= cfg.min_tilt_deg - 1e-9);
        CHECK(tilt <= cfg.max_tilt_deg + 1e-9);
        CHECK_NOTHROW(specs[i].validate());
    }
    CHECK(ones == 20);
}

TEST_CASE("run config parsing") {
    RunConfig rc(benchmark_config_keys());
    std::istringstream in("# demo\nviews = 8, 24\n\nheads=sage # trailing comment\n");
    rc.parse(in, "demo");
    CHECK(rc.get_list("views") == std::vector<std::string>{"8", "24"});
    CHECK(rc.get("heads") == "sage");
    CHECK(rc.get_int("epochs") == 300);
    CHECK(rc.get_double("peak_lr") == 0.001);
    CHECK(rc.source_text().find("views = 8, 24") != std::string::npos);
    std::istringstream unknown("colour = blue\n");
    CHECK_THROWS_AS(rc.parse(unknown, "bad"), ConfigError);
    std::istringstream junk("just words\n");
    CHECK_THROWS_AS(rc.parse(junk, "bad"), ConfigError);
    for (const auto& key : rc.keys()) {
        CHECK(!key.help.empty());
        CHECK(rc.help().find(key.name) != std::string::npos);
    }
}

TEST_CASE("benchmark configuration checks") {
    RunConfig rc(benchmark_config_keys());
    BenchmarkConfig cfg = benchmark_from_config(rc);
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.train.epochs == 300);
    CHECK(cfg.train.batch_size == 16);
    CHECK(cfg.train.weight_decay == 1e-3);

    rc.set("sphere_seed", "none");
    CHECK_THROWS_AS(benchmark_from_config(rc).validate(), ConfigError);
    RunConfig rc2(benchmark_config_keys());
    rc2.set("strategies", "axial");
    rc2.set("views", "8");
    CHECK_THROWS_AS(benchmark_from_config(rc2).validate(), ConfigError);
    RunConfig rc3(benchmark_config_keys());
    rc3.set("graphs", "complete/cosine");
    CHECK_THROWS_AS(benchmark_from_config(rc3), ConfigError);
}

TEST_CASE("tiny benchmark: row structure and determinism") {
    BenchmarkConfig cfg;
    cfg.data.n = 20;
    cfg.data.grid = 32;
    cfg.data.major_mm = 11;
    cfg.data.minor_mm = 4;
    cfg.views = {4, 6};
    cfg.train.epochs = 4;
    cfg.train.warmup_epochs = 1;
    cfg.train.param_budget = 5000;
    const BenchmarkResult a = run_benchmark(cfg);
    CHECK(a.summary.size() == 8);  // 2 strategies x 2 view counts x 2 heads
    CHECK(a.rows.size() == 40);
    CHECK(a.summary.front().strategy == "axial_plus");
    CHECK(a.find("omni", 6, "mlp").folds == 5);
    CHECK(a.find("omni", 6, "sage", "complete", "inverse").views == 6);

    cfg.jobs = 3;
    const BenchmarkResult b = run_benchmark(cfg);
    std::ostringstream ca, cb;
    write_results_csv(ca, a.rows);
    write_results_csv(cb, b.rows);
    CHECK(ca.str() == cb.str());
    CHECK(ca.str().rfind("strategy,views,head,topology,weighting,fold,auroc,mcc,bal_acc,f1,train_seconds\n", 0) == 0);
}
