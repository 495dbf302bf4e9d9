#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "viewgraph/config.hpp"
#include "viewgraph/graph_topology.hpp"
#include "viewgraph/model.hpp"
#include "viewgraph/phantom.hpp"
#include "viewgraph/slicer.hpp"
#include "viewgraph/training.hpp"

namespace viewgraph {

struct GraphVariant {
    Topology topology = Topology::complete;
    Weighting weighting = Weighting::inverse;
};

struct BenchmarkConfig {
    PhantomSetConfig data;
    double z_spacing = 0.0;  // > 0: simulate thick slices, then resample back to isotropic
    std::vector<Strategy> strategies{Strategy::axial_plus, Strategy::omni};
    std::vector<std::size_t> views{8, 24};
    std::vector<HeadKind> heads{HeadKind::mlp, HeadKind::sage};
    std::vector<GraphVariant> graphs{GraphVariant{}};
    std::optional<std::uint64_t> sphere_seed = 0;
    std::size_t slice_size = 32;
    Eigen::Index encoder_dim = 64;
    std::uint64_t encoder_seed = 0;
    int folds = 5;
    std::uint64_t fold_seed = 0;
    TrainConfig train;
    int jobs = 1;
    bool record_timing = false;

    /// Throws ConfigError on inconsistent settings, before any work is done.
    void validate() const;
};

struct ResultRow {
    std::string strategy;
    std::size_t views = 0;
    std::string head;
    std::string topology;
    std::string weighting;
    int fold = 0;
    double auroc = 0.0;
    double mcc = 0.0;
    double bal_acc = 0.0;
    double f1 = 0.0;
    double train_seconds = 0.0;
};

struct SummaryRow {
    std::string strategy;
    std::size_t views = 0;
    std::string head;
    std::string topology;
    std::string weighting;
    int folds = 0;
    double auroc_mean = 0.0, auroc_sd = 0.0;
    double mcc_mean = 0.0, mcc_sd = 0.0;
    double bal_acc_mean = 0.0, bal_acc_sd = 0.0;
    double f1_mean = 0.0, f1_sd = 0.0;
};

struct BenchmarkResult {
    std::vector<ResultRow> rows;
    std::vector<SummaryRow> summary;

    /// Summary row for a configuration; topology/weighting are "-" for MLP rows.
    const SummaryRow& find(const std::string& strategy, std::size_t views, const std::string& head,
                           const std::string& topology = "-", const std::string& weighting = "-") const;
};

/// Phantoms -> slices -> builtin encoder -> heads, evaluated with stratified
/// k-fold rotation. Output rows are ordered by strategy, views, head, graph
/// variant and fold, and do not depend on `jobs`.
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg, std::ostream* log = nullptr);

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Encoded slice features for one slicing setup, one matrix per sample.
struct Dataset {
    Strategy strategy = Strategy::omni;
    std::size_t views = 0;
    std::optional<SpherePointSet> sphere;  // viewpoints of omni stacks
    std::vector<FeatureMatrix> features;
    std::vector<int> labels;
};

/// Synthetic phantoms from `cfg.data`, sliced and encoded with the builtin encoder.
Dataset synthetic_dataset(const BenchmarkConfig& cfg, Strategy strategy, std::size_t views,
                          std::ostream* log = nullptr);

/// External features listed in a CSV with header "features,label"; each row
/// names an FVEC file (relative paths resolve against the CSV's directory).
Dataset load_dataset(const std::string& csv_path, Strategy strategy, std::optional<SpherePointSet> sphere);

/// The sphere mesh graph for omni stacks, a chain over stack order otherwise.
ViewGraph dataset_graph(Strategy strategy, std::size_t views, const SpherePointSet* sphere,
                        const GraphVariant& variant);

std::vector<Example> make_examples(const std::vector<FeatureMatrix>& features, const std::vector<int>& labels,
                                   HeadKind head, std::size_t views, const ViewGraph* graph);

/// Phantom after the optional thick-slice simulation and isotropic resampling.
Phantom prepare_phantom(const PhantomSpec& spec, double z_spacing);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Keys understood by the benchmark / training commands.
std::vector<ConfigKey> benchmark_config_keys();
BenchmarkConfig benchmark_from_config(const RunConfig& rc);
TrainConfig train_from_config(const RunConfig& rc);

}  // namespace viewgraph
