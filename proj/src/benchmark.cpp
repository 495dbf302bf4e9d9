#include "viewgraph/benchmark.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <limits>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "viewgraph/encoder.hpp"
#include "viewgraph/error.hpp"
#include "viewgraph/folds.hpp"
#include "viewgraph/metrics.hpp"

namespace viewgraph {

void BenchmarkConfig::validate() const {
    if (strategies.empty() || views.empty() || heads.empty()) {
        throw ConfigError("benchmark needs at least one strategy, view count and head");
    }
    const bool has_sage = std::find(heads.begin(), heads.end(), HeadKind::sage) != heads.end();
    if (has_sage && graphs.empty()) throw ConfigError("sage head requires at least one graph variant");
    for (Strategy s : strategies) {
        for (std::size_t v : views) {
            if (v < 1) throw ConfigError("view counts must be positive");
            if (s == Strategy::axial && v != 1) throw ConfigError("axial strategy only supports views = 1");
            if (s == Strategy::two5d && v != 3) throw ConfigError("two5d strategy only supports views = 3");
            if (s == Strategy::omni && v < 4 && has_sage) {
                throw ConfigError("omni with a sage head needs at least 4 views for the sphere mesh");
            }
        }
        if (s == Strategy::omni && !sphere_seed) throw ConfigError("omni strategy requires sphere_seed");
    }
    if (folds < 3) throw ConfigError("need at least 3 folds");
    if (data.n < std::size_t(2 * folds)) throw ConfigError("too few phantoms for the requested folds");
    if (slice_size < 1) throw ConfigError("slice_size must be positive");
    if (encoder_dim < 1) throw ConfigError("encoder_dim must be positive");
    if (z_spacing < 0.0 || (z_spacing > 0.0 && z_spacing < data.spacing)) {
        throw ConfigError("z_spacing must be 0 or at least the phantom spacing");
    }
    if (jobs < 1) throw ConfigError("jobs must be positive");
    train.validate();
}

const SummaryRow& BenchmarkResult::find(const std::string& strategy, std::size_t views, const std::string& head,
                                        const std::string& topology, const std::string& weighting) const {
    for (const auto& r : summary) {
        if (r.strategy == strategy && r.views == views && r.head == head && r.topology == topology &&
            r.weighting == weighting) {
            return r;
        }
    }
    throw ArgumentError("no benchmark row for " + strategy + "/" + std::to_string(views) + "/" + head + "/" +
                        topology + "/" + weighting);
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(std::size_t(std::max(1, jobs)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

Phantom prepare_phantom(const PhantomSpec& spec, double z_spacing) {
    Phantom p = generate_phantom(spec);
    if (z_spacing > 0.0 && z_spacing != spec.grid.spacing.z()) {
        const double iso = spec.grid.spacing.minCoeff();
        p.volume = resample_isotropic(anisotropize(p.volume, z_spacing), iso, Interp::linear);
        p.mask = resample_isotropic(anisotropize(p.mask, z_spacing), iso);
        if (mask_count(p.mask) == 0) throw NumericError("lesion vanished after anisotropic resampling");
    }
    return p;
}

namespace {

struct StackKey {
    Strategy strategy;
    std::size_t views;
};

struct Variant {
    std::size_t stack;  // index into stack keys
    HeadKind head;
    std::optional<GraphVariant> graph;
};

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / double(xs.size());
}

double sd_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / double(xs.size() - 1));
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    std::vector<SummaryRow> out;
    std::map<std::string, std::size_t> index;
    std::vector<std::array<std::vector<double>, 4>> values;
    for (const auto& r : rows) {
        const std::string key = r.strategy + '\x1f' + std::to_string(r.views) + '\x1f' + r.head + '\x1f' +
                                r.topology + '\x1f' + r.weighting;
        auto [it, inserted] = index.try_emplace(key, out.size());
        if (inserted) {
            out.push_back({r.strategy, r.views, r.head, r.topology, r.weighting});
            values.emplace_back();
        }
        auto& v = values[it->second];
        v[0].push_back(r.auroc);
        v[1].push_back(r.mcc);
        v[2].push_back(r.bal_acc);
        v[3].push_back(r.f1);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& s = out[i];
        const auto& v = values[i];
        s.folds = int(v[0].size());
        s.auroc_mean = mean_of(v[0]);
        s.auroc_sd = sd_of(v[0]);
        s.mcc_mean = mean_of(v[1]);
        s.mcc_sd = sd_of(v[1]);
        s.bal_acc_mean = mean_of(v[2]);
        s.bal_acc_sd = sd_of(v[2]);
        s.f1_mean = mean_of(v[3]);
        s.f1_sd = sd_of(v[3]);
    }
    return out;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg, std::ostream* log) {
    cfg.validate();
    std::mutex log_mutex;
    auto note = [&](const std::string& msg) {
        if (!log) return;
        std::lock_guard lock(log_mutex);
        *log << msg << std::endl;
    };

    std::vector<StackKey> stacks;
    for (Strategy s : cfg.strategies)
        for (std::size_t v : cfg.views) stacks.push_back({s, v});

    std::map<std::size_t, SpherePointSet> spheres;
    for (const auto& k : stacks) {
        if (k.strategy == Strategy::omni && !spheres.count(k.views)) {
            spheres.emplace(k.views, canonical_sphere(k.views, *cfg.sphere_seed));
        }
    }

    const auto specs = phantom_specs(cfg.data);
    const std::size_t n = specs.size();
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = specs[i].label;

    // features[stack][phantom]
    const ProjectionEncoder encoder(cfg.encoder_dim, cfg.encoder_seed);
    std::vector<std::vector<FeatureMatrix>> features(stacks.size(), std::vector<FeatureMatrix>(n));
    SliceOptions slice_options;
    slice_options.size_px = cfg.slice_size;
    std::atomic<std::size_t> done{0};
    parallel_for(n, cfg.jobs, [&](std::size_t i) {
        const Phantom p = prepare_phantom(specs[i], cfg.z_spacing);
        for (std::size_t s = 0; s < stacks.size(); ++s) {
            const SpherePointSet* pts = stacks[s].strategy == Strategy::omni ? &spheres.at(stacks[s].views) : nullptr;
            const SliceStack stack = slice_strategy(p.volume, p.mask, stacks[s].strategy, stacks[s].views, pts,
                                                    slice_options);
            features[s][i] = encoder.encode(stack);
        }
        const std::size_t count = ++done;
        if (count % 50 == 0 || count == n) note("sliced and encoded " + std::to_string(count) + "/" + std::to_string(n));
    });

    std::vector<Variant> variants;
    for (std::size_t s = 0; s < stacks.size(); ++s) {
        for (HeadKind h : cfg.heads) {
            if (h == HeadKind::mlp) {
                variants.push_back({s, h, std::nullopt});
            } else {
                for (const auto& g : cfg.graphs) variants.push_back({s, h, g});
            }
        }
    }

    // Prepared inputs per variant; SAGE inputs depend on the graph.
    std::vector<std::vector<Example>> examples(variants.size());
    for (std::size_t v = 0; v < variants.size(); ++v) {
        const Variant& var = variants[v];
        const StackKey& key = stacks[var.stack];
        std::optional<ViewGraph> graph;
        if (var.head == HeadKind::sage) {
            const SpherePointSet* pts = key.strategy == Strategy::omni ? &spheres.at(key.views) : nullptr;
            graph = dataset_graph(key.strategy, key.views, pts, *var.graph);
        }
        examples[v] = make_examples(features[var.stack], labels, var.head, key.views, graph ? &*graph : nullptr);
    }

    const FoldSplit split = make_folds(labels, cfg.folds, cfg.fold_seed);
    const std::size_t runs = std::size_t(cfg.folds);
    std::vector<ResultRow> rows(variants.size() * runs);
    parallel_for(rows.size(), cfg.jobs, [&](std::size_t task) {
        const std::size_t v = task / runs;
        const int fold = int(task % runs);
        const Variant& var = variants[v];
        const StackKey& key = stacks[var.stack];
        const auto roles = split.roles(fold);

        const auto start = std::chrono::steady_clock::now();
        const TrainedHead trained = train(var.head, std::size_t(cfg.encoder_dim), key.views, examples[v], roles.train,
                                          roles.val, cfg.train);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        const auto scores = predict(trained.head, examples[v], roles.test);
        std::vector<int> truth, preds;
        for (std::size_t k = 0; k < roles.test.size(); ++k) {
            truth.push_back(labels[roles.test[k]]);
            preds.push_back(scores[k] > 0.0 ? 1 : 0);
        }
        ResultRow& row = rows[task];
        row.strategy = std::string(to_string(key.strategy));
        row.views = key.views;
        row.head = std::string(to_string(var.head));
        row.topology = var.graph ? std::string(to_string(var.graph->topology)) : "-";
        row.weighting = var.graph ? std::string(to_string(var.graph->weighting)) : "-";
        row.fold = fold;
        row.auroc = auroc(scores, truth);
        row.mcc = mcc(preds, truth).value;
        row.bal_acc = balanced_accuracy(preds, truth).value;
        row.f1 = f1(preds, truth).value;
        row.train_seconds = cfg.record_timing ? seconds : 0.0;
        std::ostringstream msg;
        msg << std::fixed << std::setprecision(4) << row.strategy << '/' << row.views << '/' << row.head << '/'
            << row.topology << '/' << row.weighting << " fold " << fold << ": auroc " << row.auroc;
        note(msg.str());
    });

    BenchmarkResult result;
    result.rows = std::move(rows);
    result.summary = summarize(result.rows);
    return result;
}

ViewGraph dataset_graph(Strategy strategy, std::size_t views, const SpherePointSet* sphere,
                        const GraphVariant& variant) {
    if (strategy == Strategy::omni) {
        if (sphere == nullptr || sphere->size() != views) throw ArgumentError("omni graph needs the stack's sphere points");
        return build_view_graph(*sphere, variant.topology, variant.weighting);
    }
    return chain_graph(int(views), variant.topology, variant.weighting);
}

std::vector<Example> make_examples(const std::vector<FeatureMatrix>& features, const std::vector<int>& labels,
                                   HeadKind head, std::size_t views, const ViewGraph* graph) {
    if (features.size() != labels.size()) throw ArgumentError("feature and label counts differ");
    std::vector<Example> out(features.size());
    if (features.empty()) return out;
    const auto dim = std::size_t(features.front().dim());
    // Only the input layout matters here, so the budget is not enforced.
    const Head shape(head, dim, 1, views, std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].count() != Eigen::Index(views)) {
            throw ShapeError("sample " + std::to_string(i) + " has " + std::to_string(features[i].count()) +
                             " feature rows, expected " + std::to_string(views));
        }
        out[i] = {prepare_input(shape, features[i], graph), labels[i]};
    }
    return out;
}

Dataset synthetic_dataset(const BenchmarkConfig& cfg, Strategy strategy, std::size_t views, std::ostream* log) {
    BenchmarkConfig one = cfg;
    one.strategies = {strategy};
    one.views = {views};
    one.validate();
    Dataset d;
    d.strategy = strategy;
    d.views = views;
    if (strategy == Strategy::omni) d.sphere = canonical_sphere(views, *cfg.sphere_seed);

    const auto specs = phantom_specs(cfg.data);
    d.labels.resize(specs.size());
    d.features.resize(specs.size());
    const ProjectionEncoder encoder(cfg.encoder_dim, cfg.encoder_seed);
    SliceOptions options;
    options.size_px = cfg.slice_size;
    std::mutex log_mutex;
    std::atomic<std::size_t> done{0};
    parallel_for(specs.size(), cfg.jobs, [&](std::size_t i) {
        const Phantom p = prepare_phantom(specs[i], cfg.z_spacing);
        const SliceStack stack = slice_strategy(p.volume, p.mask, strategy, views, d.sphere ? &*d.sphere : nullptr, options);
        d.features[i] = encoder.encode(stack);
        d.labels[i] = specs[i].label;
        const std::size_t count = ++done;
        if (log && (count % 50 == 0 || count == specs.size())) {
            std::lock_guard lock(log_mutex);
            *log << "sliced and encoded " << count << '/' << specs.size() << std::endl;
        }
    });
    return d;
}

Dataset load_dataset(const std::string& csv_path, Strategy strategy, std::optional<SpherePointSet> sphere) {
    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open dataset " + csv_path);
    const std::filesystem::path base = std::filesystem::path(csv_path).parent_path();
    Dataset d;
    d.strategy = strategy;
    d.sphere = std::move(sphere);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (line_no == 1 && line.rfind("features", 0) == 0)) continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) {
            throw FormatError(csv_path + ":" + std::to_string(line_no) + ": expected features,label");
        }
        std::filesystem::path file = line.substr(0, comma);
        const std::string label = line.substr(comma + 1);
        if (label != "0" && label != "1") {
            throw FormatError(csv_path + ":" + std::to_string(line_no) + ": label must be 0 or 1");
        }
        if (file.is_relative()) file = base / file;
        const Eigen::Index expected = d.features.empty() ? -1 : d.features.front().count();
        d.features.push_back(load_external(file.string(), expected));
        d.labels.push_back(label == "1" ? 1 : 0);
    }
    if (d.features.empty()) throw FormatError(csv_path + ": no samples");
    d.views = std::size_t(d.features.front().count());
    const Eigen::Index dim = d.features.front().dim();
    for (std::size_t i = 0; i < d.features.size(); ++i) {
        if (d.features[i].dim() != dim) {
            throw ShapeError("sample " + std::to_string(i) + " has feature dimension " +
                             std::to_string(d.features[i].dim()) + ", expected " + std::to_string(dim));
        }
    }
    if (strategy == Strategy::omni && (!d.sphere || d.sphere->size() != d.views)) {
        throw ConfigError("omni dataset needs " + std::to_string(d.views) + " sphere points");
    }
    return d;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << std::setprecision(17) << "strategy,views,head,topology,weighting,fold,auroc,mcc,bal_acc,f1,train_seconds\n";
    for (const auto& r : rows) {
        os << r.strategy << ',' << r.views << ',' << r.head << ',' << r.topology << ',' << r.weighting << ','
           << r.fold << ',' << r.auroc << ',' << r.mcc << ',' << r.bal_acc << ',' << r.f1 << ',' << r.train_seconds
           << '\n';
    }
    out << os.str();
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    std::ostringstream os;
    os << std::setprecision(17)
       << "strategy,views,head,topology,weighting,folds,auroc_mean,auroc_sd,mcc_mean,mcc_sd,bal_acc_mean,"
          "bal_acc_sd,f1_mean,f1_sd\n";
    for (const auto& r : rows) {
        os << r.strategy << ',' << r.views << ',' << r.head << ',' << r.topology << ',' << r.weighting << ','
           << r.folds << ',' << r.auroc_mean << ',' << r.auroc_sd << ',' << r.mcc_mean << ',' << r.mcc_sd << ','
           << r.bal_acc_mean << ',' << r.bal_acc_sd << ',' << r.f1_mean << ',' << r.f1_sd << '\n';
    }
    out << os.str();
}

std::vector<ConfigKey> benchmark_config_keys() {
    return {
        // dataset
        {"n_phantoms", "200", "number of synthetic phantoms (balanced classes)"},
        {"grid", "48", "phantom grid size per axis (voxels)"},
        {"spacing", "1.0", "isotropic phantom voxel spacing in mm"},
        {"major_mm", "18", "lesion major semi-axis in mm"},
        {"minor_mm", "7", "lesion minor semi-axes in mm"},
        {"size_jitter", "0.15", "relative jitter of the semi-axes"},
        {"min_tilt_deg", "20", "smallest angle between lesion major axis and z"},
        {"max_tilt_deg", "70", "largest angle between lesion major axis and z"},
        {"stripe_period_mm", "9", "texture period along the major axis (class 1)"},
        {"stripe_amplitude", "0.3", "texture amplitude"},
        {"lesion_intensity", "1.0", "mean lesion intensity"},
        {"background_intensity", "0.0", "background intensity"},
        {"noise_sigma", "0.4", "Gaussian noise standard deviation"},
        {"data_seed", "0", "phantom generation seed"},
        {"z_spacing", "0", "simulated axial slice thickness in mm (0 = keep isotropic)"},
        // slicing / encoding / graph
        {"strategies", "axial_plus,omni", "slicing strategies: axial, axial_plus, two5d, two5d_plus, omni"},
        {"views", "8,24", "view counts"},
        {"heads", "mlp,sage", "classification heads: mlp, sage"},
        {"graphs", "complete/inverse", "sage graph variants as topology/weighting"},
        {"sphere_seed", "0", "sphere sampler seed for omni views ('none' disables omni)"},
        {"slice_size", "32", "rendered slice side in pixels"},
        {"encoder_dim", "64", "builtin encoder feature dimension"},
        {"encoder_seed", "0", "builtin encoder projection seed"},
        // training
        {"folds", "5", "cross-validation folds"},
        {"fold_seed", "0", "stratified fold assignment seed"},
        {"epochs", "300", "training epochs"},
        {"warmup_epochs", "100", "linear warm-up epochs"},
        {"peak_lr", "0.001", "learning rate reached after warm-up"},
        {"batch_size", "16", "mini-batch size"},
        {"weight_decay", "0.001", "L2 weight decay"},
        {"plateau_factor", "0.95", "learning-rate decay factor on validation plateau"},
        {"plateau_patience", "5", "epochs without validation AUROC gain tolerated before decay"},
        {"train_seed", "0", "parameter initialisation and shuffling seed"},
        {"param_budget", "100000", "maximum trainable parameters per head"},
        {"hidden", "0", "hidden width (0 = largest within param_budget)"},
        // execution
        {"run", "0", "cross-validation run used by train/eval (test fold = run)"},
        {"dataset", "synthetic", "'synthetic' or a CSV of features,label rows naming FVEC files"},
        {"points_file", "none", "sphere point file for omni graphs of external datasets"},
        {"jobs", "1", "worker threads"},
        {"record_timing", "false", "write wall-clock training seconds into results"},
    };
}

TrainConfig train_from_config(const RunConfig& rc) {
    TrainConfig t;
    t.epochs = int(rc.get_int("epochs"));
    t.warmup_epochs = int(rc.get_int("warmup_epochs"));
    t.peak_lr = rc.get_double("peak_lr");
    t.batch_size = int(rc.get_int("batch_size"));
    t.weight_decay = rc.get_double("weight_decay");
    t.plateau_factor = rc.get_double("plateau_factor");
    t.plateau_patience = int(rc.get_int("plateau_patience"));
    t.seed = rc.get_u64("train_seed");
    t.param_budget = std::size_t(rc.get_u64("param_budget"));
    t.hidden = std::size_t(rc.get_u64("hidden"));
    t.validate();
    return t;
}

BenchmarkConfig benchmark_from_config(const RunConfig& rc) {
    BenchmarkConfig c;
    auto& d = c.data;
    d.n = std::size_t(rc.get_u64("n_phantoms"));
    d.grid = std::size_t(rc.get_u64("grid"));
    d.spacing = rc.get_double("spacing");
    d.major_mm = rc.get_double("major_mm");
    d.minor_mm = rc.get_double("minor_mm");
    d.size_jitter = rc.get_double("size_jitter");
    d.min_tilt_deg = rc.get_double("min_tilt_deg");
    d.max_tilt_deg = rc.get_double("max_tilt_deg");
    d.texture.period_mm = rc.get_double("stripe_period_mm");
    d.texture.amplitude = rc.get_double("stripe_amplitude");
    d.lesion_intensity = rc.get_double("lesion_intensity");
    d.background_intensity = rc.get_double("background_intensity");
    d.noise_sigma = rc.get_double("noise_sigma");
    d.seed = rc.get_u64("data_seed");
    c.z_spacing = rc.get_double("z_spacing");

    try {
        c.strategies.clear();
        for (const auto& s : rc.get_list("strategies")) c.strategies.push_back(parse_strategy(s));
        c.heads.clear();
        for (const auto& h : rc.get_list("heads")) c.heads.push_back(parse_head(h));
        c.graphs.clear();
        for (const auto& g : rc.get_list("graphs")) {
            const auto slash = g.find('/');
            if (slash == std::string::npos) throw ConfigError("graph variant must be topology/weighting: " + g);
            c.graphs.push_back({parse_topology(g.substr(0, slash)), parse_weighting(g.substr(slash + 1))});
        }
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    c.views.clear();
    for (const auto& v : rc.get_list("views")) {
        try {
            c.views.push_back(std::size_t(std::stoul(v)));
        } catch (const std::exception&) {
            throw ConfigError("views: not an integer: " + v);
        }
    }
    const std::string& seed = rc.get("sphere_seed");
    if (seed == "none" || seed.empty()) c.sphere_seed.reset();
    else c.sphere_seed = rc.get_u64("sphere_seed");
    c.slice_size = std::size_t(rc.get_u64("slice_size"));
    c.encoder_dim = Eigen::Index(rc.get_u64("encoder_dim"));
    c.encoder_seed = rc.get_u64("encoder_seed");
    c.folds = int(rc.get_int("folds"));
    c.fold_seed = rc.get_u64("fold_seed");
    c.train = train_from_config(rc);
    c.jobs = int(rc.get_int("jobs"));
    c.record_timing = rc.get_bool("record_timing");
    return c;
}

}  // namespace viewgraph
