// viewgraph command-line tool.
//
// Exit codes: 0 success, 2 configuration or argument error, 3 I/O or file
// format error, 4 numeric failure.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "viewgraph/benchmark.hpp"
#include "viewgraph/config.hpp"
#include "viewgraph/encoder.hpp"
#include "viewgraph/error.hpp"
#include "viewgraph/folds.hpp"
#include "viewgraph/graph_topology.hpp"
#include "viewgraph/metrics.hpp"
#include "viewgraph/nrrd.hpp"
#include "viewgraph/slicer.hpp"
#include "viewgraph/sphere_sampler.hpp"

namespace fs = std::filesystem;
using namespace viewgraph;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

void make_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::exists(path)) throw IoError(what + " not found: " + path);
}

struct ConfigArgs {
    std::string file;
    std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("-c,--config", args.file, "key = value configuration file");
    cmd->add_option("-s,--set", args.overrides, "override one key, e.g. --set epochs=50")->take_all();
}

RunConfig load_config(const ConfigArgs& args) {
    RunConfig rc(benchmark_config_keys());
    if (!args.file.empty()) {
        require_file(args.file, "config file");
        rc.parse_file(args.file);
    }
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
        rc.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return rc;
}

// Verbatim config source plus the effective value of every key.
void echo_config(const fs::path& path, const ConfigArgs& args, const RunConfig& rc) {
    auto out = open_out(path);
    out << "# config: " << (args.file.empty() ? "(defaults)" : args.file) << '\n' << rc.source_text();
    if (!rc.source_text().empty() && rc.source_text().back() != '\n') out << '\n';
    for (const auto& kv : args.overrides) out << "# --set " << kv << '\n';
    out << "# effective values\n";
    std::istringstream eff(rc.effective());
    for (std::string line; std::getline(eff, line);) out << "# " << line << '\n';
}

Dataset dataset_from_config(const RunConfig& rc, const BenchmarkConfig& cfg, std::ostream* log) {
    const Strategy strategy = cfg.strategies.front();
    const std::size_t views = cfg.views.front();
    const std::string& source = rc.get("dataset");
    if (source == "synthetic") return synthetic_dataset(cfg, strategy, views, log);

    std::optional<SpherePointSet> sphere;
    if (strategy == Strategy::omni) {
        const std::string& points = rc.get("points_file");
        if (points != "none") {
            require_file(points, "points file");
            sphere = load_points(points);
        } else if (cfg.sphere_seed) {
            sphere = canonical_sphere(views, *cfg.sphere_seed);
        }
    }
    require_file(source, "dataset");
    return load_dataset(source, strategy, std::move(sphere));
}

struct Prepared {
    Dataset data;
    HeadKind head;
    std::optional<GraphVariant> variant;
    std::vector<Example> examples;
    FoldSplit split;
    int run = 0;
};

Prepared prepare_run(const RunConfig& rc, const BenchmarkConfig& cfg) {
    Prepared p;
    p.data = dataset_from_config(rc, cfg, &std::cerr);
    p.head = cfg.heads.front();
    std::optional<ViewGraph> graph;
    if (p.head == HeadKind::sage) {
        p.variant = cfg.graphs.front();
        graph = dataset_graph(p.data.strategy, p.data.views, p.data.sphere ? &*p.data.sphere : nullptr, *p.variant);
    }
    p.examples = make_examples(p.data.features, p.data.labels, p.head, p.data.views, graph ? &*graph : nullptr);
    p.split = make_folds(p.data.labels, cfg.folds, cfg.fold_seed);
    p.run = int(rc.get_int("run"));
    if (p.run < 0 || p.run >= cfg.folds) throw ConfigError("run must be in [0, folds)");
    return p;
}

std::string keys_help() {
    return "\nConfiguration keys (key = value, '#' comments):\n" + RunConfig(benchmark_config_keys()).help();
}

// --- commands ---------------------------------------------------------------

void cmd_sphere(std::size_t n, std::uint64_t seed, const std::string& out_dir, bool pin, const SphereOptions& base) {
    make_dir(out_dir);
    SphereOptions options = base;
    options.seed = seed;
    const auto fixed = pin ? canonical_points() : std::vector<Vec3>{};
    const SpherePointSet set = optimize_sphere(n, fixed, options);
    save_points((fs::path(out_dir) / "points.txt").string(), set);
    if (n >= 4) open_out(fs::path(out_dir) / "mesh.obj") << export_obj(delaunay_sphere(set));
    std::cout << "energy " << std::setprecision(10) << set.energy << '\n';
}

struct SliceArgs {
    std::string volume, mask, strategy = "omni", points, out;
    std::size_t views = 24;
    std::size_t size = 32;
    double pixel_spacing = 0.0;
    bool nearest = false;
};

void cmd_slice(const SliceArgs& a) {
    require_file(a.volume, "volume");
    require_file(a.mask, "mask");
    const Strategy strategy = parse_strategy(a.strategy);
    const Volume v = nrrd::load_volume(a.volume);
    const Mask m = nrrd::load_mask(a.mask);
    std::optional<SpherePointSet> pts;
    if (strategy == Strategy::omni) {
        if (a.points.empty()) throw ArgumentError("omni slicing needs --points");
        require_file(a.points, "points file");
        pts = load_points(a.points);
    }
    SliceOptions options;
    options.size_px = a.size;
    if (a.pixel_spacing > 0.0) options.pixel_spacing = a.pixel_spacing;
    if (a.nearest) options.mode = Interp::nearest;
    const SliceStack stack = slice_strategy(v, m, strategy, a.views, pts ? &*pts : nullptr, options);
    save_stack(a.out, stack);
    std::cout << stack.size() << " slices, pixel spacing " << stack.pixel_spacing_mm << " mm\n";
}

struct EncodeArgs {
    std::string stack, external, out, mode = "builtin";
    long long dim = 64;
    std::uint64_t seed = 0;
};

void cmd_encode(const EncodeArgs& a) {
    if (a.mode == "builtin") {
        if (a.stack.empty()) throw ArgumentError("builtin encoding needs --stack");
        const SliceStack stack = load_stack(a.stack);
        save_fvec(a.out, encode_builtin(stack, Eigen::Index(a.dim), a.seed));
    } else if (a.mode == "external") {
        if (a.external.empty()) throw ArgumentError("external mode needs --features");
        require_file(a.external, "feature file");
        Eigen::Index expected = -1;
        std::string hash;
        if (!a.stack.empty()) {
            const SliceStack stack = load_stack(a.stack);
            expected = Eigen::Index(stack.size());
            hash = stack_hash(stack);
        }
        FeatureMatrix f = load_external(a.external, expected);
        if (!hash.empty()) {
            if (f.slice_manifest_hash != "-" && f.slice_manifest_hash != hash) {
                throw FormatError("feature file is bound to slice stack " + f.slice_manifest_hash + ", not " + hash);
            }
            f.slice_manifest_hash = hash;
        }
        save_fvec(a.out, f);
    } else {
        throw ArgumentError("unknown encode mode: " + a.mode);
    }
}

void cmd_graph(const std::string& points, const std::string& topology, const std::string& weighting,
               const std::string& out_dir) {
    require_file(points, "points file");
    const SpherePointSet set = load_points(points);
    const SphereMesh mesh = delaunay_sphere(set);
    const ViewGraph g = build_view_graph(mesh, parse_topology(topology), parse_weighting(weighting));
    make_dir(out_dir);
    auto adj = open_out(fs::path(out_dir) / "adjacency.csv");
    write_matrix_csv(adj, g.adjacency);
    auto hop = open_out(fs::path(out_dir) / "hops.csv");
    write_matrix_csv(hop, g.hop);
    open_out(fs::path(out_dir) / "mesh.obj") << export_obj(mesh);
    if (mesh.jittered) std::cerr << "warning: degenerate point set was jittered before triangulation\n";
    std::cout << g.n_nodes << " nodes, " << g.mesh_edges.size() << " mesh edges\n";
}

void cmd_synth(const ConfigArgs& args, std::optional<std::size_t> n, const std::string& out_dir) {
    RunConfig rc = load_config(args);
    if (n) rc.set("n_phantoms", std::to_string(*n));
    const BenchmarkConfig cfg = benchmark_from_config(rc);
    const auto specs = phantom_specs(cfg.data);
    make_dir(out_dir);
    auto labels = open_out(fs::path(out_dir) / "labels.csv");
    labels << "volume,mask,label,tilt_deg\n";
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const Phantom p = prepare_phantom(specs[i], cfg.z_spacing);
        std::ostringstream stem;
        stem << "phantom_" << std::setw(3) << std::setfill('0') << i;
        nrrd::save((fs::path(out_dir) / (stem.str() + "_volume.nrrd")).string(), p.volume);
        nrrd::save((fs::path(out_dir) / (stem.str() + "_mask.nrrd")).string(), p.mask);
        const double tilt = std::acos(std::min(1.0, std::abs(specs[i].major_axis().z()))) * 180.0 / 3.14159265358979323846;
        labels << stem.str() << "_volume.nrrd," << stem.str() << "_mask.nrrd," << p.label << ','
               << std::setprecision(6) << tilt << '\n';
    }
    echo_config(fs::path(out_dir) / "config.txt", args, rc);
    std::cout << specs.size() << " phantoms written to " << out_dir << '\n';
}

void cmd_train(const ConfigArgs& args, const std::string& out_dir) {
    const RunConfig rc = load_config(args);
    const BenchmarkConfig cfg = benchmark_from_config(rc);
    const Prepared p = prepare_run(rc, cfg);
    const auto roles = p.split.roles(p.run);
    const TrainedHead trained = train(p.head, std::size_t(p.data.features.front().dim()), p.data.views, p.examples,
                                      roles.train, roles.val, cfg.train);
    make_dir(out_dir);
    auto head = open_out(fs::path(out_dir) / "head.bin", true);
    write_head(head, trained.head);
    auto trace = open_out(fs::path(out_dir) / "trace.csv");
    write_trace_csv(trace, trained.trace);
    echo_config(fs::path(out_dir) / "config.txt", args, rc);
    std::cout << "best epoch " << trained.best_epoch << ", validation AUROC " << std::setprecision(6)
              << trained.best_val_auroc << '\n';
}

void cmd_eval(const ConfigArgs& args, const std::string& head_path, const std::string& out_dir) {
    const RunConfig rc = load_config(args);
    const BenchmarkConfig cfg = benchmark_from_config(rc);
    require_file(head_path, "head file");
    std::ifstream in(head_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + head_path);
    const Head head = read_head(in);
    const Prepared p = prepare_run(rc, cfg);
    if (head.kind() != p.head || head.n_nodes() != p.data.views ||
        head.dim() != std::size_t(p.data.features.front().dim())) {
        throw ConfigError("head file does not match the configured head, views or feature dimension");
    }
    const auto roles = p.split.roles(p.run);
    const auto scores = predict(head, p.examples, roles.test);
    std::vector<int> truth, preds;
    for (std::size_t k = 0; k < roles.test.size(); ++k) {
        truth.push_back(p.data.labels[roles.test[k]]);
        preds.push_back(scores[k] > 0.0 ? 1 : 0);
    }
    make_dir(out_dir);
    auto out = open_out(fs::path(out_dir) / "metrics.csv");
    out << std::setprecision(17) << "run,n_test,auroc,mcc,bal_acc,f1\n"
        << p.run << ',' << roles.test.size() << ',' << auroc(scores, truth) << ',' << mcc(preds, truth).value << ','
        << balanced_accuracy(preds, truth).value << ',' << f1(preds, truth).value << '\n';
    auto sc = open_out(fs::path(out_dir) / "scores.csv");
    sc << std::setprecision(17) << "sample,label,logit\n";
    for (std::size_t k = 0; k < roles.test.size(); ++k) sc << roles.test[k] << ',' << truth[k] << ',' << scores[k] << '\n';
    echo_config(fs::path(out_dir) / "config.txt", args, rc);
    std::cout << "test AUROC " << std::setprecision(6) << auroc(scores, truth) << '\n';
}

void cmd_bench(const ConfigArgs& args, std::optional<int> jobs, const std::string& out_dir) {
    RunConfig rc = load_config(args);
    if (jobs) rc.set("jobs", std::to_string(*jobs));
    const BenchmarkConfig cfg = benchmark_from_config(rc);
    cfg.validate();
    make_dir(out_dir);
    const BenchmarkResult result = run_benchmark(cfg, &std::cerr);
    auto rows = open_out(fs::path(out_dir) / "results.csv");
    write_results_csv(rows, result.rows);
    auto summary = open_out(fs::path(out_dir) / "summary.csv");
    write_summary_csv(summary, result.summary);
    echo_config(fs::path(out_dir) / "config.txt", args, rc);
    write_summary_csv(std::cout, result.summary);
}

template <typename F>
int guarded(F&& f) {
    try {
        f();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ArgumentError& e) {
        std::cerr << "argument error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"viewgraph: omnidirectional slicing and view-graph classification"};
    app.footer(keys_help());
    app.require_subcommand(1);
    int status = 0;

    // sphere
    auto* sphere = app.add_subcommand("sphere", "optimise N sphere viewpoints; writes points.txt and mesh.obj");
    std::size_t n_points = 24;
    std::uint64_t sphere_seed = 0;
    std::string sphere_out;
    bool free_points = false;
    SphereOptions sphere_opts;
    sphere->add_option("n", n_points, "number of points")->required();
    sphere->add_option("seed", sphere_seed, "random seed")->required();
    sphere->add_option("out", sphere_out, "output directory")->required();
    sphere->add_flag("--free", free_points, "do not pin the three canonical directions");
    sphere->add_option("--lr", sphere_opts.lr, "step size")->capture_default_str();
    sphere->add_option("--max-iters", sphere_opts.max_iters, "sweep limit")->capture_default_str();
    sphere->add_option("--tol", sphere_opts.tol, "convergence threshold on the largest displacement")->capture_default_str();
    sphere->callback([&] {
        status = guarded([&] { cmd_sphere(n_points, sphere_seed, sphere_out, !free_points, sphere_opts); });
    });

    // slice
    auto* slice = app.add_subcommand("slice", "slice a volume into a stack directory (slice_NNN.raw + manifest.txt)");
    SliceArgs slice_args;
    slice->add_option("--volume", slice_args.volume, "volume NRRD")->required();
    slice->add_option("--mask", slice_args.mask, "lesion mask NRRD")->required();
    slice->add_option("--strategy", slice_args.strategy, "axial, axial_plus, two5d, two5d_plus or omni")->capture_default_str();
    slice->add_option("--views", slice_args.views, "number of slices")->capture_default_str();
    slice->add_option("--points", slice_args.points, "sphere point file (omni)");
    slice->add_option("--size", slice_args.size, "slice side in pixels")->capture_default_str();
    slice->add_option("--pixel-spacing", slice_args.pixel_spacing, "pixel spacing in mm (default: lesion crop)");
    slice->add_flag("--nearest", slice_args.nearest, "nearest-neighbour instead of linear sampling");
    slice->add_option("--out", slice_args.out, "output directory")->required();
    slice->callback([&] { status = guarded([&] { cmd_slice(slice_args); }); });

    // encode
    auto* encode = app.add_subcommand("encode", "turn a slice stack into an FVEC feature file");
    EncodeArgs enc_args;
    encode->add_option("--mode", enc_args.mode, "builtin or external")->capture_default_str();
    encode->add_option("--stack", enc_args.stack, "slice stack directory");
    encode->add_option("--features", enc_args.external, "externally computed FVEC file (external mode)");
    encode->add_option("--dim", enc_args.dim, "builtin feature dimension")->capture_default_str();
    encode->add_option("--seed", enc_args.seed, "builtin projection seed")->capture_default_str();
    encode->add_option("--out", enc_args.out, "output FVEC file")->required();
    encode->callback([&] { status = guarded([&] { cmd_encode(enc_args); }); });

    // graph
    auto* graph = app.add_subcommand("graph", "build the view graph; writes adjacency.csv, hops.csv, mesh.obj");
    std::string graph_points, graph_out, topology = "complete", weighting = "inverse";
    graph->add_option("--points", graph_points, "sphere point file")->required();
    graph->add_option("--topology", topology, "local or complete")->capture_default_str();
    graph->add_option("--weighting", weighting, "uniform, linear_decay, inverse or inverse_square")->capture_default_str();
    graph->add_option("--out", graph_out, "output directory")->required();
    graph->callback([&] { status = guarded([&] { cmd_graph(graph_points, topology, weighting, graph_out); }); });

    // synth
    auto* synth = app.add_subcommand("synth", "write synthetic phantoms as NRRD pairs plus labels.csv");
    ConfigArgs synth_cfg;
    std::optional<std::size_t> synth_n;
    std::string synth_out;
    add_config_options(synth, synth_cfg);
    synth->add_option("-n", synth_n, "number of phantoms (overrides n_phantoms)");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->footer(keys_help());
    synth->callback([&] { status = guarded([&] { cmd_synth(synth_cfg, synth_n, synth_out); }); });

    // train
    auto* trainer = app.add_subcommand(
        "train", "train one head (first strategy/views/head/graph of the config) on run `run`; writes head.bin, trace.csv");
    ConfigArgs train_cfg;
    std::string train_out;
    add_config_options(trainer, train_cfg);
    trainer->add_option("--out", train_out, "output directory")->required();
    trainer->footer(keys_help());
    trainer->callback([&] { status = guarded([&] { cmd_train(train_cfg, train_out); }); });

    // eval
    auto* evaluator = app.add_subcommand("eval", "evaluate a trained head on the test fold of run `run`");
    ConfigArgs eval_cfg;
    std::string eval_head, eval_out;
    add_config_options(evaluator, eval_cfg);
    evaluator->add_option("--head", eval_head, "head.bin written by train")->required();
    evaluator->add_option("--out", eval_out, "output directory")->required();
    evaluator->footer(keys_help());
    evaluator->callback([&] { status = guarded([&] { cmd_eval(eval_cfg, eval_head, eval_out); }); });

    // bench
    auto* bench = app.add_subcommand("bench", "run the cross-validated benchmark; writes results.csv, summary.csv");
    ConfigArgs bench_cfg;
    std::optional<int> jobs;
    std::string bench_out;
    add_config_options(bench, bench_cfg);
    bench->add_option("-j,--jobs", jobs, "worker threads (overrides the jobs key)");
    bench->add_option("--out", bench_out, "output directory")->required();
    bench->footer(keys_help());
    bench->callback([&] { status = guarded([&] { cmd_bench(bench_cfg, jobs, bench_out); }); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }
    return status;
}
