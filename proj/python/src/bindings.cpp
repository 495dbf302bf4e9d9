#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <optional>

#include "viewgraph/benchmark.hpp"
#include "viewgraph/error.hpp"
#include "viewgraph/folds.hpp"
#include "viewgraph/graph_topology.hpp"
#include "viewgraph/metrics.hpp"
#include "viewgraph/nrrd.hpp"
#include "viewgraph/slicer.hpp"
#include "viewgraph/sphere_sampler.hpp"

namespace py = pybind11;
using namespace viewgraph;

namespace {

using PointArray = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

PointArray to_array(const std::vector<Vec3>& pts) {
    PointArray a(Eigen::Index(pts.size()), 3);
    for (std::size_t i = 0; i < pts.size(); ++i) a.row(Eigen::Index(i)) = pts[i].transpose();
    return a;
}

std::vector<Vec3> from_array(const PointArray& a) {
    std::vector<Vec3> pts;
    for (Eigen::Index i = 0; i < a.rows(); ++i) pts.emplace_back(a.row(i).transpose());
    return pts;
}

// (nz, ny, nx) array view of an x-fastest grid.
template <typename T>
py::array_t<T> grid_array(const Grid<T>& g) {
    const auto& d = g.dims();
    py::array_t<T> out({d[2], d[1], d[0]});
    std::copy(g.data().begin(), g.data().end(), out.mutable_data());
    return out;
}

py::dict summary_dict(const SummaryRow& r) {
    py::dict d;
    d["strategy"] = r.strategy;
    d["views"] = r.views;
    d["head"] = r.head;
    d["topology"] = r.topology;
    d["weighting"] = r.weighting;
    d["folds"] = r.folds;
    d["auroc_mean"] = r.auroc_mean;
    d["auroc_sd"] = r.auroc_sd;
    d["mcc_mean"] = r.mcc_mean;
    d["bal_acc_mean"] = r.bal_acc_mean;
    d["f1_mean"] = r.f1_mean;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Omnidirectional slicing, sphere view graphs and graph heads";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    auto io = py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", io.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());

    m.def(
        "sphere_points",
        [](std::size_t n, std::uint64_t seed, bool pinned) {
            SphereOptions o;
            o.seed = seed;
            const auto fixed = pinned ? canonical_points() : std::vector<Vec3>{};
            return to_array(optimize_sphere(n, fixed, o).points);
        },
        py::arg("n"), py::arg("seed") = 0, py::arg("pinned") = true,
        "N repulsion-optimised unit vectors; with pinned=True the first three are the x, y, z axes.");

    m.def(
        "coulomb_energy", [](const PointArray& p) { return coulomb_energy(from_array(p)); }, py::arg("points"),
        "Sum of 1/|xi - xj|^2 over ordered pairs.");

    m.def(
        "delaunay",
        [](const PointArray& p) {
            const SphereMesh mesh = delaunay_sphere(from_array(p));
            Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor> tri(Eigen::Index(mesh.triangles.size()), 3);
            for (std::size_t i = 0; i < mesh.triangles.size(); ++i)
                for (int k = 0; k < 3; ++k) tri(Eigen::Index(i), k) = mesh.triangles[i][std::size_t(k)];
            Eigen::Matrix<int, Eigen::Dynamic, 2, Eigen::RowMajor> edges(Eigen::Index(mesh.edges.size()), 2);
            for (std::size_t i = 0; i < mesh.edges.size(); ++i) {
                edges(Eigen::Index(i), 0) = mesh.edges[i].first;
                edges(Eigen::Index(i), 1) = mesh.edges[i].second;
            }
            return py::make_tuple(tri, edges);
        },
        py::arg("points"), "Spherical Delaunay triangulation: (triangles, edges).");

    m.def(
        "view_graph",
        [](const PointArray& p, const std::string& topology, const std::string& weighting) {
            const ViewGraph g =
                build_view_graph(delaunay_sphere(from_array(p)), parse_topology(topology), parse_weighting(weighting));
            return py::make_tuple(g.adjacency, Eigen::MatrixXi(g.hop));
        },
        py::arg("points"), py::arg("topology") = "complete", py::arg("weighting") = "inverse",
        "Weighted adjacency and hop-distance matrices of the sphere mesh graph.");

    m.def(
        "hop_weight",
        [](int hop, int max_hop, const std::string& weighting) { return hop_weight(hop, max_hop, parse_weighting(weighting)); },
        py::arg("hop"), py::arg("max_hop"), py::arg("weighting"));

    m.def("auroc", [](const std::vector<double>& s, const std::vector<int>& y) { return auroc(s, y); },
          py::arg("scores"), py::arg("labels"));
    m.def("mcc", [](const std::vector<int>& p, const std::vector<int>& y) { return mcc(p, y).value; },
          py::arg("preds"), py::arg("labels"));
    m.def("f1", [](const std::vector<int>& p, const std::vector<int>& y) { return f1(p, y).value; },
          py::arg("preds"), py::arg("labels"));
    m.def("balanced_accuracy",
          [](const std::vector<int>& p, const std::vector<int>& y) { return balanced_accuracy(p, y).value; },
          py::arg("preds"), py::arg("labels"));

    m.def(
        "stratified_folds",
        [](const std::vector<int>& labels, int k, std::uint64_t seed) { return make_folds(labels, k, seed).fold_of; },
        py::arg("labels"), py::arg("k") = 5, py::arg("seed") = 0, "Fold index of every sample.");

    m.def(
        "load_nrrd",
        [](const std::string& path) -> py::tuple {
            std::optional<nrrd::AnyGrid> grid;
            {
                py::gil_scoped_release release;
                std::ifstream in(path, std::ios::binary);
                if (!in) throw IoError("cannot open " + path);
                grid = nrrd::read(in);
            }
            return std::visit(
                [](const auto& g) -> py::tuple {
                    return py::make_tuple(grid_array(g), Vec3(g.spacing()), Vec3(g.origin()));
                },
                *grid);
        },
        py::arg("path"), "(array[z, y, x], spacing xyz, origin xyz) of an NRRD file.");

    m.def(
        "slice_volume",
        [](const std::string& volume, const std::string& mask, const std::string& strategy, std::size_t views,
           std::optional<PointArray> points, std::size_t size) {
            SliceStack stack;
            {
                py::gil_scoped_release release;
                const Volume v = nrrd::load_volume(volume);
                const Mask mk = nrrd::load_mask(mask);
                std::optional<SpherePointSet> pts;
                if (points) pts = SpherePointSet{from_array(*points), 0, 0.0};
                SliceOptions o;
                o.size_px = size;
                stack = slice_strategy(v, mk, parse_strategy(strategy), views, pts ? &*pts : nullptr, o);
            }
            py::array_t<float> out({stack.size(), size, size});
            float* dst = out.mutable_data();
            for (const auto& img : stack.slices) dst = std::copy(img.pixels.begin(), img.pixels.end(), dst);
            return out;
        },
        py::arg("volume"), py::arg("mask"), py::arg("strategy") = "omni", py::arg("views") = 24,
        py::arg("points") = py::none(), py::arg("size") = 32,
        "Slice stack as array[slice, b, a]; omni needs the sphere points.");

    m.def(
        "config_keys",
        [] {
            py::dict d;
            for (const auto& k : benchmark_config_keys()) d[py::str(k.name)] = k.default_value;
            return d;
        },
        "Benchmark configuration keys and their defaults.");

    m.def(
        "run_benchmark",
        [](const std::map<std::string, std::string>& settings) {
            RunConfig rc(benchmark_config_keys());
            for (const auto& [k, v] : settings) rc.set(k, v);
            const BenchmarkConfig cfg = benchmark_from_config(rc);
            BenchmarkResult r;
            {
                py::gil_scoped_release release;
                r = run_benchmark(cfg);
            }
            py::list out;
            for (const auto& row : r.summary) out.append(summary_dict(row));
            return out;
        },
        py::arg("settings"), "Run the synthetic benchmark; returns one summary dict per configuration.");
}
