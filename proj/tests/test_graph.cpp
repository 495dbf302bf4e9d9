#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "viewgraph/error.hpp"
#include "viewgraph/graph_topology.hpp"
#include "viewgraph/sphere_sampler.hpp"

using namespace viewgraph;

namespace {

std::vector<Vec3> tetrahedron() {
    return {Vec3(1, 1, 1).normalized(), Vec3(1, -1, -1).normalized(), Vec3(-1, 1, -1).normalized(),
            Vec3(-1, -1, 1).normalized()};
}

// Floyd-Warshall on unit edge lengths.
Eigen::MatrixXi floyd(const std::vector<Edge>& edges, int n) {
    const int inf = 1 << 20;
    Eigen::MatrixXi d = Eigen::MatrixXi::Constant(n, n, inf);
    for (int i = 0; i < n; ++i) d(i, i) = 0;
    for (auto [a, b] : edges) d(a, b) = d(b, a) = 1;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
    return d;
}

void check_euler(const SphereMesh& mesh) {
    const long n = long(mesh.vertices.size());
    CHECK(long(mesh.edges.size()) == 3 * n - 6);
    CHECK(long(mesh.triangles.size()) == 2 * n - 4);
    CHECK(edges_from_triangles(mesh.triangles) == mesh.edges);
}

}  // namespace

TEST_CASE("tetrahedron hull") {
    const auto mesh = delaunay_sphere(tetrahedron());
    CHECK(mesh.edges.size() == 6);
    CHECK(mesh.triangles.size() == 4);
    const auto hop = hop_distances(mesh.edges, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(hop(i, j) == (i == j ? 0 : 1));
    // outward orientation
    for (const auto& t : mesh.triangles) {
        const Vec3 nrm = (mesh.vertices[t[1]] - mesh.vertices[t[0]]).cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
        CHECK(nrm.dot(mesh.vertices[t[0]]) > 0.0);
    }
}

TEST_CASE("Euler counts for sampler point sets") {
    for (std::size_t n : {4u, 5u, 8u, 12u, 16u, 24u, 32u}) {
        for (std::uint64_t seed : {0u, 1u, 7u}) {
            CAPTURE(n);
            CAPTURE(seed);
            const auto pts = canonical_sphere(n, seed);
            check_euler(delaunay_sphere(pts));
        }
    }
}

TEST_CASE("degenerate octahedron is jittered and still triangulated") {
    const std::vector<Vec3> octa{Vec3::UnitX(), -Vec3::UnitX(), Vec3::UnitY(), -Vec3::UnitY(),
                                 Vec3::UnitZ(), -Vec3::UnitZ()};
    const auto mesh = delaunay_sphere(octa);
    check_euler(mesh);
    CHECK_THROWS_AS(delaunay_sphere(std::vector<Vec3>{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}), ArgumentError);
}

TEST_CASE("optimized twelve points give the icosahedron") {
    const auto pts = optimize_sphere(12, {});
    const auto mesh = delaunay_sphere(pts);
    CHECK(mesh.edges.size() == 30);
    CHECK(mesh.triangles.size() == 20);
    std::vector<int> degree(12, 0);
    for (auto [a, b] : mesh.edges) {
        ++degree[a];
        ++degree[b];
    }
    for (int d : degree) CHECK(d == 5);
    const auto hop = hop_distances(mesh.edges, 12);
    CHECK(hop.maxCoeff() == 3);
    CHECK(hop == floyd(mesh.edges, 12));
}

TEST_CASE("hop matrix is a metric and matches Floyd-Warshall") {
    const auto mesh = delaunay_sphere(canonical_sphere(24, 3));
    const auto hop = hop_distances(mesh.edges, 24);
    CHECK(hop == floyd(mesh.edges, 24));
    CHECK(hop == hop.transpose());
    for (int i = 0; i < 24; ++i) {
        CHECK(hop(i, i) == 0);
        for (int j = 0; j < 24; ++j)
            for (int k = 0; k < 24; ++k) CHECK(hop(i, k) <= hop(i, j) + hop(j, k));
    }
    CHECK_THROWS(hop_distances(std::vector<Edge>{{0, 1}}, 3));
}

TEST_CASE("edge weight table") {
    for (auto w : {Weighting::uniform, Weighting::linear_decay, Weighting::inverse, Weighting::inverse_square}) {
        CHECK(hop_weight(1, 4, w) == 1.0);
    }
    CHECK(hop_weight(2, 4, Weighting::inverse) == 0.5);
    CHECK(hop_weight(3, 4, Weighting::inverse_square) == 1.0 / 9.0);
    CHECK(hop_weight(3, 4, Weighting::uniform) == 1.0);
    CHECK(hop_weight(3, 4, Weighting::linear_decay) == doctest::Approx(0.5));
    CHECK(hop_weight(4, 4, Weighting::linear_decay) == doctest::Approx(0.25));
    for (int d = 2; d <= 6; ++d) {
        CHECK(hop_weight(d, 6, Weighting::uniform) >= hop_weight(d, 6, Weighting::inverse));
        CHECK(hop_weight(d, 6, Weighting::inverse) >= hop_weight(d, 6, Weighting::inverse_square));
    }
}

TEST_CASE("view graph adjacency invariants") {
    const auto pts = canonical_sphere(24, 0);
    const auto mesh = delaunay_sphere(pts);
    const std::set<Edge> mesh_edges(mesh.edges.begin(), mesh.edges.end());
    for (auto topo : {Topology::local, Topology::complete}) {
        for (auto w : {Weighting::uniform, Weighting::linear_decay, Weighting::inverse, Weighting::inverse_square}) {
            const ViewGraph g = build_view_graph(mesh, topo, w);
            CHECK(g.n_nodes == 24);
            CHECK(g.adjacency == g.adjacency.transpose());
            for (int i = 0; i < 24; ++i) {
                CHECK(g.adjacency(i, i) == 0.0);
                for (int j = i + 1; j < 24; ++j) {
                    const bool edge = mesh_edges.count({i, j}) > 0;
                    if (edge) CHECK(g.adjacency(i, j) == 1.0);
                    if (topo == Topology::local && !edge) CHECK(g.adjacency(i, j) == 0.0);
                    if (topo == Topology::complete) CHECK(g.adjacency(i, j) > 0.0);
                }
            }
        }
    }
    const ViewGraph uni = build_view_graph(mesh, Topology::complete, Weighting::uniform);
    CHECK(uni.adjacency == Eigen::MatrixXd::Ones(24, 24) - Eigen::MatrixXd::Identity(24, 24));
}

TEST_CASE("triangulation is deterministic") {
    const auto pts = canonical_sphere(16, 4);
    const auto a = delaunay_sphere(pts);
    const auto b = delaunay_sphere(pts);
    CHECK(a.triangles == b.triangles);
    CHECK(a.edges == b.edges);
}

TEST_CASE("OBJ export and import") {
    const auto tet = delaunay_sphere(tetrahedron());
    const std::string obj = export_obj(tet);
    std::istringstream lines(obj);
    int v = 0, f = 0;
    for (std::string line; std::getline(lines, line);) {
        if (line.rfind("v ", 0) == 0) ++v;
        if (line.rfind("f ", 0) == 0) ++f;
    }
    CHECK(v == 4);
    CHECK(f == 4);

    const auto mesh = delaunay_sphere(canonical_sphere(24, 0));
    std::istringstream in(export_obj(mesh));
    const auto back = import_obj(in);
    CHECK(back.vertices.size() == 24);
    CHECK(back.triangles.size() == 44);
    CHECK(back.edges == mesh.edges);
}

TEST_CASE("chain graph") {
    const ViewGraph g = chain_graph(5, Topology::local, Weighting::uniform);
    CHECK(g.mesh_edges.size() == 4);
    CHECK(g.adjacency(0, 1) == 1.0);
    CHECK(g.adjacency(0, 2) == 0.0);
    CHECK(g.hop(0, 4) == 4);
    const ViewGraph c = chain_graph(5, Topology::complete, Weighting::inverse);
    CHECK(c.adjacency(0, 4) == 0.25);
    const ViewGraph one = chain_graph(1, Topology::complete, Weighting::inverse);
    CHECK(one.adjacency(0, 0) == 0.0);
}
