#pragma once

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "viewgraph/sphere_sampler.hpp"

namespace viewgraph {

using Edge = std::pair<int, int>;       // i < j
using Triangle = std::array<int, 3>;    // counter-clockwise seen from outside

struct SphereMesh {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    std::vector<Edge> edges;  // sorted, unique
    bool jittered = false;    // degenerate input was perturbed before hulling
};

enum class Topology { local, complete };
enum class Weighting { uniform, linear_decay, inverse, inverse_square };

std::string_view to_string(Topology t);
std::string_view to_string(Weighting w);
Topology parse_topology(std::string_view name);
Weighting parse_weighting(std::string_view name);

using HopMatrix = Eigen::MatrixXi;

struct ViewGraph {
    int n_nodes = 0;
    std::vector<Edge> mesh_edges;
    Eigen::MatrixXd adjacency;
    HopMatrix hop;
    Topology topology = Topology::complete;
    Weighting weighting = Weighting::inverse;
};

/// Delaunay triangulation of points on the unit sphere, computed as their
/// convex hull by incremental insertion in index order. Near-coplanar
/// configurations are perturbed by 1e-9 and retried.
SphereMesh delaunay_sphere(std::span<const Vec3> points);
inline SphereMesh delaunay_sphere(const SpherePointSet& set) { return delaunay_sphere(set.points); }

std::vector<Edge> edges_from_triangles(std::span<const Triangle> triangles);

/// All-pairs hop counts by breadth-first search. Throws if the mesh is
/// disconnected.
HopMatrix hop_distances(std::span<const Edge> edges, int n);

double hop_weight(int hop, int max_hop, Weighting weighting);

/// Mesh edges always weigh 1. Local topology keeps only mesh edges; complete
/// topology connects every pair with a hop-dependent weight.
Eigen::MatrixXd apply_weighting(const HopMatrix& hop, std::span<const Edge> edges, Topology topology,
                                Weighting weighting);

ViewGraph build_view_graph(const SphereMesh& mesh, Topology topology, Weighting weighting);
ViewGraph build_view_graph(const SpherePointSet& points, Topology topology, Weighting weighting);

/// Path graph over stack order, used for slice stacks without sphere
/// viewpoints (axial_plus, two5d, ...).
ViewGraph chain_graph(int n, Topology topology, Weighting weighting);

std::string export_obj(const SphereMesh& mesh);
SphereMesh import_obj(std::istream& in);

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
void write_matrix_csv(std::ostream& out, const HopMatrix& m);

}  // namespace viewgraph
