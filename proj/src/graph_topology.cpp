#include "viewgraph/graph_topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "viewgraph/error.hpp"

namespace viewgraph {

std::string_view to_string(Topology t) { return t == Topology::local ? "local" : "complete"; }

std::string_view to_string(Weighting w) {
    switch (w) {
        case Weighting::uniform: return "uniform";
        case Weighting::linear_decay: return "linear_decay";
        case Weighting::inverse: return "inverse";
        case Weighting::inverse_square: return "inverse_square";
    }
    return "?";
}

Topology parse_topology(std::string_view name) {
    if (name == "local") return Topology::local;
    if (name == "complete") return Topology::complete;
    throw ArgumentError("unknown topology: " + std::string(name));
}

Weighting parse_weighting(std::string_view name) {
    for (Weighting w : {Weighting::uniform, Weighting::linear_decay, Weighting::inverse, Weighting::inverse_square}) {
        if (to_string(w) == name) return w;
    }
    throw ArgumentError("unknown weighting: " + std::string(name));
}

namespace {

constexpr double kOrientEps = 1e-12;

double orient(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& p) {
    return (b - a).cross(c - a).dot(p - a);
}

struct Degenerate {};

// Incremental convex hull; throws Degenerate when a point is (nearly)
// coplanar with a face it would have to see or be hidden by.
std::vector<Triangle> convex_hull(std::span<const Vec3> pts) {
    const int n = int(pts.size());
    // Initial tetrahedron from the first non-degenerate points in index order.
    int i0 = 0, i1 = -1, i2 = -1, i3 = -1;
    for (int i = 1; i < n && i1 < 0; ++i)
        if ((pts[i] - pts[i0]).norm() > 1e-9) i1 = i;
    if (i1 < 0) throw Degenerate{};
    for (int i = i1 + 1; i < n && i2 < 0; ++i)
        if ((pts[i1] - pts[i0]).cross(pts[i] - pts[i0]).norm() > 1e-9) i2 = i;
    if (i2 < 0) throw Degenerate{};
    for (int i = i2 + 1; i < n && i3 < 0; ++i)
        if (std::abs(orient(pts[i0], pts[i1], pts[i2], pts[i])) > kOrientEps) i3 = i;
    if (i3 < 0) throw Degenerate{};

    std::vector<Triangle> faces;
    auto add_face = [&](int a, int b, int c, int inside) {
        if (orient(pts[a], pts[b], pts[c], pts[inside]) > 0) std::swap(b, c);
        faces.push_back({a, b, c});
    };
    add_face(i0, i1, i2, i3);
    add_face(i0, i1, i3, i2);
    add_face(i0, i2, i3, i1);
    add_face(i1, i2, i3, i0);

    for (int p = 0; p < n; ++p) {
        if (p == i0 || p == i1 || p == i2 || p == i3) continue;
        std::vector<char> visible(faces.size(), 0);
        bool any = false;
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const auto& t = faces[f];
            const double o = orient(pts[t[0]], pts[t[1]], pts[t[2]], pts[p]);
            if (std::abs(o) <= kOrientEps) throw Degenerate{};
            if (o > 0) {
                visible[f] = 1;
                any = true;
            }
        }
        if (!any) throw Degenerate{};  // interior point: not a spherical configuration

        // Horizon: directed edges of visible faces whose reverse is not on a visible face.
        std::set<std::pair<int, int>> visible_edges;
        for (std::size_t f = 0; f < faces.size(); ++f) {
            if (!visible[f]) continue;
            const auto& t = faces[f];
            for (int e = 0; e < 3; ++e) visible_edges.insert({t[e], t[(e + 1) % 3]});
        }
        std::vector<Triangle> next;
        next.reserve(faces.size() + 2);
        for (std::size_t f = 0; f < faces.size(); ++f)
            if (!visible[f]) next.push_back(faces[f]);
        for (std::size_t f = 0; f < faces.size(); ++f) {
            if (!visible[f]) continue;
            const auto& t = faces[f];
            for (int e = 0; e < 3; ++e) {
                const int a = t[e], b = t[(e + 1) % 3];
                if (!visible_edges.count({b, a})) next.push_back({a, b, p});
            }
        }
        faces = std::move(next);
    }
    return faces;
}

}  // namespace

std::vector<Edge> edges_from_triangles(std::span<const Triangle> triangles) {
    std::set<Edge> edges;
    for (const auto& t : triangles) {
        for (int e = 0; e < 3; ++e) {
            const int a = t[e], b = t[(e + 1) % 3];
            edges.insert({std::min(a, b), std::max(a, b)});
        }
    }
    return {edges.begin(), edges.end()};
}

SphereMesh delaunay_sphere(std::span<const Vec3> points) {
    const int n = int(points.size());
    if (n < 4) throw ArgumentError("spherical triangulation needs at least 4 points, got " + std::to_string(n));
    SphereMesh mesh;
    mesh.vertices.assign(points.begin(), points.end());

    std::vector<Vec3> work(points.begin(), points.end());
    std::mt19937_64 rng(0x5eedULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    constexpr int kAttempts = 8;
    for (int attempt = 0;; ++attempt) {
        try {
            mesh.triangles = convex_hull(work);
            break;
        } catch (const Degenerate&) {
            if (attempt + 1 >= kAttempts) {
                throw NumericError("spherical triangulation: point set stays degenerate after jitter");
            }
            mesh.jittered = true;
            for (Vec3& p : work) {
                p += 1e-9 * Vec3(gauss(rng), gauss(rng), gauss(rng));
                p.normalize();
            }
        }
    }
    mesh.edges = edges_from_triangles(mesh.triangles);
    const std::size_t expected_edges = 3 * std::size_t(n) - 6;
    const std::size_t expected_faces = 2 * std::size_t(n) - 4;
    if (mesh.edges.size() != expected_edges || mesh.triangles.size() != expected_faces) {
        throw NumericError("spherical triangulation is not a closed triangulated sphere (E=" +
                           std::to_string(mesh.edges.size()) + ", F=" + std::to_string(mesh.triangles.size()) + ")");
    }
    return mesh;
}

HopMatrix hop_distances(std::span<const Edge> edges, int n) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const auto& [a, b] : edges) {
        if (a < 0 || b < 0 || a >= n || b >= n) throw ArgumentError("edge index out of range");
        adj[std::size_t(a)].push_back(b);
        adj[std::size_t(b)].push_back(a);
    }
    HopMatrix hop = HopMatrix::Constant(n, n, -1);
    for (int s = 0; s < n; ++s) {
        std::deque<int> queue{s};
        hop(s, s) = 0;
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (int w : adj[std::size_t(u)]) {
                if (hop(s, w) < 0) {
                    hop(s, w) = hop(s, u) + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    if ((hop.array() < 0).any()) throw NumericError("mesh is not connected");
    return hop;
}

double hop_weight(int hop, int max_hop, Weighting weighting) {
    if (hop <= 0) return 0.0;
    if (hop == 1) return 1.0;
    const double d = hop;
    switch (weighting) {
        case Weighting::uniform: return 1.0;
        case Weighting::linear_decay: return std::max(0.0, 1.0 - (d - 1.0) / double(max_hop));
        case Weighting::inverse: return 1.0 / d;
        case Weighting::inverse_square: return 1.0 / (d * d);
    }
    return 0.0;
}

Eigen::MatrixXd apply_weighting(const HopMatrix& hop, std::span<const Edge> edges, Topology topology,
                                Weighting weighting) {
    const Eigen::Index n = hop.rows();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    if (topology == Topology::local) {
        for (const auto& [i, j] : edges) a(i, j) = a(j, i) = 1.0;
        return a;
    }
    const int max_hop = hop.maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j) a(i, j) = hop_weight(hop(i, j), max_hop, weighting);
    return a;
}

ViewGraph build_view_graph(const SphereMesh& mesh, Topology topology, Weighting weighting) {
    ViewGraph g;
    g.n_nodes = int(mesh.vertices.size());
    g.mesh_edges = mesh.edges;
    g.hop = hop_distances(mesh.edges, g.n_nodes);
    g.adjacency = apply_weighting(g.hop, mesh.edges, topology, weighting);
    g.topology = topology;
    g.weighting = weighting;
    return g;
}

ViewGraph build_view_graph(const SpherePointSet& points, Topology topology, Weighting weighting) {
    return build_view_graph(delaunay_sphere(points), topology, weighting);
}

ViewGraph chain_graph(int n, Topology topology, Weighting weighting) {
    if (n < 1) throw ArgumentError("chain graph needs at least one node");
    ViewGraph g;
    g.n_nodes = n;
    for (int i = 0; i + 1 < n; ++i) g.mesh_edges.push_back({i, i + 1});
    g.hop = hop_distances(g.mesh_edges, n);
    g.adjacency = apply_weighting(g.hop, g.mesh_edges, topology, weighting);
    g.topology = topology;
    g.weighting = weighting;
    return g;
}

std::string export_obj(const SphereMesh& mesh) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (const Vec3& v : mesh.vertices) os << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& t : mesh.triangles) os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    return os.str();
}

SphereMesh import_obj(std::istream& in) {
    SphereMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream is(line);
        std::string tag;
        if (!(is >> tag) || tag.front() == '#') continue;
        if (tag == "v") {
            Vec3 v;
            if (!(is >> v.x() >> v.y() >> v.z())) throw FormatError("malformed OBJ vertex: " + line);
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            Triangle t;
            for (int& idx : t) {
                std::string token;
                if (!(is >> token)) throw FormatError("OBJ face is not a triangle: " + line);
                idx = std::stoi(token.substr(0, token.find('/'))) - 1;
                if (idx < 0 || idx >= int(mesh.vertices.size())) {
                    throw FormatError("OBJ face index out of range: " + line);
                }
            }
            mesh.triangles.push_back(t);
        }
    }
    mesh.edges = edges_from_triangles(mesh.triangles);
    return mesh;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
        os << '\n';
    }
    out << os.str();
}

void write_matrix_csv(std::ostream& out, const HopMatrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
        out << '\n';
    }
}

}  // namespace viewgraph
