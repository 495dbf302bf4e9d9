#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "viewgraph/vec3.hpp"

namespace viewgraph {

/// N unit vectors on the sphere. The first `fixed_count` entries are pinned
/// view directions and are never moved by the optimizer.
struct SpherePointSet {
    std::vector<Vec3> points;
    std::size_t fixed_count = 0;
    double energy = 0.0;

    std::size_t size() const noexcept { return points.size(); }
    bool is_fixed(std::size_t i) const noexcept { return i < fixed_count; }
};

/// Sagittal, coronal and axial view directions: (1,0,0), (0,1,0), (0,0,1).
std::vector<Vec3> canonical_points();

/// Sum over ordered pairs i != j of 1 / |x_i - x_j|^2, so each unordered pair
/// is counted twice. Throws NumericError naming the pair when two points
/// coincide.
double coulomb_energy(std::span<const Vec3> points);
inline double coulomb_energy(const SpherePointSet& set) { return coulomb_energy(set.points); }

struct SphereOptions {
    double lr = 0.01;
    int max_iters = 10000;
    double tol = 1e-7;
    std::uint64_t seed = 0;
    // Upper bound on the tangential step of a single point update (radians).
    double max_step = 0.1;
};

struct SphereTrace {
    double initial_energy = 0.0;
    std::vector<double> sweep_energy;  // energy after each full sweep
    int iterations = 0;
    bool converged = false;
};

/// Repulsion-based placement: the free points start uniformly at random and
/// are moved one at a time along the tangential Coulomb gradient, then
/// projected back onto the sphere, until the largest per-sweep displacement
/// drops below `tol`.
SpherePointSet optimize_sphere(std::size_t n_total, std::span<const Vec3> fixed,
                               const SphereOptions& options = {},
                               SphereTrace* trace = nullptr);

/// Convenience: N points with the three canonical directions pinned.
SpherePointSet canonical_sphere(std::size_t n_total, std::uint64_t seed = 0);

// Plain-text point file: one line per point, "x y z fixed_flag", 17 significant digits.
void write_points(std::ostream& out, const SpherePointSet& set);
SpherePointSet read_points(std::istream& in);
void save_points(const std::string& path, const SpherePointSet& set);
SpherePointSet load_points(const std::string& path);

}  // namespace viewgraph
