#include "viewgraph/sphere_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "viewgraph/error.hpp"

namespace viewgraph {

namespace {

constexpr double kUnitTol = 1e-9;
constexpr double kMinInitAngle = 1e-3;

Vec3 coulomb_gradient(std::span<const Vec3> points, std::size_t i) {
    Vec3 grad = Vec3::Zero();
    const Vec3& xi = points[i];
    for (std::size_t j = 0; j < points.size(); ++j) {
        if (j == i) continue;
        const Vec3 diff = xi - points[j];
        const double d2 = diff.squaredNorm();
        grad -= 2.0 * diff / (d2 * d2);
    }
    return grad;
}

}  // namespace

std::vector<Vec3> canonical_points() {
    return {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
}

double coulomb_energy(std::span<const Vec3> points) {
    double energy = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            const double d2 = (points[i] - points[j]).squaredNorm();
            if (!(d2 > 0.0)) {
                throw NumericError("coulomb energy diverges: points " + std::to_string(i) +
                                   " and " + std::to_string(j) + " coincide");
            }
            energy += 2.0 / d2;
        }
    }
    return energy;
}

SpherePointSet optimize_sphere(std::size_t n_total, std::span<const Vec3> fixed,
                               const SphereOptions& options, SphereTrace* trace) {
    if (n_total < fixed.size()) {
        throw ArgumentError("n_total (" + std::to_string(n_total) +
                            ") is smaller than the number of fixed points (" +
                            std::to_string(fixed.size()) + ")");
    }
    if (!(options.lr > 0.0)) throw ArgumentError("learning rate must be positive");
    if (options.max_iters < 0) throw ArgumentError("max_iters must be non-negative");
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        if (!fixed[i].allFinite() || std::abs(fixed[i].norm() - 1.0) > kUnitTol) {
            throw ArgumentError("fixed point " + std::to_string(i) + " is not a unit vector");
        }
    }

    SpherePointSet set;
    set.fixed_count = fixed.size();
    set.points.assign(fixed.begin(), fixed.end());

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    while (set.points.size() < n_total) {
        Vec3 p(gauss(rng), gauss(rng), gauss(rng));
        const double norm = p.norm();
        if (norm < 1e-12) continue;
        p /= norm;
        const bool too_close = std::any_of(set.points.begin(), set.points.end(), [&](const Vec3& q) {
            return angle_between(p, q) < kMinInitAngle;
        });
        if (!too_close) set.points.push_back(p);
    }

    if (trace) {
        *trace = SphereTrace{};
        trace->initial_energy = n_total >= 2 ? coulomb_energy(set.points) : 0.0;
    }

    int iter = 0;
    bool converged = set.fixed_count == set.points.size();
    while (!converged && iter < options.max_iters) {
        double max_move = 0.0;
        for (std::size_t i = set.fixed_count; i < set.points.size(); ++i) {
            Vec3& x = set.points[i];
            Vec3 grad = coulomb_gradient(set.points, i);
            grad -= grad.dot(x) * x;  // tangential component only
            Vec3 step = options.lr * grad;
            const double len = step.norm();
            if (len > options.max_step) step *= options.max_step / len;
            const Vec3 updated = (x - step).normalized();
            max_move = std::max(max_move, (updated - x).norm());
            x = updated;
        }
        ++iter;
        if (trace) trace->sweep_energy.push_back(coulomb_energy(set.points));
        converged = max_move < options.tol;
    }

    set.energy = n_total >= 2 ? coulomb_energy(set.points) : 0.0;
    if (trace) {
        trace->iterations = iter;
        trace->converged = converged;
    }
    return set;
}

SpherePointSet canonical_sphere(std::size_t n_total, std::uint64_t seed) {
    const auto fixed = canonical_points();
    SphereOptions options;
    options.seed = seed;
    return optimize_sphere(n_total, fixed, options);
}

void write_points(std::ostream& out, const SpherePointSet& set) {
    std::ostringstream line;
    line << std::setprecision(17);
    for (std::size_t i = 0; i < set.points.size(); ++i) {
        const Vec3& p = set.points[i];
        line << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << (set.is_fixed(i) ? 1 : 0) << '\n';
    }
    out << line.str();
}

SpherePointSet read_points(std::istream& in) {
    SpherePointSet set;
    std::string line;
    std::size_t line_no = 0;
    bool free_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        std::istringstream fields(line);
        double x, y, z;
        int flag;
        if (!(fields >> x >> y >> z >> flag) || (flag != 0 && flag != 1)) {
            throw FormatError("malformed point on line " + std::to_string(line_no));
        }
        if (flag == 1) {
            if (free_seen) {
                throw FormatError("fixed point after free point on line " + std::to_string(line_no));
            }
            ++set.fixed_count;
        } else {
            free_seen = true;
        }
        set.points.emplace_back(x, y, z);
    }
    set.energy = set.points.size() >= 2 ? coulomb_energy(set.points) : 0.0;
    return set;
}

void save_points(const std::string& path, const SpherePointSet& set) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_points(out, set);
    if (!out) throw IoError("write failed: " + path);
}

SpherePointSet load_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_points(in);
}

}  // namespace viewgraph
