#include "viewgraph/volume.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace viewgraph {

void Geometry::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] == 0) throw ArgumentError("grid dims must be positive");
        if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
            throw ArgumentError("grid spacing must be positive and finite");
        }
    }
    if (!origin.allFinite()) throw ArgumentError("grid origin must be finite");
}

namespace {

// Continuous voxel index along each axis, or false if outside the support.
bool continuous_index(const Geometry& g, const Vec3& p, double idx[3]) {
    for (int a = 0; a < 3; ++a) {
        const double f = (p[a] - g.origin[a]) / g.spacing[a];
        const double hi = double(g.dims[a]) - 0.5;
        if (f < -0.5 || f > hi) return false;
        idx[a] = std::clamp(f, 0.0, double(g.dims[a] - 1));
    }
    return true;
}

template <typename T>
double sample_grid(const Grid<T>& grid, const Vec3& p, const SampleOptions& options) {
    if (!p.allFinite()) throw ArgumentError("sample point has non-finite coordinates");
    const Geometry& g = grid.geometry();
    double idx[3];
    if (!continuous_index(g, p, idx)) return options.fill;

    if (options.mode == Interp::nearest) {
        const auto i = std::size_t(std::lround(idx[0]));
        const auto j = std::size_t(std::lround(idx[1]));
        const auto k = std::size_t(std::lround(idx[2]));
        return double(grid.at(i, j, k));
    }

    std::size_t lo[3], hi[3];
    double w[3];
    for (int a = 0; a < 3; ++a) {
        const double fl = std::floor(idx[a]);
        lo[a] = std::size_t(fl);
        hi[a] = std::min(lo[a] + 1, g.dims[a] - 1);
        w[a] = idx[a] - fl;
    }
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
        const std::size_t i = (c & 1) ? hi[0] : lo[0];
        const std::size_t j = (c & 2) ? hi[1] : lo[1];
        const std::size_t k = (c & 4) ? hi[2] : lo[2];
        const double wx = (c & 1) ? w[0] : 1.0 - w[0];
        const double wy = (c & 2) ? w[1] : 1.0 - w[1];
        const double wz = (c & 4) ? w[2] : 1.0 - w[2];
        const double weight = wx * wy * wz;
        if (weight != 0.0) acc += weight * double(grid.at(i, j, k));
    }
    return acc;
}

template <typename T>
Grid<T> resample_grid(const Grid<T>& in, double t, Interp mode) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ArgumentError("target spacing must be positive");
    const Geometry& g = in.geometry();
    Geometry out_geom;
    for (int a = 0; a < 3; ++a) {
        out_geom.dims[a] = std::size_t(std::ceil(double(g.dims[a]) * g.spacing[a] / t - 1e-9));
        out_geom.dims[a] = std::max<std::size_t>(out_geom.dims[a], 1);
        out_geom.spacing[a] = t;
        out_geom.origin[a] = g.origin[a] + 0.5 * t - 0.5 * g.spacing[a];
    }
    if (out_geom.dims == g.dims && out_geom.spacing == g.spacing) return in;

    Grid<T> out(out_geom);
    const SampleOptions opts{mode, 0.0};
    for (std::size_t k = 0; k < out_geom.dims[2]; ++k) {
        for (std::size_t j = 0; j < out_geom.dims[1]; ++j) {
            for (std::size_t i = 0; i < out_geom.dims[0]; ++i) {
                // The last output voxel may overhang the input support by under one voxel.
                const Vec3 lo = g.origin;
                const Vec3 hi = g.voxel_center(g.dims[0] - 1, g.dims[1] - 1, g.dims[2] - 1);
                const Vec3 p = out_geom.voxel_center(i, j, k).cwiseMax(lo).cwiseMin(hi);
                const double value = sample_grid(in, p, opts);
                if constexpr (std::is_integral_v<T>) {
                    out.at(i, j, k) = T(std::lround(value));
                } else {
                    out.at(i, j, k) = T(value);
                }
            }
        }
    }
    return out;
}

template <typename T>
Grid<T> anisotropize_grid(const Grid<T>& in, double z_spacing) {
    const Geometry& g = in.geometry();
    if (!(z_spacing > 0.0) || z_spacing < g.spacing[2]) {
        throw ArgumentError("z spacing must not be smaller than the current z spacing");
    }
    if (z_spacing == g.spacing[2]) return in;

    Geometry out_geom = g;
    const double extent = double(g.dims[2]) * g.spacing[2];
    out_geom.dims[2] = std::max<std::size_t>(1, std::size_t(std::ceil(extent / z_spacing - 1e-9)));
    out_geom.spacing[2] = z_spacing;
    out_geom.origin[2] = g.origin[2] + 0.5 * z_spacing - 0.5 * g.spacing[2];

    // Input slice k covers [k*sz, (k+1)*sz) measured from the lower support edge.
    Grid<T> out(out_geom);
    std::vector<double> acc(g.dims[0] * g.dims[1]);
    for (std::size_t kk = 0; kk < out_geom.dims[2]; ++kk) {
        const double lo = double(kk) * z_spacing;
        const double hi = std::min(lo + z_spacing, extent);
        std::fill(acc.begin(), acc.end(), 0.0);
        double total = 0.0;
        for (std::size_t k = 0; k < g.dims[2]; ++k) {
            const double s0 = double(k) * g.spacing[2];
            const double overlap = std::min(hi, s0 + g.spacing[2]) - std::max(lo, s0);
            if (overlap <= 0.0) continue;
            total += overlap;
            for (std::size_t j = 0; j < g.dims[1]; ++j) {
                for (std::size_t i = 0; i < g.dims[0]; ++i) {
                    acc[i + g.dims[0] * j] += overlap * double(in.at(i, j, k));
                }
            }
        }
        for (std::size_t j = 0; j < g.dims[1]; ++j) {
            for (std::size_t i = 0; i < g.dims[0]; ++i) {
                const double value = acc[i + g.dims[0] * j] / total;
                if constexpr (std::is_integral_v<T>) {
                    out.at(i, j, kk) = T(std::lround(value));
                } else {
                    out.at(i, j, kk) = T(value);
                }
            }
        }
    }
    return out;
}

}  // namespace

double sample_at(const Volume& v, const Vec3& p, const SampleOptions& options) {
    return sample_grid(v, p, options);
}

double sample_at(const Mask& m, const Vec3& p, const SampleOptions& options) {
    return sample_grid(m, p, options);
}

Volume resample_isotropic(const Volume& v, double target_spacing, Interp mode) {
    return resample_grid(v, target_spacing, mode);
}

Mask resample_isotropic(const Mask& m, double target_spacing) {
    return resample_grid(m, target_spacing, Interp::nearest);
}

Volume anisotropize(const Volume& v, double z_spacing) { return anisotropize_grid(v, z_spacing); }

Mask anisotropize(const Mask& m, double z_spacing) { return anisotropize_grid(m, z_spacing); }

std::size_t mask_count(const Mask& m) {
    return std::size_t(std::count_if(m.data().begin(), m.data().end(), [](auto x) { return x != 0; }));
}

Vec3 mask_centroid(const Mask& m) {
    const Geometry& g = m.geometry();
    Vec3 sum = Vec3::Zero();
    std::size_t count = 0;
    for (std::size_t k = 0; k < g.dims[2]; ++k)
        for (std::size_t j = 0; j < g.dims[1]; ++j)
            for (std::size_t i = 0; i < g.dims[0]; ++i)
                if (m.at(i, j, k)) {
                    sum += g.voxel_center(i, j, k);
                    ++count;
                }
    if (count == 0) throw ArgumentError("mask is empty");
    return sum / double(count);
}

AxisAlignment z_axis_alignment(const Mask& m) {
    const Geometry& g = m.geometry();
    const Vec3 mean = mask_centroid(m);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    std::size_t count = 0;
    for (std::size_t k = 0; k < g.dims[2]; ++k)
        for (std::size_t j = 0; j < g.dims[1]; ++j)
            for (std::size_t i = 0; i < g.dims[0]; ++i)
                if (m.at(i, j, k)) {
                    const Vec3 d = g.voxel_center(i, j, k) - mean;
                    cov += d * d.transpose();
                    ++count;
                }
    cov /= double(count);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Vec3 evals = solver.eigenvalues();  // ascending
    const Eigen::Matrix3d evecs = solver.eigenvectors();
    const double top = evals[2];
    const double tie_tol = 1e-9 * std::max(std::abs(top), 1e-300);

    AxisAlignment result;
    // Project z onto the span of every eigenvector tied with the top one.
    Vec3 proj = Vec3::Zero();
    int tied = 0;
    for (int c = 2; c >= 0; --c) {
        if (top - evals[c] <= tie_tol || top == 0.0) {
            const Vec3 e = evecs.col(c);
            proj += e.z() * e;
            ++tied;
        }
    }
    result.tie = tied > 1;
    result.value = std::clamp(proj.norm(), 0.0, 1.0);
    return result;
}

std::array<double, 2> value_range(const Volume& v) {
    const auto [lo, hi] = std::minmax_element(v.data().begin(), v.data().end());
    return {double(*lo), double(*hi)};
}

}  // namespace viewgraph
