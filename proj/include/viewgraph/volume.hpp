#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "viewgraph/error.hpp"
#include "viewgraph/vec3.hpp"

namespace viewgraph {

/// Axis-aligned voxel grid geometry. Voxel (i, j, k) has its center at
/// origin + (i*sx, j*sy, k*sz); the physical support extends half a voxel
/// beyond the outermost centers.
struct Geometry {
    std::array<std::size_t, 3> dims{1, 1, 1};
    Vec3 spacing = Vec3::Ones();
    Vec3 origin = Vec3::Zero();

    std::size_t voxel_count() const noexcept { return dims[0] * dims[1] * dims[2]; }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return i + dims[0] * (j + dims[1] * k);
    }
    Vec3 voxel_center(std::size_t i, std::size_t j, std::size_t k) const {
        return origin + Vec3(double(i), double(j), double(k)).cwiseProduct(spacing);
    }
    Vec3 center() const {
        return origin + 0.5 * Vec3(double(dims[0] - 1), double(dims[1] - 1), double(dims[2] - 1))
                                  .cwiseProduct(spacing);
    }
    /// Radius of the smallest sphere around center() enclosing the support.
    double bounding_radius() const {
        return 0.5 * Vec3(double(dims[0]), double(dims[1]), double(dims[2])).cwiseProduct(spacing).norm();
    }
    bool operator==(const Geometry& other) const {
        return dims == other.dims && spacing == other.spacing && origin == other.origin;
    }

    void validate() const;
};

/// Scalar grid with x-fastest storage.
template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    explicit Grid(Geometry geometry, T fill = T{})
        : geometry_(std::move(geometry)) {
        geometry_.validate();
        data_.assign(geometry_.voxel_count(), fill);
    }
    Grid(Geometry geometry, std::vector<T> data)
        : geometry_(std::move(geometry)), data_(std::move(data)) {
        geometry_.validate();
        if (data_.size() != geometry_.voxel_count()) {
            throw ArgumentError("grid data size does not match dims");
        }
    }

    const Geometry& geometry() const noexcept { return geometry_; }
    const std::array<std::size_t, 3>& dims() const noexcept { return geometry_.dims; }
    const Vec3& spacing() const noexcept { return geometry_.spacing; }
    const Vec3& origin() const noexcept { return geometry_.origin; }

    T& at(std::size_t i, std::size_t j, std::size_t k) { return data_[geometry_.index(i, j, k)]; }
    const T& at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[geometry_.index(i, j, k)];
    }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

private:
    Geometry geometry_;
    std::vector<T> data_;
};

using Volume = Grid<float>;
using Mask = Grid<std::uint8_t>;

enum class Interp { linear, nearest };

struct SampleOptions {
    Interp mode = Interp::linear;
    double fill = 0.0;
};

/// Value at a physical point (mm). Points within the support but outside the
/// outermost voxel centers are clamped to the edge; points outside the
/// support return `fill`.
double sample_at(const Volume& v, const Vec3& p, const SampleOptions& options = {});
double sample_at(const Mask& m, const Vec3& p, const SampleOptions& options = {});

/// Resample onto an isotropic grid of spacing t. Output dims are
/// ceil(dim * s / t); output voxel k samples the input at
/// origin + (k + 0.5) * t - 0.5 * s.
Volume resample_isotropic(const Volume& v, double target_spacing, Interp mode = Interp::linear);
Mask resample_isotropic(const Mask& m, double target_spacing);

/// Thick-slice simulation: averages consecutive z-slabs of thickness
/// z_spacing and declares the result at that spacing. x and y are untouched.
Volume anisotropize(const Volume& v, double z_spacing);
Mask anisotropize(const Mask& m, double z_spacing);

struct AxisAlignment {
    double value = 0.0;   // |cos| between the major axis and +z, in [0, 1]
    bool tie = false;     // top principal variances coincide
};

/// Major principal axis of the nonzero voxels' physical coordinates compared
/// against the z axis. Ties between the leading eigenvalues are resolved by
/// taking the direction inside the tied eigenspace closest to z.
AxisAlignment z_axis_alignment(const Mask& m);

Vec3 mask_centroid(const Mask& m);
std::size_t mask_count(const Mask& m);

std::array<double, 2> value_range(const Volume& v);

}  // namespace viewgraph
