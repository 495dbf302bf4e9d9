#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "viewgraph/sphere_sampler.hpp"
#include "viewgraph/volume.hpp"

namespace viewgraph {

/// Oriented cutting plane. The plane passes through
/// volume_center + offset_mm * normal; `image_center` is the point on the
/// plane that maps to the middle of the rendered image.
struct SlicePlane {
    Vec3 normal = Vec3::UnitZ();
    Vec3 basis_u = Vec3::UnitX();
    Vec3 basis_v = Vec3::UnitY();
    double offset_mm = 0.0;
    int source_point_index = -1;
    Vec3 image_center = Vec3::Zero();
};

/// Square single-channel image, row-major with `a` (along basis_u) fastest.
struct Image2D {
    std::size_t size = 0;
    std::vector<float> pixels;

    Image2D() = default;
    explicit Image2D(std::size_t s, float fill = 0.0f) : size(s), pixels(s * s, fill) {}
    float& at(std::size_t a, std::size_t b) { return pixels[b * size + a]; }
    float at(std::size_t a, std::size_t b) const { return pixels[b * size + a]; }
};

enum class Strategy { axial, axial_plus, two5d, two5d_plus, omni };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

struct SliceStack {
    Strategy strategy = Strategy::omni;
    std::vector<Image2D> slices;
    std::vector<SlicePlane> planes;
    double pixel_spacing_mm = 1.0;
    std::vector<std::size_t> lesion_areas;  // mask pixel counts per slice
    bool normalized = false;
    double norm_min = 0.0;
    double norm_max = 1.0;

    std::size_t size() const noexcept { return slices.size(); }
    std::size_t image_size() const noexcept { return slices.empty() ? 0 : slices.front().size; }
};

/// Right-handed in-plane frame for a unit normal. basis_u is
/// normalize(ref x normal) with ref = +z, or +x when the normal is within
/// 1e-6 of the z axis; basis_v = normal x basis_u.
std::pair<Vec3, Vec3> plane_basis(const Vec3& normal);

/// Plane with the given normal and offset from the volume center; the image
/// is centered on the plane point closest to the volume center.
SlicePlane make_plane(const Geometry& g, const Vec3& normal, double offset_mm,
                      int source_point_index = -1);

/// Centers the image of `plane` on the orthogonal projection of `point`.
void center_on(SlicePlane& plane, const Vec3& point);

/// Pixel (a, b) lies at image_center + (a - S/2) * ps * u + (b - S/2) * ps * v
/// with integer division S/2, so the signed grid index runs over [-S/2, S/2).
Vec3 pixel_position(const SlicePlane& plane, std::size_t size_px, double pixel_spacing,
                    std::size_t a, std::size_t b);

Image2D extract_slice(const Volume& v, const SlicePlane& plane, std::size_t size_px,
                      double pixel_spacing, const SampleOptions& options = {});

/// Mask pixels hit by nearest-neighbour sampling on the plane's image grid.
std::size_t count_lesion_pixels(const Mask& m, const SlicePlane& plane, std::size_t size_px,
                                double pixel_spacing);

struct LesionStats {
    Vec3 centroid = Vec3::Zero();
    double radius = 0.0;  // max distance of a mask voxel center from the centroid
    std::size_t voxels = 0;
};

LesionStats lesion_stats(const Mask& m);

/// Offset along `normal` (from the volume center) of the plane that cuts the
/// largest lesion area. Candidate offsets are the centroid projection plus
/// multiples of `step`; step <= 0 selects the smallest voxel spacing.
/// Ties go to the offset closest to the centroid projection, then to the
/// smaller offset.
double largest_lesion_offset(const Volume& v, const Mask& m, const Vec3& normal, double step = 0.0);

struct SliceOptions {
    std::size_t size_px = 32;
    std::optional<double> pixel_spacing;  // default: symmetric lesion crop
    double crop_margin = 0.2;
    Interp mode = Interp::linear;
    double fill = 0.0;
    bool normalize = true;
    double sweep_step = 0.0;
};

/// Field-of-view side length for a lesion: 2 * radius * (1 + margin).
double lesion_field_of_view(const LesionStats& stats, double margin);

SliceStack slice_strategy(const Volume& v, const Mask& m, Strategy strategy, std::size_t n_views,
                          const SpherePointSet* points, const SliceOptions& options = {});

// Directory export: slice_NNN.raw (float32, S*S) plus manifest.txt.
void save_stack(const std::string& dir, const SliceStack& stack);
SliceStack load_stack(const std::string& dir);

/// FNV-1a hash over the stack's pixels and plane metadata, as 16 hex digits.
std::string stack_hash(const SliceStack& stack);

}  // namespace viewgraph
