#pragma once

#include <cstdint>
#include <vector>

#include "viewgraph/volume.hpp"

namespace viewgraph {

/// Class rule: inside the lesion the intensity is
///   lesion_intensity + amplitude * s(t)
/// where t is the coordinate (mm) along the lesion's major axis measured from
/// the centroid. Class 0 uses s(t) = 1, class 1 uses s(t) = cos(2 pi t / period),
/// so both classes agree at the centre and differ towards the poles. A cut
/// perpendicular to the major axis sees a nearly constant lesion.
struct OrientationTexture {
    double period_mm = 12.0;
    double amplitude = 0.5;
};

/// Ellipsoidal lesion in a noisy background. Semi-axes are given in the
/// lesion frame; the rotation maps the lesion frame to world axes.
struct PhantomSpec {
    Geometry grid;
    Vec3 semi_axes{7.0, 7.0, 18.0};
    Vec3 rotation_axis = Vec3::UnitX();
    double rotation_angle = 0.0;  // radians
    Vec3 centroid = Vec3::Zero();  // mm
    OrientationTexture texture;
    double lesion_intensity = 1.0;
    double background_intensity = 0.0;
    double noise_sigma = 0.1;
    std::uint64_t seed = 0;
    int label = 0;

    void validate() const;
    Eigen::Matrix3d rotation() const;
    /// Unit vector of the longest semi-axis in world coordinates.
    Vec3 major_axis() const;
};

struct Phantom {
    Volume volume;
    Mask mask;
    int label = 0;
};

Phantom generate_phantom(const PhantomSpec& spec);

/// Random oblique-texture phantom set. Labels alternate 0, 1, 0, ... so the
/// classes are balanced; lesion sizes, tilt, azimuth, centroid and intensity
/// offsets are drawn per phantom.
struct PhantomSetConfig {
    std::size_t n = 200;
    std::size_t grid = 48;
    double spacing = 1.0;
    double major_mm = 18.0;
    double minor_mm = 7.0;
    double size_jitter = 0.15;
    double min_tilt_deg = 20.0;  // major axis angle from +z
    double max_tilt_deg = 70.0;
    double centroid_jitter_mm = 2.0;
    OrientationTexture texture{9.0, 0.3};
    double lesion_intensity = 1.0;
    double intensity_jitter = 0.1;
    double background_intensity = 0.0;
    double noise_sigma = 0.4;
    std::uint64_t seed = 0;
};

std::vector<PhantomSpec> phantom_specs(const PhantomSetConfig& cfg);

}  // namespace viewgraph
