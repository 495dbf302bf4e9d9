#include "viewgraph/phantom.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "viewgraph/error.hpp"

namespace viewgraph {

void PhantomSpec::validate() const {
    grid.validate();
    if (!(semi_axes.minCoeff() > 0.0)) throw ArgumentError("lesion semi-axes must be positive");
    if (!(rotation_axis.norm() > 0.0)) throw ArgumentError("rotation axis must be nonzero");
    if (!(texture.period_mm > 0.0)) throw ArgumentError("texture period must be positive");
    if (!(noise_sigma >= 0.0)) throw ArgumentError("noise sigma must be non-negative");
    if (label != 0 && label != 1) throw ArgumentError("label must be 0 or 1");
    // Bounding box of the rotated ellipsoid: half-extent along world axis a is
    // sqrt(sum_k (R_ak * s_k)^2).
    const Eigen::Matrix3d r = rotation();
    const Vec3 lo = grid.origin - 0.5 * grid.spacing;
    const Vec3 hi = grid.origin + Vec3(double(grid.dims[0]) - 0.5, double(grid.dims[1]) - 0.5,
                                       double(grid.dims[2]) - 0.5).cwiseProduct(grid.spacing);
    for (int a = 0; a < 3; ++a) {
        const double half = (r.row(a).transpose().cwiseProduct(semi_axes)).norm();
        if (centroid[a] - half < lo[a] || centroid[a] + half > hi[a]) {
            throw ArgumentError("lesion does not fit inside the grid");
        }
    }
}

Eigen::Matrix3d PhantomSpec::rotation() const {
    return Eigen::AngleAxisd(rotation_angle, rotation_axis.normalized()).toRotationMatrix();
}

Vec3 PhantomSpec::major_axis() const {
    Eigen::Index major = 0;
    semi_axes.maxCoeff(&major);
    return rotation().col(major);
}

Phantom generate_phantom(const PhantomSpec& spec) {
    spec.validate();
    const Geometry& g = spec.grid;
    const Eigen::Matrix3d rt = spec.rotation().transpose();
    Eigen::Index major = 0;
    spec.semi_axes.maxCoeff(&major);
    const Vec3 inv_axes = spec.semi_axes.cwiseInverse();
    const double k = 2.0 * std::numbers::pi / spec.texture.period_mm;

    Phantom out{Volume(g), Mask(g), spec.label};
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t z = 0; z < g.dims[2]; ++z) {
        for (std::size_t y = 0; y < g.dims[1]; ++y) {
            for (std::size_t x = 0; x < g.dims[0]; ++x) {
                const Vec3 local = rt * (g.voxel_center(x, y, z) - spec.centroid);
                const bool inside = local.cwiseProduct(inv_axes).squaredNorm() <= 1.0;
                double value = spec.background_intensity;
                if (inside) {
                    const double s = spec.label == 1 ? std::cos(k * local[major]) : 1.0;
                    value = spec.lesion_intensity + spec.texture.amplitude * s;
                    out.mask.at(x, y, z) = 1;
                }
                // One draw per voxel regardless of class keeps noise fields identical.
                value += spec.noise_sigma * noise(rng);
                out.volume.at(x, y, z) = float(value);
            }
        }
    }
    return out;
}

std::vector<PhantomSpec> phantom_specs(const PhantomSetConfig& cfg) {
    if (cfg.grid < 4) throw ArgumentError("phantom grid too small");
    if (!(cfg.min_tilt_deg >= 0.0 && cfg.max_tilt_deg >= cfg.min_tilt_deg && cfg.max_tilt_deg <= 90.0)) {
        throw ArgumentError("tilt range must satisfy 0 <= min <= max <= 90 degrees");
    }
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    const double deg = std::numbers::pi / 180.0;

    Geometry grid;
    grid.dims = {cfg.grid, cfg.grid, cfg.grid};
    grid.spacing = Vec3::Constant(cfg.spacing);
    grid.origin = Vec3::Zero();

    std::vector<PhantomSpec> specs;
    specs.reserve(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        PhantomSpec s;
        s.grid = grid;
        s.label = int(i % 2);
        const double major = cfg.major_mm * uniform(1.0 - cfg.size_jitter, 1.0 + cfg.size_jitter);
        const double minor_a = cfg.minor_mm * uniform(1.0 - cfg.size_jitter, 1.0 + cfg.size_jitter);
        const double minor_b = cfg.minor_mm * uniform(1.0 - cfg.size_jitter, 1.0 + cfg.size_jitter);
        s.semi_axes = Vec3(minor_a, minor_b, major);
        // Tilt uniform in solid angle over the cap between min and max tilt.
        const double cos_tilt = uniform(std::cos(cfg.max_tilt_deg * deg), std::cos(cfg.min_tilt_deg * deg));
        const double azimuth = uniform(0.0, 2.0 * std::numbers::pi);
        const double spin = uniform(0.0, 2.0 * std::numbers::pi);
        // Spin the lesion about its own axis, then tilt the axis off z.
        const Eigen::Matrix3d tilt =
            Eigen::AngleAxisd(std::acos(cos_tilt), Vec3(-std::sin(azimuth), std::cos(azimuth), 0.0)).toRotationMatrix();
        const Eigen::AngleAxisd combined(tilt * Eigen::AngleAxisd(spin, Vec3::UnitZ()).toRotationMatrix());
        s.rotation_axis = combined.axis();
        s.rotation_angle = combined.angle();
        const Vec3 jitter(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
        s.centroid = grid.center() + cfg.centroid_jitter_mm * jitter;
        s.texture = cfg.texture;
        s.lesion_intensity = cfg.lesion_intensity * uniform(1.0 - cfg.intensity_jitter, 1.0 + cfg.intensity_jitter);
        s.background_intensity = cfg.background_intensity;
        s.noise_sigma = cfg.noise_sigma;
        s.seed = rng();
        specs.push_back(s);
    }
    return specs;
}

}  // namespace viewgraph
