#include "viewgraph/slicer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "viewgraph/error.hpp"

namespace viewgraph {

namespace fs = std::filesystem;

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::axial: return "axial";
        case Strategy::axial_plus: return "axial_plus";
        case Strategy::two5d: return "two5d";
        case Strategy::two5d_plus: return "two5d_plus";
        case Strategy::omni: return "omni";
    }
    return "?";
}

Strategy parse_strategy(std::string_view name) {
    for (Strategy s : {Strategy::axial, Strategy::axial_plus, Strategy::two5d, Strategy::two5d_plus,
                       Strategy::omni}) {
        if (to_string(s) == name) return s;
    }
    throw ArgumentError("unknown slicing strategy: " + std::string(name));
}

std::pair<Vec3, Vec3> plane_basis(const Vec3& normal) {
    const double norm = normal.norm();
    if (!(norm > 1e-12) || !normal.allFinite()) throw ArgumentError("plane normal must be nonzero");
    const Vec3 n = normal / norm;
    const Vec3 ref = std::abs(n.z()) > 1.0 - 1e-6 ? Vec3::UnitX() : Vec3::UnitZ();
    const Vec3 u = ref.cross(n).normalized();
    const Vec3 v = n.cross(u);
    return {u, v};
}

SlicePlane make_plane(const Geometry& g, const Vec3& normal, double offset_mm, int source_point_index) {
    SlicePlane plane;
    auto [u, v] = plane_basis(normal);
    plane.normal = normal.normalized();
    plane.basis_u = u;
    plane.basis_v = v;
    plane.offset_mm = offset_mm;
    plane.source_point_index = source_point_index;
    plane.image_center = g.center() + offset_mm * plane.normal;
    return plane;
}

void center_on(SlicePlane& plane, const Vec3& point) {
    plane.image_center = point - (point - plane.image_center).dot(plane.normal) * plane.normal;
}

Vec3 pixel_position(const SlicePlane& plane, std::size_t size_px, double pixel_spacing,
                    std::size_t a, std::size_t b) {
    const double half = double(size_px / 2);
    return plane.image_center + ((double(a) - half) * pixel_spacing) * plane.basis_u +
           ((double(b) - half) * pixel_spacing) * plane.basis_v;
}

Image2D extract_slice(const Volume& v, const SlicePlane& plane, std::size_t size_px,
                      double pixel_spacing, const SampleOptions& options) {
    if (size_px < 1) throw ArgumentError("slice size must be at least one pixel");
    if (!(pixel_spacing > 0.0)) throw ArgumentError("pixel spacing must be positive");
    Image2D image(size_px);
    for (std::size_t b = 0; b < size_px; ++b) {
        for (std::size_t a = 0; a < size_px; ++a) {
            image.at(a, b) = float(sample_at(v, pixel_position(plane, size_px, pixel_spacing, a, b), options));
        }
    }
    return image;
}

std::size_t count_lesion_pixels(const Mask& m, const SlicePlane& plane, std::size_t size_px,
                                double pixel_spacing) {
    const SampleOptions nearest{Interp::nearest, 0.0};
    std::size_t count = 0;
    for (std::size_t b = 0; b < size_px; ++b) {
        for (std::size_t a = 0; a < size_px; ++a) {
            if (sample_at(m, pixel_position(plane, size_px, pixel_spacing, a, b), nearest) != 0.0) ++count;
        }
    }
    return count;
}

LesionStats lesion_stats(const Mask& m) {
    LesionStats stats;
    stats.centroid = mask_centroid(m);
    const Geometry& g = m.geometry();
    double r2 = 0.0;
    for (std::size_t k = 0; k < g.dims[2]; ++k)
        for (std::size_t j = 0; j < g.dims[1]; ++j)
            for (std::size_t i = 0; i < g.dims[0]; ++i)
                if (m.at(i, j, k)) {
                    r2 = std::max(r2, (g.voxel_center(i, j, k) - stats.centroid).squaredNorm());
                    ++stats.voxels;
                }
    stats.radius = std::sqrt(r2);
    return stats;
}

namespace {

void require_same_geometry(const Volume& v, const Mask& m) {
    if (!(v.geometry() == m.geometry())) throw ArgumentError("mask geometry differs from volume geometry");
}

void require_unit(const Vec3& n) {
    if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-9) throw ArgumentError("plane normal must be a unit vector");
}

double sweep_offset(const Mask& m, const LesionStats& stats, const Vec3& normal, double step) {
    const Geometry& g = m.geometry();
    const double centroid_offset = (stats.centroid - g.center()).dot(normal);
    // Pixel grid wide enough to hold any cross-section of the lesion; planes
    // farther than this from the centroid miss the lesion.
    const double half_width = stats.radius + g.spacing.maxCoeff();
    const auto reach = long(std::ceil(std::min(half_width, g.bounding_radius() + std::abs(centroid_offset)) / step));
    const std::size_t grid = 2 * std::size_t(std::ceil(half_width / step)) + 1;

    std::size_t best_count = 0;
    long best_k = 0;
    for (long k = -reach; k <= reach; ++k) {
        SlicePlane plane = make_plane(g, normal, centroid_offset + double(k) * step);
        center_on(plane, stats.centroid);
        const std::size_t count = count_lesion_pixels(m, plane, grid, step);
        // k ascends, so on equal counts the strict |k| test keeps the plane
        // nearer the centroid and then the smaller offset.
        if (count > best_count || (count == best_count && std::abs(k) < std::abs(best_k))) {
            best_count = count;
            best_k = k;
        }
    }
    return centroid_offset + double(best_k) * step;
}

}  // namespace

double largest_lesion_offset(const Volume& v, const Mask& m, const Vec3& normal, double step) {
    require_same_geometry(v, m);
    require_unit(normal);
    if (step <= 0.0) step = m.spacing().minCoeff();
    const LesionStats stats = lesion_stats(m);
    if (stats.voxels == 0) throw ArgumentError("mask is empty");
    return sweep_offset(m, stats, normal, step);
}

double lesion_field_of_view(const LesionStats& stats, double margin) {
    return 2.0 * stats.radius * (1.0 + margin);
}

namespace {

struct PlannedSlice {
    Vec3 normal;
    double offset;
    int source;
};

// Signed neighbour indices for n slices centred on 0; even n puts the extra on +.
std::vector<long> symmetric_steps(std::size_t n) {
    std::vector<long> steps;
    const long lo = -long((n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) steps.push_back(lo + long(i));
    return steps;
}

}  // namespace

SliceStack slice_strategy(const Volume& v, const Mask& m, Strategy strategy, std::size_t n_views,
                          const SpherePointSet* points, const SliceOptions& options) {
    require_same_geometry(v, m);
    if (n_views < 1) throw ArgumentError("n_views must be at least 1");
    if (options.size_px < 1) throw ArgumentError("slice size must be at least one pixel");
    switch (strategy) {
        case Strategy::axial:
            if (n_views != 1) throw ArgumentError("axial strategy takes exactly one view");
            break;
        case Strategy::two5d:
            if (n_views != 3) throw ArgumentError("two5d strategy takes exactly three views");
            break;
        case Strategy::omni:
            if (points == nullptr) throw ArgumentError("omni strategy requires a sphere point set");
            if (points->size() != n_views) {
                throw ArgumentError("omni strategy: point set has " + std::to_string(points->size()) +
                                    " points but " + std::to_string(n_views) + " views were requested");
            }
            break;
        default: break;
    }

    const LesionStats stats = lesion_stats(m);
    const Geometry& g = m.geometry();
    const double step = options.sweep_step > 0.0 ? options.sweep_step : g.spacing.minCoeff();
    auto best = [&](const Vec3& n) { return sweep_offset(m, stats, n, step); };

    // axial, coronal, sagittal
    const Vec3 canonical[3] = {Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitX()};
    const int canonical_axis[3] = {2, 1, 0};

    std::vector<PlannedSlice> plan;
    switch (strategy) {
        case Strategy::axial:
            plan.push_back({canonical[0], best(canonical[0]), -1});
            break;
        case Strategy::axial_plus: {
            const double centre = best(canonical[0]);
            for (long s : symmetric_steps(n_views)) {
                plan.push_back({canonical[0], centre + double(s) * g.spacing[2], -1});
            }
            break;
        }
        case Strategy::two5d:
            for (const Vec3& n : canonical) plan.push_back({n, best(n), -1});
            break;
        case Strategy::two5d_plus: {
            std::size_t per_dir[3] = {n_views / 3, n_views / 3, n_views / 3};
            for (std::size_t r = 0; r < n_views % 3; ++r) ++per_dir[r];
            for (int d = 0; d < 3; ++d) {
                if (per_dir[d] == 0) continue;
                const double centre = best(canonical[d]);
                for (long s : symmetric_steps(per_dir[d])) {
                    plan.push_back({canonical[d], centre + double(s) * g.spacing[canonical_axis[d]], -1});
                }
            }
            break;
        }
        case Strategy::omni:
            for (std::size_t i = 0; i < points->size(); ++i) {
                const Vec3& n = points->points[i];
                require_unit(n);
                plan.push_back({n, best(n), int(i)});
            }
            break;
    }

    SliceStack stack;
    stack.strategy = strategy;
    const double fov = lesion_field_of_view(stats, options.crop_margin);
    stack.pixel_spacing_mm = options.pixel_spacing.value_or(fov / double(options.size_px));
    if (!(stack.pixel_spacing_mm > 0.0)) {
        stack.pixel_spacing_mm = g.spacing.minCoeff();  // single-voxel lesion
    }
    const SampleOptions sample{options.mode, options.fill};
    for (const PlannedSlice& p : plan) {
        SlicePlane plane = make_plane(g, p.normal, p.offset, p.source);
        center_on(plane, stats.centroid);
        stack.slices.push_back(extract_slice(v, plane, options.size_px, stack.pixel_spacing_mm, sample));
        stack.lesion_areas.push_back(count_lesion_pixels(m, plane, options.size_px, stack.pixel_spacing_mm));
        stack.planes.push_back(plane);
    }

    if (options.normalize) {
        const auto [lo, hi] = value_range(v);
        stack.normalized = true;
        stack.norm_min = lo;
        stack.norm_max = hi;
        const double range = hi - lo;
        for (Image2D& img : stack.slices) {
            for (float& px : img.pixels) px = range > 0.0 ? float((double(px) - lo) / range) : 0.0f;
        }
    }
    return stack;
}

namespace {

std::string slice_file_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "slice_%03zu.raw", i);
    return buf;
}

void put_vec(std::ostream& os, const Vec3& v) { os << ' ' << v.x() << ' ' << v.y() << ' ' << v.z(); }

}  // namespace

void save_stack(const std::string& dir, const SliceStack& stack) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
    std::ostringstream manifest;
    manifest << std::setprecision(17);
    manifest << "viewgraph-slices 1\n"
             << "strategy " << to_string(stack.strategy) << '\n'
             << "count " << stack.size() << '\n'
             << "size " << stack.image_size() << '\n'
             << "pixel_spacing " << stack.pixel_spacing_mm << '\n'
             << "normalized " << (stack.normalized ? 1 : 0) << ' ' << stack.norm_min << ' ' << stack.norm_max << '\n'
             << "# slice index file normal(3) basis_u(3) basis_v(3) offset_mm image_center(3) lesion_area "
                "source_point pixel_spacing\n";
    for (std::size_t i = 0; i < stack.size(); ++i) {
        const SlicePlane& p = stack.planes[i];
        const std::string name = slice_file_name(i);
        manifest << "slice " << i << ' ' << name;
        put_vec(manifest, p.normal);
        put_vec(manifest, p.basis_u);
        put_vec(manifest, p.basis_v);
        manifest << ' ' << p.offset_mm;
        put_vec(manifest, p.image_center);
        manifest << ' ' << stack.lesion_areas[i] << ' ' << p.source_point_index << ' ' << stack.pixel_spacing_mm
                 << '\n';

        std::ofstream raw(fs::path(dir) / name, std::ios::binary);
        if (!raw) throw IoError("cannot write " + (fs::path(dir) / name).string());
        const auto& px = stack.slices[i].pixels;
        raw.write(reinterpret_cast<const char*>(px.data()), std::streamsize(px.size() * sizeof(float)));
        if (!raw) throw IoError("write failed: " + name);
    }
    std::ofstream out(fs::path(dir) / "manifest.txt");
    if (!out) throw IoError("cannot write manifest in " + dir);
    out << manifest.str();
}

SliceStack load_stack(const std::string& dir) {
    const fs::path manifest_path = fs::path(dir) / "manifest.txt";
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path.string());
    SliceStack stack;
    std::size_t count = 0, size = 0;
    std::string line;
    auto fail = [&](const std::string& what) { throw FormatError(manifest_path.string() + ": " + what); };
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        std::istringstream is(line);
        std::string key;
        is >> key;
        if (key == "viewgraph-slices") {
            int version = 0;
            if (!(is >> version) || version != 1) fail("unsupported manifest version");
        } else if (key == "strategy") {
            std::string name;
            is >> name;
            stack.strategy = parse_strategy(name);
        } else if (key == "count") {
            is >> count;
        } else if (key == "size") {
            is >> size;
        } else if (key == "pixel_spacing") {
            is >> stack.pixel_spacing_mm;
        } else if (key == "normalized") {
            int flag = 0;
            is >> flag >> stack.norm_min >> stack.norm_max;
            stack.normalized = flag != 0;
        } else if (key == "slice") {
            std::size_t index;
            std::string file;
            SlicePlane p;
            std::size_t area;
            double ps;
            if (!(is >> index >> file >> p.normal.x() >> p.normal.y() >> p.normal.z() >> p.basis_u.x() >>
                  p.basis_u.y() >> p.basis_u.z() >> p.basis_v.x() >> p.basis_v.y() >> p.basis_v.z() >>
                  p.offset_mm >> p.image_center.x() >> p.image_center.y() >> p.image_center.z() >> area >>
                  p.source_point_index >> ps)) {
                fail("malformed slice line: " + line);
            }
            if (index != stack.planes.size()) fail("slice lines out of order");
            Image2D img(size);
            const fs::path raw_path = fs::path(dir) / file;
            std::ifstream raw(raw_path, std::ios::binary);
            if (!raw) throw IoError("cannot open " + raw_path.string());
            raw.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size() * sizeof(float)));
            if (raw.gcount() != std::streamsize(img.pixels.size() * sizeof(float))) {
                fail("slice file truncated: " + file);
            }
            stack.planes.push_back(p);
            stack.lesion_areas.push_back(area);
            stack.slices.push_back(std::move(img));
        } else {
            fail("unknown manifest key: " + key);
        }
    }
    if (stack.size() != count) fail("slice count mismatch");
    return stack;
}

std::string stack_hash(const SliceStack& stack) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const void* data, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    };
    mix(&stack.pixel_spacing_mm, sizeof(double));
    for (std::size_t i = 0; i < stack.size(); ++i) {
        const SlicePlane& p = stack.planes[i];
        mix(p.normal.data(), 3 * sizeof(double));
        mix(&p.offset_mm, sizeof(double));
        const auto& px = stack.slices[i].pixels;
        mix(px.data(), px.size() * sizeof(float));
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace viewgraph
