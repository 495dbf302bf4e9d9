#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>

#include "viewgraph/slicer.hpp"

namespace viewgraph {

enum class FeatureSource { external, builtin };

/// One feature row per slice. Stored as float32, the precision of the FVEC
/// on-disk format.
struct FeatureMatrix {
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows;
    FeatureSource source = FeatureSource::builtin;
    std::string slice_manifest_hash = "-";

    Eigen::Index count() const noexcept { return rows.rows(); }
    Eigen::Index dim() const noexcept { return rows.cols(); }
};

inline constexpr std::size_t kEncoderSide = 32;
inline constexpr std::size_t kEncoderInputs = kEncoderSide * kEncoderSide;

/// Deterministic stand-in for a frozen image encoder: bilinear resize to
/// 32x32, per-slice standardization, then a seeded Gaussian random projection
/// scaled by 1/sqrt(1024).
class ProjectionEncoder {
public:
    ProjectionEncoder(Eigen::Index dim, std::uint64_t seed);

    Eigen::Index dim() const noexcept { return projection_.cols(); }
    Eigen::VectorXf encode(const Image2D& slice) const;
    FeatureMatrix encode(const SliceStack& stack) const;

private:
    Eigen::MatrixXf projection_;  // 1024 x dim
};

FeatureMatrix encode_builtin(const SliceStack& stack, Eigen::Index dim, std::uint64_t seed);

/// Bilinear (pixel-centre aligned) resize of a square image.
Image2D resize_bilinear(const Image2D& image, std::size_t side);

// FVEC: ASCII header "FVEC <rows> <dim> <hash_or_dash>\n" then rows*dim
// little-endian float32 values, row-major.
void write_fvec(std::ostream& out, const FeatureMatrix& features);
FeatureMatrix read_fvec(std::istream& in, Eigen::Index expected_rows = -1);
void save_fvec(const std::string& path, const FeatureMatrix& features);
FeatureMatrix load_external(const std::string& path, Eigen::Index expected_rows = -1);

}  // namespace viewgraph
