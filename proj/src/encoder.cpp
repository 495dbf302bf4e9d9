#include "viewgraph/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "viewgraph/error.hpp"

namespace viewgraph {

Image2D resize_bilinear(const Image2D& image, std::size_t side) {
    if (image.size == 0 || side == 0) throw ArgumentError("cannot resize an empty image");
    if (image.size == side) return image;
    Image2D out(side);
    const double scale = double(image.size) / double(side);
    const double last = double(image.size - 1);
    for (std::size_t b = 0; b < side; ++b) {
        const double y = std::clamp((double(b) + 0.5) * scale - 0.5, 0.0, last);
        const auto y0 = std::size_t(y);
        const std::size_t y1 = std::min(y0 + 1, image.size - 1);
        const double wy = y - double(y0);
        for (std::size_t a = 0; a < side; ++a) {
            const double x = std::clamp((double(a) + 0.5) * scale - 0.5, 0.0, last);
            const auto x0 = std::size_t(x);
            const std::size_t x1 = std::min(x0 + 1, image.size - 1);
            const double wx = x - double(x0);
            const double top = (1 - wx) * image.at(x0, y0) + wx * image.at(x1, y0);
            const double bottom = (1 - wx) * image.at(x0, y1) + wx * image.at(x1, y1);
            out.at(a, b) = float((1 - wy) * top + wy * bottom);
        }
    }
    return out;
}

ProjectionEncoder::ProjectionEncoder(Eigen::Index dim, std::uint64_t seed) {
    if (dim < 1) throw ArgumentError("encoder dimension must be at least 1");
    projection_.resize(Eigen::Index(kEncoderInputs), dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double scale = 1.0 / std::sqrt(double(kEncoderInputs));
    // Column-major fill: column c holds the weights of output feature c.
    for (Eigen::Index c = 0; c < dim; ++c)
        for (Eigen::Index r = 0; r < projection_.rows(); ++r) projection_(r, c) = float(gauss(rng) * scale);
}

Eigen::VectorXf ProjectionEncoder::encode(const Image2D& slice) const {
    const Image2D small = resize_bilinear(slice, kEncoderSide);
    double mean = 0.0;
    for (float px : small.pixels) mean += px;
    mean /= double(kEncoderInputs);
    double var = 0.0;
    for (float px : small.pixels) var += (px - mean) * (px - mean);
    var /= double(kEncoderInputs);
    const double sd = std::sqrt(var);

    Eigen::VectorXf standardized(static_cast<Eigen::Index>(kEncoderInputs));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
        standardized.setZero();  // constant slice
    } else {
        for (std::size_t i = 0; i < kEncoderInputs; ++i) standardized[Eigen::Index(i)] = float((small.pixels[i] - mean) / sd);
    }
    return projection_.transpose() * standardized;
}

FeatureMatrix ProjectionEncoder::encode(const SliceStack& stack) const {
    if (stack.size() == 0) throw ArgumentError("cannot encode an empty slice stack");
    FeatureMatrix features;
    features.source = FeatureSource::builtin;
    features.rows.resize(Eigen::Index(stack.size()), dim());
    for (std::size_t i = 0; i < stack.size(); ++i) {
        features.rows.row(Eigen::Index(i)) = encode(stack.slices[i]).transpose();
    }
    features.slice_manifest_hash = stack_hash(stack);
    return features;
}

FeatureMatrix encode_builtin(const SliceStack& stack, Eigen::Index dim, std::uint64_t seed) {
    return ProjectionEncoder(dim, seed).encode(stack);
}

static_assert(std::endian::native == std::endian::little, "FVEC I/O assumes a little-endian host");

void write_fvec(std::ostream& out, const FeatureMatrix& features) {
    const std::string& hash = features.slice_manifest_hash.empty() ? std::string("-") : features.slice_manifest_hash;
    out << "FVEC " << features.count() << ' ' << features.dim() << ' ' << hash << '\n';
    out.write(reinterpret_cast<const char*>(features.rows.data()),
              std::streamsize(features.rows.size() * Eigen::Index(sizeof(float))));
    if (!out) throw IoError("failed to write FVEC data");
}

FeatureMatrix read_fvec(std::istream& in, Eigen::Index expected_rows) {
    std::string header;
    if (!std::getline(in, header)) throw FormatError("FVEC: missing header");
    std::istringstream hs(header);
    std::string magic, hash, extra;
    long long rows = -1, dim = -1;
    if (!(hs >> magic >> rows >> dim >> hash) || magic != "FVEC" || rows < 0 || dim < 1 || (hs >> extra)) {
        throw FormatError("FVEC: malformed header: " + header);
    }
    if (expected_rows >= 0 && rows != expected_rows) {
        throw ShapeError("FVEC: row count mismatch: file has " + std::to_string(rows) + " rows, expected " +
                          std::to_string(expected_rows));
    }
    FeatureMatrix features;
    features.source = FeatureSource::external;
    features.slice_manifest_hash = hash;
    features.rows.resize(rows, dim);
    const auto bytes = std::streamsize(rows * dim * Eigen::Index(sizeof(float)));
    in.read(reinterpret_cast<char*>(features.rows.data()), bytes);
    if (in.gcount() != bytes) throw FormatError("FVEC: data truncated");
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!features.rows.row(r).allFinite()) {
            throw NumericError("FVEC: non-finite value in row " + std::to_string(r));
        }
    }
    return features;
}

void save_fvec(const std::string& path, const FeatureMatrix& features) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_fvec(out, features);
}

FeatureMatrix load_external(const std::string& path, Eigen::Index expected_rows) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_fvec(in, expected_rows);
}

}  // namespace viewgraph
