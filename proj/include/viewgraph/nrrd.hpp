#pragma once

#include <iosfwd>
#include <string>
#include <variant>

#include "viewgraph/volume.hpp"

namespace viewgraph::nrrd {

// Minimal NRRD subset: 3-D, float or uint8, raw little-endian attached data,
// diagonal space directions. Anything else raises UnsupportedFeature naming
// the offending field.

void write(std::ostream& out, const Volume& v);
void write(std::ostream& out, const Mask& m);

using AnyGrid = std::variant<Volume, Mask>;
AnyGrid read(std::istream& in);

Volume read_volume(std::istream& in);
Mask read_mask(std::istream& in);

void save(const std::string& path, const Volume& v);
void save(const std::string& path, const Mask& m);
Volume load_volume(const std::string& path);
Mask load_mask(const std::string& path);

}  // namespace viewgraph::nrrd
