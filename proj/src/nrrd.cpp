#include "viewgraph/nrrd.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "viewgraph/error.hpp"

namespace viewgraph::nrrd {

static_assert(std::endian::native == std::endian::little, "raw NRRD I/O assumes a little-endian host");

namespace {

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::string fmt_vec(const Vec3& v) {
    std::ostringstream os;
    os << std::setprecision(17) << '(' << v.x() << ',' << v.y() << ',' << v.z() << ')';
    return os.str();
}

template <typename T>
void write_grid(std::ostream& out, const Grid<T>& grid, const char* type) {
    const Geometry& g = grid.geometry();
    std::ostringstream header;
    header << "NRRD0004\n"
           << "type: " << type << '\n'
           << "dimension: 3\n"
           << "space: right-anterior-superior\n"
           << "sizes: " << g.dims[0] << ' ' << g.dims[1] << ' ' << g.dims[2] << '\n'
           << "space directions: " << fmt_vec(Vec3(g.spacing.x(), 0, 0)) << ' '
           << fmt_vec(Vec3(0, g.spacing.y(), 0)) << ' ' << fmt_vec(Vec3(0, 0, g.spacing.z())) << '\n'
           << "space origin: " << fmt_vec(g.origin) << '\n'
           << "endian: little\n"
           << "encoding: raw\n\n";
    out << header.str();
    const auto bytes = std::as_bytes(grid.data());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("failed to write NRRD data");
}

std::vector<Vec3> parse_vectors(const std::string& text, const std::string& field) {
    std::vector<Vec3> result;
    std::size_t pos = 0;
    while ((pos = text.find('(', pos)) != std::string::npos) {
        const auto end = text.find(')', pos);
        if (end == std::string::npos) throw FormatError("malformed vector in " + field);
        std::string inner = text.substr(pos + 1, end - pos - 1);
        std::replace(inner.begin(), inner.end(), ',', ' ');
        std::istringstream is(inner);
        double x, y, z;
        if (!(is >> x >> y >> z)) throw FormatError("malformed vector in " + field);
        std::string rest;
        if (is >> rest) throw FormatError("vector in " + field + " is not 3-dimensional");
        result.emplace_back(x, y, z);
        pos = end + 1;
    }
    if (text.find("none") != std::string::npos) throw UnsupportedFeature(field + ": none");
    return result;
}

struct Header {
    std::string type;
    Geometry geometry;
};

Header parse_header(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("NRRD000", 0) != 0) {
        throw FormatError("missing NRRD magic");
    }
    std::map<std::string, std::string> fields;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) break;
        if (line.front() == '#') continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos) throw FormatError("malformed header line: " + line);
        std::string key = trim(line.substr(0, colon));
        std::string value = line.substr(colon + 1);
        if (!value.empty() && value.front() == '=') {
            continue;  // key:=value pairs carry free-form metadata
        }
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
        fields[key] = trim(value);
    }

    static const char* const known[] = {"type", "dimension", "sizes", "space", "space dimension",
                                        "space directions", "space origin", "endian", "encoding",
                                        "content", "kinds", "space units"};
    for (const auto& [key, value] : fields) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
            throw UnsupportedFeature(key);
        }
    }
    auto require = [&](const char* key) -> const std::string& {
        auto it = fields.find(key);
        if (it == fields.end()) throw FormatError(std::string("missing required field: ") + key);
        return it->second;
    };

    Header h;
    const std::string& type = require("type");
    if (type == "float" || type == "float32") {
        h.type = "float";
    } else if (type == "uint8" || type == "uchar" || type == "unsigned char" || type == "uint8_t") {
        h.type = "uint8";
    } else {
        throw UnsupportedFeature("type: " + type);
    }
    if (trim(require("dimension")) != "3") throw UnsupportedFeature("dimension: " + require("dimension"));
    const std::string& encoding = require("encoding");
    if (encoding != "raw") throw UnsupportedFeature("encoding: " + encoding);
    if (auto it = fields.find("endian"); it != fields.end() && it->second != "little") {
        throw UnsupportedFeature("endian: " + it->second);
    }
    if (auto it = fields.find("space dimension"); it != fields.end() && trim(it->second) != "3") {
        throw UnsupportedFeature("space dimension: " + it->second);
    }

    std::istringstream sizes(require("sizes"));
    for (auto& d : h.geometry.dims) {
        long long value = 0;
        if (!(sizes >> value) || value <= 0) throw FormatError("malformed sizes");
        d = std::size_t(value);
    }
    if (auto it = fields.find("space directions"); it != fields.end()) {
        const auto dirs = parse_vectors(it->second, "space directions");
        if (dirs.size() != 3) throw FormatError("space directions must list three vectors");
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                if (a != b && dirs[a][b] != 0.0) throw UnsupportedFeature("space directions: non-diagonal");
            }
            if (!(dirs[a][a] > 0.0)) throw UnsupportedFeature("space directions: non-positive diagonal");
            h.geometry.spacing[a] = dirs[a][a];
        }
    }
    if (auto it = fields.find("space origin"); it != fields.end()) {
        const auto origin = parse_vectors(it->second, "space origin");
        if (origin.size() != 1) throw FormatError("space origin must be one vector");
        h.geometry.origin = origin[0];
    }
    h.geometry.validate();
    return h;
}

template <typename T>
Grid<T> read_payload(std::istream& in, const Geometry& g) {
    std::vector<T> data(g.voxel_count());
    in.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size() * sizeof(T)));
    if (in.gcount() != std::streamsize(data.size() * sizeof(T))) {
        throw FormatError("NRRD data is truncated");
    }
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::all_of(data.begin(), data.end(), [](T x) { return std::isfinite(x); })) {
            throw NumericError("NRRD volume contains non-finite values");
        }
    }
    return Grid<T>(g, std::move(data));
}

}  // namespace

void write(std::ostream& out, const Volume& v) { write_grid(out, v, "float"); }
void write(std::ostream& out, const Mask& m) { write_grid(out, m, "uint8"); }

AnyGrid read(std::istream& in) {
    const Header h = parse_header(in);
    if (h.type == "float") return read_payload<float>(in, h.geometry);
    return read_payload<std::uint8_t>(in, h.geometry);
}

Volume read_volume(std::istream& in) {
    AnyGrid any = read(in);
    if (auto* v = std::get_if<Volume>(&any)) return std::move(*v);
    const Mask& m = std::get<Mask>(any);
    std::vector<float> data(m.data().begin(), m.data().end());
    return Volume(m.geometry(), std::move(data));
}

Mask read_mask(std::istream& in) {
    AnyGrid any = read(in);
    if (auto* m = std::get_if<Mask>(&any)) return std::move(*m);
    const Volume& v = std::get<Volume>(any);
    std::vector<std::uint8_t> data(v.data().size());
    std::transform(v.data().begin(), v.data().end(), data.begin(),
                   [](float x) { return std::uint8_t(x != 0.0f ? 1 : 0); });
    return Mask(v.geometry(), std::move(data));
}

namespace {
std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}
std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return in;
}
}  // namespace

void save(const std::string& path, const Volume& v) {
    auto out = open_out(path);
    write(out, v);
}
void save(const std::string& path, const Mask& m) {
    auto out = open_out(path);
    write(out, m);
}
Volume load_volume(const std::string& path) {
    auto in = open_in(path);
    return read_volume(in);
}
Mask load_mask(const std::string& path) {
    auto in = open_in(path);
    return read_mask(in);
}

}  // namespace viewgraph::nrrd
