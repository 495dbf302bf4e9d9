#include "viewgraph/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "viewgraph/error.hpp"

namespace viewgraph {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig::RunConfig(std::vector<ConfigKey> keys) : keys_(std::move(keys)) {
    for (const auto& k : keys_) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    it->second = value;
}

void RunConfig::parse(std::istream& in, const std::string& origin) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        source_ += line + '\n';
        const std::string body = trim(line.substr(0, line.find('#')));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(body.substr(0, eq));
        if (!values_.count(key)) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown config key: " + key);
        }
        values_[key] = trim(body.substr(eq + 1));
    }
}

void RunConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    parse(in, path);
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not a number: " + v);
    }
}

long long RunConfig::get_int(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an integer: " + v);
    }
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    const long long x = get_int(key);
    if (x < 0) throw ConfigError("config key " + key + ": must be non-negative");
    return std::uint64_t(x);
}

bool RunConfig::get_bool(const std::string& key) const {
    std::string v = get(key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key " + key + ": not a boolean: " + v);
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(get(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string RunConfig::effective() const {
    std::ostringstream os;
    for (const auto& k : keys_) os << k.name << " = " << values_.at(k.name) << '\n';
    return os.str();
}

std::string RunConfig::help() const {
    std::ostringstream os;
    std::size_t width = 0;
    for (const auto& k : keys_) width = std::max(width, k.name.size());
    for (const auto& k : keys_) {
        os << "  " << k.name << std::string(width - k.name.size() + 2, ' ') << k.help << " (default: "
           << (k.default_value.empty() ? "\"\"" : k.default_value) << ")\n";
    }
    return os.str();
}

}  // namespace viewgraph
