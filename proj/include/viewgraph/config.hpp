#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace viewgraph {

/// Declared key with its default and help text.
struct ConfigKey {
    std::string name;
    std::string default_value;
    std::string help;
};

/// `key = value` configuration, one entry per line, `#` starts a comment.
/// Only declared keys are accepted; every key has a default. The parsed
/// source text is kept so runs can echo it into their outputs.
class RunConfig {
public:
    explicit RunConfig(std::vector<ConfigKey> keys);

    void parse(std::istream& in, const std::string& origin = "<config>");
    void parse_file(const std::string& path);
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<std::string> get_list(const std::string& key) const;

    const std::vector<ConfigKey>& keys() const noexcept { return keys_; }
    const std::string& source_text() const noexcept { return source_; }
    /// Every key with its effective value, in declaration order.
    std::string effective() const;
    std::string help() const;

private:
    std::vector<ConfigKey> keys_;
    std::map<std::string, std::string> values_;
    std::string source_;
};

}  // namespace viewgraph
