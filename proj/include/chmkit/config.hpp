#ifndef CHMKIT_CONFIG_HPP
#define CHMKIT_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace chmkit {

/// Flat key-value configuration: one "section.key = value" per line,
/// '#' comments, blank lines allowed.
class Config {
public:
    static Config parse(const std::string& text);

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;

    /// Keys never read back; used to reject typos after configuration.
    std::map<std::string, std::string> unused() const;

    /// Canonical serialization (sorted keys) used for the config hash.
    std::string canonical_text() const;
    std::uint64_t hash() const;

private:
    std::map<std::string, std::string> entries_;
    mutable std::map<std::string, bool> touched_;
};

} // namespace chmkit

#endif
