#include "chmkit/config.hpp"

#include "chmkit/error.hpp"
#include "chmkit/util.hpp"

#include <sstream>

namespace chmkit {

namespace {

std::string trim(const std::string& s)
{
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos)
        return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

} // namespace

Config Config::parse(const std::string& text)
{
    Config cfg;
    std::istringstream stream(text);
    std::string line;
    long long line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        const std::string trimmed = trim(line);
        if (trimmed.empty())
            continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line is not 'key = value'", line_no, true);
        const std::string key = trim(trimmed.substr(0, eq));
        const std::string value = trim(trimmed.substr(eq + 1));
        if (key.empty())
            throw ParseError("config line has an empty key", line_no, true);
        if (cfg.entries_.count(key))
            throw ParseError("duplicate config key '" + key + "'", line_no, true);
        cfg.entries_[key] = value;
    }
    return cfg;
}

std::string Config::get_string(const std::string& key) const
{
    const auto it = entries_.find(key);
    if (it == entries_.end())
        throw InputError("missing required config key '" + key + "'");
    touched_[key] = true;
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const
{
    const auto it = entries_.find(key);
    if (it == entries_.end())
        return fallback;
    touched_[key] = true;
    return it->second;
}

double Config::get_double(const std::string& key, double fallback) const
{
    const auto it = entries_.find(key);
    if (it == entries_.end())
        return fallback;
    touched_[key] = true;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size())
            throw std::invalid_argument(it->second);
        return v;
    } catch (const std::logic_error&) {
        throw InputError("config key '" + key + "' is not a number: " + it->second);
    }
}

long long Config::get_int(const std::string& key, long long fallback) const
{
    const auto it = entries_.find(key);
    if (it == entries_.end())
        return fallback;
    touched_[key] = true;
    try {
        std::size_t used = 0;
        const long long v = std::stoll(it->second, &used);
        if (used != it->second.size())
            throw std::invalid_argument(it->second);
        return v;
    } catch (const std::logic_error&) {
        throw InputError("config key '" + key + "' is not an integer: " + it->second);
    }
}

std::map<std::string, std::string> Config::unused() const
{
    std::map<std::string, std::string> out;
    for (const auto& [key, value] : entries_)
        if (!touched_.count(key))
            out[key] = value;
    return out;
}

std::string Config::canonical_text() const
{
    std::string out;
    for (const auto& [key, value] : entries_)
        out += key + " = " + value + "\n";
    return out;
}

std::uint64_t Config::hash() const
{
    return fnv1a64(canonical_text());
}

} // namespace chmkit
