#include "chmkit/util.hpp"

#include <algorithm>
#include <cstdio>

namespace chmkit {

namespace {
unsigned g_max_threads = 1;
}

void set_max_threads(unsigned n) { g_max_threads = n == 0 ? 1 : n; }
unsigned max_threads() { return g_max_threads; }

void parallel_chunks(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body)
{
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(g_max_threads, count == 0 ? 1 : count));
    if (workers <= 1) {
        body(0, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = static_cast<std::size_t>(w) * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end)
            break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& t : pool)
        t.join();
}

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes)
{
    return fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string to_hex(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string format_float(float v)
{
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

std::string format_double(double v)
{
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace chmkit
