#ifndef CHMKIT_UTIL_HPP
#define CHMKIT_UTIL_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace chmkit {

/// Global cap on worker threads (1 = fully sequential). Set once by the CLI
/// before any work starts; not synchronized against concurrent mutation.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Splits [0, count) into contiguous chunks and runs body(begin, end) on up
/// to max_threads() workers. Callers must arrange output so the result is
/// bit-identical to the sequential run (disjoint writes, no reductions).
void parallel_chunks(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

/// FNV-1a 64-bit. Used for config hashes and input checksums in run manifests.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes);
std::string to_hex(std::uint64_t v);

/// Shortest decimal that round-trips a float (max_digits10 = 9).
std::string format_float(float v);
std::string format_double(double v);

} // namespace chmkit

#endif
