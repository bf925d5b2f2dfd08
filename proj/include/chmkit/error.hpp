#ifndef CHMKIT_ERROR_HPP
#define CHMKIT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace chmkit {

/// Raised for malformed inputs, violated preconditions, and bad file
/// contents. The CLI maps these to exit code 1; anything else is an
/// internal error (exit code 2).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Input error tied to a location in a file (byte offset or line number).
class ParseError : public InputError {
public:
    ParseError(const std::string& what, long long where, bool is_line = false)
        : InputError(what + (is_line ? " at line " : " at offset ") + std::to_string(where)),
          offset_(where), is_line_(is_line) {}

    long long offset() const { return offset_; }
    bool is_line() const { return is_line_; }

private:
    long long offset_;
    bool is_line_;
};

} // namespace chmkit

#endif
