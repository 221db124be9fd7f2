#ifndef HEXMAP_ERRORS_HPP
#define HEXMAP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hexmap {

// Bad user input: malformed target, unknown field, inverted port range, ...
// The CLI maps this to exit code 1 (nothing has been sent yet).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Failure once the scan is underway (socket died, sink unwritable).
// The CLI maps this to exit code 2; partial results are flushed.
class RuntimeFailure : public std::runtime_error {
public:
    explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

} // namespace hexmap

#endif
