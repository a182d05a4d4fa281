#pragma once

#include <stdexcept>
#include <string>

namespace srdice {

/// Malformed or inconsistent user configuration (bad field, unknown method).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace srdice
