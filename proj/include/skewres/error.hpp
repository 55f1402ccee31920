#pragma once

#include <stdexcept>
#include <string>

namespace skewres {

/// Error classes map one-to-one onto the CLI exit codes.
enum class ErrorKind { input = 2, numeric = 3, config = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    [[nodiscard]] int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

/// Malformed or inconsistent input data (files, triangles, cell sets).
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

/// Invalid distribution parameters, non-finite chain states.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

/// Invalid model, prior, chain or command configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

}  // namespace skewres
