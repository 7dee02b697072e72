#pragma once

#include <stdexcept>
#include <string>

namespace mgms {

// Exit-code mapping used by the CLI: ConfigError / InputError / IndexError -> 1,
// NumericalError -> 2.

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

} // namespace mgms
