#ifndef RESPWAVE_ERRORS_HPP
#define RESPWAVE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace respwave {

// Maps to CLI exit code 2.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite losses and similar runtime numerical failures. Exit code 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// File-system and format failures. Exit code 4.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace respwave

#endif
