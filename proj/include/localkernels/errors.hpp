#ifndef LOCALKERNELS_ERRORS_HPP
#define LOCALKERNELS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace localkernels {

/// Base class for all errors thrown by this library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid inputs: precondition violations, malformed arguments, failed thresholds.
class validation_error : public error {
public:
    explicit validation_error(const std::string& what) : error(what) {}
};

/// File system and parsing failures.
class io_error : public error {
public:
    explicit io_error(const std::string& what) : error(what) {}
};

/// Numerical failures: eigensolver non-convergence, rank deficiency, non-SPD matrices.
class numerical_error : public error {
public:
    explicit numerical_error(const std::string& what) : error(what) {}
};

} // namespace localkernels

#endif
