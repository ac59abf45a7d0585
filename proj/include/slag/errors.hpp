#pragma once

#include <stdexcept>
#include <string>

namespace slag {

// Bad arguments (dimension mismatch, out-of-range parameters, malformed input).
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Object is not in the state required by the operation (missing derivatives, ...).
class StateError : public std::logic_error {
public:
    explicit StateError(const std::string& msg) : std::logic_error(msg) {}
};

// Numerical diagnostic failures carrying the offending magnitude.
class DiagnosticError : public std::runtime_error {
public:
    DiagnosticError(const std::string& msg, double magnitude)
        : std::runtime_error(msg + " (magnitude " + std::to_string(magnitude) + ")"),
          magnitude_(magnitude) {}
    double magnitude() const { return magnitude_; }

private:
    double magnitude_ = 0.0;
};

class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Mellin pole hit: carries (s, p) of the offending term.
class PoleError : public std::runtime_error {
public:
    PoleError(double s, int p)
        : std::runtime_error("pole at i*zeta + s = 0 (s=" + std::to_string(s) +
                             ", p=" + std::to_string(p) + ")"),
          s_(s), p_(p) {}
    double s() const { return s_; }
    int p() const { return p_; }

private:
    double s_;
    int p_;
};

} // namespace slag
