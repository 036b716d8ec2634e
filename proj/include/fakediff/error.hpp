#pragma once

#include <stdexcept>
#include <string>

namespace fakediff {

/// Argument outside the mathematical domain of an operation (t <= 0, x <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Adaptive quadrature did not meet its tolerance within the refinement budget.
class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ValidationCode {
    invalid_k,            // K outside (0,1)
    c_out_of_range,       // c not in (0, K)
    clock_rate_too_large, // a_dot >= 1 somewhere on the audit grid
    k_estimate_too_small, // grid infimum of f_t / f_a(t) is <= c
    clock_not_monotone,   // a not strictly increasing, a(0) != 0 or a(t) >= t
    degenerate_grid,
    bad_config,
};

inline const char* to_string(ValidationCode code) {
    switch (code) {
    case ValidationCode::invalid_k: return "invalid_k";
    case ValidationCode::c_out_of_range: return "c_out_of_range";
    case ValidationCode::clock_rate_too_large: return "clock_rate_too_large";
    case ValidationCode::k_estimate_too_small: return "k_estimate_too_small";
    case ValidationCode::clock_not_monotone: return "clock_not_monotone";
    case ValidationCode::degenerate_grid: return "degenerate_grid";
    case ValidationCode::bad_config: return "bad_config";
    }
    return "unknown";
}

class ValidationError : public std::invalid_argument {
public:
    ValidationError(ValidationCode code, const std::string& what)
        : std::invalid_argument(std::string(to_string(code)) + ": " + what), code_(code) {}

    ValidationCode code() const noexcept { return code_; }

private:
    ValidationCode code_;
};

/// Monte Carlo failures: unsupported law, exploding path, exhausted step budget.
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fakediff
