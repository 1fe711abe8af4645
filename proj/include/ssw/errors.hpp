#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssw {

/// Failure categories surfaced by the library. The CLI maps all of them to
/// exit status 2 (usage/validation error).
enum class Errc {
    out_of_range,      ///< a scalar parameter violates its documented bounds
    out_of_region,     ///< coupling parameter r outside [max{0,p+q-1}, min{p,q}]
    resource_limit,    ///< discretization would exceed the atom budget
    not_normalized,    ///< discrete measure/coupling mass differs from 1 beyond tolerance
    domain_error,      ///< formula input outside its mathematical domain
    pole_evaluation,   ///< evaluation at (or numerically on top of) a pole
    degenerate_input,  ///< input makes the requested quantity undefined (e.g. p == q)
    degenerate_system, ///< structurally invalid system (non-positive denominator)
};

constexpr std::string_view to_string(Errc code) {
    switch (code) {
        case Errc::out_of_range: return "OutOfRange";
        case Errc::out_of_region: return "OutOfRegion";
        case Errc::resource_limit: return "ResourceLimit";
        case Errc::not_normalized: return "NotNormalized";
        case Errc::domain_error: return "DomainError";
        case Errc::pole_evaluation: return "PoleEvaluation";
        case Errc::degenerate_input: return "DegenerateInput";
        case Errc::degenerate_system: return "DegenerateSystem";
    }
    return "UnknownError";
}

/// Library-wide exception. `parameter()` names the offending input so front
/// ends can emit a one-line diagnostic.
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string parameter, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + "(" + parameter + "): " + what),
          code_(code),
          parameter_(std::move(parameter)) {}

    Errc code() const noexcept { return code_; }
    const std::string& parameter() const noexcept { return parameter_; }

private:
    Errc code_;
    std::string parameter_;
};

} // namespace ssw
