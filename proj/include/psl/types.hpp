#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace psl {

using real = double;
using complex = std::complex<double>;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Failure categories raised by the library. The CLI maps every one of them
/// to a nonzero exit code.
enum class ErrorCode {
    invalid_dimension,
    invalid_state,
    invalid_rates,
    stiffness,
    degenerate_magic_subspace,
    unsupported_configuration,
    no_crossing,
    singular_mu_dynamics,
    mu_trajectory,
    stuck_point,
    domain,
    divergence,
    plane_at_infinity,
    diverged_optimization,
    usage,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_dimension: return "invalid dimension";
    case ErrorCode::invalid_state: return "invalid state";
    case ErrorCode::invalid_rates: return "invalid rates";
    case ErrorCode::stiffness: return "stiffness";
    case ErrorCode::degenerate_magic_subspace: return "degenerate magic subspace";
    case ErrorCode::unsupported_configuration: return "unsupported configuration";
    case ErrorCode::no_crossing: return "no crossing";
    case ErrorCode::singular_mu_dynamics: return "singular mu dynamics";
    case ErrorCode::mu_trajectory: return "mu trajectory";
    case ErrorCode::stuck_point: return "stuck point";
    case ErrorCode::domain: return "domain";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::plane_at_infinity: return "plane at infinity";
    case ErrorCode::diverged_optimization: return "diverged optimization";
    case ErrorCode::usage: return "usage";
    }
    return "unknown";
}

} // namespace psl
