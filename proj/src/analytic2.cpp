#include "psl/analytic2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psl/csv.hpp"

// All coordinates here are Bloch-ball coordinates (unit radius): the
// normalized coherence vector of the generic code is s_bloch / sqrt(2), and
// purities p_o, p_d are expressed in the same squared-Bloch units.

namespace psl::analytic2 {

namespace {

constexpr real nan_value = std::numeric_limits<real>::quiet_NaN();

real scale(const TwoLevelParams& p) { return std::max({1.0, p.gamma_plus, p.Gamma}); }

} // namespace

void TwoLevelParams::validate() const
{
    if (!std::isfinite(gamma_plus) || !std::isfinite(gamma_minus) || !std::isfinite(Gamma))
        throw Error(ErrorCode::invalid_rates, "two-level rates must be finite");
    if (gamma_plus < 0.0)
        throw Error(ErrorCode::invalid_rates, "gamma_+ must be non-negative");
    if (std::abs(gamma_minus) > gamma_plus * (1.0 + 1e-14))
        throw Error(ErrorCode::invalid_rates, "|gamma_-| must not exceed gamma_+");
    if (Gamma < 0.5 * gamma_plus * (1.0 - 1e-14))
        throw Error(ErrorCode::invalid_rates, "Gamma must be at least gamma_+ / 2");
}

TwoLevelParams TwoLevelParams::from_spec(const RelaxationSpec& spec)
{
    if (spec.n_levels() != 2)
        throw Error(ErrorCode::unsupported_configuration, "two-level parameters need N = 2");
    TwoLevelParams p;
    p.gamma_plus = spec.gamma(0, 1) + spec.gamma(1, 0);
    p.gamma_minus = spec.gamma(0, 1) - spec.gamma(1, 0);
    p.Gamma = spec.effective_dephasing(0, 1);
    return p;
}

RelaxationSpec TwoLevelParams::to_spec() const
{
    validate();
    Matrix g = Matrix::Zero(2, 2);
    g(0, 1) = std::max(0.0, 0.5 * (gamma_plus + gamma_minus));
    g(1, 0) = std::max(0.0, 0.5 * (gamma_plus - gamma_minus));
    return RelaxationSpec::with_uniform_dephasing(g, Gamma);
}

real TwoLevelParams::equilibrium_s3() const
{
    if (gamma_plus == 0.0)
        throw Error(ErrorCode::domain, "no unique equilibrium without population relaxation");
    return gamma_minus / gamma_plus;
}

MagicPlane magic_plane(const TwoLevelParams& params)
{
    params.validate();
    if (params.gamma_minus == 0.0)
        return {0.0, true}; // every Gamma puts the plane on the equator
    const real gap = params.Gamma - params.gamma_plus;
    if (std::abs(gap) <= 1e-14 * scale(params))
        throw Error(ErrorCode::plane_at_infinity, "Gamma = gamma_+ puts the magic plane at infinity");
    MagicPlane plane;
    plane.s3_m = -params.gamma_minus / (2.0 * gap);
    plane.in_ball = std::abs(plane.s3_m) <= 1.0;
    return plane;
}

namespace {

void check_t_o_domain(const TwoLevelParams& params, real p_o_initial)
{
    params.validate();
    if (params.gamma_minus == 0.0)
        throw Error(ErrorCode::no_crossing, "gamma_- = 0 gives lambda = 0; p_o cannot reach zero");
    if (!(params.Gamma > 0.5 * params.gamma_plus))
        throw Error(ErrorCode::domain, "t_o needs Gamma > gamma_+ / 2");
    if (std::abs(params.Gamma - params.gamma_plus) <= 1e-14 * scale(params))
        throw Error(ErrorCode::plane_at_infinity, "Gamma = gamma_+ puts the magic plane at infinity");
    if (p_o_initial < 0.0)
        throw Error(ErrorCode::domain, "p_o(0) must be non-negative");
}

// Gamma p_o(0) / (-lambda) with -lambda = gamma_-^2 (2 Gamma - gamma_+) / (4 (Gamma - gamma_+)^2)
real t_o_log_argument(const TwoLevelParams& params, real p_o_initial, real factor)
{
    const real g = params.Gamma;
    const real gp = params.gamma_plus;
    const real gm = params.gamma_minus;
    return factor * p_o_initial * g * (g - gp) * (g - gp) / (gm * gm * (2.0 * g - gp));
}

} // namespace

real t_o_closed(const TwoLevelParams& params, real p_o_initial)
{
    check_t_o_domain(params, p_o_initial);
    return std::log1p(t_o_log_argument(params, p_o_initial, 4.0)) / (2.0 * params.Gamma);
}

real t_o_closed_printed(const TwoLevelParams& params, real p_o_initial)
{
    check_t_o_domain(params, p_o_initial);
    return std::log1p(t_o_log_argument(params, p_o_initial, 2.0)) / (2.0 * params.Gamma);
}

real p_o_from_equilibrium(const TwoLevelParams& params)
{
    const real se = params.equilibrium_s3();
    const real sm = magic_plane(params).s3_m;
    return se * se - sm * sm;
}

real t_d_closed(const TwoLevelParams& params)
{
    params.validate();
    if (!(params.Gamma > params.gamma_plus))
        throw Error(ErrorCode::domain, "t_d needs Gamma > gamma_+");
    const real g = params.Gamma;
    const real gp = params.gamma_plus;
    if (gp == 0.0)
        return 0.0; // the magic plane is the equator; nothing left to relax
    return std::log((2.0 * g - gp) / (2.0 * (g - gp))) / gp;
}

real mu_closed(const TwoLevelParams& params, real t)
{
    params.validate();
    const real g = params.Gamma;
    const real gp = params.gamma_plus;
    if (gp == 0.0) {
        // dmu/dt = 2 mu^2
        const real den = 1.0 - 2.0 * g * t;
        if (!(den > 0.0))
            throw Error(ErrorCode::divergence, "mu diverges at t_d = " + format_real(0.5 / g));
        return g / den;
    }
    const real e = std::exp(gp * t);
    const real den = (2.0 * g - gp) - 2.0 * (g - gp) * e;
    if (g > gp && !(den > 0.0))
        throw Error(ErrorCode::divergence,
                    "mu diverges at t_d = " + format_real(t_d_closed(params)));
    return (gp * (2.0 * g - gp) - gp * (g - gp) * e) / den;
}

SynthesizedTrajectory synthesize_trajectory(const TwoLevelParams& params, int samples,
                                            const SynthesisOptions& options)
{
    params.validate();
    if (!(params.Gamma > params.gamma_plus))
        throw Error(ErrorCode::domain, "trajectory synthesis needs Gamma > gamma_+");
    if (samples < 4)
        throw Error(ErrorCode::usage, "need at least 4 samples");

    SynthesizedTrajectory out;
    const real ze = params.equilibrium_s3();
    if (ze == 0.0)
        return out; // already at the centre of the ball

    const real g = params.Gamma;
    const real gp = params.gamma_plus;
    const real gm = params.gamma_minus;
    const real zm = magic_plane(params).s3_m;
    const real radius = std::abs(ze);
    if (std::abs(zm) > radius)
        throw Error(ErrorCode::domain, "the magic plane does not meet the sphere through the equilibrium point");

    const real p_o0 = ze * ze - zm * zm;
    const real lambda = gm * zm - gp * zm * zm;
    out.t_o = t_o_closed(params, p_o0);
    out.t_d = t_d_closed(params);

    // segment 1: rotation about the s_2 axis from polar angle theta0 to theta1
    const real theta0 = ze > 0.0 ? 0.0 : M_PI;
    const real theta1 = std::acos(std::clamp(zm / radius, -1.0, 1.0));
    if (options.render_fast_rotation) {
        const real amp = options.fast_rotation_factor * std::max({gp, g, std::abs(gm)});
        const real u2 = theta1 >= theta0 ? amp : -amp;
        out.t_rotation = std::abs(theta1 - theta0) / amp;
        const int n1 = std::max(2, samples / 8);
        for (int i = 0; i <= n1; ++i) {
            const real tau = out.t_rotation * i / n1;
            const real th = theta0 + u2 * tau;
            out.points.push_back({tau, radius * std::sin(th), 0.0, radius * std::cos(th), 0.0, u2, 1});
        }
    } else {
        out.points.push_back({0.0, 0.0, 0.0, ze, nan_value, nan_value, 1});
        out.points.push_back({0.0, radius * std::sin(theta1), 0.0, zm, nan_value, nan_value, 1});
    }

    // segment 2: s_1 = sqrt(p_o(t)) in the plane s_3 = s_3^(m)
    const int n2 = samples / 2;
    const real drive = gm - gp * zm;
    for (int i = 0; i <= n2; ++i) {
        const real tau = out.t_o * i / n2;
        real po = p_o0 * std::exp(-2.0 * g * tau) - lambda / g * std::expm1(-2.0 * g * tau);
        if (i == n2)
            po = 0.0;
        const real s1 = std::sqrt(std::max(0.0, po));
        const real u2 = s1 > 0.0 ? drive / s1 : std::numeric_limits<real>::infinity();
        out.points.push_back({out.t_rotation + tau, s1, 0.0, zm, 0.0, u2, 2});
    }

    // segment 3: free relaxation along the axis
    const int n3 = samples - n2;
    for (int i = 0; i <= n3; ++i) {
        const real tau = out.t_d * i / n3;
        real z = ze + (zm - ze) * std::exp(-gp * tau);
        if (i == n3)
            z = 0.0;
        out.points.push_back({out.t_rotation + out.t_o + tau, 0.0, 0.0, z, 0.0, 0.0, 3});
    }
    return out;
}

void write_magic_plane_csv(std::ostream& out, real gamma_plus, real gamma_minus,
                           const std::vector<real>& gammas)
{
    CsvWriter csv(out, {"gamma", "s3_magic", "in_ball"});
    for (real g : gammas) {
        const TwoLevelParams p{gamma_plus, gamma_minus, g};
        MagicPlane plane{nan_value, false};
        try {
            plane = magic_plane(p);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::plane_at_infinity)
                throw;
        }
        csv.raw_row({format_real(g), format_real(plane.s3_m), plane.in_ball ? "1" : "0"});
    }
}

void write_trajectory_csv(std::ostream& out, const SynthesizedTrajectory& trajectory)
{
    CsvWriter csv(out, {"t", "s1", "s2", "s3", "u1", "u2", "segment"});
    for (const auto& p : trajectory.points)
        csv.raw_row({format_real(p.t), format_real(p.s1), format_real(p.s2), format_real(p.s3),
                     format_real(p.u1), format_real(p.u2), std::to_string(p.segment)});
}

} // namespace psl::analytic2
