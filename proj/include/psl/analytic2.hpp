#pragma once

#include <ostream>
#include <vector>

#include "psl/relaxation.hpp"
#include "psl/types.hpp"

namespace psl::analytic2 {

/// Two-level relaxation in the shorthand gamma_+ = g12 + g21, gamma_- = g12 - g21.
struct TwoLevelParams {
    real gamma_plus = 0.0;
    real gamma_minus = 0.0;
    real Gamma = 0.0;

    /// Throws Error(invalid_rates) unless Gamma >= gamma_+/2 and |gamma_-| <= gamma_+.
    void validate() const;

    static TwoLevelParams from_spec(const RelaxationSpec& spec);
    RelaxationSpec to_spec() const;

    /// Equilibrium height s_3^(e) = gamma_- / gamma_+.
    real equilibrium_s3() const;
};

struct MagicPlane {
    real s3_m = 0.0;
    bool in_ball = false;
};

/// s_3^(m) = -gamma_- / (2 (Gamma - gamma_+)).
MagicPlane magic_plane(const TwoLevelParams& params);

/**
 * Time for p_o to reach zero in the magic plane, from dp_o/dt = -2 Gamma p_o
 * + 2 gamma_- s_3^(m) - 2 gamma_+ (s_3^(m))^2:
 *
 *     t_o = ln(1 + 4 p_o(0) Gamma (Gamma - gamma_+)^2 / (gamma_-^2 (2 Gamma - gamma_+))) / (2 Gamma).
 *
 * p_o is in squared Bloch-ball units.
 */
real t_o_closed(const TwoLevelParams& params, real p_o_initial);

/// The same expression with 2 in place of 4, as commonly printed. It does not
/// solve the purity equation above; kept for comparison only.
real t_o_closed_printed(const TwoLevelParams& params, real p_o_initial);

/// p_o(0) for a start at the equilibrium point rotated onto the magic plane.
real p_o_from_equilibrium(const TwoLevelParams& params);

real t_d_closed(const TwoLevelParams& params);

/// mu(t) on the s_3 axis, mu(0) = Gamma; throws Error(divergence) at or past t_d.
real mu_closed(const TwoLevelParams& params, real t);

struct TrajectoryPoint {
    real t;
    real s1, s2, s3;
    real u1, u2;
    int segment;
};

struct SynthesisOptions {
    /// Render the rotation onto the magic plane as a finite rotation with
    /// amplitude fast_rotation_factor * max rate instead of a zero-duration jump.
    bool render_fast_rotation = false;
    real fast_rotation_factor = 1e3;
};

struct SynthesizedTrajectory {
    std::vector<TrajectoryPoint> points;
    real t_rotation = 0.0;
    real t_o = 0.0;
    real t_d = 0.0;

    real duration() const { return t_rotation + t_o + t_d; }
};

/**
 * Time-optimal path from the equilibrium point to the centre of the Bloch
 * ball: rotation at constant radius onto the magic plane (segment 1), a
 * spiral in the plane with u_2 = (gamma_- - gamma_+ s_3^(m)) / s_1 until
 * s_1 = s_2 = 0 (segment 2), then free relaxation along the s_3 axis to the
 * origin (segment 3). Sampled in closed form.
 */
SynthesizedTrajectory synthesize_trajectory(const TwoLevelParams& params, int samples,
                                            const SynthesisOptions& options = {});

/// Columns gamma,s3_magic,in_ball.
void write_magic_plane_csv(std::ostream& out, real gamma_plus, real gamma_minus,
                           const std::vector<real>& gammas);

/// Columns t,s1,s2,s3,u1,u2,segment.
void write_trajectory_csv(std::ostream& out, const SynthesizedTrajectory& trajectory);

} // namespace psl::analytic2
