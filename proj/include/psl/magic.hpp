#pragma once

#include <ostream>
#include <vector>

#include "psl/lindblad_model.hpp"
#include "psl/ode.hpp"

namespace psl::magic {

/**
 * The magic subspace M_o: states whose diagonal coordinates are pinned at
 * s_d^(m) = -(R_d + R_d^T + 2 Gamma I)^{-1} q_d. Along M_o the off-diagonal
 * purity obeys dp_o/dt = -2 Gamma p_o + 2 lambda whatever controls keep the
 * state on the subspace.
 */
struct MagicSubspaceMo {
    int n_levels = 0;
    real gamma = 0.0;
    Vector s_d_m;
    /// lambda = s_d^T q_d + s_d^T (R_d + R_d^T) s_d / 2 at s_d = s_d^(m).
    real lambda = 0.0;
    /// |s_d^(m)|^2 <= 1 - 1/N, i.e. M_o meets the state space.
    bool exists_in_ball = false;
};

MagicSubspaceMo locate_Mo(const LindbladModel& model, real gamma);

/// p_o(t) = p_o(0) e^{-2 Gamma t} + (lambda / Gamma)(1 - e^{-2 Gamma t}).
real purity_along_Mo(const MagicSubspaceMo& mo, real p_o_initial, real t);

/// Time at which p_o reaches zero on M_o. Throws Error(no_crossing) when lambda >= 0.
real time_to_zero_po(const MagicSubspaceMo& mo, real p_o_initial);

struct MuRhs {
    real dmu_dt = 0.0;
    Vector s_d;
    real p_d = 0.0;
};

/// Right-hand side of the Lagrange-multiplier dynamics on M_d together with
/// the extremal diagonal point s_d(mu) = -M^{-1} q_d, M = R_d + R_d^T + 2 mu I.
MuRhs mu_ode_rhs(const LindbladModel& model, real mu);

struct MuSample {
    real t = 0.0;
    real mu = 0.0;
    Vector s_d;
    real p_d = 0.0;
};

struct MuOptions {
    real mu_max = 1e8;
    real pd_floor = 1e-12;
    /// Samples from the end of the trajectory used to extrapolate 1/mu -> 0.
    int extrapolation_points = 4;
    ode::Options ode{1e-12, 1e-16};
};

struct MuTrajectory {
    std::vector<MuSample> samples;
    /// Divergence time of mu (the coherence vector reaches zero).
    real t_d = 0.0;
    /// Time of the last integrated sample, before extrapolation.
    real t_stop = 0.0;
};

/// Integrates dmu/dt from mu(0) = gamma until mu >= mu_max or p_d <= pd_floor,
/// then extrapolates the hitting time of 1/mu = 0 from the tail samples.
MuTrajectory integrate_mu(const LindbladModel& model, real gamma, const MuOptions& options = {});

enum class TmsStatus {
    ok,
    /// lambda >= 0: the off-diagonal purity never reaches zero on M_o.
    no_crossing,
    /// M_o does not intersect the state space.
    outside_ball,
    /// Requested purity is below the purity of the M_o point with s_o = 0.
    below_magic_purity,
};

const char* to_string(TmsStatus status);

struct TmsResult {
    TmsStatus status = TmsStatus::ok;
    MagicSubspaceMo mo;
    real p_o_initial = 0.0;
    real t_o = 0.0;
    real t_d = 0.0;
    real t_ms = 0.0;
};

/// Magic-subspace speed limit from a point of M_o with the given total purity
/// down to the maximally mixed state. Reaching M_o is taken as instantaneous.
TmsResult t_ms(const LindbladModel& model, real gamma, real initial_purity,
               const MuOptions& options = {});

/// ln(Gamma) / Gamma, the large-dephasing limit of t_MS. Requires Gamma > 1.
real asymptotic_t_ms(real gamma);

/// Minimum-norm controls holding the state on M_o:
/// sum_k u_k A_do^(k) s_o = -q_d - R_d s_d^(m).
Vector mo_control_synthesis(const LindbladModel& model, const MagicSubspaceMo& mo,
                            const CoherenceState& state);

/// Pure state with real non-negative amplitudes whose populations sit on M_o.
CoherenceState pure_state_on_Mo(const LindbladModel& model, const MagicSubspaceMo& mo);

void write_mu_trajectory_csv(std::ostream& out, const MuTrajectory& trajectory);

struct TmsSweepRow {
    real gamma;
    TmsResult result;
};

/// Columns gamma,t_o,t_d,t_ms,asymptotic; rows without a crossing carry nan times.
void write_tms_sweep_csv(std::ostream& out, const std::vector<TmsSweepRow>& rows);

} // namespace psl::magic
