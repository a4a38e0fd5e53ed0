#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "psl/lindblad_model.hpp"
#include "psl/ode.hpp"

namespace psl {

/// Piecewise-constant controls: segment i holds amplitudes.row(i) on
/// [breakpoints[i], breakpoints[i+1]).
struct ControlTable {
    std::vector<real> breakpoints;
    Matrix amplitudes; // segments x n_controls

    static ControlTable zeros(int n_controls, real t_final);
    static ControlTable uniform(const Matrix& amplitudes, real t_final);

    int n_segments() const { return static_cast<int>(amplitudes.rows()); }
    int n_controls() const { return static_cast<int>(amplitudes.cols()); }
    /// Index of the segment containing t (clamped to the table).
    int segment_at(real t) const;
};

struct PropagateOptions {
    ode::Options ode{};
    /// Output times; empty means 101 equally spaced samples on [0, t_final].
    std::vector<real> sample_times;
    /// Smallest tolerated eigenvalue of rho(t) before a warning is recorded.
    real positivity_tol = 1e-8;
};

struct Trajectory {
    int n_levels = 0;
    std::vector<real> t;
    std::vector<Vector> s;
    /// Positivity excursions found while sampling; never fatal.
    std::vector<std::string> warnings;

    CoherenceState state(std::size_t i) const { return CoherenceState(n_levels, s.at(i)); }
};

/**
 * Integrates ds/dt = q + (R + sum_k u_k(t) A^(k)) s from t = 0 to t_final.
 * Each control segment is integrated separately so the control jumps never
 * fall inside a step. Default tolerances are rtol 1e-9 / atol 1e-12 with a
 * first step of 1e-4 over the largest relaxation rate.
 */
Trajectory propagate(const LindbladModel& model, const CoherenceState& initial,
                     const ControlTable& controls, real t_final,
                     const PropagateOptions& options = {});

/// CSV with header t,s_1,...,s_{N^2-1},purity.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

} // namespace psl
