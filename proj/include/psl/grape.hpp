#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "psl/lindblad_model.hpp"

namespace psl::grape {

/**
 * Piecewise-constant control problem: minimize J = |s(t_f)|^2 over the
 * segment amplitudes. Each segment is propagated exactly by the matrix
 * exponential of the affine generator [[R + sum_k u_k A^(k), q], [0, 0]].
 */
struct PulseProblem {
    const LindbladModel* model = nullptr;
    int n_segments = 200;
    real t_final = 1.0;
    CoherenceState initial{2, Vector::Zero(3)};
    /// Amplitudes are clamped to +-amplitude_cap_factor * max rate.
    real amplitude_cap_factor = 1e4;

    real amplitude_cap() const;
    void validate() const;
};

/// n_segments x n_controls amplitudes.
using Pulse = Matrix;

real cost(const PulseProblem& problem, const Pulse& pulse);

struct CostGradient {
    real cost = 0.0;
    Pulse gradient;
};

/// Cost and its exact gradient by backward propagation of the costate.
CostGradient cost_and_gradient(const PulseProblem& problem, const Pulse& pulse);

/// Final coherence vector.
Vector final_state(const PulseProblem& problem, const Pulse& pulse);

struct IterateRecord {
    int restart = 0;
    int iteration = 0;
    real cost = 0.0;
    real grad_norm = 0.0;
    real step = 0.0;
};

struct OptimizeOptions {
    int max_iters = 1000;
    real grad_tol = 1e-10;
    real cost_tol = 1e-12;
    int restarts = 8;
    std::uint64_t seed = 1;
    /// Standard deviation of random initial amplitudes, in units of the max rate.
    real init_scale = 1.5;
    int memory = 10;
    /// Used as restart 0 when present.
    std::optional<Pulse> warm_start;
    /// Worker threads for independent restarts; 0 picks the hardware count.
    unsigned threads = 0;
};

struct OptimizeResult {
    Pulse controls;
    real final_cost = 0.0;
    int iterations = 0;
    int restart_index = 0;
    std::vector<IterateRecord> log;
};

class DivergedOptimization : public Error {
public:
    DivergedOptimization(const std::string& what, std::vector<IterateRecord> log)
        : Error(ErrorCode::diverged_optimization, what), log_(std::move(log))
    {}
    const std::vector<IterateRecord>& log() const noexcept { return log_; }

private:
    std::vector<IterateRecord> log_;
};

/// Multi-start L-BFGS with a strong Wolfe line search; returns the best restart.
OptimizeResult optimize_pulse(const PulseProblem& problem, const OptimizeOptions& options = {});

/// Resamples a pulse of duration t_old onto n_segments segments of duration
/// t_new; times past t_old get zero amplitude.
Pulse extend_pulse(const Pulse& pulse, real t_old, real t_new, int n_segments);

struct SweepRow {
    real t_final = 0.0;
    real best_cost = 0.0;
    int iterations = 0;
    int restart_index = 0;
};

struct SweepOptions {
    OptimizeOptions optimize;
    int n_segments = 200;
    real amplitude_cap_factor = 1e4;
    /// Saturated when best cost <= max(threshold_factor * floor, cost_tol).
    real threshold_factor = 10.0;
    /// Inconclusive when the floor itself exceeds this level.
    real floor_limit = 1e-6;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<Pulse> pulses;
    real floor = 0.0;
    real threshold = 0.0;
    std::optional<real> t_star;
    bool conclusive() const { return t_star.has_value(); }
};

SweepResult minimum_time_sweep(const LindbladModel& model, const CoherenceState& initial,
                               const std::vector<real>& t_grid, const SweepOptions& options = {});

/// Columns t_f,best_cost,iterations,restart_index.
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

/// {"t_final": ..., "segments": [[u_1, ..., u_Nc], ...]}
nlohmann::json pulse_to_json(const Pulse& pulse, real t_final);

} // namespace psl::grape
