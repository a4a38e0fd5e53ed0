#pragma once

#include <functional>
#include <limits>

#include "psl/types.hpp"

namespace psl::ode {

struct Options {
    real rtol = 1e-9;
    real atol = 1e-12;
    /// First trial step; 0 picks (t1 - t0) * 1e-4.
    real initial_step = 0.0;
    real max_step = std::numeric_limits<real>::infinity();
    long max_steps = 50'000'000;
};

using Rhs = std::function<void(real t, const Vector& y, Vector& dydt)>;

/// One accepted step with its continuous (fourth-order) extension.
class Step {
public:
    real t_begin = 0.0;
    real t_end = 0.0;
    const Vector& y_begin() const { return y0_; }
    const Vector& y_end() const { return y1_; }

    /// Interpolated state at t in [t_begin, t_end].
    Vector dense(real t) const;

private:
    friend class DormandPrince;
    Vector y0_, y1_;
    Vector r3_, r4_, r5_;
};

/// Called after every accepted step; returning false stops the integration.
using StepObserver = std::function<bool(const Step&)>;

struct Result {
    real t = 0.0;
    Vector y;
    long accepted = 0;
    long rejected = 0;
    bool stopped_early = false;
};

/**
 * Explicit Dormand-Prince 5(4) pair with local extrapolation, elementary
 * step control and dense output. Step-size underflow throws
 * Error(stiffness) with the time and step reached.
 */
class DormandPrince {
public:
    explicit DormandPrince(Options options = {}) : opts_(options) {}

    Result integrate(const Rhs& rhs, real t0, const Vector& y0, real t1,
                     const StepObserver& observer = {}) const;

private:
    Options opts_;
};

} // namespace psl::ode
