#include "psl/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace psl::ode {

namespace {

constexpr real c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr real a21 = 1.0 / 5.0;
constexpr real a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr real a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr real a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
               a54 = -212.0 / 729.0;
constexpr real a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
               a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr real a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
               a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr real e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
               e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr real d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
               d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
               d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

} // namespace

Vector Step::dense(real t) const
{
    const real h = t_end - t_begin;
    if (h == 0.0)
        return y1_;
    const real theta = (t - t_begin) / h;
    const real theta1 = 1.0 - theta;
    return y0_ + theta * ((y1_ - y0_) + theta1 * (r3_ + theta * (r4_ + theta1 * r5_)));
}

Result DormandPrince::integrate(const Rhs& rhs, real t0, const Vector& y0, real t1,
                                const StepObserver& observer) const
{
    Result result;
    result.t = t0;
    result.y = y0;
    if (t1 <= t0)
        return result;

    const auto n = y0.size();
    Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n), err(n);

    real t = t0;
    Vector y = y0;
    rhs(t, y, k1);

    real h = opts_.initial_step > 0.0 ? opts_.initial_step : (t1 - t0) * 1e-4;
    h = std::min({h, opts_.max_step, t1 - t0});

    Step step;
    long steps = 0;
    while (t < t1) {
        if (++steps > opts_.max_steps) {
            std::ostringstream msg;
            msg << "step budget exhausted at t = " << t << " with h = " << h;
            throw Error(ErrorCode::stiffness, msg.str());
        }
        bool last = false;
        if (t + h >= t1 || t + 1.01 * h >= t1) {
            h = t1 - t;
            last = true;
        }
        const real min_h = 16.0 * std::numeric_limits<real>::epsilon() * std::max(std::abs(t), 1e-300);
        if (h <= min_h) {
            std::ostringstream msg;
            msg << "step size underflow at t = " << t << " (h = " << h << ", |y| = " << y.norm() << ")";
            throw Error(ErrorCode::stiffness, msg.str());
        }

        tmp = y + h * a21 * k1;
        rhs(t + c2 * h, tmp, k2);
        tmp = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, tmp, k3);
        tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, tmp, k4);
        tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, tmp, k5);
        tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, tmp, k6);
        y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs(t + h, y_new, k7);

        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        real norm = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const real sc = opts_.atol + opts_.rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
            norm += (err(i) / sc) * (err(i) / sc);
        }
        norm = n > 0 ? std::sqrt(norm / static_cast<real>(n)) : 0.0;
        if (!std::isfinite(norm)) {
            ++result.rejected;
            h *= 0.1;
            continue;
        }

        if (norm <= 1.0) {
            step.t_begin = t;
            step.t_end = last ? t1 : t + h;
            step.y0_ = y;
            step.y1_ = y_new;
            const Vector ydiff = y_new - y;
            step.r3_ = h * k1 - ydiff;
            step.r4_ = ydiff - h * k7 - step.r3_;
            step.r5_ = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

            t = step.t_end;
            y = y_new;
            k1 = k7;
            ++result.accepted;
            if (observer && !observer(step)) {
                result.stopped_early = true;
                break;
            }
            const real fac = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
            h = std::min(h * fac, opts_.max_step);
        } else {
            ++result.rejected;
            h *= std::max(0.2, 0.9 * std::pow(norm, -0.2));
        }
    }
    result.t = t;
    result.y = y;
    return result;
}

} // namespace psl::ode
