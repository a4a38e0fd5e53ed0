#include "psl/magic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "psl/csv.hpp"

namespace psl::magic {

namespace {

real rate_scale(const LindbladModel& model) { return std::max(1.0, model.spec().max_rate()); }

void require_uniform_dephasing(const LindbladModel& model, real gamma)
{
    const auto uniform = model.spec().uniform_dephasing(1e-9);
    if (!uniform)
        throw Error(ErrorCode::unsupported_configuration,
                    "magic subspaces are only computed for equal dephasing rates");
    if (std::abs(*uniform - gamma) > 1e-9 * std::max(1.0, gamma))
        throw Error(ErrorCode::unsupported_configuration,
                    "requested Gamma " + std::to_string(gamma) + " differs from the model dephasing "
                        + std::to_string(*uniform));
}

// Polynomial (Neville) extrapolation of y(x) to x = 0.
real extrapolate_to_zero(const std::vector<real>& x, std::vector<real> y)
{
    const std::size_t n = x.size();
    for (std::size_t level = 1; level < n; ++level)
        for (std::size_t i = n - 1; i >= level; --i) {
            y[i] = (x[i] * y[i - 1] - x[i - level] * y[i]) / (x[i] - x[i - level]);
            if (i == level)
                break;
        }
    return y[n - 1];
}

} // namespace

MagicSubspaceMo locate_Mo(const LindbladModel& model, real gamma)
{
    require_uniform_dephasing(model, gamma);
    const int nd = model.n_diag();
    const Matrix rd = model.R_d();
    const Matrix m = rd + rd.transpose() + 2.0 * gamma * Matrix::Identity(nd, nd);

    const Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    if (eig.eigenvalues().cwiseAbs().minCoeff() < 1e-12 * rate_scale(model))
        throw Error(ErrorCode::degenerate_magic_subspace,
                    "R_d + R_d^T + 2 Gamma I is singular; M_o is not a single subspace");

    MagicSubspaceMo mo;
    mo.n_levels = model.n_levels();
    mo.gamma = gamma;
    const Vector qd = model.q_d();
    mo.s_d_m = -(eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal()
                 * eig.eigenvectors().transpose() * qd);
    mo.lambda = mo.s_d_m.dot(qd) + 0.5 * mo.s_d_m.dot((rd + rd.transpose()) * mo.s_d_m);
    // rounding residue of a vanishing q_d is not a crossing
    if (std::abs(mo.lambda) <= 1e-14 * std::max(1.0, model.spec().max_rate()))
        mo.lambda = 0.0;
    mo.exists_in_ball = mo.s_d_m.squaredNorm() <= 1.0 - 1.0 / static_cast<real>(mo.n_levels) + 1e-12;
    return mo;
}

real purity_along_Mo(const MagicSubspaceMo& mo, real p_o_initial, real t)
{
    const real decay = std::exp(-2.0 * mo.gamma * t);
    return p_o_initial * decay - mo.lambda / mo.gamma * std::expm1(-2.0 * mo.gamma * t);
}

real time_to_zero_po(const MagicSubspaceMo& mo, real p_o_initial)
{
    if (p_o_initial < 0.0)
        throw Error(ErrorCode::domain, "p_o(0) must be non-negative");
    if (!(mo.lambda < 0.0))
        throw Error(ErrorCode::no_crossing,
                    "lambda = " + format_real(mo.lambda) + " >= 0: p_o cannot reach zero on M_o");
    if (p_o_initial == 0.0)
        return 0.0;
    // (lambda - Gamma p_o) / lambda with both terms negative.
    const real numerator = mo.lambda - mo.gamma * p_o_initial;
    if (!(numerator < 0.0))
        throw Error(ErrorCode::no_crossing, "lambda - Gamma p_o(0) must be negative");
    return std::log1p(mo.gamma * p_o_initial / -mo.lambda) / (2.0 * mo.gamma);
}

MuRhs mu_ode_rhs(const LindbladModel& model, real mu)
{
    const int nd = model.n_diag();
    const Matrix rd = model.R_d();
    const Vector qd = model.q_d();
    const Matrix m = rd + rd.transpose() + 2.0 * mu * Matrix::Identity(nd, nd);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    const Vector& ev = eig.eigenvalues();
    const real ev_max = ev.cwiseAbs().maxCoeff();
    if (ev.cwiseAbs().minCoeff() <= 1e-14 * ev_max)
        throw Error(ErrorCode::singular_mu_dynamics, "M = R_d + R_d^T + 2 mu I is singular at mu = "
                                                         + format_real(mu));
    const Matrix& q = eig.eigenvectors();
    const Vector inv = ev.cwiseInverse();

    MuRhs out;
    out.s_d = -(q * inv.asDiagonal() * q.transpose() * qd);
    out.p_d = out.s_d.squaredNorm();
    const Vector minv_s = q * inv.asDiagonal() * q.transpose() * out.s_d;
    const real denom = 4.0 * out.s_d.dot(minv_s);
    // relative degeneracy: s^T M^{-1} s vanishes against |s|^2 / |M|
    if (!(std::abs(denom) > 1e-14 * 4.0 * out.p_d / ev_max))
        throw Error(ErrorCode::singular_mu_dynamics,
                    "s_d^T M^{-1} s_d vanishes at mu = " + format_real(mu));
    out.dmu_dt = (2.0 * mu * out.p_d - qd.dot(out.s_d)) / denom;
    return out;
}

MuTrajectory integrate_mu(const LindbladModel& model, real gamma, const MuOptions& options)
{
    MuTrajectory traj;
    const MuRhs start = mu_ode_rhs(model, gamma);
    traj.samples.push_back({0.0, gamma, start.s_d, start.p_d});
    if (start.p_d <= options.pd_floor) {
        traj.t_d = 0.0;
        return traj;
    }
    if (!(start.dmu_dt > 0.0))
        throw Error(ErrorCode::mu_trajectory,
                    "dmu/dt = " + format_real(start.dmu_dt) + " <= 0 at mu(0) = Gamma");

    const ode::Rhs rhs = [&model](real, const Vector& y, Vector& dy) {
        dy.resize(1);
        try {
            dy(0) = mu_ode_rhs(model, y(0)).dmu_dt;
        } catch (const Error&) {
            dy(0) = std::numeric_limits<real>::quiet_NaN();
        }
    };

    ode::Options opts = options.ode;
    if (opts.initial_step <= 0.0)
        opts.initial_step = 1e-4 / rate_scale(model);
    const ode::DormandPrince solver(opts);

    bool done = false;
    std::string failure;
    const auto observe = [&](const ode::Step& step) {
        const real mu = step.y_end()(0);
        const MuSample& last = traj.samples.back();
        if (!(mu > last.mu)) {
            std::ostringstream msg;
            msg << "mu stopped increasing at t = " << step.t_end << " (mu = " << mu
                << "); last valid sample t = " << last.t << ", mu = " << last.mu << ", p_d = " << last.p_d;
            failure = msg.str();
            return false;
        }
        MuRhs r;
        try {
            r = mu_ode_rhs(model, mu);
        } catch (const Error& e) {
            std::ostringstream msg;
            msg << e.what() << "; last valid sample t = " << last.t << ", mu = " << last.mu;
            failure = msg.str();
            return false;
        }
        traj.samples.push_back({step.t_end, mu, r.s_d, r.p_d});
        if (mu >= options.mu_max || r.p_d <= options.pd_floor) {
            done = true;
            return false;
        }
        return true;
    };

    Vector y0(1);
    y0(0) = gamma;
    const real horizon = 1e6 / rate_scale(model);
    solver.integrate(rhs, 0.0, y0, horizon, observe);
    if (!failure.empty())
        throw Error(ErrorCode::mu_trajectory, failure);
    if (!done)
        throw Error(ErrorCode::mu_trajectory, "mu did not diverge within t = " + format_real(horizon));

    traj.t_stop = traj.samples.back().t;
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.extrapolation_points)),
                                                 traj.samples.size());
    std::vector<real> x, y;
    for (std::size_t i = traj.samples.size() - k; i < traj.samples.size(); ++i) {
        x.push_back(1.0 / traj.samples[i].mu);
        y.push_back(traj.samples[i].t);
    }
    traj.t_d = k > 1 ? extrapolate_to_zero(x, y) : traj.t_stop;
    if (!(traj.t_d >= traj.t_stop))
        traj.t_d = traj.t_stop;
    return traj;
}

const char* to_string(TmsStatus status)
{
    switch (status) {
    case TmsStatus::ok: return "ok";
    case TmsStatus::no_crossing: return "no_crossing";
    case TmsStatus::outside_ball: return "outside_ball";
    case TmsStatus::below_magic_purity: return "below_magic_purity";
    }
    return "unknown";
}

TmsResult t_ms(const LindbladModel& model, real gamma, real initial_purity, const MuOptions& options)
{
    TmsResult out;
    out.mo = locate_Mo(model, gamma);
    out.t_o = out.t_d = out.t_ms = std::numeric_limits<real>::quiet_NaN();
    if (!out.mo.exists_in_ball) {
        out.status = TmsStatus::outside_ball;
        return out;
    }
    out.p_o_initial = initial_purity - 1.0 / static_cast<real>(model.n_levels()) - out.mo.s_d_m.squaredNorm();
    if (out.p_o_initial < 0.0) {
        out.status = TmsStatus::below_magic_purity;
        return out;
    }
    if (!(out.mo.lambda < 0.0)) {
        out.status = TmsStatus::no_crossing;
        return out;
    }
    out.t_o = time_to_zero_po(out.mo, out.p_o_initial);
    out.t_d = integrate_mu(model, gamma, options).t_d;
    out.t_ms = out.t_o + out.t_d;
    return out;
}

real asymptotic_t_ms(real gamma)
{
    if (!(gamma > 1.0))
        throw Error(ErrorCode::domain, "ln(Gamma)/Gamma asymptote needs Gamma > 1");
    return std::log(gamma) / gamma;
}

Vector mo_control_synthesis(const LindbladModel& model, const MagicSubspaceMo& mo,
                            const CoherenceState& state)
{
    if (state.n_levels() != model.n_levels())
        throw Error(ErrorCode::invalid_dimension, "state does not match model");
    if ((state.s_d() - mo.s_d_m).norm() > 1e-8)
        throw Error(ErrorCode::invalid_state, "state is not on M_o");

    const int no = model.n_off();
    const int nd = model.n_diag();
    const Vector rhs = -model.q_d() - model.R_d() * mo.s_d_m;
    Matrix coeff(nd, model.n_controls());
    for (int k = 0; k < model.n_controls(); ++k) {
        const Matrix& a = model.generators()[static_cast<std::size_t>(k)];
        coeff.col(k) = a.block(no, 0, nd, no) * state.s_o() + a.block(no, no, nd, nd) * mo.s_d_m;
    }
    if (model.n_controls() == 0 || rhs.norm() == 0.0) {
        if (rhs.norm() == 0.0)
            return Vector::Zero(model.n_controls());
        throw Error(ErrorCode::stuck_point, "no controls available to hold the state on M_o");
    }
    const Vector u = coeff.completeOrthogonalDecomposition().solve(rhs);
    const real residual = (coeff * u - rhs).norm();
    if (!u.allFinite() || residual > 1e-9 * std::max(1.0, rhs.norm()))
        throw Error(ErrorCode::stuck_point,
                    "controls cannot cancel the diagonal drift here (residual " + format_real(residual) + ")");
    return u;
}

CoherenceState pure_state_on_Mo(const LindbladModel& model, const MagicSubspaceMo& mo)
{
    const int n = model.n_levels();
    const auto& basis = model.basis();
    Vector populations = Vector::Constant(n, 1.0 / static_cast<real>(n));
    for (int m = 1; m < n; ++m)
        populations += mo.s_d_m(m - 1) * basis[basis.diagonal_index(m)].diagonal().real();
    if (populations.minCoeff() < -1e-12)
        throw Error(ErrorCode::invalid_state, "M_o requires a negative population");
    const CVector psi = populations.cwiseMax(0.0).cwiseSqrt().cast<complex>();
    return rho_to_coherence(psi * psi.adjoint(), basis);
}

void write_mu_trajectory_csv(std::ostream& out, const MuTrajectory& trajectory)
{
    const std::size_t nd = trajectory.samples.empty() ? 0 : static_cast<std::size_t>(trajectory.samples[0].s_d.size());
    std::vector<std::string> header{"t", "mu", "p_d"};
    for (std::size_t k = 1; k <= nd; ++k)
        header.push_back("s_d_" + std::to_string(k));
    CsvWriter csv(out, header);
    for (const auto& s : trajectory.samples) {
        std::vector<double> row{s.t, s.mu, s.p_d};
        for (Eigen::Index k = 0; k < s.s_d.size(); ++k)
            row.push_back(s.s_d(k));
        csv.row(row);
    }
}

void write_tms_sweep_csv(std::ostream& out, const std::vector<TmsSweepRow>& rows)
{
    CsvWriter csv(out, {"gamma", "t_o", "t_d", "t_ms", "asymptotic"});
    for (const auto& r : rows) {
        const real asym = r.gamma > 1.0 ? asymptotic_t_ms(r.gamma) : std::numeric_limits<real>::quiet_NaN();
        csv.row({r.gamma, r.result.t_o, r.result.t_d, r.result.t_ms, asym});
    }
}

} // namespace psl::magic
