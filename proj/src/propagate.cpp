#include "psl/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "psl/csv.hpp"

namespace psl {

ControlTable ControlTable::zeros(int n_controls, real t_final)
{
    return {{0.0, t_final}, Matrix::Zero(1, n_controls)};
}

ControlTable ControlTable::uniform(const Matrix& amplitudes, real t_final)
{
    const auto n = amplitudes.rows();
    ControlTable table{{}, amplitudes};
    table.breakpoints.resize(static_cast<std::size_t>(n + 1));
    for (Eigen::Index i = 0; i <= n; ++i)
        table.breakpoints[static_cast<std::size_t>(i)] = t_final * static_cast<real>(i) / static_cast<real>(n);
    table.breakpoints.back() = t_final;
    return table;
}

int ControlTable::segment_at(real t) const
{
    const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    const int idx = static_cast<int>(it - breakpoints.begin()) - 1;
    return std::clamp(idx, 0, n_segments() - 1);
}

Trajectory propagate(const LindbladModel& model, const CoherenceState& initial,
                     const ControlTable& controls, real t_final, const PropagateOptions& options)
{
    if (!(t_final > 0.0))
        throw Error(ErrorCode::domain, "t_final must be positive");
    if (initial.n_levels() != model.n_levels())
        throw Error(ErrorCode::invalid_dimension, "initial state does not match model");
    if (controls.n_controls() != model.n_controls())
        throw Error(ErrorCode::invalid_dimension, "control table width does not match model");
    if (controls.n_segments() < 1
        || controls.breakpoints.size() != static_cast<std::size_t>(controls.n_segments() + 1))
        throw Error(ErrorCode::invalid_dimension, "control table needs n_segments + 1 breakpoints");
    if (!std::is_sorted(controls.breakpoints.begin(), controls.breakpoints.end()))
        throw Error(ErrorCode::domain, "control breakpoints must be ascending");
    const real slack = 1e-12 * std::max(1.0, t_final);
    if (controls.breakpoints.front() > slack || controls.breakpoints.back() < t_final - slack)
        throw Error(ErrorCode::domain, "control table does not cover [0, t_final]");

    std::vector<real> samples = options.sample_times;
    if (samples.empty()) {
        samples.resize(101);
        for (std::size_t i = 0; i < samples.size(); ++i)
            samples[i] = t_final * static_cast<real>(i) / 100.0;
    }
    std::sort(samples.begin(), samples.end());
    if (samples.front() < 0.0 || samples.back() > t_final + slack)
        throw Error(ErrorCode::domain, "sample times must lie in [0, t_final]");

    ode::Options ode_opts = options.ode;
    if (ode_opts.initial_step <= 0.0) {
        const real rate = model.spec().max_rate();
        ode_opts.initial_step = rate > 0.0 ? 1e-4 / rate : 1e-4 * t_final;
    }
    const ode::DormandPrince solver(ode_opts);

    Trajectory traj;
    traj.n_levels = model.n_levels();
    traj.t.reserve(samples.size());
    traj.s.reserve(samples.size());

    std::size_t next = 0;
    auto emit = [&](real t, const Vector& s) {
        traj.t.push_back(t);
        traj.s.push_back(s);
    };
    while (next < samples.size() && samples[next] <= 0.0)
        emit(samples[next++], initial.vector());

    Vector s = initial.vector();
    real t = 0.0;
    std::vector<real> u(static_cast<std::size_t>(model.n_controls()));
    for (int seg = 0; seg < controls.n_segments() && t < t_final; ++seg) {
        const real seg_end = seg + 1 == controls.n_segments()
                                 ? t_final
                                 : std::min(controls.breakpoints[static_cast<std::size_t>(seg + 1)], t_final);
        if (seg_end <= t)
            continue;
        for (int k = 0; k < model.n_controls(); ++k)
            u[static_cast<std::size_t>(k)] = controls.amplitudes(seg, k);
        const Matrix g = model.generator(u);
        const Vector& q = model.q();
        const ode::Rhs rhs = [&g, &q](real, const Vector& y, Vector& dy) { dy.noalias() = g * y + q; };

        const auto observe = [&](const ode::Step& step) {
            while (next < samples.size() && samples[next] <= step.t_end) {
                emit(samples[next], step.dense(samples[next]));
                ++next;
            }
            return true;
        };
        const auto result = solver.integrate(rhs, t, s, seg_end, observe);
        s = result.y;
        t = seg_end;
    }
    while (next < samples.size())
        emit(samples[next++], s);

    for (std::size_t i = 0; i < traj.s.size(); ++i) {
        const CMatrix rho = coherence_to_rho(traj.state(i), model.basis());
        const Eigen::SelfAdjointEigenSolver<CMatrix> eig(rho, Eigen::EigenvaluesOnly);
        const real lowest = eig.eigenvalues().minCoeff();
        if (lowest < -options.positivity_tol) {
            std::ostringstream msg;
            msg << "rho(t = " << traj.t[i] << ") has eigenvalue " << lowest;
            traj.warnings.push_back(msg.str());
        }
    }
    return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory)
{
    const int d = trajectory.n_levels * trajectory.n_levels - 1;
    std::vector<std::string> header{"t"};
    for (int k = 1; k <= d; ++k)
        header.push_back("s_" + std::to_string(k));
    header.push_back("purity");
    CsvWriter csv(out, header);
    for (std::size_t i = 0; i < trajectory.t.size(); ++i) {
        std::vector<double> row{trajectory.t[i]};
        for (int k = 0; k < d; ++k)
            row.push_back(trajectory.s[i](k));
        row.push_back(purity(trajectory.state(i)));
        csv.row(row);
    }
}

} // namespace psl
