#include "psl/grape.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <future>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include <unsupported/Eigen/MatrixFunctions>

#include "psl/csv.hpp"

namespace psl::grape {

namespace {

struct Augmented {
    int dim;
    Matrix drift;              // [[R, q], [0, 0]]
    std::vector<Matrix> ctrl;  // [[A_k, 0], [0, 0]]
};

Augmented augment(const LindbladModel& model)
{
    const int d = model.dim();
    Augmented a{d + 1, Matrix::Zero(d + 1, d + 1), {}};
    a.drift.topLeftCorner(d, d) = model.R();
    a.drift.topRightCorner(d, 1) = model.q();
    for (const auto& g : model.generators()) {
        Matrix m = Matrix::Zero(d + 1, d + 1);
        m.topLeftCorner(d, d) = g;
        a.ctrl.push_back(std::move(m));
    }
    return a;
}

Matrix segment_generator(const Augmented& aug, const Pulse& pulse, int j)
{
    Matrix x = aug.drift;
    for (std::size_t k = 0; k < aug.ctrl.size(); ++k)
        x += pulse(j, static_cast<Eigen::Index>(k)) * aug.ctrl[k];
    return x;
}

Vector augmented_initial(const PulseProblem& p)
{
    const int d = p.model->dim();
    Vector s(d + 1);
    s.head(d) = p.initial.vector();
    s(d) = 1.0;
    return s;
}

void check_pulse(const PulseProblem& p, const Pulse& pulse)
{
    p.validate();
    if (pulse.rows() != p.n_segments || pulse.cols() != p.model->n_controls())
        throw Error(ErrorCode::invalid_dimension, "pulse shape does not match the problem");
}

void clamp(Pulse& pulse, real cap)
{
    pulse = pulse.cwiseMax(-cap).cwiseMin(cap);
}

bool finite(const Pulse& m) { return m.allFinite(); }

struct RunResult {
    Pulse controls;
    real cost = 0.0;
    int iterations = 0;
    std::vector<IterateRecord> log;
    bool diverged = false;
    std::string message;
};

struct LinePoint {
    real alpha = 0.0;
    Pulse x;
    CostGradient cg;
    real slope = 0.0;
};

// Strong Wolfe line search (bracketing and zoom with safeguarded quadratic
// interpolation). Returns nullopt when no acceptable step was found.
std::optional<LinePoint> wolfe_search(const PulseProblem& problem, const Pulse& x, const Pulse& dir,
                                      real phi0, real slope0, real cap)
{
    constexpr real c1 = 1e-4;
    constexpr real c2 = 0.9;
    auto eval = [&](real a) {
        LinePoint p;
        p.alpha = a;
        p.x = x + a * dir;
        clamp(p.x, cap);
        p.cg = cost_and_gradient(problem, p.x);
        p.slope = p.cg.gradient.cwiseProduct(dir).sum();
        return p;
    };
    auto sufficient = [&](const LinePoint& p) {
        return std::isfinite(p.cg.cost) && p.cg.cost <= phi0 + c1 * p.alpha * slope0;
    };

    std::optional<LinePoint> fallback;
    auto zoom = [&](LinePoint lo, LinePoint hi) -> std::optional<LinePoint> {
        for (int i = 0; i < 30; ++i) {
            const real width = hi.alpha - lo.alpha;
            real a = lo.alpha + 0.5 * width;
            // minimizer of the quadratic through phi(lo), phi'(lo), phi(hi)
            const real denom = 2.0 * (hi.cg.cost - lo.cg.cost - lo.slope * width);
            if (std::isfinite(hi.cg.cost) && denom > 0.0) {
                const real q = lo.alpha - lo.slope * width * width / denom;
                if (std::isfinite(q) && (q - lo.alpha) / width > 0.1 && (q - lo.alpha) / width < 0.9)
                    a = q;
            }
            LinePoint p = eval(a);
            if (!sufficient(p) || p.cg.cost >= lo.cg.cost) {
                hi = std::move(p);
            } else {
                if (std::abs(p.slope) <= -c2 * slope0)
                    return p;
                if (p.slope * (hi.alpha - lo.alpha) >= 0.0)
                    hi = lo;
                lo = std::move(p);
                fallback = lo;
            }
            if (std::abs(hi.alpha - lo.alpha) < 1e-14 * std::max(1.0, lo.alpha))
                break;
        }
        if (lo.alpha > 0.0)
            return lo;
        return std::nullopt;
    };

    LinePoint prev;
    prev.alpha = 0.0;
    prev.x = x;
    prev.cg.cost = phi0;
    prev.slope = slope0;
    real a = 1.0;
    for (int i = 0; i < 30; ++i) {
        LinePoint p = eval(a);
        if (!sufficient(p) || (i > 0 && p.cg.cost >= prev.cg.cost))
            return zoom(std::move(prev), std::move(p));
        if (std::abs(p.slope) <= -c2 * slope0)
            return p;
        if (p.slope >= 0.0)
            return zoom(std::move(p), std::move(prev));
        prev = std::move(p);
        a *= 2.0;
    }
    return prev.alpha > 0.0 ? std::optional<LinePoint>(std::move(prev)) : fallback;
}

RunResult lbfgs(const PulseProblem& problem, Pulse x, int restart, const OptimizeOptions& o)
{
    RunResult out;
    const real cap = problem.amplitude_cap();
    clamp(x, cap);
    CostGradient cg = cost_and_gradient(problem, x);
    std::deque<std::pair<Vector, Vector>> memory;
    real step = 0.0;
    int it = 0;
    for (;; ++it) {
        const real gnorm = cg.gradient.norm();
        out.log.push_back({restart, it, cg.cost, gnorm, step});
        if (!std::isfinite(cg.cost) || !finite(cg.gradient)) {
            out.diverged = true;
            out.message = "non-finite cost or gradient at iteration " + std::to_string(it);
            break;
        }
        if (cg.cost < o.cost_tol || gnorm < o.grad_tol || it >= o.max_iters)
            break;

        // two-loop recursion
        const Vector g = Eigen::Map<const Vector>(cg.gradient.data(), cg.gradient.size());
        Vector d = -g;
        std::vector<real> alpha(memory.size());
        for (std::size_t i = memory.size(); i-- > 0;) {
            const auto& [s, y] = memory[i];
            alpha[i] = s.dot(d) / y.dot(s);
            d -= alpha[i] * y;
        }
        if (!memory.empty()) {
            const auto& [s, y] = memory.back();
            d *= s.dot(y) / y.squaredNorm();
        } else {
            d *= std::min(1.0, 1.0 / gnorm);
        }
        for (std::size_t i = 0; i < memory.size(); ++i) {
            const auto& [s, y] = memory[i];
            const real beta = y.dot(d) / y.dot(s);
            d += (alpha[i] - beta) * s;
        }
        real slope = g.dot(d);
        if (!(slope < 0.0)) {
            memory.clear();
            d = -g * std::min(1.0, 1.0 / gnorm);
            slope = g.dot(d);
        }

        const Pulse dir = Eigen::Map<const Pulse>(d.data(), x.rows(), x.cols());
        auto found = wolfe_search(problem, x, dir, cg.cost, slope, cap);
        if (!found || !(found->cg.cost < cg.cost)) {
            if (memory.empty())
                break; // no progress along steepest descent
            memory.clear();
            continue;
        }
        Vector sv = Eigen::Map<const Vector>(found->x.data(), found->x.size())
                    - Eigen::Map<const Vector>(x.data(), x.size());
        Vector yv = Eigen::Map<const Vector>(found->cg.gradient.data(), found->cg.gradient.size()) - g;
        if (sv.dot(yv) > 1e-12 * sv.norm() * yv.norm()) {
            memory.emplace_back(std::move(sv), std::move(yv));
            if (static_cast<int>(memory.size()) > o.memory)
                memory.pop_front();
        }
        step = found->alpha;
        x = std::move(found->x);
        cg = std::move(found->cg);
    }
    out.controls = std::move(x);
    out.cost = cg.cost;
    out.iterations = it;
    return out;
}

} // namespace

real PulseProblem::amplitude_cap() const
{
    return amplitude_cap_factor * std::max(1e-12, model->spec().max_rate());
}

void PulseProblem::validate() const
{
    if (model == nullptr)
        throw Error(ErrorCode::usage, "pulse problem without a model");
    if (!(t_final > 0.0))
        throw Error(ErrorCode::domain, "t_final must be positive");
    if (n_segments < 1)
        throw Error(ErrorCode::usage, "need at least one segment");
    if (initial.n_levels() != model->n_levels())
        throw Error(ErrorCode::invalid_dimension, "initial state does not match the model");
    if (model->n_controls() < 1)
        throw Error(ErrorCode::usage, "the model has no controls");
}

Vector final_state(const PulseProblem& problem, const Pulse& pulse)
{
    check_pulse(problem, pulse);
    const Augmented aug = augment(*problem.model);
    const real dt = problem.t_final / problem.n_segments;
    Vector s = augmented_initial(problem);
    for (int j = 0; j < problem.n_segments; ++j)
        s = (dt * segment_generator(aug, pulse, j)).exp() * s;
    return s.head(problem.model->dim());
}

real cost(const PulseProblem& problem, const Pulse& pulse)
{
    return final_state(problem, pulse).squaredNorm();
}

CostGradient cost_and_gradient(const PulseProblem& problem, const Pulse& pulse)
{
    check_pulse(problem, pulse);
    const Augmented aug = augment(*problem.model);
    const int n = aug.dim;
    const int d = n - 1;
    const int segs = problem.n_segments;
    const real dt = problem.t_final / segs;

    std::vector<Matrix> gens(static_cast<std::size_t>(segs));
    std::vector<Matrix> props(static_cast<std::size_t>(segs));
    std::vector<Vector> states(static_cast<std::size_t>(segs + 1));
    states[0] = augmented_initial(problem);
    for (int j = 0; j < segs; ++j) {
        const auto u = static_cast<std::size_t>(j);
        gens[u] = dt * segment_generator(aug, pulse, j);
        props[u] = gens[u].exp();
        states[u + 1] = props[u] * states[u];
    }

    CostGradient out;
    const Vector sf = states.back().head(d);
    out.cost = sf.squaredNorm();
    out.gradient = Pulse::Zero(segs, static_cast<Eigen::Index>(aug.ctrl.size()));

    Vector lambda = Vector::Zero(n);
    lambda.head(d) = 2.0 * sf;
    Matrix block = Matrix::Zero(2 * n, 2 * n);
    for (int j = segs - 1; j >= 0; --j) {
        const auto u = static_cast<std::size_t>(j);
        // adjoint of the Frechet derivative of exp at gens[u] applied to lambda s^T
        block.topLeftCorner(n, n) = gens[u].transpose();
        block.bottomRightCorner(n, n) = gens[u].transpose();
        block.topRightCorner(n, n) = lambda * states[u].transpose();
        const Matrix f = block.exp().topRightCorner(n, n);
        for (std::size_t k = 0; k < aug.ctrl.size(); ++k)
            out.gradient(j, static_cast<Eigen::Index>(k)) = dt * aug.ctrl[k].cwiseProduct(f).sum();
        lambda = props[u].transpose() * lambda;
    }
    return out;
}

OptimizeResult optimize_pulse(const PulseProblem& problem, const OptimizeOptions& options)
{
    problem.validate();
    if (options.restarts < 1 && !options.warm_start)
        throw Error(ErrorCode::usage, "need at least one restart");
    const int nc = problem.model->n_controls();
    const real scale = options.init_scale * std::max(1e-12, problem.model->spec().max_rate());

    std::vector<Pulse> starts;
    if (options.warm_start) {
        if (options.warm_start->rows() != problem.n_segments || options.warm_start->cols() != nc)
            throw Error(ErrorCode::invalid_dimension, "warm start shape does not match the problem");
        starts.push_back(*options.warm_start);
    }
    while (static_cast<int>(starts.size()) < std::max(1, options.restarts)) {
        const auto r = static_cast<std::uint64_t>(starts.size());
        std::mt19937_64 rng(options.seed * 0x9E3779B97F4A7C15ULL + r);
        std::normal_distribution<real> normal(0.0, scale);
        Pulse p(problem.n_segments, nc);
        for (Eigen::Index i = 0; i < p.size(); ++i)
            p.data()[i] = normal(rng);
        starts.push_back(std::move(p));
    }

    const unsigned hw = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    std::vector<RunResult> runs(starts.size());
    for (std::size_t first = 0; first < starts.size(); first += hw) {
        const std::size_t last = std::min(starts.size(), first + hw);
        if (last - first == 1) {
            runs[first] = lbfgs(problem, starts[first], static_cast<int>(first), options);
            continue;
        }
        std::vector<std::future<RunResult>> jobs;
        for (std::size_t r = first; r < last; ++r)
            jobs.push_back(std::async(std::launch::async, lbfgs, std::cref(problem), starts[r],
                                      static_cast<int>(r), std::cref(options)));
        for (std::size_t r = first; r < last; ++r)
            runs[r] = jobs[r - first].get();
    }

    OptimizeResult best;
    best.final_cost = std::numeric_limits<real>::infinity();
    for (std::size_t r = 0; r < runs.size(); ++r) {
        best.log.insert(best.log.end(), runs[r].log.begin(), runs[r].log.end());
        if (runs[r].diverged) {
            std::ostringstream msg;
            msg << "restart " << r << ": " << runs[r].message;
            throw DivergedOptimization(msg.str(), best.log);
        }
        if (runs[r].cost < best.final_cost) {
            best.final_cost = runs[r].cost;
            best.controls = runs[r].controls;
            best.iterations = runs[r].iterations;
            best.restart_index = static_cast<int>(r);
        }
    }
    return best;
}

Pulse extend_pulse(const Pulse& pulse, real t_old, real t_new, int n_segments)
{
    const auto old_n = pulse.rows();
    Pulse out = Pulse::Zero(n_segments, pulse.cols());
    for (int j = 0; j < n_segments; ++j) {
        const real mid = (j + 0.5) * t_new / n_segments;
        if (mid >= t_old)
            continue;
        const auto src = std::min<Eigen::Index>(old_n - 1, static_cast<Eigen::Index>(mid / t_old * old_n));
        out.row(j) = pulse.row(src);
    }
    return out;
}

SweepResult minimum_time_sweep(const LindbladModel& model, const CoherenceState& initial,
                               const std::vector<real>& t_grid, const SweepOptions& options)
{
    if (t_grid.empty())
        throw Error(ErrorCode::usage, "empty horizon grid");
    if (!std::is_sorted(t_grid.begin(), t_grid.end()))
        throw Error(ErrorCode::usage, "horizon grid must be ascending");

    SweepResult out;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        PulseProblem problem;
        problem.model = &model;
        problem.n_segments = options.n_segments;
        problem.t_final = t_grid[i];
        problem.initial = initial;
        problem.amplitude_cap_factor = options.amplitude_cap_factor;

        OptimizeOptions opt = options.optimize;
        if (i > 0)
            opt.warm_start = extend_pulse(out.pulses.back(), t_grid[i - 1], t_grid[i], options.n_segments);
        const OptimizeResult r = optimize_pulse(problem, opt);
        out.rows.push_back({t_grid[i], r.final_cost, r.iterations, r.restart_index});
        out.pulses.push_back(r.controls);
    }

    std::vector<real> tail;
    for (std::size_t i = out.rows.size() - std::min<std::size_t>(3, out.rows.size()); i < out.rows.size(); ++i)
        tail.push_back(out.rows[i].best_cost);
    std::sort(tail.begin(), tail.end());
    out.floor = tail[tail.size() / 2];
    out.threshold = std::max(options.threshold_factor * out.floor, options.optimize.cost_tol);
    if (out.floor <= options.floor_limit)
        for (const auto& row : out.rows)
            if (row.best_cost <= out.threshold) {
                out.t_star = row.t_final;
                break;
            }
    return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep)
{
    CsvWriter csv(out, {"t_f", "best_cost", "iterations", "restart_index"});
    for (const auto& r : sweep.rows)
        csv.raw_row({format_real(r.t_final), format_real(r.best_cost), std::to_string(r.iterations),
                     std::to_string(r.restart_index)});
}

nlohmann::json pulse_to_json(const Pulse& pulse, real t_final)
{
    nlohmann::json segs = nlohmann::json::array();
    for (Eigen::Index j = 0; j < pulse.rows(); ++j) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < pulse.cols(); ++k)
            row.push_back(pulse(j, k));
        segs.push_back(std::move(row));
    }
    return {{"t_final", t_final}, {"segments", std::move(segs)}};
}

} // namespace psl::grape
