#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here goes through LindbladModel's R, q or generators: the master
// equation is written directly on density-matrix entries.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "psl/lindblad_model.hpp"
#include "psl/relaxation.hpp"

namespace oracle {

using psl::CMatrix;
using psl::complex;
using psl::Matrix;
using psl::real;
using psl::RelaxationSpec;
using psl::Vector;

/// Master equation on matrix entries: population transfer k <- j at gamma(k, j),
/// coherence rho_kl decaying at (out_k + out_l)/2 + pure_dephasing(k, l), and
/// -i[H, rho] with H = sum_k u_k H_k.
inline CMatrix lindblad_rhs(const RelaxationSpec& spec, const std::vector<CMatrix>& hamiltonians,
                            std::span<const real> controls, const CMatrix& rho)
{
    const int n = spec.n_levels();
    CMatrix out = CMatrix::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        real out_k = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != k) {
                out(k, k) += spec.gamma(k, j) * rho(j, j);
                out_k += spec.gamma(j, k);
            }
        out(k, k) -= out_k * rho(k, k);
    }
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
            if (k == l)
                continue;
            real out_k = 0.0, out_l = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j != k)
                    out_k += spec.gamma(j, k);
                if (j != l)
                    out_l += spec.gamma(j, l);
            }
            out(k, l) -= (0.5 * (out_k + out_l) + spec.pure_dephasing()(k, l)) * rho(k, l);
        }
    if (!hamiltonians.empty()) {
        CMatrix h = CMatrix::Zero(n, n);
        for (std::size_t k = 0; k < hamiltonians.size(); ++k)
            h += controls[k] * hamiltonians[k];
        out += complex(0.0, -1.0) * (h * rho - rho * h);
    }
    return out;
}

/// Column-stacked superoperator of lindblad_rhs for constant controls.
inline CMatrix superoperator(const RelaxationSpec& spec, const std::vector<CMatrix>& hamiltonians,
                             std::span<const real> controls)
{
    const int n = spec.n_levels();
    CMatrix sup(n * n, n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            CMatrix e = CMatrix::Zero(n, n);
            e(i, j) = 1.0;
            const CMatrix img = lindblad_rhs(spec, hamiltonians, controls, e);
            sup.col(j * n + i) = Eigen::Map<const psl::CVector>(img.data(), n * n);
        }
    return sup;
}

/// rho(t) for constant controls by the exponential of the dense superoperator.
inline CMatrix propagate_rho(const RelaxationSpec& spec, const std::vector<CMatrix>& hamiltonians,
                             std::span<const real> controls, const CMatrix& rho, real t)
{
    const int n = spec.n_levels();
    const CMatrix prop = (superoperator(spec, hamiltonians, controls) * complex(t, 0.0)).exp();
    const psl::CVector v = prop * Eigen::Map<const psl::CVector>(rho.data(), n * n);
    return Eigen::Map<const CMatrix>(v.data(), n, n);
}

/// s_k = Re Tr(rho V_k) with the basis matrices written out from scratch.
inline Vector coherence(const CMatrix& rho)
{
    const int n = static_cast<int>(rho.rows());
    Vector s(n * n - 1);
    int k = 0;
    for (int m = 0; m < n; ++m)
        for (int l = m + 1; l < n; ++l) {
            s(k++) = std::sqrt(2.0) * rho(m, l).real();
            s(k++) = -std::sqrt(2.0) * rho(m, l).imag();
        }
    for (int m = 1; m < n; ++m) {
        real acc = 0.0;
        for (int j = 0; j < m; ++j)
            acc += rho(j, j).real();
        acc -= m * rho(m, m).real();
        s(k++) = acc / std::sqrt(m * (m + 1.0));
    }
    return s;
}

inline CMatrix density(const Vector& s, int n)
{
    CMatrix rho = CMatrix::Identity(n, n) / static_cast<real>(n);
    int k = 0;
    for (int m = 0; m < n; ++m)
        for (int l = m + 1; l < n; ++l) {
            const complex c(s(k) / std::sqrt(2.0), -s(k + 1) / std::sqrt(2.0));
            rho(m, l) += c;
            rho(l, m) += std::conj(c);
            k += 2;
        }
    for (int m = 1; m < n; ++m) {
        const real c = s(k++) / std::sqrt(m * (m + 1.0));
        for (int j = 0; j < m; ++j)
            rho(j, j) += c;
        rho(m, m) -= m * c;
    }
    return rho;
}

/// d Tr(rho^2)/dt under the dissipator alone, 2 Re Tr(rho L_D(rho)).
inline real purity_rate(const RelaxationSpec& spec, const CMatrix& rho)
{
    const CMatrix d = lindblad_rhs(spec, {}, {}, rho);
    return 2.0 * (rho * d).trace().real();
}

/// Classical RK4 with fixed step h on a scalar ODE; the first zero of the
/// state is located by bisection on the length of the last step.
inline real rk4_zero_crossing(const std::function<real(real)>& f, real y0, real h, real t_max)
{
    real t = 0.0, y = y0;
    while (t < t_max) {
        const real k1 = f(y);
        const real k2 = f(y + 0.5 * h * k1);
        const real k3 = f(y + 0.5 * h * k2);
        const real k4 = f(y + h * k3);
        const real y1 = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
        if (y1 <= 0.0) {
            real lo = 0.0, hi = h;
            for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                const real mid = 0.5 * (lo + hi);
                const real a1 = f(y);
                const real a2 = f(y + 0.5 * mid * a1);
                const real a3 = f(y + 0.5 * mid * a2);
                const real a4 = f(y + mid * a3);
                const real ym = y + mid * (a1 + 2 * a2 + 2 * a3 + a4) / 6.0;
                (ym > 0.0 ? lo : hi) = mid;
            }
            return t + 0.5 * (lo + hi);
        }
        y = y1;
        t += h;
    }
    return std::numeric_limits<real>::quiet_NaN();
}

/// dp_o/dt at a point of M_o with off-diagonal purity p: the control terms
/// leave the total purity unchanged and hold s_d, so it is the dissipative
/// purity rate of the density matrix with s_d = s_d_m and all of s_o in x_12.
inline real po_rate_on_Mo(const RelaxationSpec& spec, const Vector& s_d_m, real p)
{
    const int n = spec.n_levels();
    Vector s = Vector::Zero(n * n - 1);
    s(0) = std::sqrt(std::max(0.0, p));
    s.tail(n - 1) = s_d_m;
    return purity_rate(spec, density(s, n));
}

/// Smallest d|s_d|/dt over diagonal states of radius r (three levels, so the
/// diagonal block is a circle), by a 720-point scan and golden-section refinement.
inline real md_radius_rate(const RelaxationSpec& spec, real r)
{
    const auto f = [&](real theta) {
        Vector s = Vector::Zero(8);
        s(6) = r * std::cos(theta);
        s(7) = r * std::sin(theta);
        return purity_rate(spec, density(s, 3)) / (2.0 * r);
    };
    const int grid = 720;
    const real h = 2.0 * M_PI / grid;
    int best = 0;
    real fbest = f(0.0);
    for (int i = 1; i < grid; ++i) {
        const real v = f(i * h);
        if (v < fbest) {
            fbest = v;
            best = i;
        }
    }
    real a = (best - 1) * h, b = (best + 1) * h;
    const real g = 0.5 * (std::sqrt(5.0) - 1.0);
    real c = b - g * (b - a), d = a + g * (b - a);
    real fc = f(c), fd = f(d);
    while (b - a > 1e-11) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return std::min(fc, fd);
}

inline Matrix random_rates(std::mt19937_64& rng, int n, real max_rate = 1.0)
{
    std::uniform_real_distribution<real> u(0.0, max_rate);
    std::bernoulli_distribution zero(0.15);
    Matrix g = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && !zero(rng))
                g(i, j) = u(rng);
    return g;
}

/// Random valid spec with all coherences decaying at one common rate.
inline RelaxationSpec random_uniform_spec(std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<real> extra(0.2, 4.0);
    for (;;) {
        const Matrix g = random_rates(rng, n);
        real floor = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                floor = std::max(floor, 0.5 * (g.col(i).sum() + g.col(j).sum()));
        try {
            return RelaxationSpec::with_uniform_dephasing(g, floor + extra(rng));
        } catch (const psl::Error&) {
        }
    }
}

/// Random valid spec with independent pure dephasing rates.
inline RelaxationSpec random_spec(std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<real> u(0.0, 2.0);
    for (;;) {
        const Matrix g = random_rates(rng, n);
        Matrix d = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                d(i, j) = d(j, i) = u(rng);
        try {
            return RelaxationSpec(g, d);
        } catch (const psl::Error&) {
        }
    }
}

inline CMatrix random_density(std::mt19937_64& rng, int n)
{
    std::normal_distribution<real> g;
    CMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a(i, j) = complex(g(rng), g(rng));
    CMatrix rho = a * a.adjoint();
    return rho / rho.trace();
}

/// Rates of the three-level worked example: gamma_12 = 1, gamma_13 = gamma_23 = 0.5.
inline Matrix example_rates()
{
    Matrix g = Matrix::Zero(3, 3);
    g(0, 1) = 1.0;
    g(0, 2) = 0.5;
    g(1, 2) = 0.5;
    return g;
}

inline RelaxationSpec example_spec(real gamma = 2.0)
{
    return RelaxationSpec::with_uniform_dephasing(example_rates(), gamma);
}

} // namespace oracle
