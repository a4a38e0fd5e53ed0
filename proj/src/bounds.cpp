#include "psl/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psl/csv.hpp"
#include "psl/lindblad_model.hpp"
#include "psl/pauli_basis.hpp"

namespace psl::bounds {

namespace {

constexpr real inf = std::numeric_limits<real>::infinity();
const complex I1{0.0, 1.0};

real log_ratio(real p_initial, real p_final)
{
    if (!(p_initial > 0.0 && p_initial <= 1.0 + 1e-12 && p_final > 0.0 && p_final <= 1.0 + 1e-12))
        throw Error(ErrorCode::domain, "purities must lie in (0, 1]");
    return std::abs(std::log(p_final / p_initial));
}

real bound_time(real numerator, real denominator)
{
    if (numerator == 0.0)
        return 0.0;
    return denominator > 0.0 ? numerator / denominator : inf;
}

real uniform_gamma(const RelaxationSpec& spec)
{
    const auto g = spec.uniform_dephasing(1e-9);
    if (!g)
        throw Error(ErrorCode::unsupported_configuration, "printed forms need uniform dephasing");
    return *g;
}

void require_levels(const RelaxationSpec& spec, int n)
{
    if (spec.n_levels() != n)
        throw Error(ErrorCode::unsupported_configuration,
                    "printed form needs N = " + std::to_string(n));
}

} // namespace

const char* to_string(BasisTag tag)
{
    return tag == BasisTag::normalized_pauli ? "normalized_pauli" : "diagonal_lindblad";
}

AMatrix build_a_matrix(const RelaxationSpec& spec, BasisTag tag)
{
    const LindbladModel model(spec, {});
    const auto& jumps = model.jump_operators();
    AMatrix a;
    a.n_levels = spec.n_levels();
    a.basis_tag = tag;
    if (tag == BasisTag::diagonal_lindblad) {
        const auto k = static_cast<Eigen::Index>(jumps.size());
        a.entries = CMatrix::Zero(k, k);
        a.operator_norms.resize(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            a.entries(i, i) = jumps[static_cast<std::size_t>(i)].rate;
            a.operator_norms(i) = jumps[static_cast<std::size_t>(i)].op.norm();
        }
        return a;
    }
    const PauliBasis& basis = model.basis();
    const int d = basis.size();
    a.entries = CMatrix::Zero(d, d);
    a.operator_norms = Vector::Ones(d);
    for (const auto& j : jumps) {
        CVector c(d);
        for (int l = 0; l < d; ++l)
            c(l) = (basis[l] * j.op).trace();
        a.entries += j.rate * c * c.adjoint();
    }
    return a;
}

real hilbert_denominator(const AMatrix& a)
{
    real sum = 0.0;
    for (Eigen::Index k = 0; k < a.entries.rows(); ++k)
        for (Eigen::Index m = 0; m < a.entries.cols(); ++m)
            sum += std::abs(a.entries(k, m)) * a.operator_norms(k) * a.operator_norms(m);
    return 4.0 * sum;
}

real t_hilbert(const AMatrix& a, real p_initial, real p_final)
{
    return bound_time(log_ratio(p_initial, p_final), hilbert_denominator(a));
}

real t_hilbert_diagonal_basis(const RelaxationSpec& spec, real p_initial, real p_final)
{
    if (spec.n_levels() != 2)
        throw Error(ErrorCode::unsupported_configuration, "diagonal-basis bound is defined for N = 2");
    return t_hilbert(build_a_matrix(spec, BasisTag::diagonal_lindblad), p_initial, p_final);
}

CMatrix dissipator_superoperator(const RelaxationSpec& spec)
{
    const LindbladModel model(spec, {});
    const int n = spec.n_levels();
    CMatrix sup(n * n, n * n);
    for (int col = 0; col < n; ++col)
        for (int row = 0; row < n; ++row) {
            CMatrix e = CMatrix::Zero(n, n);
            e(row, col) = 1.0;
            const CMatrix img = model.dissipator(e);
            sup.col(col * n + row) = Eigen::Map<const CVector>(img.data(), n * n);
        }
    return sup;
}

LiouvilleBound t_liouville(const RelaxationSpec& spec, real p_initial, real p_final)
{
    const real num = log_ratio(p_initial, p_final);
    const CMatrix h = I1 * dissipator_superoperator(spec);
    const CMatrix diff = h - h.adjoint();

    LiouvilleBound out;
    const Eigen::JacobiSVD<CMatrix> svd(diff);
    out.spectral_norm = svd.singularValues()(0);
    // diff = i S with S Hermitian
    const CMatrix herm = -I1 * diff;
    const Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (herm + herm.adjoint()), Eigen::EigenvaluesOnly);
    out.eigenvalues = I1 * eig.eigenvalues().cast<complex>();
    const real eig_norm = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (std::abs(eig_norm - out.spectral_norm) > 1e-9 * std::max(1.0, eig_norm))
        throw Error(ErrorCode::domain, "singular value and eigenvalue norms of H - H^dagger disagree");
    out.t_L = bound_time(num, out.spectral_norm);
    return out;
}

AsymptoticBounds asymptotic_bounds(int n_levels, real gamma)
{
    if (n_levels < 2)
        throw Error(ErrorCode::invalid_dimension, "need N >= 2");
    if (!(gamma > 0.0))
        throw Error(ErrorCode::domain, "Gamma must be positive");
    const real ln_n = std::log(static_cast<real>(n_levels));
    return {ln_n / (std::ldexp(1.0, n_levels) * gamma), ln_n / (2.0 * gamma)};
}

std::vector<int> printed_ordering(int n_levels)
{
    const PauliBasis b(n_levels);
    if (n_levels == 2)
        return {b.diagonal_index(1), 0, 1};
    if (n_levels == 3) {
        const int x12 = b.offdiagonal_index(0, 1);
        const int x13 = b.offdiagonal_index(0, 2);
        const int x23 = b.offdiagonal_index(1, 2);
        return {b.diagonal_index(1), x12, x12 + 1, x13, x13 + 1, b.diagonal_index(2), x23, x23 + 1};
    }
    throw Error(ErrorCode::unsupported_configuration, "printed forms exist for N = 2, 3 only");
}

CMatrix printed_a_matrix(const RelaxationSpec& spec)
{
    const real G = uniform_gamma(spec);
    if (spec.n_levels() == 2) {
        const real gp = spec.gamma(0, 1) + spec.gamma(1, 0);
        const real gm = spec.gamma(0, 1) - spec.gamma(1, 0);
        CMatrix a = CMatrix::Zero(3, 3);
        a(0, 0) = 2.0 * G - gp;
        a(1, 1) = gp;
        a(1, 2) = -I1 * gm / 2.0;
        a(2, 1) = I1 * gm / 2.0;
        a(2, 2) = gp / 2.0;
        return a;
    }
    require_levels(spec, 3);
    const real g12 = spec.gamma(0, 1), g21 = spec.gamma(1, 0);
    const real g13 = spec.gamma(0, 2), g31 = spec.gamma(2, 0);
    const real g23 = spec.gamma(1, 2), g32 = spec.gamma(2, 1);
    const real ap = g12 + g21, am = g12 - g21;
    const real bp = g13 + g31, bm = g13 - g31;
    const real cp = g23 + g32, cm = g23 - g32;
    const real X = std::sqrt(3.0) / 6.0 * (am - g31 + g32);
    const real W = 0.5 * (ap + g32 + g31);
    const real Y = (ap + g31 + g32) / 6.0 + 2.0 / 3.0 * (g13 + g23);

    CMatrix a = CMatrix::Zero(8, 8);
    a(0, 0) = G - W;
    a(1, 1) = ap / 2.0;
    a(1, 2) = -I1 * am / 2.0;
    a(2, 1) = I1 * am / 2.0;
    a(2, 2) = ap / 2.0;
    // (1/2) b_+ 1 + (sqrt(2)/2) b_- sigma_2
    const real s = std::sqrt(2.0) / 2.0;
    a(3, 3) = bp / 2.0;
    a(3, 4) = -I1 * s * bm;
    a(4, 3) = I1 * s * bm;
    a(4, 4) = bp / 2.0;
    a(5, 5) = G - Y;
    a(6, 6) = cp / 2.0;
    a(6, 7) = -I1 * cm / 2.0;
    a(7, 6) = I1 * cm / 2.0;
    a(7, 7) = cp / 2.0;
    a(0, 5) = X;
    a(5, 0) = X;
    return a;
}

CMatrix generic_a_matrix_printed_order(const RelaxationSpec& spec)
{
    const auto order = printed_ordering(spec.n_levels());
    const CMatrix a = build_a_matrix(spec).entries;
    const auto n = static_cast<Eigen::Index>(order.size());
    CMatrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out(i, j) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    return out;
}

std::vector<EntryDiff> diff_printed_a_matrix(const RelaxationSpec& spec, real tol)
{
    const CMatrix p = printed_a_matrix(spec);
    const CMatrix g = generic_a_matrix_printed_order(spec);
    std::vector<EntryDiff> out;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            if (std::abs(p(i, j) - g(i, j)) > tol)
                out.push_back({static_cast<int>(i), static_cast<int>(j), p(i, j), g(i, j)});
    return out;
}

real hilbert_denominator_two_level_printed(const RelaxationSpec& spec)
{
    require_levels(spec, 2);
    const real gp = spec.gamma(0, 1) + spec.gamma(1, 0);
    const real gm = spec.gamma(0, 1) - spec.gamma(1, 0);
    return 4.0 * (std::abs(gm) + gp / 2.0 + uniform_gamma(spec));
}

real hilbert_denominator_diagonal_printed(const RelaxationSpec& spec)
{
    require_levels(spec, 2);
    const real gp = spec.gamma(0, 1) + spec.gamma(1, 0);
    return 4.0 * uniform_gamma(spec) + gp / 2.0;
}

real hilbert_denominator_three_level_printed(const RelaxationSpec& spec)
{
    require_levels(spec, 3);
    const real G = uniform_gamma(spec);
    const real g12 = spec.gamma(0, 1), g21 = spec.gamma(1, 0);
    const real g13 = spec.gamma(0, 2), g31 = spec.gamma(2, 0);
    const real g23 = spec.gamma(1, 2), g32 = spec.gamma(2, 1);
    const real ap = g12 + g21, am = g12 - g21;
    const real bp = g13 + g31, bm = g13 - g31;
    const real cp = g23 + g32, cm = g23 - g32;
    const real h1 = std::abs(G - ap / 6.0 - 2.0 / 3.0 * g13 - 2.0 / 3.0 * g23 - g31 / 6.0 - g32 / 6.0)
                    + std::sqrt(3.0) / 3.0 * std::abs(am - g31 + g32) + bp + std::abs(bm) + ap
                    + std::abs(am) + std::abs(G - ap / 2.0 - g31 / 2.0 - g32 / 2.0) + cp + std::abs(cm);
    return 4.0 * h1;
}

real spectral_norm_two_level_closed(const RelaxationSpec& spec)
{
    require_levels(spec, 2);
    const real gp = spec.gamma(0, 1) + spec.gamma(1, 0);
    const real gm = spec.gamma(0, 1) - spec.gamma(1, 0);
    return std::max(2.0 * uniform_gamma(spec), gp + std::sqrt(gp * gp + gm * gm));
}

Cubic characteristic_cubic(const RelaxationSpec& spec)
{
    require_levels(spec, 3);
    // population block of L_D + L_D^dagger
    Matrix p = Matrix::Zero(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) {
                p(i, j) += spec.gamma(i, j);
                p(j, j) -= spec.gamma(i, j);
            }
    const CMatrix m = I1 * (p + p.transpose()).cast<complex>();
    // det(z - M) = z^3 - tr(M) z^2 + c_2 z - det(M)
    complex c2 = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            c2 += m(i, i) * m(j, j) - m(i, j) * m(j, i);
    return {-0.5 * m.determinant(), 0.5 * c2, -0.5 * m.trace(), complex{0.5, 0.0}};
}

Cubic characteristic_cubic_printed(const RelaxationSpec& spec)
{
    require_levels(spec, 3);
    const real g12 = spec.gamma(0, 1), g21 = spec.gamma(1, 0);
    const real g13 = spec.gamma(0, 2), g31 = spec.gamma(2, 0);
    const real g23 = spec.gamma(1, 2), g32 = spec.gamma(2, 1);
    const real ap = g12 + g21, bp = g13 + g31, cp = g23 + g32;
    // "++" read as "+"; line breaks without an operator read as "+"
    const real a1 = 0.5 * g12 * g12 - g12 * (2 * g13 + g21 + 2 * g23 + 2 * g31) + 0.5 * g13 * g13
                    - (2 * g21 + g31 + 2 * g32) * g13 + 0.5 * g21 * g21 - 2 * cp * g21 + 0.5 * g23 * g23
                    - (2 * g31 + g32) * g23 + 0.5 * g31 * g31 - 2 * g31 * g32 + 0.5 * g32 * g32;
    const complex a0 = I1 * (g13 + g23) * g12 * g12
                       + (I1 * g13 * g13 + I1 * (-2 * g21 + g23 - 2 * g32 + g32) * g13 - 2.0 * I1 * g21 * g23
                          - 3.0 * I1 * (g23 - g31 / 3.0 - g32 / 3.0) * g31)
                             * g12
                       + I1 * g13 * g13 * g32
                       + (I1 * g21 * g21 + I1 * (g23 - 3 * g32) * g21 - 2.0 * I1 * g31 * g32) * g13
                       + I1 * (g21 + g31) * (g21 * g23 + g23 * g23 - 2 * g23 * g32 + g32 * (g31 + g32));
    return {a0, complex{a1, 0.0}, I1 * (ap + bp + cp), complex{0.5, 0.0}};
}

std::vector<complex> cubic_roots(const Cubic& c)
{
    if (std::abs(c[3]) == 0.0)
        throw Error(ErrorCode::domain, "leading coefficient is zero");
    CMatrix comp = CMatrix::Zero(3, 3);
    comp(1, 0) = 1.0;
    comp(2, 1) = 1.0;
    for (int k = 0; k < 3; ++k)
        comp(k, 2) = -c[static_cast<std::size_t>(k)] / c[3];
    const Eigen::ComplexEigenSolver<CMatrix> eig(comp, false);
    std::vector<complex> roots(3);
    for (int k = 0; k < 3; ++k)
        roots[static_cast<std::size_t>(k)] = eig.eigenvalues()(k);
    return roots;
}

real spectral_norm_from_polynomial(const RelaxationSpec& spec)
{
    real best = 0.0;
    for (const complex& z : cubic_roots(characteristic_cubic(spec)))
        best = std::max(best, std::abs(z));
    const int n = spec.n_levels();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            best = std::max(best, 2.0 * spec.effective_dephasing(i, j));
    return best;
}

BoundReport bound_report(const RelaxationSpec& spec, std::optional<real> p_initial,
                         std::optional<real> p_final)
{
    BoundReport r;
    r.n_levels = spec.n_levels();
    r.p_initial = p_initial.value_or(1.0);
    r.p_final = p_final.value_or(1.0 / r.n_levels);
    r.log_purity_ratio = log_ratio(r.p_initial, r.p_final);
    r.t_H = t_hilbert(build_a_matrix(spec), r.p_initial, r.p_final);
    if (r.n_levels == 2)
        r.t_H_diagonal_basis = t_hilbert_diagonal_basis(spec, r.p_initial, r.p_final);
    const auto l = t_liouville(spec, r.p_initial, r.p_final);
    r.t_L = l.t_L;
    r.spectral_norm = l.spectral_norm;
    return r;
}

void to_json(nlohmann::json& j, const BoundReport& r)
{
    j = nlohmann::json{{"n_levels", r.n_levels},
                       {"p_initial", r.p_initial},
                       {"p_final", r.p_final},
                       {"t_H", r.t_H},
                       {"t_L", r.t_L},
                       {"spectral_norm", r.spectral_norm},
                       {"log_purity_ratio", r.log_purity_ratio}};
    j["t_H_diagonal_basis"] = r.t_H_diagonal_basis ? nlohmann::json(*r.t_H_diagonal_basis) : nlohmann::json(nullptr);
}

void write_ratio_sweep_csv(std::ostream& out, const std::vector<RatioRow>& rows)
{
    CsvWriter csv(out, {"gamma", "t_ms", "t_h", "t_l", "ratio_h", "ratio_l", "n_levels"});
    for (const auto& r : rows)
        csv.raw_row({format_real(r.gamma), format_real(r.t_ms), format_real(r.t_h), format_real(r.t_l),
                     format_real(r.t_ms / r.t_h), format_real(r.t_ms / r.t_l), std::to_string(r.n_levels)});
}

} // namespace psl::bounds
