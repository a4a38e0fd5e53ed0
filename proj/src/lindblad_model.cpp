#include "psl/lindblad_model.hpp"

#include <cmath>
#include <string>

namespace psl {

CoherenceState::CoherenceState(int n_levels, Vector s) : n_levels_(n_levels), s_(std::move(s))
{
    if (n_levels < 2)
        throw Error(ErrorCode::invalid_dimension, "coherence state needs N >= 2");
    if (s_.size() != n_levels * n_levels - 1)
        throw Error(ErrorCode::invalid_dimension,
                    "coherence vector length " + std::to_string(s_.size()) + " does not match N^2-1 = "
                        + std::to_string(n_levels * n_levels - 1));
}

CoherenceState CoherenceState::from_blocks(int n_levels, const Vector& s_o, const Vector& s_d)
{
    if (s_o.size() != n_levels * n_levels - n_levels || s_d.size() != n_levels - 1)
        throw Error(ErrorCode::invalid_dimension, "coherence blocks have the wrong length");
    Vector s(s_o.size() + s_d.size());
    s << s_o, s_d;
    return CoherenceState(n_levels, std::move(s));
}

CoherenceState CoherenceState::maximally_mixed(int n_levels)
{
    return CoherenceState(n_levels, Vector::Zero(n_levels * n_levels - 1));
}

real purity(const CoherenceState& state)
{
    return 1.0 / static_cast<real>(state.n_levels()) + state.vector().squaredNorm();
}

CoherenceState rho_to_coherence(const CMatrix& rho, const PauliBasis& basis, real positivity_tol)
{
    const int n = basis.n_levels();
    if (rho.rows() != n || rho.cols() != n)
        throw Error(ErrorCode::invalid_dimension, "density matrix does not match basis dimension");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-9)
        throw Error(ErrorCode::invalid_state, "density matrix is not Hermitian");
    const complex tr = rho.trace();
    if (std::abs(tr - 1.0) > 1e-9)
        throw Error(ErrorCode::invalid_state,
                    "density matrix trace " + std::to_string(tr.real()) + " deviates from 1");
    const Eigen::SelfAdjointEigenSolver<CMatrix> eig(rho, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -positivity_tol)
        throw Error(ErrorCode::invalid_state, "density matrix is not positive semidefinite");

    Vector s(basis.size());
    for (int k = 0; k < basis.size(); ++k)
        s(k) = (rho * basis[k]).trace().real();
    return CoherenceState(n, std::move(s));
}

CMatrix coherence_to_rho(const CoherenceState& state, const PauliBasis& basis)
{
    const int n = basis.n_levels();
    if (state.n_levels() != n)
        throw Error(ErrorCode::invalid_dimension, "state does not match basis dimension");
    CMatrix rho = CMatrix::Identity(n, n) / static_cast<real>(n);
    for (int k = 0; k < basis.size(); ++k)
        rho += state.vector()(k) * basis[k];
    return rho;
}

namespace {

std::vector<JumpOperator> jump_operators_for(const RelaxationSpec& spec)
{
    const int n = spec.n_levels();
    std::vector<JumpOperator> jumps;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j || spec.gamma(i, j) == 0.0)
                continue;
            CMatrix op = CMatrix::Zero(n, n);
            op(i, j) = 1.0;
            jumps.push_back({spec.gamma(i, j), std::move(op)});
        }
    }

    const Eigen::SelfAdjointEigenSolver<Matrix> eig(spec.dephasing_gram());
    const real cutoff = 1e-14 * std::max(1.0, spec.max_rate());
    for (int k = 0; k < n; ++k) {
        const real kappa = eig.eigenvalues()(k);
        if (kappa <= cutoff)
            continue;
        CMatrix op = CMatrix::Zero(n, n);
        op.diagonal() = eig.eigenvectors().col(k).cast<complex>();
        jumps.push_back({kappa, std::move(op)});
    }
    return jumps;
}

} // namespace

LindbladModel::LindbladModel(RelaxationSpec spec, std::vector<CMatrix> control_hamiltonians)
    : spec_(std::move(spec)),
      basis_(spec_.n_levels()),
      hamiltonians_(std::move(control_hamiltonians)),
      jumps_(jump_operators_for(spec_))
{
    const int n = basis_.n_levels();
    const int d = basis_.size();

    for (const auto& h : hamiltonians_) {
        if (h.rows() != n || h.cols() != n)
            throw Error(ErrorCode::invalid_dimension, "control Hamiltonian has the wrong dimension");
        if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
            throw Error(ErrorCode::invalid_state, "control Hamiltonian is not Hermitian");
    }

    jump_products_.reserve(jumps_.size());
    for (const auto& j : jumps_)
        jump_products_.push_back(j.op.adjoint() * j.op);

    R_ = Matrix::Zero(d, d);
    q_ = Vector::Zero(d);
    const CMatrix mixed_image = dissipator(CMatrix::Identity(n, n) / static_cast<real>(n));
    std::vector<CMatrix> images;
    images.reserve(static_cast<std::size_t>(d));
    for (int l = 0; l < d; ++l)
        images.push_back(dissipator(basis_[l]));
    for (int k = 0; k < d; ++k) {
        q_(k) = (basis_[k] * mixed_image).trace().real();
        for (int l = 0; l < d; ++l)
            R_(k, l) = (basis_[k] * images[static_cast<std::size_t>(l)]).trace().real();
    }

    // Every coherence decays independently at its effective dephasing rate.
    // Replace the projected R_o block by its exact diagonal form after
    // checking agreement, so equal rates give R_o = -Gamma I exactly.
    const int n_off = basis_.n_offdiagonal();
    Matrix exact_ro = Matrix::Zero(n_off, n_off);
    for (int m = 0; m < n; ++m) {
        for (int k = m + 1; k < n; ++k) {
            const int idx = basis_.offdiagonal_index(m, k);
            exact_ro(idx, idx) = -spec_.effective_dephasing(m, k);
            exact_ro(idx + 1, idx + 1) = -spec_.effective_dephasing(m, k);
        }
    }
    const real scale = std::max(1.0, spec_.max_rate());
    if ((R_.topLeftCorner(n_off, n_off) - exact_ro).cwiseAbs().maxCoeff() > 1e-9 * scale
        || R_.topRightCorner(n_off, d - n_off).cwiseAbs().maxCoeff() > 1e-9 * scale
        || R_.bottomLeftCorner(d - n_off, n_off).cwiseAbs().maxCoeff() > 1e-9 * scale
        || q_.head(n_off).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw Error(ErrorCode::invalid_rates, "dissipator does not decouple off-diagonal coordinates");
    R_.topLeftCorner(n_off, n_off) = exact_ro;
    R_.topRightCorner(n_off, d - n_off).setZero();
    R_.bottomLeftCorner(d - n_off, n_off).setZero();
    q_.head(n_off).setZero();

    const complex minus_i(0.0, -1.0);
    generators_.reserve(hamiltonians_.size());
    for (const auto& h : hamiltonians_) {
        Matrix a(d, d);
        for (int m = 0; m < d; ++m) {
            const CMatrix comm = minus_i * (h * basis_[m] - basis_[m] * h);
            for (int l = 0; l < d; ++l)
                a(l, m) = (basis_[l] * comm).trace().real();
        }
        // Tr(V_l [H, V_m]) is antisymmetric in (l, m) up to roundoff.
        a = 0.5 * (a - a.transpose()).eval();
        a.bottomRightCorner(d - n_off, d - n_off).setZero();
        generators_.push_back(std::move(a));
    }
}

CMatrix LindbladModel::dissipator(const CMatrix& rho) const
{
    CMatrix out = CMatrix::Zero(rho.rows(), rho.cols());
    for (std::size_t k = 0; k < jumps_.size(); ++k) {
        const auto& l = jumps_[k].op;
        const auto& ldl = jump_products_[k];
        out += jumps_[k].rate * (l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl));
    }
    return out;
}

Matrix LindbladModel::generator(std::span<const real> controls) const
{
    if (static_cast<int>(controls.size()) != n_controls())
        throw Error(ErrorCode::invalid_dimension, "control vector length does not match model");
    Matrix g = R_;
    for (std::size_t k = 0; k < controls.size(); ++k)
        if (controls[k] != 0.0)
            g += controls[k] * generators_[k];
    return g;
}

Vector LindbladModel::rate(const Vector& s, std::span<const real> controls) const
{
    Vector ds = q_ + R_ * s;
    for (std::size_t k = 0; k < controls.size(); ++k)
        if (controls[k] != 0.0)
            ds += controls[k] * (generators_[k] * s);
    return ds;
}

LindbladModel build_lindblad_model(const RelaxationSpec& spec,
                                   const std::vector<CMatrix>& control_hamiltonians)
{
    return LindbladModel(spec, control_hamiltonians);
}

std::vector<CMatrix> bloch_controls()
{
    const PauliBasis basis(2);
    const real half_sqrt2 = std::sqrt(2.0) / 2.0;
    // basis elements are sigma / sqrt(2)
    return {half_sqrt2 * basis[0], half_sqrt2 * basis[1]};
}

std::vector<CMatrix> ladder_controls(int n_levels)
{
    if (n_levels < 2)
        throw Error(ErrorCode::invalid_dimension, "ladder controls need N >= 2");
    const complex i(0.0, 1.0);
    std::vector<CMatrix> out;
    for (int k = 0; k + 1 < n_levels; ++k) {
        CMatrix re = CMatrix::Zero(n_levels, n_levels);
        re(k, k + 1) = 1.0;
        re(k + 1, k) = 1.0;
        CMatrix im = CMatrix::Zero(n_levels, n_levels);
        im(k, k + 1) = i;
        im(k + 1, k) = -i;
        out.push_back(std::move(re));
        out.push_back(std::move(im));
    }
    return out;
}

std::vector<CMatrix> full_controls(int n_levels)
{
    const PauliBasis basis(n_levels);
    return basis.elements();
}

CoherenceState equilibrium_state(const LindbladModel& model)
{
    const Eigen::FullPivLU<Matrix> lu(model.R());
    if (!lu.isInvertible())
        throw Error(ErrorCode::domain, "free dynamics have no unique equilibrium");
    return CoherenceState(model.n_levels(), lu.solve(-model.q()));
}

} // namespace psl
