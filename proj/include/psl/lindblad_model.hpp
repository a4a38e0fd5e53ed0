#pragma once

#include <span>
#include <vector>

#include "psl/pauli_basis.hpp"
#include "psl/relaxation.hpp"
#include "psl/types.hpp"

namespace psl {

/// Coherence vector s = (s_o, s_d) of an N-level density matrix.
class CoherenceState {
public:
    CoherenceState(int n_levels, Vector s);
    static CoherenceState from_blocks(int n_levels, const Vector& s_o, const Vector& s_d);
    static CoherenceState maximally_mixed(int n_levels);

    int n_levels() const noexcept { return n_levels_; }
    const Vector& vector() const noexcept { return s_; }
    Vector& vector() noexcept { return s_; }

    auto s_o() const { return s_.head(n_levels_ * n_levels_ - n_levels_); }
    auto s_d() const { return s_.tail(n_levels_ - 1); }

    /// p_o = |s_o|^2 and p_d = |s_d|^2.
    real p_o() const { return s_o().squaredNorm(); }
    real p_d() const { return s_d().squaredNorm(); }

private:
    int n_levels_;
    Vector s_;
};

/// Tr(rho^2) = 1/N + |s|^2.
real purity(const CoherenceState& state);

/// s_k = Tr(rho V_k). Throws Error(invalid_state) for a non-Hermitian or
/// non-unit-trace rho, or one with an eigenvalue below -positivity_tol.
CoherenceState rho_to_coherence(const CMatrix& rho, const PauliBasis& basis,
                                real positivity_tol = 1e-9);

/// rho = I/N + sum_k s_k V_k. Positivity of the result is not checked.
CMatrix coherence_to_rho(const CoherenceState& state, const PauliBasis& basis);

struct JumpOperator {
    real rate;
    CMatrix op;
};

/**
 * Lindblad dynamics in coherence-vector form,
 *
 *     ds/dt = q + R s + sum_k u_k A^(k) s,
 *
 * with R block diagonal (R_o on the off-diagonal block, R_d on the diagonal
 * block), q = (0, q_d), and each A^(k) skew-symmetric with a zero
 * diagonal-diagonal block. Immutable after construction.
 */
class LindbladModel {
public:
    LindbladModel(RelaxationSpec spec, std::vector<CMatrix> control_hamiltonians);

    const RelaxationSpec& spec() const noexcept { return spec_; }
    const PauliBasis& basis() const noexcept { return basis_; }
    int n_levels() const noexcept { return basis_.n_levels(); }
    int dim() const noexcept { return basis_.size(); }
    int n_off() const noexcept { return basis_.n_offdiagonal(); }
    int n_diag() const noexcept { return basis_.n_diagonal(); }
    int n_controls() const noexcept { return static_cast<int>(generators_.size()); }

    const Matrix& R() const noexcept { return R_; }
    const Vector& q() const noexcept { return q_; }
    Matrix R_o() const { return R_.topLeftCorner(n_off(), n_off()); }
    Matrix R_d() const { return R_.bottomRightCorner(n_diag(), n_diag()); }
    Vector q_d() const { return q_.tail(n_diag()); }

    const std::vector<Matrix>& generators() const noexcept { return generators_; }
    const std::vector<CMatrix>& control_hamiltonians() const noexcept { return hamiltonians_; }
    const std::vector<JumpOperator>& jump_operators() const noexcept { return jumps_; }

    /// L_D(rho) in diagonal (jump operator) form.
    CMatrix dissipator(const CMatrix& rho) const;

    /// R + sum_k u_k A^(k).
    Matrix generator(std::span<const real> controls) const;
    /// ds/dt at state s for constant controls u.
    Vector rate(const Vector& s, std::span<const real> controls) const;

private:
    RelaxationSpec spec_;
    PauliBasis basis_;
    std::vector<CMatrix> hamiltonians_;
    std::vector<JumpOperator> jumps_;
    std::vector<CMatrix> jump_products_; // L^dagger L
    Matrix R_;
    Vector q_;
    std::vector<Matrix> generators_;
};

LindbladModel build_lindblad_model(const RelaxationSpec& spec,
                                   const std::vector<CMatrix>& control_hamiltonians);

/// H_1 = sigma_x / 2, H_2 = sigma_y / 2: Bloch rotation with angular velocity (u_1, u_2, 0).
std::vector<CMatrix> bloch_controls();

/// Real and imaginary nearest-neighbour couplings |k><k+1| + h.c. and
/// i(|k><k+1| - h.c.), k = 1 ... N-1 (four real controls for three levels).
std::vector<CMatrix> ladder_controls(int n_levels);

/// One control per basis element; generates every rotation of the su(N)
/// adjoint orbit in arbitrarily short time.
std::vector<CMatrix> full_controls(int n_levels);

/// Fixed point of the free dynamics, R s = -q. Throws Error(domain) when R is singular.
CoherenceState equilibrium_state(const LindbladModel& model);

} // namespace psl
