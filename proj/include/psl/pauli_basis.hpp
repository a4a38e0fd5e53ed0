#pragma once

#include <vector>

#include "psl/types.hpp"

namespace psl {

/**
 * Orthonormal, traceless Hermitian operator basis of su(N) built from the
 * generalized Pauli (Gell-Mann) matrices.
 *
 * Ordering is fixed: for every level pair (m, n), m < n, in lexicographic
 * order the symmetric element x_{mn} is followed by the antisymmetric
 * element y_{mn}; the N - 1 diagonal elements z_1 ... z_{N-1} come last.
 * The first N^2 - N coordinates of a coherence vector are therefore the
 * off-diagonal block s_o and the last N - 1 the diagonal block s_d.
 *
 * The antisymmetric elements use the standard Pauli sign,
 * y_{mn} = -i (|m><n| - |n><m|) / sqrt(2), so that for N = 2 the basis is
 * exactly {sigma_x, sigma_y, sigma_z} / sqrt(2).
 */
class PauliBasis {
public:
    explicit PauliBasis(int n_levels);

    int n_levels() const noexcept { return n_levels_; }
    int size() const noexcept { return static_cast<int>(elements_.size()); }
    int n_offdiagonal() const noexcept { return n_levels_ * n_levels_ - n_levels_; }
    int n_diagonal() const noexcept { return n_levels_ - 1; }

    const CMatrix& operator[](int k) const { return elements_[static_cast<std::size_t>(k)]; }
    const std::vector<CMatrix>& elements() const noexcept { return elements_; }

    /// Index of x_{mn} (0-based levels, m < n); y_{mn} is the next index.
    int offdiagonal_index(int m, int n) const;
    /// Index of z_m, m = 1 ... N-1.
    int diagonal_index(int m) const { return n_offdiagonal() + m - 1; }

private:
    int n_levels_;
    std::vector<CMatrix> elements_;
};

PauliBasis build_pauli_basis(int n_levels);

} // namespace psl
