#include "psl/pauli_basis.hpp"

#include <cmath>
#include <string>

namespace psl {

PauliBasis::PauliBasis(int n_levels) : n_levels_(n_levels)
{
    if (n_levels < 2)
        throw Error(ErrorCode::invalid_dimension,
                    "basis needs at least two levels, got " + std::to_string(n_levels));

    const int n = n_levels;
    const real inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const complex i(0.0, 1.0);
    elements_.reserve(static_cast<std::size_t>(n * n - 1));

    for (int m = 0; m < n; ++m) {
        for (int k = m + 1; k < n; ++k) {
            CMatrix x = CMatrix::Zero(n, n);
            x(m, k) = inv_sqrt2;
            x(k, m) = inv_sqrt2;
            elements_.push_back(std::move(x));

            CMatrix y = CMatrix::Zero(n, n);
            y(m, k) = -i * inv_sqrt2;
            y(k, m) = i * inv_sqrt2;
            elements_.push_back(std::move(y));
        }
    }

    for (int m = 1; m < n; ++m) {
        const real norm = 1.0 / std::sqrt(static_cast<real>(m + m * m));
        CMatrix z = CMatrix::Zero(n, n);
        for (int k = 0; k < m; ++k)
            z(k, k) = norm;
        z(m, m) = -static_cast<real>(m) * norm;
        elements_.push_back(std::move(z));
    }
}

int PauliBasis::offdiagonal_index(int m, int n) const
{
    if (m < 0 || n >= n_levels_ || m >= n)
        throw Error(ErrorCode::invalid_dimension, "off-diagonal index requires 0 <= m < n < N");
    // pairs (0,1), (0,2), ..., (0,N-1), (1,2), ...
    int pair = 0;
    for (int r = 0; r < m; ++r)
        pair += n_levels_ - 1 - r;
    pair += n - m - 1;
    return 2 * pair;
}

PauliBasis build_pauli_basis(int n_levels) { return PauliBasis(n_levels); }

} // namespace psl
