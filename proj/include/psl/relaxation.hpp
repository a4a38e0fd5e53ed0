#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "psl/types.hpp"

namespace psl {

/**
 * Relaxation rates of an N-level system.
 *
 * gamma(i, j) is the population transfer rate from level j to level i
 * (jump operator |i><j|). pure_dephasing(i, j) is the symmetric extra decay
 * rate of the coherence rho_ij on top of the decay caused by population
 * transfer. The effective coherence decay rate is
 *
 *     Gamma_ij = pure_dephasing(i, j) + (out(i) + out(j)) / 2,
 *
 * out(k) being the total population loss rate of level k. For two levels
 * this is Gamma = pure_dephasing + (gamma_12 + gamma_21) / 2.
 *
 * Levels are 0-based in the API.
 */
class RelaxationSpec {
public:
    /// Validates and stores the rates; throws Error(invalid_rates) on violation.
    RelaxationSpec(Matrix gamma, Matrix pure_dephasing);

    /// Chooses the pure dephasing rates so that every coherence decays at `dephasing`.
    static RelaxationSpec with_uniform_dephasing(const Matrix& gamma, real dephasing);

    int n_levels() const noexcept { return static_cast<int>(gamma_.rows()); }
    const Matrix& gamma() const noexcept { return gamma_; }
    const Matrix& pure_dephasing() const noexcept { return pure_dephasing_; }
    real gamma(int i, int j) const { return gamma_(i, j); }

    /// Total population loss rate of level k.
    real out_rate(int k) const { return gamma_.col(k).sum(); }
    /// Coherence decay rate of rho_ij caused by population transfer alone.
    real population_decay(int i, int j) const { return 0.5 * (out_rate(i) + out_rate(j)); }
    real effective_dephasing(int i, int j) const;
    Matrix effective_dephasing() const;

    /// Common value of all effective dephasing rates, if they agree to `rel_tol`.
    std::optional<real> uniform_dephasing(real rel_tol = 1e-12) const;

    /// Largest rate of any kind, used as a characteristic inverse time.
    real max_rate() const;

    /**
     * Centered Gram matrix G = -J D J of the pure dephasing rates D
     * (J = I - 11^T/N). The pure dephasing part of the dissipator is
     * realized by diagonal jump operators diag(w_k) with rates kappa_k,
     * the eigenpairs of G, which makes rho_ij decay at exactly D_ij.
     */
    Matrix dephasing_gram() const;

    /// True when the dephasing rates sit within `tol` of the realizability boundary.
    bool near_dephasing_boundary(real tol = 1e-9) const;

private:
    Matrix gamma_;
    Matrix pure_dephasing_;
};

void to_json(nlohmann::json& j, const RelaxationSpec& spec);
RelaxationSpec relaxation_from_json(const nlohmann::json& j);

} // namespace psl
