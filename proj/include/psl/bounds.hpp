#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "psl/relaxation.hpp"
#include "psl/types.hpp"

namespace psl::bounds {

enum class BasisTag { normalized_pauli, diagonal_lindblad };

const char* to_string(BasisTag tag);

/**
 * Kossakowski matrix of the dissipator, L_D(rho) = sum_{lm} a_lm (V_l rho V_m^dagger
 * - {V_m^dagger V_l, rho} / 2), in a declared operator basis. For the
 * normalized Pauli basis the operators are the basis elements in the
 * library ordering; for the diagonal Lindblad form they are the jump
 * operators of the model and a is diagonal.
 */
struct AMatrix {
    int n_levels = 0;
    CMatrix entries;
    BasisTag basis_tag = BasisTag::normalized_pauli;
    /// Frobenius norm of each basis operator.
    Vector operator_norms;
};

AMatrix build_a_matrix(const RelaxationSpec& spec, BasisTag tag = BasisTag::normalized_pauli);

/// 4 sum_{k,k'} |a_kk'| |V_k| |V_k'|.
real hilbert_denominator(const AMatrix& a);

/// |ln(p_final / p_initial)| / hilbert_denominator; +inf without dissipation.
real t_hilbert(const AMatrix& a, real p_initial, real p_final);

/// Hilbert bound from the diagonal (jump operator) form. Two levels only.
real t_hilbert_diagonal_basis(const RelaxationSpec& spec, real p_initial, real p_final);

/// Column-stacked N^2 x N^2 superoperator of the dissipator.
CMatrix dissipator_superoperator(const RelaxationSpec& spec);

struct LiouvilleBound {
    real t_L = 0.0;
    real spectral_norm = 0.0;
    /// Eigenvalues of H - H^dagger, H = i L_D (purely imaginary).
    CVector eigenvalues;
};

/// |ln(p_final / p_initial)| / |H - H^dagger|_SP, the norm taken as the
/// largest singular value. +inf without dissipation.
LiouvilleBound t_liouville(const RelaxationSpec& spec, real p_initial, real p_final);

struct AsymptoticBounds {
    real t_H = 0.0;
    real t_L = 0.0;
};

/// ln(N) / (2^N Gamma) and ln(N) / (2 Gamma).
AsymptoticBounds asymptotic_bounds(int n_levels, real gamma);

// Printed closed forms for two and three levels ---------------------------

/// Operator ordering used by the printed matrices, as library basis indices.
/// Two levels: (z, x, y). Three levels: (z1, x12, y12, x13, y13, z2, x23, y23).
std::vector<int> printed_ordering(int n_levels);

/// The printed a-matrix, transcribed literally, in printed_ordering. Needs
/// uniform dephasing.
CMatrix printed_a_matrix(const RelaxationSpec& spec);

/// The generic a-matrix permuted into printed_ordering.
CMatrix generic_a_matrix_printed_order(const RelaxationSpec& spec);

struct EntryDiff {
    int row = 0;
    int col = 0;
    complex printed;
    complex generic;
};

/// Entries where the printed and the generic matrix differ by more than tol.
std::vector<EntryDiff> diff_printed_a_matrix(const RelaxationSpec& spec, real tol = 1e-12);

/// 4 [Gamma + gamma_+/2 + |gamma_-|] for two levels.
real hilbert_denominator_two_level_printed(const RelaxationSpec& spec);
/// 4 Gamma + gamma_+/2, the printed diagonal-basis denominator.
real hilbert_denominator_diagonal_printed(const RelaxationSpec& spec);
/// 4 |h|_1 from the printed three-level expression.
real hilbert_denominator_three_level_printed(const RelaxationSpec& spec);

/// max(2 Gamma, gamma_+ + sqrt(gamma_+^2 + gamma_-^2)).
real spectral_norm_two_level_closed(const RelaxationSpec& spec);

/// Coefficients (A_0, A_1, A_2, A_3) of the cubic factor of the characteristic
/// polynomial of H - H^dagger for three levels.
using Cubic = std::array<complex, 4>;

/// Computed from the population block of the constructed superoperator.
Cubic characteristic_cubic(const RelaxationSpec& spec);
/// Transcribed from the printed expressions.
Cubic characteristic_cubic_printed(const RelaxationSpec& spec);

/// Roots of A_3 z^3 + A_2 z^2 + A_1 z + A_0 via the companion matrix.
std::vector<complex> cubic_roots(const Cubic& c);

/// Largest |root| of cubic * prod_{i<j} (z + 2i Gamma_ij)^2.
real spectral_norm_from_polynomial(const RelaxationSpec& spec);

struct BoundReport {
    int n_levels = 0;
    real p_initial = 1.0;
    real p_final = 0.5;
    real t_H = 0.0;
    std::optional<real> t_H_diagonal_basis;
    real t_L = 0.0;
    real spectral_norm = 0.0;
    real log_purity_ratio = 0.0;
};

/// Both bounds; purity endpoints default to (1, 1/N).
BoundReport bound_report(const RelaxationSpec& spec, std::optional<real> p_initial = {},
                         std::optional<real> p_final = {});

void to_json(nlohmann::json& j, const BoundReport& report);

struct RatioRow {
    real gamma;
    real t_ms;
    real t_h;
    real t_l;
    int n_levels;
};

/// Columns gamma,t_ms,t_h,t_l,ratio_h,ratio_l,n_levels.
void write_ratio_sweep_csv(std::ostream& out, const std::vector<RatioRow>& rows);

} // namespace psl::bounds
