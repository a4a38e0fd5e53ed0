#include "psl/relaxation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace psl {

namespace {

real scale_of(const Matrix& a, const Matrix& b)
{
    return std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
}

Matrix centered_gram(const Matrix& d)
{
    const auto n = d.rows();
    const Matrix j = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<real>(n));
    return -j * d * j;
}

// Triangle-type constraint on sqrt(rates) for the three coherences of a
// three-level system; equivalent to positivity of the centered Gram matrix.
bool three_level_dephasing_ok(const Matrix& d, real tol)
{
    const std::array<real, 3> r{d(0, 1), d(0, 2), d(1, 2)};
    for (int a = 0; a < 3; ++a) {
        const real b = std::sqrt(r[static_cast<std::size_t>((a + 1) % 3)]);
        const real c = std::sqrt(r[static_cast<std::size_t>((a + 2) % 3)]);
        const real lo = (b - c) * (b - c);
        const real hi = (b + c) * (b + c);
        const real v = r[static_cast<std::size_t>(a)];
        if (v < lo - tol || v > hi + tol)
            return false;
    }
    return true;
}

} // namespace

RelaxationSpec::RelaxationSpec(Matrix gamma, Matrix pure_dephasing)
    : gamma_(std::move(gamma)), pure_dephasing_(std::move(pure_dephasing))
{
    const auto n = gamma_.rows();
    if (n < 2 || gamma_.cols() != n)
        throw Error(ErrorCode::invalid_dimension, "gamma must be an N x N matrix with N >= 2");
    if (pure_dephasing_.rows() != n || pure_dephasing_.cols() != n)
        throw Error(ErrorCode::invalid_dimension, "pure_dephasing must match gamma in size");

    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const real g = gamma_(i, j);
            const real d = pure_dephasing_(i, j);
            if (!std::isfinite(g) || !std::isfinite(d))
                throw Error(ErrorCode::invalid_rates, "rates must be finite");
            if (g < 0.0 || d < 0.0)
                throw Error(ErrorCode::invalid_rates, "rates must be non-negative");
            if (i == j && (g != 0.0 || d != 0.0))
                throw Error(ErrorCode::invalid_rates, "diagonal rate entries must be zero");
        }
    }

    const real scale = scale_of(gamma_, pure_dephasing_);
    if ((pure_dephasing_ - pure_dephasing_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw Error(ErrorCode::invalid_rates, "pure_dephasing must be symmetric");
    pure_dephasing_ = 0.5 * (pure_dephasing_ + pure_dephasing_.transpose()).eval();

    if (n == 3 && !three_level_dephasing_ok(pure_dephasing_, 1e-12 * scale))
        throw Error(ErrorCode::invalid_rates,
                    "three-level pure dephasing rates violate (sqrt(b)-sqrt(c))^2 <= a <= (sqrt(b)+sqrt(c))^2");

    const Eigen::SelfAdjointEigenSolver<Matrix> eig(centered_gram(pure_dephasing_));
    if (eig.eigenvalues().minCoeff() < -1e-12 * scale)
        throw Error(ErrorCode::invalid_rates,
                    "pure dephasing rates cannot be realized by diagonal jump operators");
}

RelaxationSpec RelaxationSpec::with_uniform_dephasing(const Matrix& gamma, real dephasing)
{
    const auto n = gamma.rows();
    if (n < 2 || gamma.cols() != n)
        throw Error(ErrorCode::invalid_dimension, "gamma must be an N x N matrix with N >= 2");
    Matrix pure = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j)
                continue;
            const real decay = 0.5 * (gamma.col(i).sum() + gamma.col(j).sum());
            real d = dephasing - decay;
            if (d < 0.0 && d > -1e-14 * std::max(1.0, dephasing))
                d = 0.0;
            if (d < 0.0)
                throw Error(ErrorCode::invalid_rates,
                            "dephasing rate " + std::to_string(dephasing)
                                + " is below the population-induced decay "
                                + std::to_string(decay));
            pure(i, j) = d;
        }
    }
    return RelaxationSpec(gamma, pure);
}

real RelaxationSpec::effective_dephasing(int i, int j) const
{
    return pure_dephasing_(i, j) + population_decay(i, j);
}

Matrix RelaxationSpec::effective_dephasing() const
{
    const int n = n_levels();
    Matrix out = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j)
                out(i, j) = effective_dephasing(i, j);
    return out;
}

std::optional<real> RelaxationSpec::uniform_dephasing(real rel_tol) const
{
    const real first = effective_dephasing(0, 1);
    for (int i = 0; i < n_levels(); ++i)
        for (int j = i + 1; j < n_levels(); ++j)
            if (std::abs(effective_dephasing(i, j) - first) > rel_tol * std::max(1.0, std::abs(first)))
                return std::nullopt;
    return first;
}

real RelaxationSpec::max_rate() const
{
    return std::max(gamma_.maxCoeff(), effective_dephasing().maxCoeff());
}

Matrix RelaxationSpec::dephasing_gram() const { return centered_gram(pure_dephasing_); }

bool RelaxationSpec::near_dephasing_boundary(real tol) const
{
    if (pure_dephasing_.cwiseAbs().maxCoeff() == 0.0)
        return false;
    const real scale = scale_of(gamma_, pure_dephasing_);
    if (n_levels() == 3 && !three_level_dephasing_ok(pure_dephasing_, -tol * scale))
        return true;
    // All off-diagonal pairs: the strict interior has N-1 positive Gram eigenvalues.
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(dephasing_gram());
    return eig.eigenvalues()(1) < tol * scale;
}

void to_json(nlohmann::json& j, const RelaxationSpec& spec)
{
    const int n = spec.n_levels();
    auto rows = [n](const Matrix& m) {
        nlohmann::json out = nlohmann::json::array();
        for (int i = 0; i < n; ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (int k = 0; k < n; ++k)
                row.push_back(m(i, k));
            out.push_back(row);
        }
        return out;
    };
    j = nlohmann::json{{"n_levels", n},
                       {"gamma", rows(spec.gamma())},
                       {"pure_dephasing", rows(spec.pure_dephasing())}};
}

RelaxationSpec relaxation_from_json(const nlohmann::json& j)
{
    const int n = j.at("n_levels").get<int>();
    if (n < 2)
        throw Error(ErrorCode::invalid_dimension, "n_levels must be >= 2");
    auto read = [n](const nlohmann::json& rows, const char* name) {
        if (!rows.is_array() || static_cast<int>(rows.size()) != n)
            throw Error(ErrorCode::invalid_dimension, std::string(name) + " must have n_levels rows");
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) {
            const auto& row = rows[static_cast<std::size_t>(i)];
            if (!row.is_array() || static_cast<int>(row.size()) != n)
                throw Error(ErrorCode::invalid_dimension, std::string(name) + " must be square");
            for (int k = 0; k < n; ++k)
                m(i, k) = row[static_cast<std::size_t>(k)].get<real>();
        }
        return m;
    };
    return RelaxationSpec(read(j.at("gamma"), "gamma"), read(j.at("pure_dephasing"), "pure_dephasing"));
}

} // namespace psl
