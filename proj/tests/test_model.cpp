#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "psl/csv.hpp"
#include "psl/lindblad_model.hpp"
#include "psl/ode.hpp"
#include "psl/pauli_basis.hpp"
#include "psl/propagate.hpp"
#include "psl/relaxation.hpp"

using namespace psl;

namespace {

// Controlled three-level equations written out by hand, with H_12 = u1 + i u2,
// H_23 = v1 + i v2, uniform dephasing Gamma and 1-based rates g[i][j].
Vector three_level_rhs(const Vector& s, real u1, real u2, real v1, real v2, real G, const Matrix& gm)
{
    auto g = [&](int i, int j) { return gm(i - 1, j - 1); };
    const real r3 = std::sqrt(3.0);
    Vector d(8);
    // s(0..7) are s_1 ... s_8
    const real s1 = s(0), s2 = s(1), s3 = s(2), s4 = s(3), s5 = s(4), s6 = s(5), s7 = s(6), s8 = s(7);
    d(0) = -2 * u2 * s7 + v1 * s4 + v2 * s3 - G * s1;
    d(1) = -2 * u1 * s7 - v1 * s3 + v2 * s4 - G * s2;
    d(2) = u2 * s5 - u1 * s6 - v2 * s1 + v1 * s2 - G * s3;
    d(3) = -v1 * s1 - v2 * s2 + u1 * s5 + u2 * s6 - G * s4;
    d(4) = -u1 * s4 - u2 * s3 + v2 * (-r3 * s8 + s7) - G * s5;
    d(5) = u1 * s3 - u2 * s4 + v1 * (s7 - r3 * s8) - G * s6;
    const real L7 = (-2 * g(2, 1) - g(3, 1) + 2 * g(1, 2) + g(3, 2) + g(1, 3) - g(2, 3)) / (3 * std::sqrt(2.0))
                  + s7 / 2 * (-2 * g(2, 1) - g(3, 1) - 2 * g(1, 2) - g(3, 2))
                  + s8 / (2 * r3) * (-2 * g(2, 1) - g(3, 1) + 2 * g(1, 2) + g(3, 2) - 2 * g(1, 3) + 2 * g(2, 3));
    const real L8 = (-g(3, 1) - g(3, 2) + g(1, 3) + g(2, 3)) / std::sqrt(6.0)
                  + r3 / 2 * s7 * (-g(3, 1) + g(3, 2))
                  + s8 / 2 * (-g(3, 1) - g(3, 2) - 2 * g(1, 3) - 2 * g(2, 3));
    d(6) = 2 * u1 * s2 + 2 * u2 * s1 - v1 * s6 - v2 * s5 + L7;
    d(7) = r3 * v1 * s6 + r3 * v2 * s5 + L8;
    return d;
}

Vector random_vector(std::mt19937_64& rng, int n, real scale = 1.0)
{
    std::normal_distribution<real> g(0.0, scale);
    Vector v(n);
    for (int i = 0; i < n; ++i)
        v(i) = g(rng);
    return v;
}

} // namespace

TEST_SUITE("model") {

TEST_CASE("basis is orthonormal, traceless and Hermitian")
{
    for (int n = 2; n <= 5; ++n) {
        const PauliBasis b(n);
        REQUIRE(b.size() == n * n - 1);
        for (int k = 0; k < b.size(); ++k) {
            CHECK(std::abs(b[k].trace()) < 1e-14);
            CHECK((b[k] - b[k].adjoint()).norm() < 1e-14);
            for (int l = 0; l < b.size(); ++l)
                CHECK(std::abs((b[k] * b[l]).trace() - complex(k == l ? 1.0 : 0.0)) < 1e-14);
        }
    }
    CHECK_THROWS_AS(PauliBasis(1), Error);
    try {
        PauliBasis bad(1);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_dimension);
    }
}

TEST_CASE("two-level basis is the Pauli matrices over sqrt 2")
{
    const PauliBasis b(2);
    const real r = 1.0 / std::sqrt(2.0);
    CMatrix sx(2, 2), sy(2, 2), sz(2, 2);
    sx << 0, 1, 1, 0;
    sy << 0, complex(0, -1), complex(0, 1), 0;
    sz << 1, 0, 0, -1;
    CHECK((b[0] - r * sx).norm() < 1e-15);
    CHECK((b[1] - r * sy).norm() < 1e-15);
    CHECK((b[2] - r * sz).norm() < 1e-15);
}

TEST_CASE("three-level coordinates match the explicit list")
{
    std::mt19937_64 rng(11);
    const PauliBasis b(3);
    for (int trial = 0; trial < 20; ++trial) {
        const CMatrix rho = oracle::random_density(rng, 3);
        const Vector s = rho_to_coherence(rho, b).vector();
        const complex i(0, 1);
        const real r2 = std::sqrt(2.0), r6 = std::sqrt(6.0);
        CHECK(std::abs(s(0) - ((rho(0, 1) + rho(1, 0)) / r2).real()) < 1e-14);
        CHECK(std::abs(s(1) - (i * (rho(0, 1) - rho(1, 0)) / r2).real()) < 1e-14);
        CHECK(std::abs(s(2) - ((rho(0, 2) + rho(2, 0)) / r2).real()) < 1e-14);
        CHECK(std::abs(s(3) - (i * (rho(0, 2) - rho(2, 0)) / r2).real()) < 1e-14);
        CHECK(std::abs(s(4) - ((rho(1, 2) + rho(2, 1)) / r2).real()) < 1e-14);
        CHECK(std::abs(s(5) - (i * (rho(1, 2) - rho(2, 1)) / r2).real()) < 1e-14);
        CHECK(std::abs(s(6) - ((rho(0, 0) - rho(1, 1)) / r2).real()) < 1e-14);
        CHECK(std::abs(s(7) - ((rho(0, 0) + rho(1, 1) - 2.0 * rho(2, 2)) / r6).real()) < 1e-14);
        CHECK((s - oracle::coherence(rho)).norm() < 1e-14);
    }
    CHECK(b.offdiagonal_index(0, 1) == 0);
    CHECK(b.offdiagonal_index(0, 2) == 2);
    CHECK(b.offdiagonal_index(1, 2) == 4);
    CHECK(b.diagonal_index(1) == 6);
    CHECK(b.diagonal_index(2) == 7);
}

TEST_CASE("embedding round trip and purity")
{
    std::mt19937_64 rng(12);
    for (int n = 2; n <= 4; ++n) {
        const PauliBasis b(n);
        const CoherenceState mixed = rho_to_coherence(CMatrix::Identity(n, n) / real(n), b);
        CHECK(mixed.vector().norm() < 1e-15);
        for (int trial = 0; trial < 100; ++trial) {
            const CMatrix rho = oracle::random_density(rng, n);
            const CoherenceState s = rho_to_coherence(rho, b);
            CHECK((coherence_to_rho(s, b) - rho).norm() < 1e-13);
            CHECK(std::abs(purity(s) - (rho * rho).trace().real()) < 1e-12);
        }
    }
    const PauliBasis b3(3);
    CHECK(purity(CoherenceState::maximally_mixed(3)) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    Vector s(8);
    s.setZero();
    s(0) = std::sqrt(2.0 / 3.0);
    CHECK(purity(CoherenceState(3, s)) == doctest::Approx(1.0).epsilon(1e-15));

    CMatrix diag = CMatrix::Zero(3, 3);
    diag(0, 0) = 0.1364;
    diag(1, 1) = 0.4091;
    diag(2, 2) = 0.4545;
    const CoherenceState st = rho_to_coherence(diag, b3);
    CHECK(st.p_o() == 0.0);
    CHECK(st.vector()(6) == doctest::Approx(-0.1928).epsilon(1e-3));
    CHECK(st.vector()(7) == doctest::Approx(-0.1485).epsilon(1e-3));

    Vector up(3);
    up << 0, 0, 1 / std::sqrt(2.0);
    const CMatrix r = coherence_to_rho(CoherenceState(2, up), PauliBasis(2));
    CHECK(std::abs(r(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(r(1, 1)) < 1e-15);
}

TEST_CASE("invalid density matrices are rejected")
{
    const PauliBasis b(2);
    CMatrix bad = CMatrix::Identity(2, 2) * 0.6;
    CHECK_THROWS_AS(rho_to_coherence(bad, b), Error);
    CMatrix neg(2, 2);
    neg << 1.2, 0, 0, -0.2;
    try {
        rho_to_coherence(neg, b);
        FAIL("negative eigenvalue accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_state);
    }
    CMatrix nonherm(2, 2);
    nonherm << 0.5, 0.1, 0.3, 0.5;
    CHECK_THROWS_AS(rho_to_coherence(nonherm, b), Error);
}

TEST_CASE("relaxation spec validation")
{
    Matrix g = Matrix::Zero(2, 2);
    g(0, 1) = -0.1;
    CHECK_THROWS_AS(RelaxationSpec(g, Matrix::Zero(2, 2)), Error);
    g(0, 1) = 1.0;
    g(0, 0) = 0.3;
    CHECK_THROWS_AS(RelaxationSpec(g, Matrix::Zero(2, 2)), Error);
    g(0, 0) = 0.0;
    Matrix d = Matrix::Zero(2, 2);
    d(0, 1) = 0.4;
    d(1, 0) = 0.2;
    CHECK_THROWS_AS(RelaxationSpec(g, d), Error);
    // uniform dephasing below the population-induced decay is not realizable
    CHECK_THROWS_AS(RelaxationSpec::with_uniform_dephasing(g, 0.2), Error);

    // three levels: sqrt of the pure dephasing rates must obey the triangle inequality
    Matrix g3 = Matrix::Zero(3, 3);
    Matrix d3 = Matrix::Zero(3, 3);
    d3(0, 1) = d3(1, 0) = 4.0;
    d3(0, 2) = d3(2, 0) = 0.25;
    d3(1, 2) = d3(2, 1) = 0.25;
    try {
        RelaxationSpec bad(g3, d3);
        FAIL("non-realizable dephasing accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_rates);
    }

    const RelaxationSpec ex = oracle::example_spec(2.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j)
                CHECK(ex.effective_dephasing(i, j) == doctest::Approx(2.0).epsilon(1e-14));
    REQUIRE(ex.uniform_dephasing().has_value());
    CHECK(*ex.uniform_dephasing() == doctest::Approx(2.0));

    nlohmann::json j = ex;
    const RelaxationSpec back = relaxation_from_json(j);
    CHECK((back.gamma() - ex.gamma()).norm() == 0.0);
    CHECK((back.pure_dephasing() - ex.pure_dephasing()).norm() < 1e-15);
}

TEST_CASE("worked example drift coefficients")
{
    const LindbladModel m(oracle::example_spec(2.0), ladder_controls(3));
    const Vector q = m.q_d();
    const Matrix R = m.R_d();
    CHECK(q(0) == doctest::Approx(std::sqrt(2.0) / 3.0).epsilon(1e-14));
    CHECK(q(1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-14));
    CHECK(R(0, 0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(R(1, 1) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(R(0, 1) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(std::abs(R(1, 0)) < 1e-14);
    CHECK((m.R_o() + 2.0 * Matrix::Identity(6, 6)).norm() < 1e-12);
    CHECK(m.q().head(6).norm() == 0.0);
}

TEST_CASE("three-level model reproduces the explicit controlled equations")
{
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        const RelaxationSpec spec = oracle::random_uniform_spec(rng, 3);
        const real G = *spec.uniform_dephasing();
        const LindbladModel m(spec, ladder_controls(3));
        const Vector s = random_vector(rng, 8, 0.3);
        const Vector u = random_vector(rng, 4);
        const Vector got = m.rate(s, std::span<const real>(u.data(), 4));
        const Vector want = three_level_rhs(s, u(0), u(1), u(2), u(3), G, spec.gamma());
        CHECK((got - want).norm() < 1e-12);
    }
}

TEST_CASE("two-level drift equations")
{
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<real> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix g = Matrix::Zero(2, 2);
        g(0, 1) = u(rng);
        g(1, 0) = u(rng);
        const real gp = g(0, 1) + g(1, 0), gm = g(0, 1) - g(1, 0);
        const real G = 0.5 * gp + 2.0 * u(rng);
        const LindbladModel m(RelaxationSpec::with_uniform_dephasing(g, G), bloch_controls());
        // Bloch coordinates b = sqrt(2) s
        const Vector b = random_vector(rng, 3, 0.5);
        const real u1 = u(rng), u2 = u(rng);
        const std::array<real, 2> c{u1, u2};
        const Vector db = std::sqrt(2.0) * m.rate(b / std::sqrt(2.0), c);
        CHECK(db(0) == doctest::Approx(-G * b(0) + u2 * b(2)).epsilon(1e-12));
        CHECK(db(1) == doctest::Approx(-G * b(1) - u1 * b(2)).epsilon(1e-12));
        CHECK(db(2) == doctest::Approx(gm - gp * b(2) - u2 * b(0) + u1 * b(1)).epsilon(1e-12));
    }
}

TEST_CASE("model drift agrees with the entrywise master equation")
{
    std::mt19937_64 rng(15);
    for (int n = 2; n <= 4; ++n)
        for (int trial = 0; trial < 20; ++trial) {
            const RelaxationSpec spec = oracle::random_spec(rng, n);
            const auto hs = ladder_controls(n);
            const LindbladModel m(spec, hs);
            const CMatrix rho = oracle::random_density(rng, n);
            const Vector u = random_vector(rng, m.n_controls());
            const std::span<const real> us(u.data(), static_cast<std::size_t>(u.size()));
            const Vector want = oracle::coherence(oracle::lindblad_rhs(spec, hs, us, rho) + CMatrix::Identity(n, n) / real(n))
                              - oracle::coherence(CMatrix::Identity(n, n) / real(n));
            const Vector got = m.rate(oracle::coherence(rho), us);
            CHECK((got - want).norm() < 1e-12);
            CHECK((oracle::coherence(m.dissipator(rho) + CMatrix::Identity(n, n) / real(n))
                   - oracle::coherence(oracle::lindblad_rhs(spec, {}, {}, rho) + CMatrix::Identity(n, n) / real(n)))
                      .norm() < 1e-12);
        }
}

TEST_CASE("generators are skew-symmetric with a zero diagonal block")
{
    std::mt19937_64 rng(16);
    for (int n = 2; n <= 4; ++n)
        for (const auto& hs : {ladder_controls(n), full_controls(n)}) {
            const LindbladModel m(oracle::random_uniform_spec(rng, n), hs);
            for (const Matrix& a : m.generators()) {
                CHECK((a + a.transpose()).norm() < 1e-14);
                CHECK(a.bottomRightCorner(n - 1, n - 1).norm() < 1e-14);
            }
        }
}

TEST_CASE("zero rates give a zero drift")
{
    const LindbladModel m(RelaxationSpec(Matrix::Zero(3, 3), Matrix::Zero(3, 3)), ladder_controls(3));
    CHECK(m.R().norm() == 0.0);
    CHECK(m.q().norm() == 0.0);
}

TEST_CASE("equilibrium is a fixed point")
{
    Matrix g = Matrix::Zero(2, 2);
    g(0, 1) = 0.75;
    g(1, 0) = 0.25;
    const LindbladModel m(RelaxationSpec::with_uniform_dephasing(g, 2.0), bloch_controls());
    const CoherenceState eq = equilibrium_state(m);
    CHECK(eq.vector()(2) * std::sqrt(2.0) == doctest::Approx(0.5).epsilon(1e-14));
    const Trajectory tr = propagate(m, eq, ControlTable::zeros(2, 5.0), 5.0);
    for (const Vector& s : tr.s)
        CHECK((s - eq.vector()).norm() < 1e-9);
    const LindbladModel free(RelaxationSpec(Matrix::Zero(2, 2), Matrix::Zero(2, 2)), bloch_controls());
    CHECK_THROWS_AS(equilibrium_state(free), Error);
}

TEST_CASE("purity is conserved without dissipation")
{
    std::mt19937_64 rng(17);
    for (int n = 2; n <= 4; ++n) {
        const LindbladModel m(RelaxationSpec(Matrix::Zero(n, n), Matrix::Zero(n, n)), full_controls(n));
        const CoherenceState s0 = rho_to_coherence(oracle::random_density(rng, n), m.basis());
        Matrix amps(5, m.n_controls());
        for (int i = 0; i < amps.rows(); ++i)
            amps.row(i) = random_vector(rng, m.n_controls(), 3.0).transpose();
        const Trajectory tr = propagate(m, s0, ControlTable::uniform(amps, 2.0), 2.0);
        for (const Vector& s : tr.s)
            CHECK(std::abs(s.norm() - s0.vector().norm()) < 1e-9);
    }
}

TEST_CASE("coherence propagation agrees with the dense superoperator")
{
    std::mt19937_64 rng(18);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + trial % 3;
        const RelaxationSpec spec = oracle::random_spec(rng, n);
        const auto hs = ladder_controls(n);
        const LindbladModel m(spec, hs);
        const CMatrix rho0 = oracle::random_density(rng, n);
        const int segs = 3;
        const real tf = 1.5;
        Matrix amps(segs, m.n_controls());
        for (int i = 0; i < segs; ++i)
            amps.row(i) = random_vector(rng, m.n_controls(), 2.0).transpose();
        const ControlTable table = ControlTable::uniform(amps, tf);
        PropagateOptions opts;
        opts.ode.rtol = 1e-12;
        opts.ode.atol = 1e-14;
        opts.sample_times = {tf};
        const Trajectory tr = propagate(m, rho_to_coherence(rho0, m.basis()), table, tf, opts);
        CMatrix rho = rho0;
        for (int i = 0; i < segs; ++i) {
            const Vector u = amps.row(i).transpose();
            rho = oracle::propagate_rho(spec, hs, std::span<const real>(u.data(), u.size()), rho, tf / segs);
        }
        CHECK((tr.s.back() - oracle::coherence(rho)).norm() < 1e-8);
        CHECK(tr.warnings.empty());
    }
}

TEST_CASE("integrator accuracy, dense output and stiffness diagnostic")
{
    const ode::DormandPrince dp(ode::Options{1e-11, 1e-14});
    Vector y0(2);
    y0 << 1.0, 0.0;
    std::vector<real> checks;
    const auto rhs = [](real, const Vector& y, Vector& d) {
        d.resize(2);
        d << y(1), -y(0);
    };
    const ode::Result r = dp.integrate(rhs, 0.0, y0, 10.0, [&](const ode::Step& step) {
        const real tm = 0.5 * (step.t_begin + step.t_end);
        checks.push_back(std::abs(step.dense(tm)(0) - std::cos(tm)));
        return true;
    });
    CHECK(std::abs(r.y(0) - std::cos(10.0)) < 1e-9);
    CHECK(std::abs(r.y(1) + std::sin(10.0)) < 1e-9);
    for (real c : checks)
        CHECK(c < 1e-8);

    ode::Options tight;
    tight.max_steps = 50;
    const ode::DormandPrince limited(tight);
    const auto stiff = [](real, const Vector& y, Vector& d) { d = -1e7 * y; };
    CHECK_THROWS_AS(limited.integrate(stiff, 0.0, y0, 1.0), Error);
}

TEST_CASE("csv format")
{
    std::ostringstream out;
    CsvWriter csv(out, {"a", "b"});
    csv.row({1.0 / 3.0, 2.0});
    CHECK(out.str() == "a,b\n0.333333333333333,2\n");
    CHECK_THROWS_AS(csv.row({1.0}), Error);

    std::ostringstream tr_out;
    const LindbladModel m(oracle::example_spec(), ladder_controls(3));
    PropagateOptions opts;
    opts.sample_times = {0.0, 0.5};
    write_trajectory_csv(tr_out, propagate(m, CoherenceState::maximally_mixed(3), ControlTable::zeros(4, 0.5), 0.5, opts));
    CHECK(tr_out.str().rfind("t,s_1,s_2,s_3,s_4,s_5,s_6,s_7,s_8,purity\n", 0) == 0);
}

}
