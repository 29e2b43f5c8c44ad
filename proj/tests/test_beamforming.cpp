#include "coalsec/beamforming.hpp"
#include "coalsec/error.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <numbers>
#include <random>

using namespace coalsec;
using namespace coalsec::testing;

namespace {

struct Instance
{
    CVector h;
    CVector a;
    RVector u;
    CMatrix g;
    double power;
    double noise;
};

Instance random_instance(std::mt19937_64& rng, Eigen::Index n, Eigen::Index k)
{
    std::uniform_real_distribution<double> unit(0.1, 10.0);
    Instance in;
    in.h = random_cvector(rng, n);
    in.a = random_cvector(rng, n);
    in.u = RVector(n);
    for (Eigen::Index j = 0; j < n; ++j)
        in.u(j) = unit(rng);
    in.u(0) = 0.0;
    in.g = random_cmatrix(rng, n, k);
    in.power = unit(rng);
    in.noise = unit(rng) * 0.1;
    return in;
}

double eigen_af_rate(const Instance& in)
{
    const CMatrix z = null_space_basis(in.g);
    const CVector c = z.adjoint() * in.a;
    CMatrix b = z.adjoint() * in.u.asDiagonal() * z;
    b.diagonal().array() += 1.0 / in.power;
    const CMatrix a = c * c.adjoint();
    Eigen::GeneralizedSelfAdjointEigenSolver<CMatrix> es(a, b);
    const double top = es.eigenvalues().maxCoeff();
    return 0.5 * std::log2(1.0 + top / in.noise);
}

} // namespace

TEST_CASE("DF nulls a single eavesdropper with the orthogonal member")
{
    CMatrix g(2, 1);
    g << 1.0, 0.0;
    CVector h(2);
    h << 1.0, 1.0;
    const auto sol = solve_df(h, g, 4.0, 1.0);
    CHECK(sol.achieved_rate == doctest::Approx(0.5 * std::log2(5.0)).epsilon(1e-12));
    CHECK(std::abs(sol.weights(0)) < 1e-12);
    CHECK(std::abs(sol.weights(1)) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sol.protocol == Protocol::df);
}

TEST_CASE("nulling is infeasible when eavesdroppers span the space")
{
    std::mt19937_64 rng(1);
    const CMatrix g = random_cmatrix(rng, 3, 3);
    const CVector h = random_cvector(rng, 3);
    CHECK_THROWS_AS(solve_df(h, g, 1.0, 1.0), InfeasibleNulling);
    RVector ones = RVector::Ones(3);
    CHECK_THROWS_AS(solve_af(h, ones, ones, g, 1.0, 1.0), InfeasibleNulling);
    CHECK_THROWS_AS(solve_df(h, random_cmatrix(rng, 3, 1), 0.0, 1.0), NoPower);
}

TEST_CASE("rank-deficient eavesdropper channels leave a larger null space")
{
    std::mt19937_64 rng(2);
    CMatrix g(4, 2);
    g.col(0) = random_cvector(rng, 4);
    g.col(1) = g.col(0) * std::complex<double>(0.0, 2.0);
    CHECK(null_space_basis(g).cols() == 3);
}

TEST_CASE("AF with no data component in the null space has zero rate")
{
    CMatrix g(2, 1);
    g << 1.0, 0.0;
    CVector a(2);
    a << 1.0, 0.0;
    RVector u(2);
    u << 0.0, 1.0;
    const auto sol = solve_af(a, u, RVector::Ones(2), g, 2.0, 1.0);
    CHECK(sol.achieved_rate == 0.0);
    CHECK(sol.weights.squaredNorm() == doctest::Approx(2.0));
}

TEST_CASE("solver outputs satisfy nulling and power invariants")
{
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> kdist(1, 3);
    for (int trial = 0; trial < 300; ++trial) {
        const Eigen::Index k = kdist(rng);
        std::uniform_int_distribution<Eigen::Index> ndist(k + 1, 6);
        const Instance in = random_instance(rng, ndist(rng), k);
        const auto df = solve_df(in.h, in.g, in.power, in.noise);
        const auto af = solve_af(in.a, in.u, RVector::Ones(in.a.size()), in.g, in.power, in.noise);
        for (const auto* sol : {&df, &af}) {
            for (Eigen::Index e = 0; e < k; ++e)
                CHECK(std::abs(in.g.col(e).dot(sol->weights)) <=
                      1e-9 * sol->weights.norm() * in.g.col(e).norm());
            CHECK(sol->weights.squaredNorm() <= in.power * (1 + 1e-9));
        }
    }
}

TEST_CASE("DF closed form matches direct evaluation and grows with power")
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const Instance in = random_instance(rng, 5, 2);
        const auto sol = solve_df(in.h, in.g, in.power, in.noise);
        CHECK(relative_gap(sol.achieved_rate, df_rate_at(in.h, sol.weights, in.noise)) < 1e-12);
        const auto more = solve_df(in.h, in.g, in.power * 1.5, in.noise);
        CHECK(more.achieved_rate >= sol.achieved_rate);
    }
}

TEST_CASE("solvers beat random feasible weights")
{
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> kdist(1, 3);
    for (int trial = 0; trial < 40; ++trial) {
        const Eigen::Index k = kdist(rng);
        std::uniform_int_distribution<Eigen::Index> ndist(k + 1, 6);
        const Instance in = random_instance(rng, ndist(rng), k);
        const RVector ones = RVector::Ones(in.a.size());
        const auto df = solve_df(in.h, in.g, in.power, in.noise);
        const auto af = solve_af(in.a, in.u, ones, in.g, in.power, in.noise);
        const CMatrix z = null_space_basis(in.g);
        for (int s = 0; s < 2000; ++s) {
            const CVector w = sample_feasible(rng, z, in.power);
            CHECK(df.achieved_rate >= df_rate_at(in.h, w, in.noise) * (1 - 1e-9));
            CHECK(af.achieved_rate >= af_rate_at(in.a, in.u, w, in.noise) * (1 - 1e-9));
        }
    }
}

TEST_CASE("AF matches the generalized eigenvalue problem")
{
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<Eigen::Index> ndist(2, 6);
        const Eigen::Index n = ndist(rng);
        std::uniform_int_distribution<Eigen::Index> kdist(1, n - 1);
        const Instance in = random_instance(rng, n, kdist(rng));
        const auto af = solve_af(in.a, in.u, RVector::Ones(n), in.g, in.power, in.noise);
        CHECK(relative_gap(af.achieved_rate, eigen_af_rate(in)) < 1e-9);
    }
}

TEST_CASE("AF with three equal real channels matches a line search")
{
    // Real data: the optimum lies in the real 2-D null space, v = sqrt(P)(cos t, sin t).
    CMatrix g(3, 1);
    g << 0.7, 0.7, 0.7;
    CVector a(3);
    a << 0.7, 0.7, 0.7;
    a(0) = 0.9;
    RVector u(3);
    u << 0.0, 0.49, 0.49;
    const double power = 2.0, noise = 0.3;
    const auto sol = solve_af(a, u, RVector::Ones(3), g, power, noise);

    const CMatrix z = null_space_basis(g);
    // The basis from QR may be complex; rotate it to a real orthonormal basis.
    Eigen::MatrixXd basis(3, 2);
    basis.col(0) = Eigen::Vector3d(1, -1, 0).normalized();
    basis.col(1) = Eigen::Vector3d(1, 1, -2).normalized();
    CHECK((z * z.adjoint() - (basis * basis.transpose()).cast<std::complex<double>>()).norm() <
          1e-12);

    auto rate = [&](double t) {
        const Eigen::Vector2d v(std::cos(t), std::sin(t));
        const CVector w = (basis * v * std::sqrt(power)).cast<std::complex<double>>();
        return af_rate_at(a, u, w, noise);
    };
    double best_t = 0.0, best = -1.0;
    const int steps = 20000;
    for (int s = 0; s < steps; ++s) {
        const double t = std::numbers::pi * s / steps;
        if (rate(t) > best) {
            best = rate(t);
            best_t = t;
        }
    }
    double lo = best_t - std::numbers::pi / steps, hi = best_t + std::numbers::pi / steps;
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        if (rate(m1) < rate(m2))
            lo = m1;
        else
            hi = m2;
    }
    CHECK(sol.achieved_rate == doctest::Approx(rate((lo + hi) / 2)).epsilon(1e-6));
}

TEST_CASE("weighted AF power constraint")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> wdist(0.2, 5.0);
    for (int trial = 0; trial < 30; ++trial) {
        const Instance in = random_instance(rng, 4, 2);
        RVector d(4);
        for (Eigen::Index j = 0; j < 4; ++j)
            d(j) = wdist(rng);
        const auto sol = solve_af(in.a, in.u, d, in.g, in.power, in.noise);
        const double used = (sol.weights.cwiseAbs2().array() * d.array()).sum();
        CHECK(used == doctest::Approx(in.power).epsilon(1e-9));

        const RVector inv_sqrt = d.cwiseSqrt().cwiseInverse();
        const CMatrix z = null_space_basis(inv_sqrt.asDiagonal() * in.g);
        for (int s = 0; s < 500; ++s) {
            const CVector w = inv_sqrt.asDiagonal() * sample_feasible(rng, z, in.power);
            CHECK(sol.achieved_rate >= af_rate_at(in.a, in.u, w, in.noise) * (1 - 1e-9));
        }
    }
}
