#include "coalsec/beamforming.hpp"

#include "coalsec/error.hpp"

#include <cmath>

namespace coalsec {

namespace {

constexpr double rank_tolerance = 1e-10;
constexpr double refinement_tolerance = 1e-9;
constexpr int max_refinement_steps = 8;

void require_power(double power)
{
    if (!(power > 0.0))
        throw NoPower("residual power must be positive");
}

CMatrix require_null_space(const CMatrix& g)
{
    CMatrix z = null_space_basis(g);
    if (z.cols() == 0)
        throw InfeasibleNulling("eavesdropper channels span the whole coalition space");
    return z;
}

// Any full-power vector in the null space; used when the data direction has
// no component there and every feasible choice is equally useless.
CVector fallback_direction(const CMatrix& z, double power)
{
    return z.col(0) * std::sqrt(power);
}

} // namespace

CMatrix null_space_basis(const CMatrix& g)
{
    const Eigen::Index n = g.rows();
    if (g.cols() == 0)
        return CMatrix::Identity(n, n);
    Eigen::ColPivHouseholderQR<CMatrix> qr(g);
    qr.setThreshold(rank_tolerance);
    const Eigen::Index rank = qr.rank();
    CMatrix q = qr.householderQ();
    return q.rightCols(n - rank);
}

double df_rate_at(const CVector& h, const CVector& w, double noise)
{
    return 0.5 * std::log2(1.0 + std::norm(h.dot(w)) / noise);
}

double af_rate_at(const CVector& a, const RVector& noise_gain, const CVector& w, double noise)
{
    const double signal = std::norm(a.dot(w));
    const double amplified = (w.cwiseAbs2().array() * noise_gain.array()).sum();
    return 0.5 * std::log2(1.0 + signal / (noise * (amplified + 1.0)));
}

BeamformerSolution solve_df(const CVector& h, const CMatrix& g, double power, double noise)
{
    require_power(power);
    const CMatrix z = require_null_space(g);
    const CVector projected = z * (z.adjoint() * h);
    const double norm2 = projected.squaredNorm();

    BeamformerSolution out;
    out.protocol = Protocol::df;
    if (norm2 == 0.0) {
        out.weights = fallback_direction(z, power);
        out.achieved_rate = 0.0;
        return out;
    }
    out.weights = projected * std::sqrt(power / norm2);
    out.achieved_rate = 0.5 * std::log2(1.0 + power * norm2 / noise);
    return out;
}

BeamformerSolution solve_af(const CVector& a, const RVector& noise_gain,
                            const RVector& power_weight, const CMatrix& g, double power,
                            double noise)
{
    require_power(power);
    if ((power_weight.array() <= 0.0).any())
        throw NoPower("power weights must be positive");

    // Whitened coordinates: w = D^{-1/2} w~, so the constraint is ||w~||^2 = power.
    const RVector inv_sqrt = power_weight.cwiseSqrt().cwiseInverse();
    const CMatrix g_white = inv_sqrt.asDiagonal() * g;
    const CVector a_white = inv_sqrt.asDiagonal() * a;
    const RVector u_white = noise_gain.cwiseProduct(power_weight.cwiseInverse());

    const CMatrix z = require_null_space(g_white);
    const CVector c = z.adjoint() * a_white;

    BeamformerSolution out;
    out.protocol = Protocol::af;
    if (c.squaredNorm() == 0.0) {
        out.weights = inv_sqrt.asDiagonal() * fallback_direction(z, power);
        out.achieved_rate = 0.0;
        return out;
    }

    CMatrix pencil = z.adjoint() * u_white.asDiagonal() * z;
    pencil.diagonal().array() += 1.0 / power;
    pencil = 0.5 * (pencil + pencil.adjoint()).eval();

    const Eigen::LDLT<CMatrix> ldlt(pencil);
    CVector x = ldlt.solve(c);
    const double c_norm = c.norm();
    for (int step = 0; step < max_refinement_steps; ++step) {
        const CVector residual = c - pencil * x;
        if (residual.norm() <= refinement_tolerance * c_norm)
            break;
        x += ldlt.solve(residual);
    }

    const CVector v = x * std::sqrt(power / x.squaredNorm());
    out.weights = inv_sqrt.asDiagonal() * (z * v);
    out.achieved_rate = af_rate_at(a, noise_gain, out.weights, noise);
    return out;
}

} // namespace coalsec
