#pragma once

// Eavesdropper-nulling beamformers on explicit channel vectors.
//
// Convention: a weight vector w produces the effective gain c^H w at a node
// whose per-relay channels are stacked in c. Nulling means G^H w = 0, with
// one column of G per eavesdropper.

#include <Eigen/Dense>

#include <complex>

namespace coalsec {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

enum class Protocol { df, af };

struct BeamformerSolution
{
    CVector weights;
    double achieved_rate = 0.0; ///< bits/s/Hz, includes the 1/2 pre-log
    Protocol protocol = Protocol::df;
};

/// Orthonormal basis Z of {w : G^H w = 0}. Columns of G whose contribution
/// falls below 1e-10 of the largest column norm count as rank-deficient.
/// May have zero columns.
CMatrix null_space_basis(const CMatrix& eavesdropper_channels);

/// 1/2 log2(1 + |h^H w|^2 / noise).
double df_rate_at(const CVector& h, const CVector& w, double noise);

/// 1/2 log2(1 + |a^H w|^2 / (noise * (w^H U w + 1))), U = diag(noise_gain).
double af_rate_at(const CVector& a, const RVector& noise_gain, const CVector& w, double noise);

/// Maximizes |h^H w|^2 over G^H w = 0, ||w||^2 <= power. The optimum is the
/// normalized projection of h onto the null space at full power.
/// Throws InfeasibleNulling / NoPower.
BeamformerSolution solve_df(const CVector& h, const CMatrix& eavesdropper_channels, double power,
                            double noise);

/// Maximizes |a^H w|^2 / (noise (w^H U w + 1)) over G^H w = 0 and
/// w^H D w = power, with D = diag(power_weight) > 0.
///
/// After whitening by D^{1/2} and restricting to the null-space basis Z the
/// "+1" folds into the pencil through 1 = v^H v / power, leaving
///   max  v^H (c c^H) v / v^H B v,   c = Z^H D^{-1/2} a,
///   B = Z^H D^{-1/2} U D^{-1/2} Z + I / power.
/// The numerator is rank one, so the principal generalized eigenvector is
/// B^{-1} c; it is found by an LDL^T solve with iterative refinement.
BeamformerSolution solve_af(const CVector& a, const RVector& noise_gain,
                            const RVector& power_weight, const CMatrix& eavesdropper_channels,
                            double power, double noise);

} // namespace coalsec
