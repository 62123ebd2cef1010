#pragma once

#include <Eigen/Dense>

#include "stiefelflow/types.hpp"

namespace stiefelflow {

// Symmetric Lagrange-multiplier matrix recovered from the constraint dynamic.
using MultiplierMatrix = MatrixR;

/// Solve S M + M S = sym(T) for symmetric M, with S symmetric positive
/// semi-definite (intended S = X^T X). Eigendecompose S = U D U^T, divide
/// entrywise by d_i + d_j in the eigenbasis, map back. T is symmetrized first
/// so assembly roundoff cannot leak asymmetry into M.
///
/// Throws SylvesterSingular when some d_i + d_j < sing_tol, i.e. the Gram
/// matrix of X is (near-)rank-deficient. No regularization is attempted.
inline MultiplierMatrix solve_symmetric_sylvester(const MatrixR& s, const MatrixR& t,
                                                  double sing_tol = 1e-12) {
    require(s.rows() == s.cols(), "sylvester: S must be square");
    require(t.rows() == t.cols() && t.rows() == s.rows(), "sylvester: T must match S");

    Eigen::SelfAdjointEigenSolver<MatrixR> es(symPart(s));
    const VectorR& d = es.eigenvalues();
    const MatrixR& u = es.eigenvectors();

    MatrixR tp = u.transpose() * symPart(t) * u;
    const Index p = s.rows();
    for (Index j = 0; j < p; ++j) {
        for (Index i = 0; i < p; ++i) {
            const double denom = d(i) + d(j);
            if (denom < sing_tol)
                throw SylvesterSingular("sylvester: d_i + d_j = " + std::to_string(denom));
            tp(i, j) /= denom;
        }
    }
    return symPart(u * tp * u.transpose());
}

}  // namespace stiefelflow
