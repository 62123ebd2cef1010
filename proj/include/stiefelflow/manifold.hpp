#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "stiefelflow/types.hpp"

namespace stiefelflow {

// Tolerances for manifold membership and rank checks; carried with the
// call sites instead of being hard-coded.
struct ManifoldTolerances {
    double orth_tol = 1e-10;     // |X^T X - I| for an on-manifold point
    double tangent_tol = 1e-10;  // |X^T Z + Z^T X| for a tangent vector
    double rank_tol = 1e-12;     // smallest singular value for retraction
};

/// A point on St(n,p): n x p with orthonormal columns.
class StiefelPoint {
public:
    explicit StiefelPoint(MatrixR x, const ManifoldTolerances& tol = {}) : x_(std::move(x)) {
        if (x_.rows() < x_.cols() || x_.cols() < 1)
            throw InvalidShape("StiefelPoint: need n >= p >= 1");
        MatrixR g = x_.transpose() * x_;
        g.diagonal().array() -= 1.0;
        if (g.norm() > tol.orth_tol)
            throw BaseOffManifold("StiefelPoint: |X^T X - I| = " + std::to_string(g.norm()));
    }

    const MatrixR& matrix() const { return x_; }
    Index n() const { return x_.rows(); }
    Index p() const { return x_.cols(); }

private:
    MatrixR x_;
};

/// A tangent vector Z at a base point, X^T Z + Z^T X = 0.
class TangentVector {
public:
    TangentVector(MatrixR z, StiefelPoint base, const ManifoldTolerances& tol = {})
        : z_(std::move(z)), base_(std::move(base)) {
        if (z_.rows() != base_.n() || z_.cols() != base_.p())
            throw InvalidShape("TangentVector: shape mismatch with base");
        MatrixR d = base_.matrix().transpose() * z_;
        d += d.transpose().eval();
        if (d.norm() > tol.tangent_tol)
            throw InvalidShape("TangentVector: not tangent, defect " + std::to_string(d.norm()));
    }

    const MatrixR& matrix() const { return z_; }
    const StiefelPoint& base() const { return base_; }

private:
    MatrixR z_;
    StiefelPoint base_;
};

/// C = (1/2)(X^T X - I), symmetric p x p.
class ConstraintValue {
public:
    explicit ConstraintValue(MatrixR c) : c_(std::move(c)) {}
    const MatrixR& matrix() const { return c_; }
    double norm() const { return c_.norm(); }

private:
    MatrixR c_;
};

/// Constraint C(X) = (1/2)(X^T X - I_p). Symmetrized explicitly so the result
/// is symmetric to machine precision regardless of gemm rounding.
inline ConstraintValue constraint(const MatrixR& x) {
    if (x.rows() < x.cols() || x.cols() < 1) throw InvalidShape("constraint: need n >= p >= 1");
    MatrixR s = x.transpose() * x;
    MatrixR c = 0.25 * (s + s.transpose());
    c.diagonal().array() -= 0.5;
    return ConstraintValue(std::move(c));
}

/// Orthogonal projection of G onto the tangent space at X:
///   (I - X X^T) G + X skew(X^T G)  ==  G - X sym(X^T G).
inline MatrixR tangent_project(const StiefelPoint& x, const MatrixR& g) {
    if (g.rows() != x.n() || g.cols() != x.p())
        throw InvalidShape("tangent_project: G shape mismatch");
    const MatrixR& X = x.matrix();
    MatrixR s = X.transpose() * g;
    return g - X * symPart(s);
}

/// Same projection for a raw (possibly off-manifold) X, written exactly as
/// the two-term form. Used for residual norms where X need not be feasible.
inline MatrixR tangent_project_raw(const MatrixR& X, const MatrixR& g) {
    MatrixR s = X.transpose() * g;
    return g - X * (X.transpose() * g) + X * skew(s);
}

/// Nearest orthonormal matrix in Frobenius norm: U V^T from the thin SVD.
inline StiefelPoint polar_retract(const MatrixR& x, const ManifoldTolerances& tol = {}) {
    if (x.rows() < x.cols() || x.cols() < 1) throw InvalidShape("polar_retract: need n >= p >= 1");
    Eigen::JacobiSVD<MatrixR> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues().minCoeff() < tol.rank_tol)
        throw RankDeficient("polar_retract: smallest singular value " +
                            std::to_string(svd.singularValues().minCoeff()));
    return StiefelPoint(svd.matrixU() * svd.matrixV().transpose(), tol);
}

// Number of independent entries of the symmetric constraint.
inline Index constraint_count(Index p) { return p * (p + 1) / 2; }

/// Jacobian of the independent (upper-triangular, column-major order) entries
/// of C(X) = (1/2)(X^T X - I) with respect to vec(X).
/// dC_ij/dX_ab = (1/2)(delta_ib X_aj + delta_jb X_ai), shape p(p+1)/2 x np.
/// Has full row rank p(p+1)/2 at every on-manifold point.
inline MatrixR constraint_jacobian(const StiefelPoint& x) {
    const MatrixR& X = x.matrix();
    const Index n = x.n(), p = x.p();
    MatrixR j = MatrixR::Zero(constraint_count(p), n * p);
    Index row = 0;
    for (Index jj = 0; jj < p; ++jj) {
        for (Index ii = 0; ii <= jj; ++ii) {
            for (Index a = 0; a < n; ++a) {
                j(row, a + ii * n) += 0.5 * X(a, jj);
                j(row, a + jj * n) += 0.5 * X(a, ii);
            }
            ++row;
        }
    }
    return j;
}

/// |X X^T - Y Y^T|_F for arbitrary (not necessarily orthonormal) X and Y of
/// equal row count. Formed entrywise; the p x p Gram shortcut cancels
/// catastrophically near zero distance.
inline double subspace_distance(const MatrixR& x, const MatrixR& y) {
    require(x.rows() == y.rows(), "subspace_distance: row mismatch");
    MatrixR d = x * x.transpose();
    d.noalias() -= y * y.transpose();
    return d.norm();
}

}  // namespace stiefelflow
