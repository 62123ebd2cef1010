#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <concepts>
#include <limits>
#include <utility>

#include "stiefelflow/manifold.hpp"
#include "stiefelflow/matrix_io.hpp"
#include "stiefelflow/random.hpp"
#include "stiefelflow/sylvester.hpp"
#include "stiefelflow/types.hpp"

namespace stiefelflow {

// A smooth objective on n x p matrices, minimized over St(n,p).
// uses_full_projection selects the tangent projection in the projected
// engine: the eigenvalue gradient A X has symmetric X^T G, so the skew term
// vanishes identically and the cheaper normal-complement projection is exact.
template <class P>
concept StiefelProblem = requires(const P& prob, const MatrixR& x) {
    { prob.rows() } -> std::convertible_to<Index>;
    { prob.cols() } -> std::convertible_to<Index>;
    { prob.objective(x) } -> std::convertible_to<double>;
    { prob.gradient(x) } -> std::convertible_to<MatrixR>;
    { P::uses_full_projection } -> std::convertible_to<bool>;
};

// ---------------------------------------------------------------------------
// Trace minimization eigenvalue problem: F(X) = (1/2) tr(X^T A X), G = A X.
// Minimizer spans the eigenspace of the p smallest eigenvalues of A.
// ---------------------------------------------------------------------------
class EigProblem {
public:
    static constexpr bool uses_full_projection = false;

    EigProblem(MatrixR a, Index p) : a_(std::move(a)), p_(p) {
        require(a_.rows() == a_.cols(), "EigProblem: A must be square");
        require(p_ >= 1 && p_ <= a_.rows(), "EigProblem: need 1 <= p <= n");
        if ((a_ - a_.transpose()).norm() > 1e-12 * std::max(1.0, a_.norm()))
            throw InvalidShape("EigProblem: A not symmetric");
        Eigen::SelfAdjointEigenSolver<MatrixR> es(a_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() <= 0.0)
            throw InvalidShape("EigProblem: A not positive definite");
    }

    Index rows() const { return a_.rows(); }
    Index cols() const { return p_; }
    const MatrixR& A() const { return a_; }

    double objective(const MatrixR& x) const {
        check_shape(x);
        return 0.5 * (x.transpose() * a_ * x).trace();
    }

    MatrixR gradient(const MatrixR& x) const {
        check_shape(x);
        return a_ * x;
    }

    static EigProblem from_file(const std::string& path, Index p) {
        return EigProblem(read_matrix_file(path), p);
    }

    /// A = Q^T D Q with prescribed spectrum and a seeded random basis.
    static EigProblem with_spectrum(const VectorR& spectrum, Index p, std::uint64_t seed) {
        Rng rng(seed);
        return EigProblem(spd_with_spectrum(spectrum, rng), p);
    }

private:
    void check_shape(const MatrixR& x) const {
        if (x.rows() != a_.rows() || x.cols() != p_)
            throw InvalidShape("EigProblem: X must be n x p");
    }

    MatrixR a_;
    Index p_;
};

// ---------------------------------------------------------------------------
// Unbalanced orthogonal Procrustes: F(X) = (1/2)|A X - B|_F^2,
// G(X) = A^T (A X - B), A m x n, B m x p, n >= p.
// ---------------------------------------------------------------------------
class ProcrustesProblem {
public:
    static constexpr bool uses_full_projection = true;

    ProcrustesProblem(MatrixR a, MatrixR b) : a_(std::move(a)), b_(std::move(b)) {
        require(a_.rows() == b_.rows(), "ProcrustesProblem: A and B need equal row counts");
        require(a_.cols() >= b_.cols() && b_.cols() >= 1, "ProcrustesProblem: need n >= p >= 1");
    }

    Index rows() const { return a_.cols(); }   // X is n x p
    Index cols() const { return b_.cols(); }
    const MatrixR& A() const { return a_; }
    const MatrixR& B() const { return b_; }

    double objective(const MatrixR& x) const {
        check_shape(x);
        return 0.5 * (a_ * x - b_).squaredNorm();
    }

    MatrixR gradient(const MatrixR& x) const {
        check_shape(x);
        return a_.transpose() * (a_ * x - b_);
    }

    static ProcrustesProblem from_files(const std::string& path_a, const std::string& path_b) {
        return ProcrustesProblem(read_matrix_file(path_a), read_matrix_file(path_b));
    }

    /// A with prescribed singular values, B gaussian, both from one seed.
    static ProcrustesProblem random(Index m, Index n, Index p, const VectorR& singular_values,
                                    std::uint64_t seed) {
        Rng rng(seed);
        MatrixR a = matrix_with_singular_values(m, n, singular_values, rng);
        MatrixR b = gaussian_matrix(m, p, rng);
        return ProcrustesProblem(std::move(a), std::move(b));
    }

private:
    void check_shape(const MatrixR& x) const {
        if (x.rows() != a_.cols() || x.cols() != b_.cols())
            throw InvalidShape("ProcrustesProblem: X must be n x p");
    }

    MatrixR a_, b_;
};

// ---------------------------------------------------------------------------
// First-order optimality residuals.
// ---------------------------------------------------------------------------
struct KktResidual {
    double stationarity;  // |G + X M|_F
    double feasibility;   // |C(X)|_F
    double projected;     // |(I - X X^T) G + X skew(X^T G)|_F
};

inline KktResidual kkt_residual(const MatrixR& g, const MatrixR& x, const MultiplierMatrix& m) {
    require(g.rows() == x.rows() && g.cols() == x.cols(), "kkt_residual: G/X shape mismatch");
    require(m.rows() == x.cols() && m.cols() == x.cols(), "kkt_residual: M must be p x p");
    KktResidual r;
    r.stationarity = (g + x * m).norm();
    r.feasibility = constraint(x).norm();
    r.projected = tangent_project_raw(x, g).norm();
    return r;
}

// ---------------------------------------------------------------------------
// Reference eigensolution for EigProblem.
// ---------------------------------------------------------------------------
struct EigReference {
    MatrixR basis;      // n x p, eigenvectors of the p smallest eigenvalues
    double objective;   // (1/2) sum of the p smallest eigenvalues
    VectorR mu;         // multiplier spectrum, mu_i = -lambda_i, 0 >= mu_1 >= ... >= mu_p
    VectorR lambda;     // full spectrum of A, ascending
    double gap;         // lambda_{p+1} - lambda_p (infinity when p = n)
    bool ambiguous;     // gap below gap_tol; reference still valid as a basis
};

inline EigReference eig_reference(const EigProblem& prob, double gap_tol = 1e-8) {
    Eigen::SelfAdjointEigenSolver<MatrixR> es(prob.A());
    const Index n = prob.rows(), p = prob.cols();
    EigReference ref;
    ref.lambda = es.eigenvalues();
    ref.basis = es.eigenvectors().leftCols(p);
    ref.objective = 0.5 * ref.lambda.head(p).sum();
    ref.mu = -ref.lambda.head(p);
    ref.gap = (p < n) ? ref.lambda(p) - ref.lambda(p - 1)
                      : std::numeric_limits<double>::infinity();
    ref.ambiguous = ref.gap < gap_tol;
    return ref;
}

// ---------------------------------------------------------------------------
// Second-order optimality check for Procrustes stationary points.
// ---------------------------------------------------------------------------
struct SecondOrderCheck {
    bool pass;                    // min over lambda_j(A^T A) + mu_i, j > p
    double min_value;             // that minimum (infinity when p = n)
    double multiplier_eig_defect; // multiset distance of eig(-X G^T) vs eig(M)
};

namespace detail {
// Greedy nearest pairing of two equal-size real multisets; returns the
// largest matched distance (infinity if sizes differ).
inline double multiset_distance(VectorR a, VectorR b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    std::sort(a.data(), a.data() + a.size());
    std::sort(b.data(), b.data() + b.size());
    return (a - b).cwiseAbs().maxCoeff();
}
}  // namespace detail

/// Checks lambda_j(A^T A) + mu_i >= 0 for i = 1..p, j = p+1..n (eigenvalues
/// ascending), and verifies that the nonzero eigenvalues of -X G^T coincide
/// with those of M. Requires a stationary point.
inline SecondOrderCheck procrustes_second_order_check(const ProcrustesProblem& prob,
                                                      const StiefelPoint& xhat,
                                                      const MultiplierMatrix& mhat,
                                                      double stationary_tol = 1e-6) {
    const MatrixR& x = xhat.matrix();
    MatrixR g = prob.gradient(x);
    KktResidual kkt = kkt_residual(g, x, mhat);
    const double scale = std::max(1.0, g.norm());
    if (kkt.stationarity > stationary_tol * scale || kkt.projected > stationary_tol * scale)
        throw NotStationary("procrustes_second_order_check: stationarity " +
                            std::to_string(kkt.stationarity));

    const Index n = prob.rows(), p = prob.cols();
    Eigen::SelfAdjointEigenSolver<MatrixR> ata(prob.A().transpose() * prob.A());
    Eigen::SelfAdjointEigenSolver<MatrixR> mm(symPart(mhat));

    SecondOrderCheck out;
    out.min_value = std::numeric_limits<double>::infinity();
    for (Index j = p; j < n; ++j)
        for (Index i = 0; i < p; ++i)
            out.min_value = std::min(out.min_value, ata.eigenvalues()(j) + mm.eigenvalues()(i));
    out.pass = out.min_value >= -1e-8;

    // Lemma: nonzero eigenvalues of -X G^T equal those of M. -X G^T is n x n
    // with rank <= p; compare its p largest-magnitude eigenvalues (the rest
    // vanish) against eig(M). -X G^T is symmetric at a stationary point, so a
    // selfadjoint solve of its symmetrized form is exact enough here.
    Eigen::SelfAdjointEigenSolver<MatrixR> xg(symPart(-x * g.transpose()));
    VectorR all = xg.eigenvalues();
    std::sort(all.data(), all.data() + all.size(),
              [](double l, double r) { return std::abs(l) > std::abs(r); });
    VectorR top = all.head(p);
    std::sort(top.data(), top.data() + top.size());
    out.multiplier_eig_defect = detail::multiset_distance(top, mm.eigenvalues());
    return out;
}

}  // namespace stiefelflow
