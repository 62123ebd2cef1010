#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stiefelflow/dynamics.hpp"
#include "stiefelflow/manifold.hpp"
#include "stiefelflow/problems.hpp"
#include "stiefelflow/types.hpp"

namespace stiefelflow {

// ---------------------------------------------------------------------------
// Commutation matrix N_{m,n}: the mn x mn permutation with
// N vec(F) = vec(F^T) for every m x n matrix F.
// ---------------------------------------------------------------------------
struct CommutationMatrix {
    MatrixR N;
    Index m = 0, n = 0;
};

inline CommutationMatrix commutation_matrix(Index m, Index n) {
    require(m >= 1 && n >= 1, "commutation_matrix: need m, n >= 1");
    CommutationMatrix c;
    c.m = m;
    c.n = n;
    c.N = MatrixR::Zero(m * n, m * n);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) c.N(j + i * n, i + j * m) = 1.0;
    return c;
}

// ---------------------------------------------------------------------------
// Spectrum mapping between the flow Jacobian J_hat (eigenvalues alpha) and
// the first-order system block [[0, I], [-J_hat, -eta I]] (eigenvalues beta):
//   beta = -eta/2 +- sqrt(eta^2/4 - alpha).
// Asymptotic stability iff Re(beta) <= 0 for all, equivalently Re(alpha) >= 0.
// ---------------------------------------------------------------------------
inline std::pair<Complex, Complex> beta_from_alpha(Complex alpha, double eta) {
    require(eta > 0.0, "beta_from_alpha: eta must be > 0");
    const Complex s = std::sqrt(Complex(eta * eta / 4.0, 0.0) - alpha);
    return {Complex(-eta / 2.0, 0.0) + s, Complex(-eta / 2.0, 0.0) - s};
}

inline MatrixR system_block_matrix(const MatrixR& j, double eta) {
    require(j.rows() == j.cols(), "system_block_matrix: J must be square");
    const Index q = j.rows();
    MatrixR sys = MatrixR::Zero(2 * q, 2 * q);
    sys.topRightCorner(q, q) = MatrixR::Identity(q, q);
    sys.bottomLeftCorner(q, q) = -j;
    sys.bottomRightCorner(q, q) = -eta * MatrixR::Identity(q, q);
    return sys;
}

inline std::vector<Complex> eigenvalues_of(const MatrixR& m) {
    Eigen::EigenSolver<MatrixR> es(m, /*computeEigenvectors=*/false);
    std::vector<Complex> out(static_cast<std::size_t>(m.rows()));
    for (Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    return out;
}

// Greedy nearest pairing of two complex multisets. Eigenvalue order is
// solver-dependent, so comparison is by matching within a tolerance.
struct MultisetMatch {
    double max_distance = 0.0;
    int unmatched_a = 0;  // entries of a with no partner within tol
    int unmatched_b = 0;
    bool complete(double tol) const { return unmatched_a == 0 && unmatched_b == 0 && max_distance <= tol; }
};

inline MultisetMatch match_multisets(std::vector<Complex> a, std::vector<Complex> b, double tol) {
    MultisetMatch r;
    std::vector<bool> used(b.size(), false);
    std::sort(a.begin(), a.end(), [](Complex x, Complex y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    int matched = 0;
    for (const Complex& va : a) {
        double best = tol;
        std::ptrdiff_t best_j = -1;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (used[j]) continue;
            const double d = std::abs(va - b[j]);
            if (d <= best) {
                best = d;
                best_j = static_cast<std::ptrdiff_t>(j);
            }
        }
        if (best_j < 0) {
            ++r.unmatched_a;
        } else {
            used[static_cast<std::size_t>(best_j)] = true;
            r.max_distance = std::max(r.max_distance, best);
            ++matched;
        }
    }
    r.unmatched_b = static_cast<int>(b.size()) - matched;
    return r;
}

inline double spectral_radius(const std::vector<Complex>& v) {
    double r = 0.0;
    for (const Complex& z : v) r = std::max(r, std::abs(z));
    return r;
}

// ---------------------------------------------------------------------------
// Stability verdict. Zero eigenvalues from manifold symmetry are structural,
// so a small band around zero is Marginal rather than Unstable.
// ---------------------------------------------------------------------------
enum class Verdict { AsymptoticallyStable, Marginal, Unstable };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::AsymptoticallyStable: return "AsymptoticallyStable";
        case Verdict::Marginal: return "Marginal";
        case Verdict::Unstable: return "Unstable";
    }
    return "?";
}

inline Verdict verdict_from_min_real(double min_real, double band = 1e-8) {
    if (min_real > band) return Verdict::AsymptoticallyStable;
    if (min_real >= -band) return Verdict::Marginal;
    return Verdict::Unstable;
}

// ---------------------------------------------------------------------------
// Numeric Jacobian of the flow right-hand side Psi(X) at a stationary point,
// by central differences on vec(X). For the Lagrange engine Psi = G + X M
// with M from the Sylvester solve at V = 0; for the projected engine Psi is
// the projected gradient. Also carries the tangent-restricted form
// (I (x) P_perp) J (I (x) P_perp).
// ---------------------------------------------------------------------------
struct NumericJacobian {
    MatrixR J;             // np x np
    MatrixR J_restricted;  // (I (x) P_perp) J (I (x) P_perp)
    MatrixR P_perp;        // I - X X^T
    double fd_step = 0.0;

    int count_zero_rows(double tol = 1e-8) const {
        int z = 0;
        for (Index i = 0; i < J_restricted.rows(); ++i)
            if (J_restricted.row(i).cwiseAbs().maxCoeff() <= tol) ++z;
        return z;
    }
};

namespace detail {

template <StiefelProblem P>
MatrixR flow_rhs(Engine engine, const P& prob, const MatrixR& x, const SolverConfig& cfg) {
    MatrixR g = prob.gradient(x);
    if (engine == Engine::Lagrange) {
        MatrixR v = MatrixR::Zero(x.rows(), x.cols());
        MatrixR t = assemble_T(x, v, g, cfg);
        MultiplierMatrix m = solve_symmetric_sylvester(x.transpose() * x, t, cfg.sylvester_sing_tol);
        return g + x * m;
    }
    if constexpr (P::uses_full_projection) {
        return tangent_project_raw(x, g);
    } else {
        return g - x * (x.transpose() * g);
    }
}

}  // namespace detail

template <StiefelProblem P>
NumericJacobian assemble_J_numeric(Engine engine, const P& prob, const MatrixR& xhat,
                                   const SolverConfig& cfg, double fd_step = 0.0,
                                   double stationary_tol = 1e-8) {
    require(xhat.rows() == prob.rows() && xhat.cols() == prob.cols(),
            "assemble_J_numeric: Xhat shape mismatch");
    const Index n = xhat.rows(), p = xhat.cols(), q = n * p;

    const double rhs0 = detail::flow_rhs(engine, prob, xhat, cfg).norm();
    if (rhs0 > stationary_tol)
        throw NotStationary("assemble_J_numeric: |Psi(Xhat)| = " + std::to_string(rhs0));

    NumericJacobian out;
    out.fd_step = fd_step > 0.0 ? fd_step : 1e-5 * std::max(1.0, xhat.norm());
    out.J.resize(q, q);
    MatrixR xp = xhat, xm = xhat;
    for (Index c = 0; c < q; ++c) {
        const Index i = c % n, j = c / n;
        xp(i, j) += out.fd_step;
        xm(i, j) -= out.fd_step;
        MatrixR d = detail::flow_rhs(engine, prob, xp, cfg) - detail::flow_rhs(engine, prob, xm, cfg);
        out.J.col(c) = vec(d) / (2.0 * out.fd_step);
        xp(i, j) = xhat(i, j);
        xm(i, j) = xhat(i, j);
    }

    out.P_perp = MatrixR::Identity(n, n) - xhat * xhat.transpose();
    MatrixR ipp = kron(MatrixR::Identity(p, p), out.P_perp);
    out.J_restricted = ipp * out.J * ipp;
    return out;
}

// ---------------------------------------------------------------------------
// Closed-form spectrum predictions for the eigenvalue problem with K = nu.
//
// lagrange: the eigenvalue list from the quadratic-form stability certificate,
//   {lambda_j + mu_i : i <= p < j} union {nu - mu_i - mu_j : i, j <= p}.
// The quadratic form certifies a lower bound over each basis direction; it is
// not asserted to be the exact Jacobian spectrum, so callers should compare
// by containment and inspect the reported discrepancies.
//
// projected: the tangent-restricted spectrum, {lambda_j + mu_i : i <= p < j}
// plus zeros of multiplicity p^2 (structural, from the span of Xhat).
//
// bound: min{nu - 2 mu_1, lambda* + mu_p} with lambda* the smallest
// complement eigenvalue; > 0 certifies asymptotic stability.
// ---------------------------------------------------------------------------
struct EigSpectrumPrediction {
    std::vector<double> lagrange;
    std::vector<double> projected;
    double bound = 0.0;
    Verdict verdict = Verdict::Marginal;
    VectorR mu;      // multiplier spectrum, mu_i = -lambda_i
    VectorR lambda;  // spectrum of A, ascending
};

inline EigSpectrumPrediction eig_spectrum_prediction(const EigProblem& prob, double nu,
                                                     double gap_tol = 1e-8) {
    EigReference ref = eig_reference(prob, gap_tol);
    if (ref.ambiguous)
        throw AmbiguousEigenspace("eig_spectrum_prediction: eigengap " + std::to_string(ref.gap));
    const Index n = prob.rows(), p = prob.cols();

    EigSpectrumPrediction out;
    out.mu = ref.mu;
    out.lambda = ref.lambda;
    for (Index i = 0; i < p; ++i)
        for (Index j = p; j < n; ++j) {
            out.lagrange.push_back(ref.lambda(j) + ref.mu(i));
            out.projected.push_back(ref.lambda(j) + ref.mu(i));
        }
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j) out.lagrange.push_back(nu - ref.mu(i) - ref.mu(j));
    for (Index i = 0; i < p * p; ++i) out.projected.push_back(0.0);

    const double mu1 = ref.mu.maxCoeff();
    const double mup = ref.mu.minCoeff();
    // p = n leaves no complement eigenvalues: that family is vacuous
    const double lambda_star =
        (p < n) ? ref.lambda(p) : std::numeric_limits<double>::infinity();
    out.bound = std::min(nu - 2.0 * mu1, lambda_star + mup);
    out.verdict = verdict_from_min_real(out.bound);
    return out;
}

// ---------------------------------------------------------------------------
// SpectrumReport: predicted vs numerically computed flow spectra plus the
// stability verdict, serializable as key: value lines with CSV blocks.
// ---------------------------------------------------------------------------
struct SpectrumReport {
    std::vector<Complex> alphas;     // eigenvalues of J_hat
    std::vector<Complex> betas;      // eigenvalues of the system block, 2 per alpha
    std::vector<Complex> predicted;  // closed-form list when available
    double min_real_alpha = 0.0;
    Verdict verdict = Verdict::Marginal;
    double eta = 0.0;
    double match_tol = 0.0;          // 0 when no prediction
    MultisetMatch match;             // predicted vs alphas
    std::string note;
};

inline SpectrumReport make_spectrum_report(std::vector<Complex> alphas, double eta,
                                           std::vector<Complex> predicted = {},
                                           double marginal_band = 1e-8) {
    SpectrumReport r;
    r.alphas = std::move(alphas);
    r.predicted = std::move(predicted);
    r.eta = eta;
    r.min_real_alpha = std::numeric_limits<double>::infinity();
    for (const Complex& a : r.alphas) {
        auto [b1, b2] = beta_from_alpha(a, eta);
        r.betas.push_back(b1);
        r.betas.push_back(b2);
        r.min_real_alpha = std::min(r.min_real_alpha, a.real());
    }
    r.verdict = verdict_from_min_real(r.min_real_alpha, marginal_band);
    if (!r.predicted.empty()) {
        r.match_tol = 1e-6 * std::max(1.0, spectral_radius(r.alphas));
        r.match = match_multisets(r.predicted, r.alphas, r.match_tol);
    }
    return r;
}

inline std::string to_text(const SpectrumReport& r) {
    std::ostringstream os;
    os << "verdict: " << to_string(r.verdict) << "\n";
    os << "min_real_alpha: " << format_double(r.min_real_alpha) << "\n";
    os << "eta: " << format_double(r.eta) << "\n";
    os << "n_alphas: " << r.alphas.size() << "\n";
    os << "n_betas: " << r.betas.size() << "\n";
    os << "predicted_available: " << (r.predicted.empty() ? 0 : 1) << "\n";
    if (!r.predicted.empty()) {
        os << "match_tol: " << format_double(r.match_tol) << "\n";
        os << "match_max_distance: " << format_double(r.match.max_distance) << "\n";
        os << "unmatched_predicted: " << r.match.unmatched_a << "\n";
        os << "unmatched_numeric: " << r.match.unmatched_b << "\n";
    }
    if (!r.note.empty()) os << "note: " << r.note << "\n";
    auto block = [&os](const char* name, const std::vector<Complex>& v) {
        os << name << ":\n";
        os << "re,im\n";
        for (const Complex& z : v)
            os << format_double(z.real()) << "," << format_double(z.imag()) << "\n";
    };
    block("alphas_csv", r.alphas);
    block("betas_csv", r.betas);
    if (!r.predicted.empty()) block("predicted_csv", r.predicted);
    return os.str();
}

// ---------------------------------------------------------------------------
// Procrustes projected-flow spectrum check. Assembles the analytic
//   J(Xhat) = (I (x) P_perp A^T A P_perp) + (M_hat (x) P_perp),
// whose eigenvalues are lambda_i(M_hat) + mu_j over the r nonzero eigenvalues
// mu_j of P_perp A^T A P_perp, plus zeros of multiplicity p (n - r); verifies
// that structure and cross-checks against the numeric Jacobian restricted to
// the tangent space.
// ---------------------------------------------------------------------------
inline SpectrumReport procrustes_spectrum_check(const ProcrustesProblem& prob,
                                                const StiefelPoint& xhat,
                                                const MultiplierMatrix& mhat,
                                                const SolverConfig& cfg,
                                                double stationary_tol = 1e-8) {
    const MatrixR& x = xhat.matrix();
    const Index n = prob.rows(), p = prob.cols();
    MatrixR g = prob.gradient(x);
    if (tangent_project(xhat, g).norm() > stationary_tol)
        throw NotStationary("procrustes_spectrum_check: not stationary");

    MatrixR pperp = MatrixR::Identity(n, n) - x * x.transpose();
    MatrixR core = pperp * prob.A().transpose() * prob.A() * pperp;
    MatrixR j_analytic = kron(MatrixR::Identity(p, p), core) + kron(symPart(mhat), pperp);

    // predicted structure
    Eigen::SelfAdjointEigenSolver<MatrixR> core_es(symPart(core));
    Eigen::SelfAdjointEigenSolver<MatrixR> m_es(symPart(mhat));
    const double scale = std::max(1.0, core_es.eigenvalues().cwiseAbs().maxCoeff());
    std::vector<double> nonzero;
    for (Index i = 0; i < n; ++i)
        if (std::abs(core_es.eigenvalues()(i)) > 1e-8 * scale)
            nonzero.push_back(core_es.eigenvalues()(i));
    const Index r = static_cast<Index>(nonzero.size());

    std::vector<Complex> predicted;
    for (Index i = 0; i < p; ++i)
        for (double muj : nonzero) predicted.push_back(Complex(m_es.eigenvalues()(i) + muj, 0.0));
    for (Index i = 0; i < p * (n - r); ++i) predicted.push_back(Complex(0.0, 0.0));

    SpectrumReport report =
        make_spectrum_report(eigenvalues_of(j_analytic), cfg.eta_x, std::move(predicted));

    // numeric cross-check on the tangent-restricted numeric Jacobian
    NumericJacobian num = assemble_J_numeric(Engine::Projected, prob, x, cfg, 0.0, stationary_tol);
    MultisetMatch num_match =
        match_multisets(report.alphas, eigenvalues_of(num.J_restricted), report.match_tol);
    if (!num_match.complete(report.match_tol)) {
        report.note = "numeric tangent-restricted spectrum deviates from analytic by " +
                      format_double(num_match.max_distance);
    }
    return report;
}

}  // namespace stiefelflow
