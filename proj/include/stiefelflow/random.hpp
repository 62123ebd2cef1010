#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "stiefelflow/types.hpp"

namespace stiefelflow {

// Deterministic random source. The standard distributions are
// implementation-defined, so uniform and gaussian draws are generated here
// directly from the mt19937_64 bit stream; identical seeds give identical
// streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1) with 53 random mantissa bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Entries uniform in [-halfwidth, halfwidth], filled column by column.
inline MatrixR uniform_matrix(Index rows, Index cols, double halfwidth, Rng& rng) {
    MatrixR m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-halfwidth, halfwidth);
    return m;
}

inline MatrixR gaussian_matrix(Index rows, Index cols, Rng& rng) {
    MatrixR m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.gaussian();
    return m;
}

/// Random n x p matrix with orthonormal columns (QR of a gaussian draw, with
/// column signs fixed by the R diagonal so the result is a canonical draw).
inline MatrixR random_orthonormal(Index n, Index p, Rng& rng) {
    MatrixR g = gaussian_matrix(n, p, rng);
    Eigen::HouseholderQR<MatrixR> qr(g);
    MatrixR q = qr.householderQ() * MatrixR::Identity(n, p);
    MatrixR r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
    for (Index j = 0; j < p; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
}

/// Symmetric matrix Q^T D Q with the prescribed spectrum.
inline MatrixR spd_with_spectrum(const VectorR& eigenvalues, Rng& rng) {
    const Index n = eigenvalues.size();
    MatrixR q = random_orthonormal(n, n, rng);
    MatrixR a = q * eigenvalues.asDiagonal() * q.transpose();
    return symPart(a);
}

/// m x n matrix U diag(s) V^T with prescribed singular values.
inline MatrixR matrix_with_singular_values(Index m, Index n, const VectorR& svals, Rng& rng) {
    const Index k = std::min(m, n);
    require(svals.size() == k, "matrix_with_singular_values: need min(m,n) values");
    MatrixR u = random_orthonormal(m, k, rng);
    MatrixR v = random_orthonormal(n, k, rng);
    return u * svals.asDiagonal() * v.transpose();
}

}  // namespace stiefelflow
