#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace stiefelflow {

using MatrixR = Eigen::MatrixXd;
using VectorR = Eigen::VectorXd;
using Index = Eigen::Index;
using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Error types. All derive from Error so callers can catch the whole family.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidShape : public Error {
public:
    using Error::Error;
};

class BaseOffManifold : public Error {
public:
    using Error::Error;
};

class RankDeficient : public Error {
public:
    using Error::Error;
};

class SylvesterSingular : public Error {
public:
    using Error::Error;
};

class NonFinite : public Error {
public:
    using Error::Error;
};

class NotStationary : public Error {
public:
    using Error::Error;
};

class AmbiguousEigenspace : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Small matrix helpers shared across the library.
// ---------------------------------------------------------------------------

/// skew(S) = (S - S^T)/2
inline MatrixR skew(const MatrixR& s) { return 0.5 * (s - s.transpose()); }

/// sym(S) = (S + S^T)/2
inline MatrixR symPart(const MatrixR& s) { return 0.5 * (s + s.transpose()); }

inline double frob(const MatrixR& m) { return m.norm(); }

/// Kronecker product, dense. Sizes stay small in this library (p x p blocks
/// and np x np stability operators).
inline MatrixR kron(const MatrixR& a, const MatrixR& b) {
    MatrixR out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Column-major vectorization, vec(X).
inline VectorR vec(const MatrixR& x) {
    return Eigen::Map<const VectorR>(x.data(), x.size());
}

inline MatrixR unvec(const VectorR& v, Index rows, Index cols) {
    return Eigen::Map<const MatrixR>(v.data(), rows, cols);
}

inline void require(bool cond, const std::string& what) {
    if (!cond) throw InvalidShape(what);
}

}  // namespace stiefelflow
