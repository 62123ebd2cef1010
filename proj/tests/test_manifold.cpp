#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "stiefelflow/manifold.hpp"
#include "stiefelflow/random.hpp"

using namespace stiefelflow;

TEST_CASE("constraint: orthonormal point gives zero") {
    Rng rng(1);
    MatrixR x = random_orthonormal(7, 3, rng);
    CHECK(constraint(x).norm() <= 1e-14);
}

TEST_CASE("constraint: scaled identity") {
    MatrixR x = 2.0 * MatrixR::Identity(2, 2);
    MatrixR c = constraint(x).matrix();
    CHECK((c - 1.5 * MatrixR::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("constraint: matches naive dense-multiply oracle") {
    Rng rng(2);
    MatrixR x = gaussian_matrix(5, 2, rng);
    MatrixR expected = oracles::naive_constraint(x);
    CHECK((constraint(x).matrix() - expected).norm() <= 1e-14);
}

TEST_CASE("constraint: rejects n < p") {
    CHECK_THROWS_AS(constraint(MatrixR::Zero(2, 3)), InvalidShape);
}

TEST_CASE("constraint value is symmetric by construction") {
    Rng rng(3);
    MatrixR x = gaussian_matrix(6, 4, rng);
    MatrixR c = constraint(x).matrix();
    CHECK((c - c.transpose()).norm() == 0.0);
}

TEST_CASE("tangent_project: 1x1 skew vanishes") {
    MatrixR x(2, 1);
    x << 1.0, 0.0;
    MatrixR g(2, 1);
    g << 3.5, -2.0;
    MatrixR out = tangent_project(StiefelPoint(x), g);
    CHECK(out(0, 0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(out(1, 0) == Catch::Approx(-2.0));
}

TEST_CASE("tangent_project: G = X maps to zero") {
    Rng rng(4);
    MatrixR x = random_orthonormal(5, 2, rng);
    CHECK(tangent_project(StiefelPoint(x), x).norm() <= 1e-14);
}

TEST_CASE("tangent_project: output is tangent") {
    Rng rng(5);
    MatrixR x = random_orthonormal(6, 3, rng);
    MatrixR g = gaussian_matrix(6, 3, rng);
    MatrixR z = tangent_project(StiefelPoint(x), g);
    MatrixR defect = x.transpose() * z + z.transpose() * x;
    CHECK(defect.norm() <= 1e-12);
}

TEST_CASE("tangent_project is idempotent") {
    Rng rng(6);
    MatrixR x = random_orthonormal(8, 3, rng);
    StiefelPoint pt(x);
    MatrixR g = gaussian_matrix(8, 3, rng);
    MatrixR once = tangent_project(pt, g);
    MatrixR twice = tangent_project(pt, once);
    CHECK((once - twice).norm() <= 1e-12);
}

TEST_CASE("projection decomposition: vanishing projection splits into both parts") {
    // G = X S with S symmetric forces P(G) = 0; then both (I - X X^T) G = 0
    // and X^T G - G^T X = 0 must hold separately.
    Rng rng(7);
    MatrixR x = random_orthonormal(6, 3, rng);
    MatrixR s = symPart(gaussian_matrix(3, 3, rng));
    MatrixR g = x * s;
    CHECK(tangent_project(StiefelPoint(x), g).norm() <= 1e-10);
    CHECK((g - x * (x.transpose() * g)).norm() <= 1e-10);
    CHECK((x.transpose() * g - g.transpose() * x).norm() <= 1e-10);
}

TEST_CASE("StiefelPoint rejects off-manifold bases") {
    MatrixR x = 1.5 * MatrixR::Identity(3, 2);
    CHECK_THROWS_AS(StiefelPoint(x), BaseOffManifold);
}

TEST_CASE("polar_retract: fixed point on the manifold") {
    Rng rng(8);
    MatrixR x = random_orthonormal(5, 2, rng);
    CHECK((polar_retract(x).matrix() - x).norm() <= 1e-12);
}

TEST_CASE("polar_retract: positive diagonal scaling") {
    MatrixR x = MatrixR::Zero(3, 2);
    x(0, 0) = 2.0;
    x(1, 1) = 3.0;
    MatrixR expected = MatrixR::Zero(3, 2);
    expected(0, 0) = 1.0;
    expected(1, 1) = 1.0;
    CHECK((polar_retract(x).matrix() - expected).norm() <= 1e-14);
}

TEST_CASE("polar_retract: nearest orthonormal matrix") {
    Rng rng(9);
    MatrixR x = gaussian_matrix(8, 3, rng);
    MatrixR q = polar_retract(x).matrix();

    // independent route: X (X^T X)^{-1/2} via eigendecomposition
    Eigen::SelfAdjointEigenSolver<MatrixR> es(x.transpose() * x);
    MatrixR invsqrt = es.eigenvectors() *
                      es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                      es.eigenvectors().transpose();
    CHECK((q - x * invsqrt).norm() <= 1e-12);

    // Monte-Carlo minimality spot check
    const double best = (q - x).norm();
    for (int trial = 0; trial < 1000; ++trial) {
        MatrixR cand = random_orthonormal(8, 3, rng);
        CHECK((cand - x).norm() >= best - 1e-12);
    }
}

TEST_CASE("polar_retract: idempotent on its image") {
    Rng rng(10);
    MatrixR x = gaussian_matrix(7, 4, rng);
    MatrixR once = polar_retract(x).matrix();
    MatrixR twice = polar_retract(once).matrix();
    CHECK((once - twice).norm() <= 1e-13);
}

TEST_CASE("polar_retract: rank-deficient input is rejected") {
    MatrixR x = MatrixR::Zero(4, 2);
    x.col(0).setOnes();
    x.col(1) = x.col(0);  // rank 1
    CHECK_THROWS_AS(polar_retract(x), RankDeficient);
    CHECK_THROWS_AS(polar_retract(MatrixR::Zero(2, 1)), RankDeficient);
}

TEST_CASE("constraint_jacobian: 3x2 point has shape 3x6 and rank 3") {
    Rng rng(11);
    StiefelPoint x(random_orthonormal(3, 2, rng));
    MatrixR j = constraint_jacobian(x);
    REQUIRE(j.rows() == 3);
    REQUIRE(j.cols() == 6);
    CHECK(oracles::numeric_rank(j, 1e-8) == 3);
}

TEST_CASE("constraint_jacobian: n=2, p=1 at e1") {
    MatrixR x(2, 1);
    x << 1.0, 0.0;
    MatrixR j = constraint_jacobian(StiefelPoint(x));
    REQUIRE(j.rows() == 1);
    REQUIRE(j.cols() == 2);
    CHECK(j(0, 0) == Catch::Approx(1.0));
    CHECK(j(0, 1) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("constraint_jacobian: matches finite differences of constraint()") {
    Rng rng(12);
    MatrixR x = random_orthonormal(6, 3, rng);
    MatrixR j = constraint_jacobian(StiefelPoint(x));
    CHECK(oracles::numeric_rank(j, 1e-8) == 6);

    constexpr Index p = 3;
    auto upper_tri = [](const MatrixR& m) {
        MatrixR out(p * (p + 1) / 2, 1);
        Index r = 0;
        for (Index jj = 0; jj < p; ++jj)
            for (Index ii = 0; ii <= jj; ++ii) out(r++, 0) = m(ii, jj);
        return out;
    };
    MatrixR fd = oracles::fd_jacobian(
        [&](const MatrixR& xx) { return upper_tri(constraint(xx).matrix()); }, x, 1e-6);
    CHECK((j - fd).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("constraint_jacobian: null space is the tangent space") {
    Rng rng(13);
    MatrixR x = random_orthonormal(6, 3, rng);
    MatrixR j = constraint_jacobian(StiefelPoint(x));

    Eigen::JacobiSVD<MatrixR> svd(j, Eigen::ComputeFullV);
    const Index n = 6, p = 3;
    const Index null_dim = n * p - p * (p + 1) / 2;
    REQUIRE(svd.singularValues().size() == p * (p + 1) / 2);

    for (Index c = 0; c < null_dim; ++c) {
        VectorR v = svd.matrixV().col(n * p - 1 - c);
        CHECK((j * v).norm() <= 1e-10);
        MatrixR vm = unvec(v, n, p);
        MatrixR xv = x.transpose() * vm;
        CHECK((xv + xv.transpose()).norm() <= 1e-10);  // X^T V skew-symmetric
    }
}

TEST_CASE("subspace_distance: invariant under basis rotation") {
    Rng rng(14);
    MatrixR x = random_orthonormal(7, 3, rng);
    MatrixR q = random_orthonormal(3, 3, rng);
    CHECK(subspace_distance(x, x * q) <= 1e-12);
    MatrixR y = random_orthonormal(7, 3, rng);
    CHECK(subspace_distance(x, y) == Catch::Approx(subspace_distance(x * q, y)).margin(1e-12));
}

TEST_CASE("TangentVector validates the tangency invariant") {
    Rng rng(15);
    MatrixR x = random_orthonormal(6, 2, rng);
    StiefelPoint base(x);
    MatrixR g = gaussian_matrix(6, 2, rng);
    MatrixR z = tangent_project(base, g);
    CHECK_NOTHROW(TangentVector(z, base));
    CHECK_THROWS_AS(TangentVector(x, base), InvalidShape);           // X itself is normal
    CHECK_THROWS_AS(TangentVector(MatrixR::Zero(3, 2), base), InvalidShape);
}

TEST_CASE("random generators: determinism and prescribed structure") {
    Rng a(99), b(99);
    CHECK(a.uniform01() == b.uniform01());
    CHECK(a.gaussian() == b.gaussian());
    MatrixR ma = uniform_matrix(4, 3, 2.0, a);
    MatrixR mb = uniform_matrix(4, 3, 2.0, b);
    CHECK((ma - mb).norm() == 0.0);
    CHECK(ma.cwiseAbs().maxCoeff() <= 2.0);

    Rng c(7);
    MatrixR q = random_orthonormal(8, 3, c);
    CHECK(constraint(q).norm() <= 1e-13);

    VectorR eigs(4);
    eigs << 0.5, 1.0, 2.0, 7.0;
    MatrixR spd = spd_with_spectrum(eigs, c);
    Eigen::SelfAdjointEigenSolver<MatrixR> es(spd);
    CHECK((es.eigenvalues() - eigs).norm() <= 1e-12);

    VectorR sv(3);
    sv << 0.5, 1.5, 3.0;
    MatrixR m = matrix_with_singular_values(5, 3, sv, c);
    Eigen::JacobiSVD<MatrixR> svd(m);
    VectorR got = svd.singularValues();
    std::sort(got.data(), got.data() + got.size());
    CHECK((got - sv).norm() <= 1e-12);
}
