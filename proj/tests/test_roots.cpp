#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rdde/errors.hpp"
#include "rdde/spectrum.hpp"

#include <cmath>
#include <complex>

using namespace rdde;
using cd = std::complex<double>;

namespace {

// Newton on lambda = s e^{-lambda} for scalar s, from a complex start
cd scalar_root(double s, cd z) {
    for (int i = 0; i < 100; ++i) z -= (z - s * std::exp(-z)) / (1.0 + s * std::exp(-z));
    return z;
}

double residual(const Matrix& A, const Matrix& B, cd z) {
    const auto N = A.rows();
    const Eigen::MatrixXcd M = z * Eigen::MatrixXcd::Identity(N, N) - A.cast<cd>() - B.cast<cd>() * std::exp(-z);
    return std::abs(M.determinant());
}

}  // namespace

TEST_CASE("scalar z' = z(t-1)") {
    const auto r = characteristic_root_oracle(Matrix::Zero(1, 1), Matrix::Ones(1, 1), 3);
    REQUIRE(r.size() == 3);
    const cd w = scalar_root(1.0, 0.5);
    CHECK(w.real() == doctest::Approx(0.567143).epsilon(1e-6));
    CHECK(std::abs(r[0] - w) <= 1e-12);
    CHECK(r[0].imag() == 0.0);
    // next pair -1.5339 +- 4.3752 i
    const cd p = scalar_root(1.0, cd(-1.5, 4.4));
    CHECK(std::abs(r[1] - p) <= 1e-10);
    CHECK(std::abs(r[2] - std::conj(p)) <= 1e-10);
}

TEST_CASE("scalar z' = -z(t-1)") {
    const auto r = characteristic_root_oracle(Matrix::Zero(1, 1), -Matrix::Ones(1, 1), 2);
    const cd p = scalar_root(-1.0, cd(-0.3, 1.3));
    CHECK(p.real() == doctest::Approx(-0.3181).epsilon(1e-4));
    CHECK(std::abs(p.imag()) == doctest::Approx(1.3372).epsilon(1e-4));
    CHECK(std::abs(r[0].real() - p.real()) <= 1e-12);
    CHECK(std::abs(r[1].real() - p.real()) <= 1e-12);
    CHECK(std::abs(r[0].imag()) == doctest::Approx(std::abs(p.imag())).epsilon(1e-12));
    CHECK(r[0] == std::conj(r[1]));
}

TEST_CASE("no delay term: eigenvalues of A") {
    const Matrix A{{-1.0, 0.0}, {0.0, -2.0}};
    const auto r = characteristic_root_oracle(A, Matrix::Zero(2, 2), 2);
    CHECK(r[0] == cd(-1.0, 0.0));
    CHECK(r[1] == cd(-2.0, 0.0));
    const Matrix R{{0.0, 1.0}, {-1.0, 0.0}};
    const auto rot = characteristic_root_oracle(R, Matrix::Zero(2, 2), 2);
    CHECK(std::abs(rot[0].real()) <= 1e-15);
    CHECK(std::abs(std::abs(rot[0].imag()) - 1.0) <= 1e-15);
    CHECK_THROWS_AS(characteristic_root_oracle(A, Matrix::Zero(2, 2), 3), NumericalError);
}

TEST_CASE("multiplicity from repeated blocks") {
    // B = I in two dimensions doubles every scalar root
    const auto r = characteristic_root_oracle(Matrix::Zero(2, 2), Matrix::Identity(2, 2), 4);
    const cd w = scalar_root(1.0, 0.5);
    CHECK(std::abs(r[0] - w) <= 1e-9);
    CHECK(std::abs(r[1] - w) <= 1e-9);
    CHECK(std::abs(r[2].real() - scalar_root(1.0, cd(-1.5, 4.4)).real()) <= 1e-9);
}

TEST_CASE("coupled system roots have small residual") {
    const Matrix A{{0.0, 1.0}, {-2.0, -0.5}}, B{{0.3, 0.0}, {0.2, -0.4}};
    const auto r = characteristic_root_oracle(A, B, 5);
    REQUIRE(r.size() == 5);
    for (std::size_t i = 0; i + 1 < r.size(); ++i) CHECK(r[i].real() >= r[i + 1].real());
    for (const cd& z : r) CHECK(residual(A, B, z) <= 1e-8 * std::max(1.0, std::norm(z)));
}

TEST_CASE("input errors") {
    CHECK_THROWS_AS(characteristic_root_oracle(Matrix::Zero(2, 3), Matrix::Zero(2, 2), 1), ConfigError);
    CHECK_THROWS_AS(characteristic_root_oracle(Matrix::Zero(2, 2), Matrix::Zero(3, 3), 1), ConfigError);
    CHECK_THROWS_AS(characteristic_root_oracle(Matrix::Zero(1, 1), Matrix::Ones(1, 1), 0), ConfigError);
    Matrix nan = Matrix::Zero(1, 1);
    nan(0, 0) = std::nan("");
    CHECK_THROWS_AS(characteristic_root_oracle(nan, Matrix::Ones(1, 1), 1), ConfigError);
}
