#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>

namespace rdde {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thin QR with R_ii >= 0. Q is rows x cols, R is cols x cols.
struct ThinQR {
    Matrix Q;
    Matrix R;
};

ThinQR thin_qr(const Matrix& Y);

/// Least-squares slope of ys against xs.
double regression_slope(std::span<const double> xs, std::span<const double> ys);

/// Standard normal matrix drawn from the counter-based generator.
Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                       std::uint64_t stream);

/// Orthonormal basis of the null space of the rows x cols matrix X,
/// taken as the trailing right singular vectors.
Matrix null_space(const Matrix& X, Eigen::Index dim);

/// W^{1/2} X W'^{-1/2} for diagonal metrics given by their weights.
Matrix to_metric(const Matrix& X, const Vector& w_out, const Vector& w_in);

}  // namespace rdde
