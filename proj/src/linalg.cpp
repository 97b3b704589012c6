#include "rdde/linalg.hpp"

#include "rdde/driver.hpp"
#include "rdde/errors.hpp"

#include <cmath>
#include <numbers>

namespace rdde {

ThinQR thin_qr(const Matrix& Y) {
    const auto n = Y.rows(), k = Y.cols();
    Eigen::HouseholderQR<Matrix> qr(Y);
    ThinQR out;
    out.Q = qr.householderQ() * Matrix::Identity(n, k);
    out.R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < k; ++i) {
        if (out.R(i, i) < 0.0) {
            out.R.row(i) *= -1.0;
            out.Q.col(i) *= -1.0;
        }
    }
    return out;
}

double regression_slope(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw NumericalError("regression_slope: need at least two paired samples");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx == 0.0) throw NumericalError("regression_slope: degenerate abscissae");
    return sxy / sxx;
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                       std::uint64_t stream) {
    Matrix g(rows, cols);
    std::uint64_t c = 0;
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            // Box-Muller, cosine branch only
            const double u1 = counter_uniform(seed, stream, c++);
            const double u2 = counter_uniform(seed, stream, c++);
            g(i, j) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        }
    }
    return g;
}

Matrix null_space(const Matrix& X, Eigen::Index dim) {
    const auto n = X.cols();
    if (dim <= 0) return Matrix(n, 0);
    if (X.rows() == 0) return Matrix::Identity(n, dim);
    Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeFullV);
    return svd.matrixV().rightCols(dim);
}

Matrix to_metric(const Matrix& X, const Vector& w_out, const Vector& w_in) {
    return w_out.cwiseSqrt().asDiagonal() * X * w_in.cwiseSqrt().cwiseInverse().asDiagonal();
}

}  // namespace rdde
