#include "rdde/fiber.hpp"

#include "rdde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace rdde {

const char* to_string(FiberKind kind) { return kind == FiberKind::C ? "C" : "L"; }

GridSpec::GridSpec(int subintervals) : M(subintervals) {
    if (M < 4) throw ConfigError("grid.M: must be >= 4");
}

SegmentC::SegmentC(GridSpec g, int N) : grid(g), values(Matrix::Zero(N, g.nodes())) {}

SegmentC::SegmentC(GridSpec g, Matrix v) : grid(g), values(std::move(v)) {
    if (values.cols() != grid.nodes()) throw ConfigError("SegmentC: node count does not match grid");
}

Vector SegmentC::coords() const {
    return Eigen::Map<const Vector>(values.data(), values.size());
}

SegmentC SegmentC::from_coords(GridSpec g, int N, const Vector& x) {
    if (x.size() != static_cast<Eigen::Index>(N) * g.nodes())
        throw ConfigError("SegmentC::from_coords: length mismatch");
    return SegmentC(g, Eigen::Map<const Matrix>(x.data(), N, g.nodes()));
}

SegmentC SegmentC::constant(GridSpec g, const Vector& v) {
    SegmentC u(g, static_cast<int>(v.size()));
    u.values.colwise() = v;
    return u;
}

SegmentL::SegmentL(GridSpec g, int N, double p_exp)
    : grid(g), head(Vector::Zero(N)), density(Matrix::Zero(N, g.nodes())), p(p_exp) {}

Vector SegmentL::coords() const {
    Vector x(head.size() + density.size());
    x.head(head.size()) = head;
    x.tail(density.size()) = Eigen::Map<const Vector>(density.data(), density.size());
    return x;
}

SegmentL SegmentL::from_coords(GridSpec g, int N, const Vector& x, double p_exp) {
    if (x.size() != static_cast<Eigen::Index>(N) * (g.nodes() + 1))
        throw ConfigError("SegmentL::from_coords: length mismatch");
    SegmentL u(g, N, p_exp);
    u.head = x.head(N);
    u.density = Eigen::Map<const Matrix>(x.data() + N, N, g.nodes());
    return u;
}

int fiber_dimension(FiberKind kind, const GridSpec& grid, int N) {
    return N * (grid.nodes() + (kind == FiberKind::L ? 1 : 0));
}

Vector metric_weights(FiberKind kind, const GridSpec& grid, int N) {
    Vector w(fiber_dimension(kind, grid, N));
    int offset = 0;
    if (kind == FiberKind::L) {
        w.head(N).setOnes();
        offset = N;
    }
    for (int j = 0; j <= grid.M; ++j) w.segment(offset + j * N, N).setConstant(grid.weight(j));
    if (kind == FiberKind::C) w.tail(N).array() += 1.0;
    return w;
}

double norm_C(const SegmentC& u) {
    double m = 0.0;
    for (int j = 0; j < u.values.cols(); ++j) m = std::max(m, u.values.col(j).norm());
    return m;
}

double norm_L(const SegmentL& u) {
    double acc = 0.0;
    for (int j = 0; j <= u.grid.M; ++j) acc += u.grid.weight(j) * std::pow(u.density.col(j).norm(), u.p);
    return u.head.norm() + std::pow(acc, 1.0 / u.p);
}

SegmentL embed_J(const SegmentC& u, double p) {
    SegmentL v(u.grid, u.dim(), p);
    v.head = u.at_zero();
    v.density = u.values;
    return v;
}

std::optional<SegmentC> try_invert_J(const SegmentL& v, double tol) {
    if ((v.head - v.density.col(v.grid.M)).norm() > tol) return std::nullopt;
    return SegmentC(v.grid, v.density);
}

Matrix embedding_matrix(const GridSpec& grid, int N) {
    const int nc = fiber_dimension(FiberKind::C, grid, N);
    Matrix J = Matrix::Zero(nc + N, nc);
    J.topRightCorner(N, N).setIdentity();
    J.bottomRows(nc).setIdentity();
    return J;
}

SubspaceFrame orthonormalize(const Matrix& vectors, double rank_tol) {
    if (vectors.cols() == 0) throw NumericalError("orthonormalize: empty input");
    if (vectors.cwiseAbs().maxCoeff() == 0.0) throw NumericalError("orthonormalize: all-zero input");
    Eigen::ColPivHouseholderQR<Matrix> qr(vectors);
    const Matrix& R = qr.matrixR();
    const auto kmax = std::min(vectors.rows(), vectors.cols());
    const double lead = std::abs(R(0, 0));
    Eigen::Index rank = 0;
    while (rank < kmax && std::abs(R(rank, rank)) > rank_tol * lead) ++rank;
    Matrix Q = qr.householderQ() * Matrix::Identity(vectors.rows(), rank);
    return SubspaceFrame(std::move(Q), static_cast<int>(vectors.cols() - rank));
}

std::vector<double> principal_angles(const SubspaceFrame& P, const SubspaceFrame& Q) {
    if (P.ambient_dim() != Q.ambient_dim())
        throw ConfigError("principal_angles: ambient dimensions differ");
    // project the smaller frame so the result is symmetric in (P, Q)
    const SubspaceFrame& small = P.dim() <= Q.dim() ? P : Q;
    const SubspaceFrame& big = P.dim() <= Q.dim() ? Q : P;
    const auto k = small.dim();
    if (k == 0) return {};

    Matrix cross = big.basis.transpose() * small.basis;
    Eigen::JacobiSVD<Matrix> cs(cross);
    Vector cosines = cs.singularValues();  // descending
    Matrix resid = small.basis - big.basis * cross;
    Eigen::JacobiSVD<Matrix> ss(resid);
    Vector sines = ss.singularValues();  // descending, length k
    std::vector<double> sin_asc(sines.data(), sines.data() + sines.size());
    std::sort(sin_asc.begin(), sin_asc.end());

    std::vector<double> angles(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) {
        const double c = i < cosines.size() ? std::clamp(cosines(i), 0.0, 1.0) : 0.0;
        const double s = std::clamp(sin_asc[static_cast<std::size_t>(i)], 0.0, 1.0);
        angles[static_cast<std::size_t>(i)] = s * s < 0.5 ? std::asin(s) : std::acos(c);
    }
    std::sort(angles.begin(), angles.end());
    return angles;
}

double max_principal_angle(const SubspaceFrame& P, const SubspaceFrame& Q) {
    auto a = principal_angles(P, Q);
    return a.empty() ? 0.0 : a.back();
}

void write_csv(std::ostream& os, const SegmentC& u) {
    os << "s";
    for (int i = 0; i < u.dim(); ++i) os << ",u" << i + 1;
    os << '\n';
    os.precision(17);
    for (int j = 0; j <= u.grid.M; ++j) {
        os << u.grid.node(j);
        for (int i = 0; i < u.dim(); ++i) os << ',' << u.values(i, j);
        os << '\n';
    }
}

void write_csv(std::ostream& os, const SegmentL& u) {
    os << "s";
    for (int i = 0; i < u.dim(); ++i) os << ",u" << i + 1;
    os << '\n';
    os.precision(17);
    os << "head";
    for (int i = 0; i < u.dim(); ++i) os << ',' << u.head(i);
    os << '\n';
    for (int j = 0; j <= u.grid.M; ++j) {
        os << u.grid.node(j);
        for (int i = 0; i < u.dim(); ++i) os << ',' << u.density(i, j);
        os << '\n';
    }
}

}  // namespace rdde
