#pragma once

// Discretized fiber spaces on the delay interval [-1, 0]:
//
//   C = C([-1,0], R^N)                 sup norm
//   L = R^N x L_p([-1,0], R^N)         ||u1|| + ||u2||_p
//
// Segments store nodal values on a uniform grid s_j = -1 + j/M. For subspace
// work both fibers carry a Hilbert metric: trapezoid weights on nodes, plus a
// unit point mass at s = 0 (the head in L, the node u(0) in C). With that
// choice J : u -> (u(0), u) is an isometry between the two metrics.

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <vector>

namespace rdde {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class FiberKind { C, L };

const char* to_string(FiberKind kind);

struct GridSpec {
    int M = 32;

    GridSpec() = default;
    explicit GridSpec(int subintervals);

    double h() const { return 1.0 / M; }
    int nodes() const { return M + 1; }
    double node(int j) const { return -1.0 + static_cast<double>(j) / M; }
    /// Trapezoid weight of node j.
    double weight(int j) const { return (j == 0 || j == M) ? 0.5 / M : 1.0 / M; }

    bool operator==(const GridSpec&) const = default;
};

/// Element of C([-1,0], R^N): column j holds u(s_j).
struct SegmentC {
    GridSpec grid;
    Matrix values;  // N x (M+1)

    SegmentC() = default;
    SegmentC(GridSpec g, int N);
    SegmentC(GridSpec g, Matrix v);

    int dim() const { return static_cast<int>(values.rows()); }
    Vector at_zero() const { return values.col(grid.M); }
    /// Stacked nodal coordinates, node-major: index j*N + i.
    Vector coords() const;
    static SegmentC from_coords(GridSpec g, int N, const Vector& x);
    static SegmentC constant(GridSpec g, const Vector& v);
};

/// Element of R^N x L_p([-1,0], R^N). The head need not equal density(0).
struct SegmentL {
    GridSpec grid;
    Vector head;     // N
    Matrix density;  // N x (M+1)
    double p = 2.0;

    SegmentL() = default;
    SegmentL(GridSpec g, int N, double p_exp = 2.0);

    int dim() const { return static_cast<int>(head.size()); }
    /// Coordinates [head; stacked density].
    Vector coords() const;
    static SegmentL from_coords(GridSpec g, int N, const Vector& x, double p_exp = 2.0);
};

int fiber_dimension(FiberKind kind, const GridSpec& grid, int N);

/// Diagonal of the Hilbert metric in raw coordinates.
Vector metric_weights(FiberKind kind, const GridSpec& grid, int N);

double norm_C(const SegmentC& u);
double norm_L(const SegmentL& u);

SegmentL embed_J(const SegmentC& u, double p = 2.0);
/// Succeeds iff ||head - density(0)|| <= tol.
std::optional<SegmentC> try_invert_J(const SegmentL& v, double tol);

/// Matrix of J in raw coordinates, N(M+2) x N(M+1).
Matrix embedding_matrix(const GridSpec& grid, int N);

/// Orthonormal columns spanning a subspace (of metric coordinates).
struct SubspaceFrame {
    Matrix basis;
    int dropped = 0;  // input columns discarded as numerically dependent

    SubspaceFrame() = default;
    explicit SubspaceFrame(Matrix b, int drop = 0) : basis(std::move(b)), dropped(drop) {}

    int ambient_dim() const { return static_cast<int>(basis.rows()); }
    int dim() const { return static_cast<int>(basis.cols()); }
};

/// Column-pivoted QR; columns with |R_ii| <= rank_tol * |R_11| are dropped.
SubspaceFrame orthonormalize(const Matrix& vectors, double rank_tol = 1e-10);

/// Principal angles in [0, pi/2], ascending, min(dim P, dim Q) of them.
/// Small angles come from sines, large ones from cosines.
std::vector<double> principal_angles(const SubspaceFrame& P, const SubspaceFrame& Q);

double max_principal_angle(const SubspaceFrame& P, const SubspaceFrame& Q);

void write_csv(std::ostream& os, const SegmentC& u);
void write_csv(std::ostream& os, const SegmentL& u);

}  // namespace rdde
