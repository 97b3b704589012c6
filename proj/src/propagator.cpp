#include "rdde/propagator.hpp"

#include "kernels.hpp"
#include "rdde/errors.hpp"
#include "rdde/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace rdde {

namespace {

constexpr double kTimeSnap = 1e-12;

void check_dim(const Driver& driver, int N) {
    if (N != driver.dimension()) throw ConfigError("segment dimension does not match driver");
}

// Integer and fractional parts of a propagation time.
std::pair<long, double> split_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("propagate: t must be finite and >= 0");
    double whole = std::floor(t);
    double frac = t - whole;
    if (frac > 1.0 - kTimeSnap) {
        whole += 1.0;
        frac = 0.0;
    }
    if (frac < kTimeSnap) frac = 0.0;
    return {static_cast<long>(whole), frac};
}

SegmentC advance_C(const Driver& driver, double t0, double duration, const SegmentC& u) {
    const auto plan = detail::build_plan(driver, t0, duration, u.dim(), u.grid);
    SegmentC out(u.grid, u.dim());
    std::vector<double> scratch(static_cast<std::size_t>(u.dim() * plan.outputs));
    run_plan(plan, u.values.col(u.grid.M).data(), u.values.data(), out.values.data(), scratch.data());
    return out;
}

SegmentL advance_L(const Driver& driver, double t0, double duration, const SegmentL& u) {
    const auto plan = detail::build_plan(driver, t0, duration, u.dim(), u.grid);
    SegmentL out(u.grid, u.dim(), u.p);
    std::vector<double> scratch(static_cast<std::size_t>(u.dim() * plan.outputs));
    run_plan(plan, u.head.data(), u.density.data(), out.density.data(), scratch.data());
    out.head = out.density.col(u.grid.M);
    return out;
}

template <class Segment, class Advance>
Segment propagate_impl(const Driver& driver, double base_time, const Segment& u, double t,
                       Advance advance) {
    check_dim(driver, u.dim());
    const auto [whole, frac] = split_time(t);
    Segment v = u;
    double clock = base_time;
    if (frac > 0.0) {
        v = advance(driver, clock, frac, v);
        clock += frac;
    }
    for (long k = 0; k < whole; ++k) v = advance(driver, clock + static_cast<double>(k), 1.0, v);
    return v;
}

}  // namespace

Matrix UnitStepOperator::in_metric() const {
    const Vector w = metric_weights(fiber_kind, grid, N);
    return to_metric(matrix, w, w);
}

FundamentalMatrix fundamental_matrix(const Driver& driver, double t1, double t2,
                                     const GridSpec& grid) {
    if (!(t2 >= t1)) throw ConfigError("fundamental_matrix: need t1 <= t2");
    if (t2 - t1 > 1.0 + kTimeSnap) throw ConfigError("fundamental_matrix: span longer than 1");
    const int N = driver.dimension();
    FundamentalMatrix fm{t1, t2, Matrix::Identity(N, N)};
    if (!driver.window().contains(t1) || !driver.window().contains(t2))
        throw WindowError("fundamental_matrix: [t1, t2] outside realized window");
    if (t2 == t1) return fm;
    const auto plan = detail::build_plan(driver, t1, t2 - t1, N, grid, false);
    for (const Matrix& cell : detail::cell_transitions(plan)) fm.matrix = cell * fm.matrix;
    return fm;
}

StepBounds step_bounds(const Driver& driver, double base_time, const GridSpec& grid) {
    const int M = grid.M;
    const auto plan = detail::build_plan(driver, base_time, 1.0, driver.dimension(), grid, false);
    const std::vector<Matrix> cells = detail::cell_transitions(plan);
    double c = 1.0;
#pragma omp parallel for reduction(max : c) schedule(dynamic)
    for (int j1 = 0; j1 < M; ++j1) {
        Matrix prod = Matrix::Identity(driver.dimension(), driver.dimension());
        for (int j2 = j1; j2 < M; ++j2) {
            prod = cells[static_cast<std::size_t>(j2)] * prod;
            c = std::max(c, matrix_norm2(prod));
        }
    }
    StepBounds sb;
    sb.c = c;
    sb.d = std::pow(integral_of_bq(driver, base_time, base_time + 1.0, driver.q()), 1.0 / driver.q());
    sb.c_upper = std::exp(integral_of_a(driver, base_time, base_time + 1.0));
    return sb;
}

SegmentC step_unit_C(const Driver& driver, double base_time, const SegmentC& u) {
    check_dim(driver, u.dim());
    return advance_C(driver, base_time, 1.0, u);
}

SegmentL step_unit_L(const Driver& driver, double base_time, const SegmentL& u) {
    check_dim(driver, u.dim());
    return advance_L(driver, base_time, 1.0, u);
}

SegmentC propagate(const Driver& driver, double base_time, const SegmentC& u, double t) {
    return propagate_impl(driver, base_time, u, t, advance_C);
}

SegmentL propagate(const Driver& driver, double base_time, const SegmentL& u, double t) {
    return propagate_impl(driver, base_time, u, t, advance_L);
}

SegmentC op_LC(const Driver& driver, double base_time, const SegmentL& u, double t) {
    if (!(t >= 1.0 - kTimeSnap)) throw ConfigError("op_LC: defined for t >= 1 only");
    const SegmentL v = propagate(driver, base_time, u, t);
    return SegmentC(v.grid, v.density);
}

UnitStepOperator assemble_unit_operator(const Driver& driver, double base_time, FiberKind kind,
                                        const GridSpec& grid) {
    const int N = driver.dimension();
    const int D = fiber_dimension(kind, grid, N);
    const auto plan = detail::build_plan(driver, base_time, 1.0, N, grid);
    UnitStepOperator op;
    op.fiber_kind = kind;
    op.grid = grid;
    op.N = N;
    op.base_time = base_time;
    op.matrix = detail::apply_plan_block(plan, kind, Matrix::Identity(D, D), true);
    return op;
}

UnitStepOperator assemble_unit_operator_reference(const Driver& driver, double base_time,
                                                  FiberKind kind, const GridSpec& grid) {
    const int N = driver.dimension();
    const int D = fiber_dimension(kind, grid, N);
    UnitStepOperator op;
    op.fiber_kind = kind;
    op.grid = grid;
    op.N = N;
    op.base_time = base_time;
    op.matrix.resize(D, D);
    for (int c = 0; c < D; ++c) {
        Vector e = Vector::Unit(D, c);
        if (kind == FiberKind::C) {
            op.matrix.col(c) = step_unit_C(driver, base_time, SegmentC::from_coords(grid, N, e)).coords();
        } else {
            op.matrix.col(c) = step_unit_L(driver, base_time, SegmentL::from_coords(grid, N, e)).coords();
        }
    }
    return op;
}

Matrix assemble_LC_operator(const Driver& driver, double base_time, const GridSpec& grid) {
    const auto op = assemble_unit_operator(driver, base_time, FiberKind::L, grid);
    return op.matrix.bottomRows(fiber_dimension(FiberKind::C, grid, op.N));
}

Matrix apply_unit_block(const Driver& driver, double base_time, FiberKind kind,
                        const GridSpec& grid, const Matrix& block) {
    const auto plan = detail::build_plan(driver, base_time, 1.0, driver.dimension(), grid);
    return detail::apply_plan_block(plan, kind, block, true);
}

void write_csv(std::ostream& os, const UnitStepOperator& op) {
    os.precision(17);
    for (Eigen::Index r = 0; r < op.matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < op.matrix.cols(); ++c) {
            if (c) os << ',';
            os << op.matrix(r, c);
        }
        os << '\n';
    }
}

}  // namespace rdde
