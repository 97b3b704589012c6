#pragma once

// Solution operators of the delay system on both fibers, by the method of
// steps. One unit step integrates
//
//     z'(t) = A(t) z(t) + B(t) g(t - 1),   t in [t0, t0 + 1],
//
// with the history g read from the input segment (linear in each grid cell)
// and RK4 on substeps that never straddle a grid node of the history or a
// discontinuity of the coefficient path.

#include "rdde/driver.hpp"
#include "rdde/fiber.hpp"

namespace rdde {

struct FundamentalMatrix {
    double t1 = 0.0;
    double t2 = 0.0;
    Matrix matrix;
};

/// c >= 1 is a lower estimate of the sup over grid-aligned pairs;
/// c_upper = exp(int_0^1 a) is the analytic bound it must respect.
struct StepBounds {
    double c = 1.0;
    double d = 0.0;
    double c_upper = 1.0;
};

/// Dense matrix of one unit-time solution operator in raw coordinates.
struct UnitStepOperator {
    FiberKind fiber_kind = FiberKind::C;
    GridSpec grid;
    int N = 1;
    double base_time = 0.0;
    Matrix matrix;

    /// The same operator in metric coordinates (orthonormal for the fiber metric).
    Matrix in_metric() const;
};

/// Z' = A Z, Z(t1) = I on [t1, t2], t2 - t1 <= 1, with RK4 at step 1/M.
FundamentalMatrix fundamental_matrix(const Driver& driver, double t1, double t2,
                                     const GridSpec& grid);

StepBounds step_bounds(const Driver& driver, double base_time, const GridSpec& grid);

SegmentC step_unit_C(const Driver& driver, double base_time, const SegmentC& u);
SegmentL step_unit_L(const Driver& driver, double base_time, const SegmentL& u);

/// Partial step on [0, t - floor(t)] followed by unit steps.
SegmentC propagate(const Driver& driver, double base_time, const SegmentC& u, double t);
SegmentL propagate(const Driver& driver, double base_time, const SegmentL& u, double t);

/// U^{(L,C)}(t) : L -> C for t >= 1.
SegmentC op_LC(const Driver& driver, double base_time, const SegmentL& u, double t);

/// Columns are images of coordinate basis vectors; the step plan is built
/// once and the columns are integrated in parallel.
UnitStepOperator assemble_unit_operator(const Driver& driver, double base_time, FiberKind kind,
                                        const GridSpec& grid);

/// Serial column-by-column assembly through step_unit_C / step_unit_L.
UnitStepOperator assemble_unit_operator_reference(const Driver& driver, double base_time,
                                                  FiberKind kind, const GridSpec& grid);

/// U^{(L,C)}(1) in raw coordinates: N(M+1) x N(M+2).
Matrix assemble_LC_operator(const Driver& driver, double base_time, const GridSpec& grid);

/// One unit step applied to every column of a block of raw coordinates.
Matrix apply_unit_block(const Driver& driver, double base_time, FiberKind kind,
                        const GridSpec& grid, const Matrix& block);

void write_csv(std::ostream& os, const UnitStepOperator& op);

}  // namespace rdde
