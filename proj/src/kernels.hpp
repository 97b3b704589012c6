#pragma once

// Internal method-of-steps machinery shared by the propagator entry points.
// A StepPlan fixes everything that depends on (driver, t0, duration, grid):
// substep boundaries, coefficient samples, history cells and output mapping.
// Running it on a column is pure arithmetic, so one plan serves all columns
// of an operator assembly.

#include "rdde/driver.hpp"
#include "rdde/fiber.hpp"

#include <vector>

namespace rdde::detail {

struct Substep {
    int cell = 0;          // history cell [node cell, node cell+1]
    double theta_a = 0.0;  // substep ends inside the cell, in units of h
    double theta_b = 0.0;
    double dt = 0.0;
    int out_slot = -1;     // integration output recorded at the substep end
};

struct NodeSource {
    enum Kind { integrated, initial, history_node, history_cubic } kind = initial;
    int slot = 0;                 // integrated: output slot; history_node: node index
    int stencil = 0;              // history_cubic: first stencil node
    double weights[4] = {0, 0, 0, 0};
};

struct StepPlan {
    int N = 1;
    GridSpec grid;
    double t0 = 0.0;
    double duration = 0.0;
    bool forcing = true;
    std::vector<Substep> steps;
    std::vector<double> coef;  // per substep: A_a, B_a, A_m, B_m, A_b, B_b (N*N, col-major)
    int outputs = 0;
    std::vector<NodeSource> nodes;  // sources of the M+1 output nodes
};

/// duration in (0, 1]; with forcing == false the B terms are dropped.
StepPlan build_plan(const Driver& driver, double t0, double duration, int N, const GridSpec& grid,
                    bool forcing = true);

/// z0: N values; history: N x (M+1) col-major; out: N x (M+1) col-major.
/// scratch must hold N * plan.outputs doubles.
void run_plan(const StepPlan& plan, const double* z0, const double* history, double* out,
              double* scratch);

/// Per-cell transition matrices of z' = A z (plan built with forcing == false).
std::vector<Matrix> cell_transitions(const StepPlan& plan);

/// Apply a plan to every column of a raw-coordinate block (C or L layout),
/// optionally in parallel.
Matrix apply_plan_block(const StepPlan& plan, FiberKind kind, const Matrix& block, bool parallel);

}  // namespace rdde::detail
