#include "kernels.hpp"

#include "rdde/errors.hpp"

#include <algorithm>
#include <cmath>

namespace rdde::detail {

namespace {

constexpr double kSnap = 1e-9;  // grid units

void put(std::vector<double>& dst, const Matrix& m) {
    dst.insert(dst.end(), m.data(), m.data() + m.size());
}

// y += s * M x for an N x N col-major block
inline void gemv_acc(int N, const double* M, const double* x, double s, double* y) {
    for (int c = 0; c < N; ++c) {
        const double xc = s * x[c];
        const double* col = M + c * N;
        for (int r = 0; r < N; ++r) y[r] += col[r] * xc;
    }
}

}  // namespace

StepPlan build_plan(const Driver& driver, double t0, double duration, int N, const GridSpec& grid,
                    bool forcing) {
    if (!(duration > 0.0) || duration > 1.0 + 1e-12)
        throw ConfigError("step plan: duration must lie in (0, 1]");
    if (N != driver.dimension()) throw ConfigError("step plan: segment dimension does not match driver");
    StepPlan plan;
    plan.N = N;
    plan.grid = grid;
    plan.t0 = t0;
    plan.duration = duration;
    plan.forcing = forcing;
    const int M = grid.M;
    const double h = grid.h();

    double len = duration * M;
    if (std::abs(len - std::round(len)) < kSnap) len = std::round(len);

    // breakpoints in grid units relative to t0
    std::vector<double> pos{0.0, len};
    for (int j = 1; j < len - kSnap; ++j) pos.push_back(j);
    for (int k = 1; len - k > kSnap; ++k) pos.push_back(len - k);
    for (double tb : driver.breakpoints(t0, t0 + duration)) pos.push_back((tb - t0) * M);
    std::sort(pos.begin(), pos.end());
    std::vector<double> cuts;
    for (double p : pos) {
        if (cuts.empty() || p - cuts.back() > kSnap) cuts.push_back(p);
    }
    cuts.back() = len;

    // output positions len - k, k = 0..; slot k
    auto output_slot = [&](double p) -> int {
        const double k = len - p;
        const double kr = std::round(k);
        return (std::abs(k - kr) < kSnap && kr >= 0 && kr < M) ? static_cast<int>(kr) : -1;
    };
    plan.outputs = std::clamp(static_cast<int>(std::ceil(len - kSnap)), 1, M);

    Matrix Aa, Ba, Am, Bm, Ab, Bb;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        Substep s;
        s.cell = std::min(static_cast<int>(std::floor(a + kSnap)), M - 1);
        s.theta_a = a - s.cell;
        s.theta_b = b - s.cell;
        s.dt = (b - a) * h;
        s.out_slot = output_slot(b);
        if (s.out_slot >= plan.outputs) s.out_slot = -1;
        const double ta = t0 + a * h, tb = t0 + b * h, tm = 0.5 * (ta + tb);
        driver.matrices(ta, tm, Aa, Ba);
        driver.matrices(tm, tm, Am, Bm);
        driver.matrices(tb, tm, Ab, Bb);
        put(plan.coef, Aa);
        put(plan.coef, Ba);
        put(plan.coef, Am);
        put(plan.coef, Bm);
        put(plan.coef, Ab);
        put(plan.coef, Bb);
        plan.steps.push_back(s);
    }

    // where each node of the output segment comes from
    plan.nodes.resize(static_cast<std::size_t>(M + 1));
    for (int j = 0; j <= M; ++j) {
        NodeSource& src = plan.nodes[static_cast<std::size_t>(j)];
        const double p = len - (M - j);
        if (p > kSnap) {
            src.kind = NodeSource::integrated;
            src.slot = M - j;
        } else if (p > -kSnap) {
            src.kind = NodeSource::initial;
        } else {
            const double x = M + p;  // position in the input segment
            const double xr = std::round(x);
            if (std::abs(x - xr) < kSnap) {
                src.kind = NodeSource::history_node;
                src.slot = static_cast<int>(xr);
            } else {
                src.kind = NodeSource::history_cubic;
                const int i0 = std::clamp(static_cast<int>(std::floor(x)) - 1, 0, M - 3);
                src.stencil = i0;
                for (int k = 0; k < 4; ++k) {
                    double w = 1.0;
                    for (int m = 0; m < 4; ++m)
                        if (m != k) w *= (x - (i0 + m)) / static_cast<double>(k - m);
                    src.weights[k] = w;
                }
            }
        }
    }
    return plan;
}

void run_plan(const StepPlan& plan, const double* z0, const double* history, double* out,
              double* scratch) {
    const int N = plan.N;
    const int NN = N * N;
    double z[16], g[16], tmp[16], k1[16], k2[16], k3[16], k4[16];
    std::vector<double> big;
    double *pz = z, *pg = g, *pt = tmp, *p1 = k1, *p2 = k2, *p3 = k3, *p4 = k4;
    if (N > 16) {
        big.assign(static_cast<std::size_t>(7 * N), 0.0);
        pz = big.data();
        pg = pz + N;
        pt = pg + N;
        p1 = pt + N;
        p2 = p1 + N;
        p3 = p2 + N;
        p4 = p3 + N;
    }
    std::copy(z0, z0 + N, pz);

    // forcing g(theta) = (1 - theta) u_cell + theta u_{cell+1}
    auto forcing_at = [&](int cell, double theta, double* dst) {
        const double* u0 = history + cell * N;
        const double* u1 = u0 + N;
        for (int r = 0; r < N; ++r) dst[r] = (1.0 - theta) * u0[r] + theta * u1[r];
    };
    // dst = A x + B g
    auto rhs = [&](const double* A, const double* B, const double* x, const double* gg, double* dst) {
        std::fill(dst, dst + N, 0.0);
        gemv_acc(N, A, x, 1.0, dst);
        if (plan.forcing) gemv_acc(N, B, gg, 1.0, dst);
    };

    const double* coef = plan.coef.data();
    for (const Substep& s : plan.steps) {
        const double* Aa = coef;
        const double* Ba = coef + NN;
        const double* Am = coef + 2 * NN;
        const double* Bm = coef + 3 * NN;
        const double* Ab = coef + 4 * NN;
        const double* Bb = coef + 5 * NN;
        coef += 6 * NN;
        const double dt = s.dt;

        if (plan.forcing) forcing_at(s.cell, s.theta_a, pg);
        rhs(Aa, Ba, pz, pg, p1);
        if (plan.forcing) forcing_at(s.cell, 0.5 * (s.theta_a + s.theta_b), pg);
        for (int r = 0; r < N; ++r) pt[r] = pz[r] + 0.5 * dt * p1[r];
        rhs(Am, Bm, pt, pg, p2);
        for (int r = 0; r < N; ++r) pt[r] = pz[r] + 0.5 * dt * p2[r];
        rhs(Am, Bm, pt, pg, p3);
        if (plan.forcing) forcing_at(s.cell, s.theta_b, pg);
        for (int r = 0; r < N; ++r) pt[r] = pz[r] + dt * p3[r];
        rhs(Ab, Bb, pt, pg, p4);
        for (int r = 0; r < N; ++r) pz[r] += dt / 6.0 * (p1[r] + 2.0 * p2[r] + 2.0 * p3[r] + p4[r]);

        if (s.out_slot >= 0) std::copy(pz, pz + N, scratch + s.out_slot * N);
    }
    // the final state always lands in slot 0
    std::copy(pz, pz + N, scratch);

    const int M = plan.grid.M;
    for (int j = 0; j <= M; ++j) {
        const NodeSource& src = plan.nodes[static_cast<std::size_t>(j)];
        double* dst = out + j * N;
        switch (src.kind) {
            case NodeSource::integrated:
                std::copy(scratch + src.slot * N, scratch + (src.slot + 1) * N, dst);
                break;
            case NodeSource::initial:
                std::copy(z0, z0 + N, dst);
                break;
            case NodeSource::history_node:
                std::copy(history + src.slot * N, history + (src.slot + 1) * N, dst);
                break;
            case NodeSource::history_cubic:
                for (int r = 0; r < N; ++r) {
                    double v = 0.0;
                    for (int k = 0; k < 4; ++k) v += src.weights[k] * history[(src.stencil + k) * N + r];
                    dst[r] = v;
                }
                break;
        }
    }
}

std::vector<Matrix> cell_transitions(const StepPlan& plan) {
    const int N = plan.N;
    const int NN = N * N;
    std::vector<Matrix> cells(static_cast<std::size_t>(plan.grid.M), Matrix::Identity(N, N));
    const double* coef = plan.coef.data();
    for (const Substep& s : plan.steps) {
        Eigen::Map<const Matrix> Aa(coef, N, N), Am(coef + 2 * NN, N, N), Ab(coef + 4 * NN, N, N);
        coef += 6 * NN;
        const double dt = s.dt;
        // RK4 applied to Z' = A Z is left multiplication by this matrix
        const Matrix I = Matrix::Identity(N, N);
        const Matrix K1 = Aa;
        const Matrix K2 = Am * (I + 0.5 * dt * K1);
        const Matrix K3 = Am * (I + 0.5 * dt * K2);
        const Matrix K4 = Ab * (I + dt * K3);
        const Matrix S = I + dt / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
        Matrix& cell = cells[static_cast<std::size_t>(s.cell)];
        cell = S * cell;
    }
    return cells;
}

Matrix apply_plan_block(const StepPlan& plan, FiberKind kind, const Matrix& block, bool parallel) {
    const int N = plan.N;
    const int nodes = plan.grid.nodes();
    const int head = kind == FiberKind::L ? N : 0;
    if (block.rows() != head + N * nodes) throw ConfigError("apply_plan_block: row count mismatch");
    Matrix out(block.rows(), block.cols());
    const auto cols = static_cast<long>(block.cols());

#pragma omp parallel if (parallel && cols > 1)
    {
        std::vector<double> scratch(static_cast<std::size_t>(N * std::max(plan.outputs, 1)));
#pragma omp for schedule(static)
        for (long c = 0; c < cols; ++c) {
            const double* in = block.col(c).data();
            double* dst = out.col(c).data();
            // C: z0 = u(0) = last node; L: z0 = head
            const double* z0 = kind == FiberKind::L ? in : in + head + N * (nodes - 1);
            run_plan(plan, z0, in + head, dst + head, scratch.data());
            if (kind == FiberKind::L) std::copy(dst + head + N * (nodes - 1), dst + head + N * nodes, dst);
        }
    }
    return out;
}

}  // namespace rdde::detail
