// Unit-step operator assembly: OpenMP kernel vs the serial reference.
//
//   bench_kernels [M ...]

#include "rdde/propagator.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

namespace {

template <class F>
double best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> Ms;
    for (int i = 1; i < argc; ++i) Ms.push_back(std::atoi(argv[i]));
    if (Ms.empty()) Ms = {32, 64, 128};

    rdde::DriverSpec spec;
    spec.kind = rdde::DriverKind::telegraph;
    spec.dimension = 2;
    spec.seed = 7;
    spec.telegraph.states = {{rdde::Matrix{{0.0, 0.1}, {0.0, -0.6}}, rdde::Matrix{{-0.2, 0.0}, {0.05, -0.1}}},
                             {rdde::Matrix{{-0.3, 0.0}, {0.1, -1.0}}, rdde::Matrix{{-0.1, 0.05}, {0.0, -0.3}}}};
    spec.telegraph.generator = rdde::Matrix{{-1.0, 1.0}, {1.0, -1.0}};
    const rdde::Driver driver = rdde::Driver::realize(spec, {-2.0, 10.0});

    std::printf("threads %d\n", omp_get_max_threads());
    std::printf("%-6s %-3s %12s %12s %8s %10s\n", "M", "fib", "parallel_s", "serial_s", "speedup", "max_diff");
    for (int M : Ms) {
        const rdde::GridSpec grid(M);
        for (rdde::FiberKind kind : {rdde::FiberKind::C, rdde::FiberKind::L}) {
            rdde::UnitStepOperator par, ser;
            const double tp = best_of(3, [&] { par = rdde::assemble_unit_operator(driver, 0.3, kind, grid); });
            const double ts =
                best_of(3, [&] { ser = rdde::assemble_unit_operator_reference(driver, 0.3, kind, grid); });
            const double diff = (par.matrix - ser.matrix).cwiseAbs().maxCoeff();
            std::printf("%-6d %-3s %12.5f %12.5f %8.2f %10.2e\n", M, rdde::to_string(kind), tp, ts, ts / tp, diff);
        }
    }
    return 0;
}
