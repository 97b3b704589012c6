// Acceptance checks. One PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 4 7        run the listed criteria
//
// Exit status is the number of failed criteria among those run.

#include "rdde/harness.hpp"
#include "rdde/linalg.hpp"
#include "rdde/propagator.hpp"
#include "rdde/spectrum.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace rdde;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Check {
public:
    // records `what = value` against `tol`; fails when the test is false
    void le(const std::string& what, double value, double tol) {
        add(what, value, "<=", tol, value <= tol);
    }
    void ge(const std::string& what, double value, double tol) {
        add(what, value, ">=", tol, value >= tol);
    }
    // reported, not gated
    void info(const std::string& what, double value) {
        sep();
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s %.3g (info)", what.c_str(), value);
        os_ << buf;
    }
    void that(const std::string& what, bool ok) {
        if (!ok) out_.pass = false;
        sep();
        os_ << what << (ok ? " yes" : " NO");
    }
    Outcome done() {
        out_.detail = os_.str();
        return out_;
    }

private:
    void add(const std::string& what, double value, const char* rel, double tol, bool ok) {
        if (!ok) out_.pass = false;
        sep();
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s %.3g %s %.3g", what.c_str(), value, rel, tol);
        os_ << buf;
        if (!ok) os_ << " (violated)";
    }
    void sep() {
        if (!first_) os_ << "; ";
        first_ = false;
    }

    std::ostringstream os_;
    bool first_ = true;
    Outcome out_;
};

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

double lambert_omega() {
    double x = 0.5;
    for (int i = 0; i < 50; ++i) x -= (x - std::exp(-x)) / (1.0 + std::exp(-x));
    return x;
}

Driver realize(const DriverSpec& s, const SpectrumConfig& c) { return Driver::realize(s, required_window(c)); }

DriverSpec periodic_spec() {
    DriverSpec s;
    s.kind = DriverKind::quasi_periodic;
    s.dimension = 2;
    s.A0 = Matrix{{0.0, 0.05}, {0.0, -0.5}};
    s.B0 = Matrix{{-0.2, 0.0}, {0.05, -0.1}};
    s.quasi.frequencies = {2.0 * std::numbers::pi};
    s.quasi.phases = {0.0};
    s.quasi.A_cos = {diag2(0.5, 0.3)};
    s.quasi.B_sin = {diag2(0.06, 0.03)};
    return s;
}

DriverSpec telegraph_spec() {
    DriverSpec s;
    s.kind = DriverKind::telegraph;
    s.dimension = 2;
    s.seed = 7;
    s.telegraph.states = {{Matrix{{0.0, 0.1}, {0.0, -0.6}}, Matrix{{-0.2, 0.0}, {0.05, -0.1}}},
                          {Matrix{{-0.3, 0.0}, {0.1, -1.0}}, Matrix{{-0.1, 0.05}, {0.0, -0.3}}}};
    s.telegraph.generator = Matrix{{-1.0, 1.0}, {1.0, -1.0}};
    return s;
}

DriverSpec quasi_spec() {
    DriverSpec s;
    s.kind = DriverKind::quasi_periodic;
    s.dimension = 2;
    s.seed = 4;
    s.A0 = Matrix{{-0.5, 0.2}, {0.0, -0.8}};
    s.B0 = Matrix{{0.3, 0.0}, {0.1, -0.2}};
    s.quasi.frequencies = {1.0, std::numbers::sqrt2};
    s.quasi.A_cos = {diag2(0.4, 0.2), diag2(0.1, 0.1)};
    s.quasi.B_sin = {Matrix{{0.0, 0.2}, {0.2, 0.0}}, diag2(0.1, 0.0)};
    return s;
}

Outcome trivial_case() {
    Check ck;
    const GridSpec g(32);
    const int N = 2;
    SpectrumConfig c;
    c.k = 3;
    c.T = 40;
    c.transient = 5;
    c.backward_horizon = 10;
    c.adjoint_horizon = 10;
    const Driver d = realize(DriverSpec::constant(Matrix::Zero(2, 2), Matrix::Zero(2, 2)), c);
    for (FiberKind k : {FiberKind::C, FiberKind::L}) {
        SpectrumConfig one = c;
        one.k = 1;
        ck.le(std::string("|lambda_top^") + to_string(k) + "|", std::abs(top_exponent(d, k, g, one).value), 1e-8);
    }
    // probes with u(0) = 0
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        Matrix v = gaussian_matrix(N, g.nodes(), 77, s);
        v.col(g.M).setZero();
        const SegmentC u(g, v);
        for (double t : {1.0, 1.25, 2.0, 5.5}) worst = std::max(worst, norm_C(propagate(d, 0.0, u, t)));
    }
    ck.le("max ||U(t)u|| with u(0)=0, t>=1", worst, 0.0);

    const SpectrumReport r = oseledets_frames(d, FiberKind::C, g, c);
    Matrix consts(fiber_dimension(FiberKind::C, g, N), N);
    for (int i = 0; i < N; ++i) consts.col(i) = SegmentC::constant(g, Vector::Unit(N, i)).coords();
    const Vector w = metric_weights(FiberKind::C, g, N).cwiseSqrt();
    ck.that("dim E_1 = 2", r.frames.at(0).E.at(0).dim() == 2);
    ck.le("angle(E_1, constants)", max_principal_angle(r.frames[0].E[0], orthonormalize(w.asDiagonal() * consts)),
          1e-6);
    return ck.done();
}

Outcome delayed_feedback() {
    Check ck;
    const GridSpec g(64);
    SpectrumConfig c;
    c.k = 1;
    c.T = 200;
    const Driver d = realize(DriverSpec::constant(Matrix::Zero(2, 2), Matrix::Identity(2, 2)), c);
    const double oracle = lambert_omega();
    const double lc = qr_spectrum(d, FiberKind::C, g, c).exponents[0];
    const double ll = qr_spectrum(d, FiberKind::L, g, c).exponents[0];
    ck.le("|lambda_1^C - 0.567143|", std::abs(lc - oracle), 1e-3);
    ck.le("|lambda_1^L - 0.567143|", std::abs(ll - oracle), 1e-3);
    ck.le("|lambda_1^C - lambda_1^L|", std::abs(lc - ll), 1e-4);
    return ck.done();
}

Outcome ode_case() {
    Check ck;
    const GridSpec g(64);
    SpectrumConfig c;
    c.k = 3;
    c.T = 100;
    c.backward_horizon = 40;
    c.adjoint_horizon = 40;
    const Driver d = realize(DriverSpec::constant(diag2(-1.0, -2.0), Matrix::Zero(2, 2)), c);
    for (FiberKind k : {FiberKind::C, FiberKind::L}) {
        const SpectrumReport r = oseledets_frames(d, k, g, c);
        const std::string f = to_string(k);
        ck.le("|lambda_1^" + f + " + 1|", std::abs(r.qr.exponents[0] + 1.0), 1e-5);
        ck.le("|lambda_2^" + f + " + 2|", std::abs(r.qr.exponents[1] + 2.0), 1e-5);
        ck.that("lambda_3^" + f + " below floor", r.qr.exponents[2] == kMinusInfinity);

        // heads-zero data: inside F_2 and dead after one step
        const int D = fiber_dimension(k, g, 2);
        const int head = k == FiberKind::L ? 0 : D - 2;
        const SubspaceFrame F2 = r.filtration_frame(0, 1);
        double outside = 0.0;
        bool dead = true;
        for (std::uint64_t s = 0; s < 5; ++s) {
            Vector x = gaussian_matrix(D, 1, 31, s).col(0);
            x.segment(head, 2).setZero();
            const Vector xm = x.cwiseProduct(metric_weights(k, g, 2).cwiseSqrt());
            outside = std::max(outside, (xm - F2.basis * (F2.basis.transpose() * xm)).norm() / xm.norm());
            dead = dead && rate_of_vector(d, k, g, x, 20, 2, c.floor).rate == kMinusInfinity;
        }
        ck.le("heads-zero distance to F_2^" + f, outside, 1e-8);
        ck.that("heads-zero rate^" + f + " below floor", dead);
    }
    return ck.done();
}

Outcome periodic_case() {
    Check ck;
    const GridSpec g(48);
    SpectrumConfig c;
    c.k = 4;
    c.T = 200;
    c.transient = 40;
    const Driver d = realize(periodic_spec(), c);
    const SpectrumReport r = oseledets_frames(d, FiberKind::C, g, c);
    const auto modes = monodromy_modes(d, FiberKind::C, g, 0.0, 4);
    double gap = 0.0, angle = 0.0;
    for (int i = 0; i < 4; ++i) gap = std::max(gap, std::abs(r.qr.exponents[i] - std::log(std::abs(modes[i].multiplier))));
    ck.le("max |lambda_i - ln|mu_i||", gap, 1e-6);
    ck.that("four simple real multipliers", r.finite_groups() == 4 && modes[3].multiplier.imag() == 0.0);
    if (r.finite_groups() == 4)
        for (int i = 0; i < 4; ++i) angle = std::max(angle, max_principal_angle(r.frames[0].E[i], modes[i].frame));
    ck.le("max angle(E_i, eigvec_i)", angle, 1e-4);
    return ck.done();
}

SpectrumConfig telegraph_config() {
    SpectrumConfig c;
    c.k = 4;
    c.T = 500;
    return c;
}

Outcome telegraph_compare() {
    Check ck;
    const GridSpec g(64);
    const SpectrumConfig c = telegraph_config();
    const Driver d = realize(telegraph_spec(), c);
    const SpectrumReport rc = oseledets_frames(d, FiberKind::C, g, c);
    const SpectrumReport rl = oseledets_frames(d, FiberKind::L, g, c);
    const ComparisonReport cmp = compare_C_vs_L(rc, rl, {2e-3, 1e-2});
    auto worst = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, x);
        return m;
    };
    ck.le("max |lambda_i^C - lambda_i^L|", worst(cmp.exponent_gaps), 2e-3);
    ck.le("max angle(J E_i^C, E_i^L)", worst(cmp.E_angles), 1e-2);
    ck.le("max angle(F_i^C, J^-1 F_i^L)", worst(cmp.F_angles), 1e-2);
    ck.that("no flags", cmp.flags.empty());
    return ck.done();
}

Outcome identities() {
    Check ck;
    const IdentityAudit a = audit_identities(100, GridSpec(32), 2024);
    ck.that("100 samples", a.samples == 100);
    ck.le("cocycle (integer t)", a.cocycle_integer, 1e-10);
    ck.le("cocycle (fractional t)", a.cocycle_fractional, 1e-6);
    ck.le("J U^C - U^L J", a.intertwining, 1e-12);
    ck.le("U^L - J U^(L,C)", a.lc_relation, 1e-9);
    ck.info("cocycle, off-grid split, smooth data", a.cocycle_offgrid);
    ck.info("cocycle (fractional t), L data with jump at 0", a.cocycle_fractional_jump);
    return ck.done();
}

Outcome inequalities() {
    Check ck;
    const InequalityAudit a = audit_inequalities(100, GridSpec(32), 2025);
    ck.that("100 samples", a.samples == 100);
    ck.le("violations", a.violations, 0);
    ck.le("worst lhs/rhs", a.worst_ratio, 1.0 + 1e-8);
    Outcome o = ck.done();
    for (const auto& v : a.violated) o.detail += "; " + v;
    return o;
}

Outcome bounds_slopes() {
    Check ck;
    const GridSpec g(32);
    for (const auto& [name, spec] : {std::pair{"telegraph", telegraph_spec()}, std::pair{"quasi", quasi_spec()}}) {
        const BoundsDecay b = bounds_decay_check(Driver::realize(spec, {-502.0, 504.0}), g, 500);
        const std::string n = name;
        ck.le(n + " |slope ln c| fwd", std::abs(b.slope_ln_c_forward), 1e-2);
        ck.le(n + " |slope ln d| fwd", std::abs(b.slope_ln_d_forward), 1e-2);
        ck.le(n + " |slope ln c| bwd", std::abs(b.slope_ln_c_backward), 1e-2);
        ck.le(n + " |slope ln d| bwd", std::abs(b.slope_ln_d_backward), 1e-2);
    }
    return ck.done();
}

Vector lc_singular_values(int M) {
    const GridSpec g(M);
    const Driver d = Driver::realize(DriverSpec::constant(Matrix::Zero(2, 2), Matrix::Identity(2, 2)), {-1.0, 3.0});
    const Matrix op = to_metric(assemble_LC_operator(d, 0.0, g), metric_weights(FiberKind::C, g, 2),
                                metric_weights(FiberKind::L, g, 2));
    return Eigen::JacobiSVD<Matrix>(op).singularValues();
}

Outcome compactness() {
    Check ck;
    const Vector s64 = lc_singular_values(64), s128 = lc_singular_values(128);
    double rel = 0.0;
    for (int i = 0; i < 10; ++i) rel = std::max(rel, std::abs(s64(i) - s128(i)) / s128(i));
    ck.le("max rel diff sigma_1..10 (M=64 vs 128)", rel, 1e-4);
    const double ratio = s128(s128.size() - 1) / s128(0);
    ck.le("min sigma_k / sigma_1 at M=128", ratio, 1e-6);
    return ck.done();
}

Outcome temperedness() {
    Check ck;
    const GridSpec g(64);
    SpectrumConfig c = telegraph_config();
    c.temper_horizon = 500;
    const Driver d = realize(telegraph_spec(), c);
    for (FiberKind k : {FiberKind::C, FiberKind::L}) {
        const SpectrumReport r = oseledets_frames(d, k, g, c);
        double worst = 0.0;
        for (double s : temperedness_check(r).slopes) worst = std::max(worst, std::abs(s));
        ck.le(std::string("max |slope ln||P_i||| ") + to_string(k), worst, 2e-2);
    }
    return ck.done();
}

struct Criterion {
    int id;
    const char* title;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "trivial equation", 1.0, trivial_case},
        {2, "A = 0, B = I against lambda = e^-lambda", 10.0, delayed_feedback},
        {3, "A = diag(-1,-2), B = 0", 10.0, ode_case},
        {4, "periodic driver against monodromy", 30.0, periodic_case},
        {5, "telegraph driver, C vs L", 120.0, telegraph_compare},
        {6, "structural identities", 30.0, identities},
        {7, "inequality audits", 30.0, inequalities},
        {8, "c and d slopes", 30.0, bounds_slopes},
        {9, "compactness proxy for U^(L,C)(1)", 30.0, compactness},
        {10, "temperedness", 60.0, temperedness},
    };
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) {
        const int id = std::atoi(argv[i]);
        if (id < 1 || id > static_cast<int>(all.size())) {
            std::fprintf(stderr, "usage: acceptance [criterion ...]  (1-%zu)\n", all.size());
            return 64;
        }
        wanted.push_back(id);
    }
    int failed = 0;
    for (const Criterion& c : all) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.budget_seconds;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::printf("criterion %2d: %s  %s [%s; runtime %.2fs < %.0fs%s]\n", c.id, pass ? "PASS" : "FAIL", c.title,
                    o.detail.c_str(), secs, c.budget_seconds, in_time ? "" : " (violated)");
        std::fflush(stdout);
    }
    return failed;
}
