#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rdde/errors.hpp"
#include "rdde/linalg.hpp"
#include "rdde/propagator.hpp"
#include "rdde/spectrum.hpp"

#include <cmath>
#include <numbers>

using namespace rdde;

namespace {

// principal root of lambda = e^{-lambda}, by Newton
double omega_constant() {
    double x = 0.5;
    for (int i = 0; i < 50; ++i) x -= (x - std::exp(-x)) / (1.0 + std::exp(-x));
    return x;
}

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

Driver realize(const DriverSpec& s, const SpectrumConfig& c) {
    TimeWindow w = required_window(c);
    w.t_max = std::max(w.t_max, static_cast<double>(c.T) + 4.0);
    return Driver::realize(s, w);
}

DriverSpec zero_spec() { return DriverSpec::constant(Matrix::Zero(2, 2), Matrix::Zero(2, 2)); }

// period-1 smooth coefficients
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

Vector raw_from_metric(FiberKind kind, const GridSpec& g, int N, const Vector& x) {
    return x.cwiseQuotient(metric_weights(kind, g, N).cwiseSqrt());
}

}  // namespace

TEST_CASE("config validation") {
    SpectrumConfig c;
    CHECK_NOTHROW(c.validate(10));
    auto bad = [&](auto mutate) {
        SpectrumConfig x;
        mutate(x);
        CHECK_THROWS_AS(x.validate(10), ConfigError);
    };
    bad([](SpectrumConfig& x) { x.k = 0; });
    bad([](SpectrumConfig& x) { x.k = 11; });
    bad([](SpectrumConfig& x) { x.renorm_every = 0; });
    bad([](SpectrumConfig& x) { x.transient = x.T; });
    bad([](SpectrumConfig& x) { x.T = 0; });
    bad([](SpectrumConfig& x) { x.sample_times = {1, 0}; });
    bad([](SpectrumConfig& x) { x.floor = 1.0; });
}

TEST_CASE("top exponent examples") {
    SpectrumConfig c;
    c.T = 100;
    const GridSpec g(32);
    for (FiberKind k : {FiberKind::C, FiberKind::L})
        CHECK(std::abs(top_exponent(realize(zero_spec(), c), k, g, c).value) <= 1e-8);

    const auto d = realize(DriverSpec::constant(diag2(-1.0, -2.0), Matrix::Zero(2, 2)), c);
    CHECK(top_exponent(d, FiberKind::C, g, c).value == doctest::Approx(-1.0).epsilon(1e-6));

    SpectrumConfig c2 = c;
    c2.T = 200;
    const auto e = realize(DriverSpec::constant(Matrix::Zero(2, 2), Matrix::Identity(2, 2)), c2);
    const double oracle = omega_constant();
    CHECK(oracle == doctest::Approx(0.567143).epsilon(1e-6));
    CHECK(std::abs(top_exponent(e, FiberKind::C, GridSpec(64), c2).value - oracle) <= 1e-3);
}

TEST_CASE("qr spectrum of the trivial equation") {
    SpectrumConfig c;
    c.k = 3;
    c.T = 40;
    c.transient = 5;
    const GridSpec g(32);
    const auto r = qr_spectrum(realize(zero_spec(), c), FiberKind::C, g, c);
    REQUIRE(r.exponents.size() == 3);
    CHECK(std::abs(r.exponents[0]) <= 1e-8);
    CHECK(std::abs(r.exponents[1]) <= 1e-8);
    CHECK(r.exponents[2] == kMinusInfinity);
    REQUIRE(r.groups.size() == 2);
    CHECK(r.groups[0].size == 2);
    CHECK(r.groups[1].below_floor);
}

TEST_CASE("qr spectrum of an ODE") {
    SpectrumConfig c;
    c.k = 2;
    c.T = 60;
    const auto r = qr_spectrum(realize(DriverSpec::constant(diag2(-1.0, -2.0), Matrix::Zero(2, 2)), c),
                               FiberKind::C, GridSpec(32), c);
    CHECK(r.exponents[0] == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(r.exponents[1] == doctest::Approx(-2.0).epsilon(1e-4));
    CHECK(r.groups.size() == 2);
}

TEST_CASE("qr spectrum against the monodromy eigensolve") {
    SpectrumConfig c;
    c.k = 3;
    c.T = 200;
    c.transient = 40;
    const GridSpec g(32);
    const Driver d = realize(periodic_spec(), c);
    const auto r = qr_spectrum(d, FiberKind::C, g, c);
    const auto modes = monodromy_modes(d, FiberKind::C, g, 0.0, 3);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(r.exponents[i] - std::log(std::abs(modes[i].multiplier))) <= 1e-6);
    // monodromy is periodic: same multipliers at base time 1
    const auto again = monodromy_modes(d, FiberKind::C, g, 1.0, 3);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(again[i].multiplier - modes[i].multiplier) <= 1e-10 * std::abs(modes[0].multiplier));
}

TEST_CASE("qr spectrum properties") {
    SpectrumConfig c;
    c.k = 3;
    c.T = 60;
    c.transient = 10;
    const GridSpec g(16);
    const Driver d = realize(telegraph_spec(), c);

    SpectrumConfig one = c;
    one.k = 1;
    CHECK(qr_spectrum(d, FiberKind::C, g, one).exponents[0] ==
          doctest::Approx(top_exponent(d, FiberKind::C, g, one).value).epsilon(1e-6));

    // renormalization interval: 1, 5 and 10 give the same exponents
    SpectrumConfig r5 = c, r10 = c;
    r5.renorm_every = 5;
    r10.renorm_every = 10;
    const auto e1 = qr_spectrum(d, FiberKind::C, g, c).exponents;
    const auto e5 = qr_spectrum(d, FiberKind::C, g, r5).exponents;
    const auto e10 = qr_spectrum(d, FiberKind::C, g, r10).exponents;
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(e1[i] - e5[i]) <= 1e-6);
        CHECK(std::abs(e1[i] - e10[i]) <= 1e-6);
    }
    // exponents nonincreasing, deterministic
    CHECK(e1[0] >= e1[1]);
    CHECK(e1[1] >= e1[2]);
    CHECK(qr_spectrum(d, FiberKind::C, g, c).exponents == e1);
}

TEST_CASE("complex root pairs appear as doubled exponents") {
    // z' = -z(t-1): rightmost roots -0.3181 +- 1.3372 i
    SpectrumConfig c;
    c.k = 2;
    c.T = 200;
    const Driver d = realize(DriverSpec::constant(Matrix::Zero(1, 1), -Matrix::Ones(1, 1)), c);
    const auto r = qr_spectrum(d, FiberKind::C, GridSpec(64), c);
    const auto roots = characteristic_root_oracle(Matrix::Zero(1, 1), -Matrix::Ones(1, 1), 2);
    // the split inside the pair oscillates and decays like 1/T; the sum does not
    for (int i = 0; i < 2; ++i) CHECK(std::abs(r.exponents[i] - roots[i].real()) <= 5e-3);
    CHECK(std::abs(r.exponents[0] + r.exponents[1] - 2.0 * roots[0].real()) <= 5e-4);
    REQUIRE(!r.groups.empty());
    CHECK(r.groups[0].size == 2);
}

TEST_CASE("exponent convergence under refinement") {
    SpectrumConfig c;
    c.k = 1;
    c.T = 120;
    c.transient = 20;
    const Driver d = realize(periodic_spec(), c);
    const double l16 = qr_spectrum(d, FiberKind::C, GridSpec(16), c).exponents[0];
    const double l32 = qr_spectrum(d, FiberKind::C, GridSpec(32), c).exponents[0];
    const double l64 = qr_spectrum(d, FiberKind::C, GridSpec(64), c).exponents[0];
    const double d1 = std::abs(l16 - l32), d2 = std::abs(l32 - l64);
    CHECK(d2 <= d1);
    CHECK(d1 <= 10.0 / (16.0 * 16.0));
}

TEST_CASE("oseledets frames of the trivial equation") {
    SpectrumConfig c;
    c.k = 3;
    c.T = 40;
    c.transient = 5;
    c.backward_horizon = 20;
    c.adjoint_horizon = 20;
    c.temper_horizon = 10;
    const GridSpec g(32);
    const int N = 2;
    const Driver d = realize(zero_spec(), c);

    const auto rc = oseledets_frames(d, FiberKind::C, g, c);
    REQUIRE(rc.frames.size() == 2);
    REQUIRE(rc.frames[0].E.size() == 1);
    // constant segments in metric coordinates
    Matrix consts(fiber_dimension(FiberKind::C, g, N), N);
    for (int i = 0; i < N; ++i) consts.col(i) = SegmentC::constant(g, Vector::Unit(N, i)).coords();
    const Vector w = metric_weights(FiberKind::C, g, N).cwiseSqrt();
    const SubspaceFrame constant_frame = orthonormalize(w.asDiagonal() * consts);
    CHECK(rc.frames[0].E[0].dim() == 2);
    CHECK(max_principal_angle(rc.frames[0].E[0], constant_frame) <= 1e-6);
    for (double a : rc.equivariance_angles) CHECK(a <= 1e-8);
    for (double s : backward_rate_check(rc, 0)) CHECK(std::abs(s) <= 1e-8);
    for (double s : temperedness_check(rc).slopes) CHECK(std::abs(s) <= 1e-8);

    const auto rl = oseledets_frames(d, FiberKind::L, g, c);
    // F_1 holds every head-zero direction
    const SubspaceFrame F1 = rl.filtration_frame(0, 0);
    const int D = fiber_dimension(FiberKind::L, g, N);
    double worst = 0.0;
    for (int j = N; j < D; ++j) {
        const Vector e = Vector::Unit(D, j);
        worst = std::max(worst, (e - F1.basis * (F1.basis.transpose() * e)).norm());
    }
    CHECK(worst <= 1e-6);

    const auto cmp = compare_C_vs_L(rc, rl, {});
    for (double gap : cmp.exponent_gaps)
        if (std::isfinite(gap)) CHECK(gap <= 1e-8);
    for (double a : cmp.E_angles) CHECK(a <= 1e-8);
    CHECK(cmp.pass());
}

TEST_CASE("oseledets frames for delayed feedback") {
    SpectrumConfig c;
    c.k = 2;
    c.T = 200;
    c.backward_horizon = 100;
    c.adjoint_horizon = 60;
    const GridSpec g(32);
    const Driver d = realize(DriverSpec::constant(Matrix::Zero(2, 2), Matrix::Identity(2, 2)), c);
    const auto rc = oseledets_frames(d, FiberKind::C, g, c);
    const double oracle = omega_constant();
    CHECK(std::abs(rc.qr.exponents[0] - oracle) <= 1e-3);
    REQUIRE(rc.qr.groups.size() == 1);
    CHECK(rc.qr.groups[0].size == 2);
    for (double s : backward_rate_check(rc, 0)) CHECK(std::abs(s - 0.5671) <= 5e-3);

    // a vector in E_1 grows at lambda_1, so does a generic one
    const Vector e1 = raw_from_metric(FiberKind::C, g, 2, rc.frames[0].E[0].basis.col(0));
    const auto r1 = rate_of_vector(d, FiberKind::C, g, e1, 100, 20, c.floor, rc.qr.exponents);
    CHECK(std::abs(r1.rate - rc.qr.exponents[0]) <= 2e-3);
    CHECK(r1.nearest_index == 0);
    const Vector generic = gaussian_matrix(e1.size(), 1, 99, 1).col(0);
    CHECK(std::abs(rate_of_vector(d, FiberKind::C, g, generic, 100, 20, c.floor).rate - oracle) <= 2e-3);
    // scaling does not change the rate
    CHECK(rate_of_vector(d, FiberKind::C, g, 1e-6 * generic, 100, 20, c.floor).rate ==
          doctest::Approx(rate_of_vector(d, FiberKind::C, g, generic, 100, 20, c.floor).rate).epsilon(1e-9));

    const auto rl = oseledets_frames(d, FiberKind::L, g, c);
    CHECK(std::abs(rc.qr.exponents[0] - rl.qr.exponents[0]) <= 1e-3);
    CHECK(compare_C_vs_L(rc, rl, {}).top_equal);
}

TEST_CASE("oseledets frames of an ODE") {
    SpectrumConfig c;
    c.k = 3;
    c.T = 80;
    c.backward_horizon = 60;
    c.adjoint_horizon = 40;
    c.temper_horizon = 60;
    const GridSpec g(32);
    const Driver d = realize(DriverSpec::constant(diag2(-1.0, -2.0), Matrix::Zero(2, 2)), c);
    for (FiberKind kind : {FiberKind::C, FiberKind::L}) {
        const auto r = oseledets_frames(d, kind, g, c);
        CHECK(r.qr.exponents[0] == doctest::Approx(-1.0).epsilon(1e-5));
        CHECK(r.qr.exponents[1] == doctest::Approx(-2.0).epsilon(1e-5));
        CHECK(r.qr.exponents[2] == kMinusInfinity);
        REQUIRE(r.finite_groups() == 2);
        for (double s : backward_rate_check(r, 1)) CHECK(std::abs(s + 2.0) <= 1e-3);
        for (double s : temperedness_check(r).slopes) CHECK(std::abs(s) <= 1e-2);

        // filtration nesting F_2 inside F_1
        const SubspaceFrame F1 = r.filtration_frame(0, 0), F2 = r.filtration_frame(0, 1);
        CHECK((F2.basis - F1.basis * (F1.basis.transpose() * F2.basis)).cwiseAbs().maxCoeff() <= 1e-8);

        // heads-zero data dies: it lies in F_2 and its orbit falls below the floor
        const int D = fiber_dimension(kind, g, 2);
        Vector v = Vector::Zero(D);
        if (kind == FiberKind::L) {
            v.segment(2, D - 2).setOnes();
        } else {
            v.head(D - 2).setOnes();  // u(0) = 0
        }
        const auto rate = rate_of_vector(d, kind, g, v, 20, 2, c.floor);
        CHECK(rate.rate == kMinusInfinity);
        CHECK(rate.nearest_index == -1);
    }
}

TEST_CASE("trivial equation: probes with u(0) = 0 vanish after one step") {
    const GridSpec g(32);
    SpectrumConfig c;
    c.T = 10;
    c.transient = 0;
    const Driver d = realize(zero_spec(), c);
    Vector v = gaussian_matrix(fiber_dimension(FiberKind::C, g, 2), 1, 5, 5).col(0);
    v.tail(2).setZero();
    const SegmentC u = SegmentC::from_coords(g, 2, v);
    for (double t : {1.0, 1.5, 3.0}) CHECK(norm_C(propagate(d, 0.0, u, t)) == 0.0);
    CHECK(rate_of_vector(d, FiberKind::C, g, v, 10, 0, c.floor).rate == kMinusInfinity);
}

TEST_CASE("periodic driver: covariant spaces match monodromy eigenvectors") {
    SpectrumConfig c;
    c.k = 3;
    c.T = 200;
    c.transient = 40;
    c.backward_horizon = 100;
    c.adjoint_horizon = 100;
    const GridSpec g(32);
    const Driver d = realize(periodic_spec(), c);
    const auto r = oseledets_frames(d, FiberKind::C, g, c);
    const auto modes = monodromy_modes(d, FiberKind::C, g, 0.0, 3);
    REQUIRE(r.finite_groups() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(modes[i].multiplier.imag() == 0.0);
        CHECK(max_principal_angle(r.frames[0].E[i], modes[i].frame) <= 1e-4);
    }
    for (double a : r.equivariance_angles) CHECK(a <= 1e-6);
}

TEST_CASE("close exponents are flagged unresolved") {
    SpectrumConfig c;
    c.k = 2;
    c.T = 60;
    c.backward_horizon = 20;
    c.adjoint_horizon = 20;
    c.min_gap_tol = 1e-6;
    const Driver d = realize(DriverSpec::constant(diag2(-1.0, -1.3), Matrix::Zero(2, 2)), c);
    const auto r = oseledets_frames(d, FiberKind::C, GridSpec(16), c);
    REQUIRE(r.qr.groups.size() == 2);  // distinct, not merged
    CHECK(r.qr.groups[0].unresolved);
    CHECK(r.qr.groups[1].unresolved);
}

TEST_CASE("bounds decay slopes") {
    const GridSpec g(16);
    const Driver cst = Driver::realize(DriverSpec::constant(diag2(0.3, -1.0), Matrix::Identity(2, 2)), {-60.0, 60.0});
    const auto b = bounds_decay_check(cst, g, 50);
    CHECK(std::abs(b.slope_ln_c_forward) <= 1e-12);
    CHECK(std::abs(b.slope_ln_d_forward) <= 1e-12);
    CHECK(std::abs(b.slope_ln_c_backward) <= 1e-12);

    DriverSpec q;
    q.kind = DriverKind::quasi_periodic;
    q.dimension = 2;
    q.seed = 4;
    q.A0 = Matrix{{-0.5, 0.2}, {0.0, -0.8}};
    q.B0 = Matrix{{0.3, 0.0}, {0.1, -0.2}};
    q.quasi.frequencies = {1.0, std::numbers::sqrt2};
    q.quasi.A_cos = {diag2(0.4, 0.2), diag2(0.1, 0.1)};
    q.quasi.B_sin = {Matrix{{0.0, 0.2}, {0.2, 0.0}}, diag2(0.1, 0.0)};
    const auto bq = bounds_decay_check(Driver::realize(q, {-502.0, 504.0}), g, 500);
    CHECK(std::abs(bq.slope_ln_c_forward) <= 1e-3);
    CHECK(std::abs(bq.slope_ln_d_forward) <= 1e-3);
    CHECK(std::abs(bq.slope_ln_c_backward) <= 1e-3);
    CHECK(std::abs(bq.slope_ln_d_backward) <= 1e-3);

    const auto bt = bounds_decay_check(Driver::realize(telegraph_spec(), {-502.0, 504.0}), g, 500);
    CHECK(std::abs(bt.slope_ln_c_forward) <= 1e-2);
    CHECK(std::abs(bt.slope_ln_d_forward) <= 1e-2);
    CHECK(std::abs(bt.slope_ln_c_backward) <= 1e-2);
    CHECK(std::abs(bt.slope_ln_d_backward) <= 1e-2);
}

TEST_CASE("compare flags mismatched inputs") {
    SpectrumConfig c;
    c.k = 2;
    c.T = 30;
    c.backward_horizon = 10;
    c.adjoint_horizon = 10;
    const GridSpec g(16);
    const Driver d = realize(DriverSpec::constant(diag2(-1.0, -2.0), Matrix::Zero(2, 2)), c);
    const auto rc = oseledets_frames(d, FiberKind::C, g, c);
    SpectrumConfig c3 = c;
    c3.k = 3;
    const auto rl = oseledets_frames(d, FiberKind::L, g, c3);
    const auto cmp = compare_C_vs_L(rc, rl, {});
    CHECK_FALSE(cmp.flags.empty());
    CHECK_THROWS_AS(compare_C_vs_L(rc, rc, {}), ConfigError);
}

TEST_CASE("rate of a zero vector is an error") {
    SpectrumConfig c;
    const GridSpec g(8);
    const Driver d = realize(zero_spec(), c);
    CHECK_THROWS_AS(rate_of_vector(d, FiberKind::C, g, Vector::Zero(18), 10, 2, -20.0), ConfigError);
}
