#pragma once

// Lyapunov spectrum and Oseledets subspaces of the discretized cocycle.
//
// Exponents come from the discrete QR method on unit-step operators. The
// covariant spaces E_i(n) are intersections of two nested families:
//   - forward Gram-Schmidt subspaces, pushed from time -T0 up to n;
//   - the filtration F_i(n), the orthogonal complement (in the fiber metric)
//     of the leading right singular directions of the product from n to a
//     far horizon, obtained by QR iteration with transposed operators.
// All frames live in metric coordinates, where the fiber metric is Euclidean.

#include "rdde/driver.hpp"
#include "rdde/fiber.hpp"

#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace rdde {

struct SpectrumConfig {
    int k = 1;
    int T = 200;
    int renorm_every = 1;
    int transient = 20;
    /// Forward push length T0 for covariant frames.
    int backward_horizon = 100;
    /// Length of the transposed iteration beyond the last sampled time.
    int adjoint_horizon = 100;
    std::vector<int> sample_times{0, 1};
    /// Projection norms are recorded at n = 0..temper_horizon (0 disables).
    int temper_horizon = 0;
    /// Rates at or below this (per unit time) stand for -infinity.
    double floor = -20.0;
    double gap_factor = 10.0;
    double min_gap_tol = 1e-9;
    /// A gap g is unresolved when g * min(T0, adjoint_horizon) is below this.
    double resolution_margin = 18.0;
    std::uint64_t probe_seed = 0x5eed;

    void validate(int ambient_dim) const;
};

constexpr double kMinusInfinity = -std::numeric_limits<double>::infinity();

struct ExponentGroup {
    int first = 0;
    int size = 1;
    double value = 0.0;
    bool below_floor = false;
    bool unresolved = false;
};

struct TopExponent {
    double value = 0.0;
    double drift = 0.0;
};

struct QRSpectrum {
    std::vector<double> exponents;  // nonincreasing; -inf below floor
    std::vector<double> drift;
    std::vector<ExponentGroup> groups;
    std::vector<int> reseeds;  // probe columns re-drawn after collapse
    /// Running estimates after each renormalization (per index), for CSV output.
    std::vector<double> running_times;
    std::vector<std::vector<double>> running;
};

struct FrameSample {
    int time = 0;
    std::vector<SubspaceFrame> E;         // one per finite group
    std::vector<Matrix> F_complement;     // F_i = kernel of F_complement[i]^T
    Matrix forward_frame;                 // Gram-Schmidt frame Q(time)
};

struct SpectrumReport {
    FiberKind fiber = FiberKind::C;
    GridSpec grid;
    int N = 1;
    QRSpectrum qr;
    std::vector<FrameSample> frames;
    /// Max angle between U(1) E_i(n) and E_i(n+1) over consecutive samples.
    std::vector<double> equivariance_angles;
    /// ln ||projection onto E_1+..+E_i along F_i|| at n = 0..temper_horizon.
    std::vector<std::vector<double>> log_projection_norms;
    std::vector<double> projection_condition;  // worst ||P|| seen, per group
    /// R factors of the forward push over [-T0, 0), oldest first.
    std::vector<Matrix> push_R;
    Matrix push_Q0;  // forward frame at time 0
    int backward_horizon = 0;

    int finite_groups() const;
    int cumulative_dim(int group) const;  // D_i = d_1 + ... + d_i
    /// Orthonormal basis of F_i at a sample (metric coordinates).
    SubspaceFrame filtration_frame(int sample, int group) const;
};

/// Driver window needed by oseledets_frames / qr_spectrum for this config.
TimeWindow required_window(const SpectrumConfig& config);

TopExponent top_exponent(const Driver& driver, FiberKind kind, const GridSpec& grid,
                         const SpectrumConfig& config);

QRSpectrum qr_spectrum(const Driver& driver, FiberKind kind, const GridSpec& grid,
                       const SpectrumConfig& config);

SpectrumReport oseledets_frames(const Driver& driver, FiberKind kind, const GridSpec& grid,
                                const SpectrumConfig& config);

struct RateEstimate {
    double rate = 0.0;        // -inf when the orbit dies or falls below the floor
    int nearest_index = -1;   // index into the supplied exponents, -1 for -inf/none
};

/// Regression slope of ln||U(t) u|| (fiber norm) over integer t in [transient, T].
RateEstimate rate_of_vector(const Driver& driver, FiberKind kind, const GridSpec& grid,
                            const Vector& raw_coords, int T, int transient, double floor,
                            const std::vector<double>& exponents = {});

/// Backward slopes along the stored negative-time orbits of the E_group basis.
std::vector<double> backward_rate_check(const SpectrumReport& report, int group);

struct TemperednessSlopes {
    std::vector<double> slopes;  // per finite group
    std::vector<double> worst_norm;
};

TemperednessSlopes temperedness_check(const SpectrumReport& report);

struct BoundsDecay {
    double slope_ln_c_forward = 0.0;
    double slope_ln_d_forward = 0.0;
    double slope_ln_c_backward = 0.0;
    double slope_ln_d_backward = 0.0;
    int zero_d_samples = 0;
    std::vector<double> ln_c;  // forward samples n = 0..T
    std::vector<double> ln_d;
};

BoundsDecay bounds_decay_check(const Driver& driver, const GridSpec& grid, int T);

struct ComparisonTolerances {
    double exponent = 2e-3;
    double angle = 1e-2;
};

struct ComparisonReport {
    std::vector<double> exponent_gaps;
    std::vector<double> E_angles;
    std::vector<double> F_angles;
    std::vector<double> E_range_residuals;  // distance of E^(L) from range(J)
    std::vector<std::string> flags;
    ComparisonTolerances tolerances;
    bool top_equal = false;
    bool exponents_equal = false;
    bool E_related = false;
    bool F_related = false;

    bool pass() const { return top_equal && exponents_equal && E_related && F_related; }
};

ComparisonReport compare_C_vs_L(const SpectrumReport& reportC, const SpectrumReport& reportL,
                                const ComparisonTolerances& tol);

/// Rightmost roots of det(lambda I - A - B e^{-lambda}) = 0 for constant
/// coefficients, repeated by algebraic multiplicity.
std::vector<std::complex<double>> characteristic_root_oracle(const Matrix& A, const Matrix& B,
                                                             int count);

struct MonodromyMode {
    std::complex<double> multiplier;
    SubspaceFrame frame;  // real invariant subspace (1 or 2 dims), metric coordinates
};

/// Dense eigensolve of the assembled unit operator at base_time, modes by
/// decreasing modulus. Both members of a complex pair are listed and share
/// the same two-dimensional real frame.
std::vector<MonodromyMode> monodromy_modes(const Driver& driver, FiberKind kind,
                                           const GridSpec& grid, double base_time, int count);

}  // namespace rdde
