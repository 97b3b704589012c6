#pragma once

// Seeded realizations of the base flow t -> theta_t(omega), exposed as
// coefficient paths t -> (A(t), B(t)) of the delay system
//
//     z'(t) = A(t) z(t) + B(t) z(t - 1).
//
// One realization is one omega: a whole two-sided path, so evaluation
// forward and backward in time is consistent.

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rdde {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class DriverKind { constant, quasi_periodic, telegraph };

std::string to_string(DriverKind kind);
DriverKind driver_kind_from_string(const std::string& name);

/// A(t) = A0 + sum_k [A_cos_k cos(w_k t + phi_k) + A_sin_k sin(w_k t + phi_k)],
/// and likewise for B. Missing phases are drawn from the seed.
struct QuasiPeriodicParams {
    std::vector<double> frequencies;
    std::vector<Matrix> A_cos, A_sin, B_cos, B_sin;
    std::vector<double> phases;
};

struct TelegraphState {
    Matrix A;
    Matrix B;
};

/// Continuous-time Markov chain switching between coefficient states.
struct TelegraphParams {
    std::vector<TelegraphState> states;
    Matrix generator;
};

struct DriverSpec {
    DriverKind kind = DriverKind::constant;
    int dimension = 1;
    // constant drivers use A0/B0 directly; quasi-periodic drivers use them
    // as the mean coefficients
    Matrix A0;
    Matrix B0;
    QuasiPeriodicParams quasi;
    TelegraphParams telegraph;
    std::uint64_t seed = 0;
    double p = 2.0;

    double q() const { return p / (p - 1.0); }

    /// Throws ConfigError naming the offending field.
    void validate() const;

    /// Scalar equations are accepted but lie outside the N >= 2 setting the
    /// theory is usually stated for.
    bool outside_standard_setting() const { return dimension < 2; }

    static DriverSpec constant(Matrix A, Matrix B, std::uint64_t seed = 0);
};

struct CoefficientSample {
    double t = 0.0;
    Matrix A;
    Matrix B;
    double a = 0.0;  // ||A||_2
    double b = 0.0;  // ||B||_2
};

struct TimeWindow {
    double t_min = 0.0;
    double t_max = 0.0;
    bool contains(double t, double slack = 1e-9) const {
        return t >= t_min - slack && t <= t_max + slack;
    }
};

/// Euclidean-induced operator norm.
double matrix_norm2(const Matrix& m);

/// Counter-based uniform variate in (0, 1): a pure function of its arguments.
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

class Driver {
public:
    static Driver realize(const DriverSpec& spec, TimeWindow window);

    CoefficientSample coefficients(double t) const;

    /// Coefficients at t. Piecewise-constant paths are resolved on the piece
    /// containing `anchor`, so callers integrating over [lo, hi] can pass the
    /// midpoint and never see the state on the other side of a switch.
    void matrices(double t, double anchor, Matrix& A, Matrix& B) const;

    /// Discontinuities of the path strictly inside (lo, hi), ascending.
    std::vector<double> breakpoints(double lo, double hi) const;

    /// The same omega observed from theta_s omega: shifted(s).coefficients(t)
    /// equals coefficients(s + t).
    Driver shifted(double s) const;

    TimeWindow window() const;
    int dimension() const { return spec_->dimension; }
    double p() const { return spec_->p; }
    double q() const { return spec_->q(); }
    DriverKind kind() const { return spec_->kind; }
    const DriverSpec& spec() const { return *spec_; }
    double offset() const { return offset_; }

    /// Telegraph only: realized switch times inside the window (local time).
    std::vector<double> switch_times() const;
    /// Telegraph only: index of the state active at t (right-continuous).
    int state_at(double t) const;
    /// Telegraph only: stationary distribution of the chain.
    const std::vector<double>& stationary() const { return path_->stationary; }

private:
    struct Path {
        // telegraph: states[k] is active on [switches[k-1], switches[k])
        std::vector<double> switches;
        std::vector<int> states;
        std::vector<double> stationary;
        std::vector<double> phases;
        TimeWindow window;
    };

    void check_window(double t) const;
    int piece_state(double path_time) const;

    std::shared_ptr<const DriverSpec> spec_;
    std::shared_ptr<const Path> path_;
    double offset_ = 0.0;
};

/// Integral of f(A(t), B(t)) over [t1, t2], split at path discontinuities
/// (5-point Gauss-Legendre per panel).
double integrate_path(const Driver& driver, double t1, double t2,
                      double (*f)(const Matrix& A, const Matrix& B, double param),
                      double param = 0.0, int panels = 64);

double integral_of_a(const Driver& driver, double t1, double t2, int panels = 64);
double integral_of_bq(const Driver& driver, double t1, double t2, double q, int panels = 64);

struct SummabilityReport {
    double mean_a = 0.0;
    double mean_lnplus_int_bq = 0.0;
    double max_a = 0.0;
    double max_b = 0.0;
};

SummabilityReport summability_report(const Driver& driver, double horizon);

}  // namespace rdde
