#include "rdde/driver.hpp"

#include "rdde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace rdde {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Streams used by the driver; spectrum probes use a disjoint range.
constexpr std::uint64_t kStreamInitial = 1;
constexpr std::uint64_t kStreamForward = 2;
constexpr std::uint64_t kStreamBackward = 3;
constexpr std::uint64_t kStreamPhases = 4;

void require_shape(const Matrix& m, int n, const std::string& field) {
    if (m.rows() != n || m.cols() != n) {
        std::ostringstream os;
        os << field << ": expected " << n << "x" << n << " matrix, got " << m.rows() << "x"
           << m.cols();
        throw ConfigError(os.str());
    }
    if (!m.allFinite()) throw ConfigError(field + ": non-finite entry");
}

std::vector<double> stationary_distribution(const Matrix& generator) {
    const auto n = generator.rows();
    if (n == 1) return {1.0};
    // pi Q = 0 with sum(pi) = 1, as a least-squares system
    Matrix sys(n + 1, n);
    sys.topRows(n) = generator.transpose();
    sys.row(n).setOnes();
    Vector rhs = Vector::Zero(n + 1);
    rhs(n) = 1.0;
    Eigen::FullPivLU<Matrix> lu(generator.transpose());
    if (lu.dimensionOfKernel() != 1)
        throw ConfigError("telegraph.generator: chain is not irreducible");
    Vector pi = sys.colPivHouseholderQr().solve(rhs);
    std::vector<double> out(pi.data(), pi.data() + n);
    for (double v : out)
        if (!(v > 0.0)) throw ConfigError("telegraph.generator: chain is not irreducible");
    return out;
}

// Exponential holding time and destination state from one counter slot.
struct Jump {
    double holding;
    int next;
};

Jump draw_jump(const Matrix& rates, int state, std::uint64_t seed, std::uint64_t stream,
               std::uint64_t counter) {
    const double exit_rate = -rates(state, state);
    const double u1 = counter_uniform(seed, stream, 2 * counter);
    const double u2 = counter_uniform(seed, stream, 2 * counter + 1);
    Jump j{-std::log(u1) / exit_rate, state};
    double acc = 0.0;
    for (int k = 0; k < rates.cols(); ++k) {
        if (k == state) continue;
        acc += rates(state, k) / exit_rate;
        j.next = k;
        if (u2 <= acc) break;
    }
    return j;
}

}  // namespace

std::string to_string(DriverKind kind) {
    switch (kind) {
        case DriverKind::constant: return "constant";
        case DriverKind::quasi_periodic: return "quasi_periodic";
        case DriverKind::telegraph: return "telegraph";
    }
    return "unknown";
}

DriverKind driver_kind_from_string(const std::string& name) {
    if (name == "constant") return DriverKind::constant;
    if (name == "quasi_periodic") return DriverKind::quasi_periodic;
    if (name == "telegraph") return DriverKind::telegraph;
    throw ConfigError("driver.kind: unknown kind '" + name + "'");
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    std::uint64_t h = splitmix64(seed ^ splitmix64(stream * 0xD1B54A32D192ED03ULL));
    h = splitmix64(h ^ counter);
    // 53 random bits, shifted off zero
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

double matrix_norm2(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
    if (m.rows() == 2 && m.cols() == 2) {
        // largest singular value of a 2x2 matrix in closed form
        const double s = m.squaredNorm();
        const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
        const double disc = std::sqrt(std::max(0.0, s * s - 4.0 * det * det));
        return std::sqrt(0.5 * (s + disc));
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

DriverSpec DriverSpec::constant(Matrix A, Matrix B, std::uint64_t seed) {
    DriverSpec s;
    s.kind = DriverKind::constant;
    s.dimension = static_cast<int>(A.rows());
    s.A0 = std::move(A);
    s.B0 = std::move(B);
    s.seed = seed;
    return s;
}

void DriverSpec::validate() const {
    if (dimension < 1) throw ConfigError("driver.dimension: must be >= 1");
    if (!(p > 1.0) || !std::isfinite(p)) throw ConfigError("driver.p: must lie in (1, inf)");
    switch (kind) {
        case DriverKind::constant:
            require_shape(A0, dimension, "driver.A");
            require_shape(B0, dimension, "driver.B");
            break;
        case DriverKind::quasi_periodic: {
            require_shape(A0, dimension, "driver.A");
            require_shape(B0, dimension, "driver.B");
            const auto m = quasi.frequencies.size();
            if (m == 0) throw ConfigError("driver.frequencies: at least one frequency required");
            for (double w : quasi.frequencies)
                if (w == 0.0 || !std::isfinite(w))
                    throw ConfigError("driver.frequencies: entries must be finite and nonzero");
            auto check_list = [&](const std::vector<Matrix>& list, const std::string& name) {
                if (!list.empty() && list.size() != m)
                    throw ConfigError("driver." + name + ": expected one matrix per frequency");
                for (std::size_t k = 0; k < list.size(); ++k)
                    require_shape(list[k], dimension, "driver." + name + "[" + std::to_string(k) + "]");
            };
            check_list(quasi.A_cos, "A_cos");
            check_list(quasi.A_sin, "A_sin");
            check_list(quasi.B_cos, "B_cos");
            check_list(quasi.B_sin, "B_sin");
            if (!quasi.phases.empty() && quasi.phases.size() != m)
                throw ConfigError("driver.phases: expected one phase per frequency");
            break;
        }
        case DriverKind::telegraph: {
            const auto& st = telegraph.states;
            if (st.empty()) throw ConfigError("driver.states: at least one state required");
            for (std::size_t k = 0; k < st.size(); ++k) {
                require_shape(st[k].A, dimension, "driver.states[" + std::to_string(k) + "].A");
                require_shape(st[k].B, dimension, "driver.states[" + std::to_string(k) + "].B");
            }
            const auto n = static_cast<Eigen::Index>(st.size());
            const Matrix& g = telegraph.generator;
            if (g.rows() != n || g.cols() != n)
                throw ConfigError("driver.generator: must be square with one row per state");
            if (!g.allFinite()) throw ConfigError("driver.generator: non-finite entry");
            for (Eigen::Index i = 0; i < n; ++i) {
                double scale = 0.0;
                for (Eigen::Index j = 0; j < n; ++j) {
                    scale += std::abs(g(i, j));
                    if (i != j && g(i, j) < 0.0)
                        throw ConfigError("driver.generator: off-diagonal rates must be >= 0");
                }
                if (std::abs(g.row(i).sum()) > 1e-12 * std::max(1.0, scale))
                    throw ConfigError("driver.generator: row " + std::to_string(i) +
                                      " does not sum to 0");
            }
            stationary_distribution(g);
            break;
        }
    }
}

Driver Driver::realize(const DriverSpec& spec, TimeWindow window) {
    if (!std::isfinite(window.t_min) || !std::isfinite(window.t_max))
        throw ConfigError("window: bounds must be finite");
    if (!(window.t_min < window.t_max)) throw ConfigError("window: t_min must be < t_max");
    spec.validate();

    Driver d;
    d.spec_ = std::make_shared<const DriverSpec>(spec);
    auto path = std::make_shared<Path>();
    path->window = window;

    if (spec.kind == DriverKind::quasi_periodic) {
        path->phases = spec.quasi.phases;
        if (path->phases.empty()) {
            for (std::size_t k = 0; k < spec.quasi.frequencies.size(); ++k)
                path->phases.push_back(2.0 * std::numbers::pi *
                                       counter_uniform(spec.seed, kStreamPhases, k));
        }
    } else if (spec.kind == DriverKind::telegraph) {
        const Matrix& g = spec.telegraph.generator;
        const int n = static_cast<int>(g.rows());
        path->stationary = stationary_distribution(g);

        // state at time 0 from the stationary law
        int s0 = n - 1;
        {
            const double u = counter_uniform(spec.seed, kStreamInitial, 0);
            double acc = 0.0;
            for (int k = 0; k < n; ++k) {
                acc += path->stationary[k];
                if (u <= acc) {
                    s0 = k;
                    break;
                }
            }
        }

        std::vector<double> fwd_times;
        std::vector<int> fwd_states;
        std::vector<double> bwd_times;
        std::vector<int> bwd_states;
        if (n > 1) {
            // Forward from 0 with the chain itself. The path is generated from
            // time 0 regardless of the window so every window sees the same omega.
            double t = 0.0;
            int s = s0;
            for (std::uint64_t c = 0; t <= window.t_max; ++c) {
                Jump j = draw_jump(g, s, spec.seed, kStreamForward, c);
                t += j.holding;
                if (t > window.t_max) break;
                fwd_times.push_back(t);
                fwd_states.push_back(j.next);
                s = j.next;
            }
            // Backward from 0 with the time-reversed chain.
            Matrix rev(n, n);
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k)
                    rev(i, k) = path->stationary[k] * g(k, i) / path->stationary[i];
            t = 0.0;
            s = s0;
            for (std::uint64_t c = 0; t >= window.t_min; ++c) {
                Jump j = draw_jump(rev, s, spec.seed, kStreamBackward, c);
                t -= j.holding;
                if (t < window.t_min) break;
                bwd_times.push_back(t);  // state s is active on [t, previous switch)
                bwd_states.push_back(j.next);
                s = j.next;
            }
        }
        // assemble ascending: states[k] active on [switches[k-1], switches[k])
        std::vector<int> states;
        std::vector<double> switches;
        for (auto k = bwd_times.size(); k-- > 0;) states.push_back(bwd_states[k]);
        states.push_back(s0);
        for (auto k = bwd_times.size(); k-- > 0;) switches.push_back(bwd_times[k]);
        for (std::size_t k = 0; k < fwd_times.size(); ++k) {
            switches.push_back(fwd_times[k]);
            states.push_back(fwd_states[k]);
        }
        path->switches = std::move(switches);
        path->states = std::move(states);
    }
    d.path_ = std::move(path);
    return d;
}

TimeWindow Driver::window() const {
    return {path_->window.t_min - offset_, path_->window.t_max - offset_};
}

Driver Driver::shifted(double s) const {
    Driver d = *this;
    d.offset_ += s;
    return d;
}

void Driver::check_window(double t) const {
    if (!std::isfinite(t)) throw WindowError("driver: non-finite time");
    if (!window().contains(t)) {
        std::ostringstream os;
        os << "driver: t = " << t << " outside realized window [" << window().t_min << ", "
           << window().t_max << "]";
        throw WindowError(os.str());
    }
}

int Driver::piece_state(double path_time) const {
    const auto& sw = path_->switches;
    const auto k = std::upper_bound(sw.begin(), sw.end(), path_time) - sw.begin();
    return path_->states[static_cast<std::size_t>(k)];
}

int Driver::state_at(double t) const {
    if (spec_->kind != DriverKind::telegraph) throw ConfigError("state_at: not a telegraph driver");
    check_window(t);
    return piece_state(t + offset_);
}

std::vector<double> Driver::switch_times() const {
    std::vector<double> out;
    if (spec_->kind != DriverKind::telegraph) return out;
    for (double s : path_->switches) out.push_back(s - offset_);
    return out;
}

void Driver::matrices(double t, double anchor, Matrix& A, Matrix& B) const {
    check_window(t);
    const DriverSpec& sp = *spec_;
    const double pt = t + offset_;
    switch (sp.kind) {
        case DriverKind::constant:
            A = sp.A0;
            B = sp.B0;
            return;
        case DriverKind::quasi_periodic: {
            A = sp.A0;
            B = sp.B0;
            const auto& qp = sp.quasi;
            for (std::size_t k = 0; k < qp.frequencies.size(); ++k) {
                const double arg = qp.frequencies[k] * pt + path_->phases[k];
                const double c = std::cos(arg), s = std::sin(arg);
                if (!qp.A_cos.empty()) A += c * qp.A_cos[k];
                if (!qp.A_sin.empty()) A += s * qp.A_sin[k];
                if (!qp.B_cos.empty()) B += c * qp.B_cos[k];
                if (!qp.B_sin.empty()) B += s * qp.B_sin[k];
            }
            return;
        }
        case DriverKind::telegraph: {
            const auto& st = sp.telegraph.states[static_cast<std::size_t>(piece_state(anchor + offset_))];
            A = st.A;
            B = st.B;
            return;
        }
    }
}

CoefficientSample Driver::coefficients(double t) const {
    CoefficientSample s;
    s.t = t;
    matrices(t, t, s.A, s.B);
    s.a = matrix_norm2(s.A);
    s.b = matrix_norm2(s.B);
    return s;
}

std::vector<double> Driver::breakpoints(double lo, double hi) const {
    std::vector<double> out;
    if (spec_->kind != DriverKind::telegraph) return out;
    const auto& sw = path_->switches;
    auto it = std::upper_bound(sw.begin(), sw.end(), lo + offset_);
    for (; it != sw.end() && *it - offset_ < hi; ++it) out.push_back(*it - offset_);
    return out;
}

double integrate_path(const Driver& driver, double t1, double t2,
                      double (*f)(const Matrix&, const Matrix&, double), double param,
                      int panels) {
    if (t2 <= t1) return 0.0;
    static constexpr double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                    0.5384693101056831, 0.9061798459386640};
    static constexpr double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                    0.4786286704993665, 0.2369268850561891};
    std::vector<double> cuts{t1};
    for (double b : driver.breakpoints(t1, t2)) cuts.push_back(b);
    cuts.push_back(t2);
    Matrix A, B;
    double total = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double lo = cuts[c], hi = cuts[c + 1];
        const int np = driver.kind() == DriverKind::telegraph
                           ? 1
                           : std::max(1, static_cast<int>(std::ceil((hi - lo) * panels)));
        const double width = (hi - lo) / np;
        for (int k = 0; k < np; ++k) {
            const double a = lo + k * width, mid = a + 0.5 * width;
            for (int g = 0; g < 5; ++g) {
                driver.matrices(mid + 0.5 * width * x[g], mid, A, B);
                total += 0.5 * width * w[g] * f(A, B, param);
            }
        }
    }
    return total;
}

double integral_of_a(const Driver& driver, double t1, double t2, int panels) {
    return integrate_path(
        driver, t1, t2, [](const Matrix& A, const Matrix&, double) { return matrix_norm2(A); }, 0.0,
        panels);
}

double integral_of_bq(const Driver& driver, double t1, double t2, double q, int panels) {
    return integrate_path(
        driver, t1, t2,
        [](const Matrix&, const Matrix& B, double qq) { return std::pow(matrix_norm2(B), qq); }, q,
        panels);
}

SummabilityReport summability_report(const Driver& driver, double horizon) {
    if (!(horizon > 0.0)) throw ConfigError("summability_report: horizon must be > 0");
    if (!driver.window().contains(0.0) || !driver.window().contains(horizon))
        throw WindowError("summability_report: [0, T] outside realized window");
    SummabilityReport r;
    r.mean_a = integral_of_a(driver, 0.0, horizon) / horizon;
    const int whole = static_cast<int>(std::floor(horizon));
    double acc = 0.0;
    for (int k = 0; k < whole; ++k) {
        const double v = integral_of_bq(driver, k, k + 1.0, driver.q());
        acc += v > 1.0 ? std::log(v) : 0.0;
    }
    r.mean_lnplus_int_bq = whole > 0 ? acc / whole : 0.0;

    // maxima: sample a fine grid plus both sides of every switch
    std::vector<double> ts;
    const int samples = static_cast<int>(std::ceil(horizon * 64));
    for (int k = 0; k <= samples; ++k) ts.push_back(horizon * k / samples);
    for (double b : driver.breakpoints(0.0, horizon)) ts.push_back(b);
    Matrix A, B;
    for (double t : ts) {
        driver.matrices(t, t, A, B);
        r.max_a = std::max(r.max_a, matrix_norm2(A));
        r.max_b = std::max(r.max_b, matrix_norm2(B));
    }
    return r;
}

}  // namespace rdde
