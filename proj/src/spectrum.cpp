#include "rdde/spectrum.hpp"

#include "rdde/errors.hpp"
#include "rdde/linalg.hpp"
#include "rdde/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace rdde {

namespace {

// Probe streams, disjoint from the driver's (1..4).
constexpr std::uint64_t kStreamProbe = 101;
constexpr std::uint64_t kStreamAdjoint = 102;
constexpr std::uint64_t kStreamReseed = 1000;

constexpr double kCollapse = 1e-13;
constexpr double kTiny = 1e-300;

std::uint64_t probe_seed(const Driver& driver, const SpectrumConfig& config) {
    return driver.spec().seed ^ config.probe_seed;
}

// Unit steps in metric coordinates, via raw-coordinate integration.
struct MetricStepper {
    const Driver& driver;
    FiberKind kind;
    GridSpec grid;
    Vector sqrt_w;

    MetricStepper(const Driver& d, FiberKind k, const GridSpec& g)
        : driver(d), kind(k), grid(g),
          sqrt_w(metric_weights(k, g, d.dimension()).cwiseSqrt()) {}

    int dim() const { return static_cast<int>(sqrt_w.size()); }

    Matrix step(double base, const Matrix& X) const {
        Matrix raw = sqrt_w.cwiseInverse().asDiagonal() * X;
        return sqrt_w.asDiagonal() * apply_unit_block(driver, base, kind, grid, raw);
    }

    Matrix op(double base) const {
        return assemble_unit_operator(driver, base, kind, grid).in_metric();
    }
};

// Classical Gram-Schmidt with reorthogonalization. A column whose residual
// falls below kCollapse times the block scale is replaced by a fresh random
// direction; its R diagonal keeps the (tiny) residual so the log records it.
struct BlockQR {
    Matrix Q;
    Matrix R;
    std::vector<int> collapsed;
};

BlockQR qr_reseed(const Matrix& Y, std::uint64_t seed, std::uint64_t& draws) {
    const auto n = Y.rows(), k = Y.cols();
    BlockQR out{Matrix::Zero(n, k), Matrix::Zero(k, k), {}};
    const double scale = Y.colwise().norm().maxCoeff();
    const double tol = kCollapse * scale;
    auto orth = [&](Vector& v, Eigen::Index i, Vector* coeffs) {
        for (int pass = 0; pass < 2; ++pass) {
            if (i == 0) break;
            const Vector c = out.Q.leftCols(i).transpose() * v;
            v -= out.Q.leftCols(i) * c;
            if (coeffs) *coeffs += c;
        }
    };
    for (Eigen::Index i = 0; i < k; ++i) {
        Vector v = Y.col(i);
        Vector coeffs = Vector::Zero(i);
        orth(v, i, &coeffs);
        const double r = v.norm();
        out.R.col(i).head(i) = coeffs;
        out.R(i, i) = r;
        if (r <= tol || !std::isfinite(r)) {
            if (!std::isfinite(r)) throw NumericalError("qr: non-finite probe block");
            out.collapsed.push_back(static_cast<int>(i));
            for (int attempt = 0;; ++attempt) {
                if (attempt > 8) throw NumericalError("qr: cannot re-seed collapsed column");
                Vector g = gaussian_matrix(n, 1, seed, kStreamReseed + draws++).col(0);
                orth(g, i, nullptr);
                const double gn = g.norm();
                if (gn > 1e-8) {
                    out.Q.col(i) = g / gn;
                    break;
                }
            }
        } else {
            out.Q.col(i) = v / r;
        }
    }
    return out;
}

double log_diag(double r) { return std::log(std::max(r, kTiny)); }

std::vector<ExponentGroup> group_exponents(const std::vector<double>& ex,
                                           const std::vector<double>& drift,
                                           const SpectrumConfig& config) {
    std::vector<ExponentGroup> groups;
    const int k = static_cast<int>(ex.size());
    int i = 0;
    while (i < k) {
        ExponentGroup g;
        g.first = i;
        if (!std::isfinite(ex[i])) {
            g.size = k - i;
            g.value = kMinusInfinity;
            g.below_floor = true;
            groups.push_back(g);
            break;
        }
        int j = i + 1;
        while (j < k && std::isfinite(ex[j])) {
            const double tol = std::max(config.min_gap_tol,
                                        config.gap_factor * std::max(drift[j - 1], drift[j]));
            if (ex[j - 1] - ex[j] > tol) break;
            ++j;
        }
        g.size = j - i;
        double sum = 0.0;
        for (int m = i; m < j; ++m) sum += ex[m];
        g.value = sum / g.size;
        groups.push_back(g);
        i = j;
    }
    // gaps too small to be separated by the pushes are flagged on both sides
    const double span = std::min(config.backward_horizon, config.adjoint_horizon);
    for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
        if (groups[g + 1].below_floor) break;
        if ((groups[g].value - groups[g + 1].value) * span < config.resolution_margin) {
            groups[g].unresolved = true;
            groups[g + 1].unresolved = true;
        }
    }
    return groups;
}

double fiber_norm(FiberKind kind, const GridSpec& grid, int N, double p, const Vector& raw) {
    if (kind == FiberKind::C) return norm_C(SegmentC::from_coords(grid, N, raw));
    return norm_L(SegmentL::from_coords(grid, N, raw, p));
}

// Householder completion: orthonormal basis of the complement of span(X).
Matrix complement_basis(const Matrix& X) {
    const auto n = X.rows(), k = X.cols();
    if (k == 0) return Matrix::Identity(n, n);
    Eigen::HouseholderQR<Matrix> qr(X);
    Matrix full = qr.householderQ() * Matrix::Identity(n, n);
    return full.rightCols(n - k);
}

double projection_norm(const Matrix& P, const Matrix& Q) {
    Eigen::JacobiSVD<Matrix> svd(P.transpose() * Q);
    const double smin = svd.singularValues().minCoeff();
    return smin > 0.0 ? 1.0 / smin : std::numeric_limits<double>::infinity();
}

}  // namespace

void SpectrumConfig::validate(int ambient_dim) const {
    if (k < 1 || k > ambient_dim)
        throw ConfigError("spectrum.k: must lie in [1, " + std::to_string(ambient_dim) + "]");
    if (T < 1) throw ConfigError("spectrum.T: must be >= 1");
    if (renorm_every < 1) throw ConfigError("spectrum.renorm_every: must be >= 1");
    if (transient < 0 || transient >= T) throw ConfigError("spectrum.transient: must lie in [0, T)");
    if (backward_horizon < 4) throw ConfigError("spectrum.backward_horizon: must be >= 4");
    if (adjoint_horizon < 1) throw ConfigError("spectrum.adjoint_horizon: must be >= 1");
    if (temper_horizon < 0) throw ConfigError("spectrum.temper_horizon: must be >= 0");
    for (int s : sample_times)
        if (s < 0) throw ConfigError("spectrum.sample_times: entries must be >= 0");
    if (!std::is_sorted(sample_times.begin(), sample_times.end()) ||
        std::adjacent_find(sample_times.begin(), sample_times.end()) != sample_times.end())
        throw ConfigError("spectrum.sample_times: must be strictly increasing");
    if (!(floor < 0.0)) throw ConfigError("spectrum.floor: must be < 0");
    if (!(gap_factor >= 0.0)) throw ConfigError("spectrum.gap_factor: must be >= 0");
    if (!(min_gap_tol >= 0.0)) throw ConfigError("spectrum.min_gap_tol: must be >= 0");
    if (!(resolution_margin >= 0.0)) throw ConfigError("spectrum.resolution_margin: must be >= 0");
}

TimeWindow required_window(const SpectrumConfig& config) {
    int last = config.temper_horizon;
    if (!config.sample_times.empty()) last = std::max(last, config.sample_times.back());
    const int end = std::max(config.T, last + config.adjoint_horizon);
    return {-static_cast<double>(config.backward_horizon) - 2.0, static_cast<double>(end) + 2.0};
}

int SpectrumReport::finite_groups() const {
    int n = 0;
    for (const auto& g : qr.groups)
        if (!g.below_floor) ++n;
    return n;
}

int SpectrumReport::cumulative_dim(int group) const {
    int d = 0;
    for (int g = 0; g <= group; ++g) d += qr.groups.at(static_cast<std::size_t>(g)).size;
    return d;
}

SubspaceFrame SpectrumReport::filtration_frame(int sample, int group) const {
    const auto& fs = frames.at(static_cast<std::size_t>(sample));
    return SubspaceFrame(complement_basis(fs.F_complement.at(static_cast<std::size_t>(group))));
}

QRSpectrum qr_spectrum(const Driver& driver, FiberKind kind, const GridSpec& grid,
                       const SpectrumConfig& config) {
    const MetricStepper stepper(driver, kind, grid);
    config.validate(stepper.dim());
    const int k = config.k;
    const std::uint64_t seed = probe_seed(driver, config);
    std::uint64_t draws = 0;

    Matrix Q = thin_qr(gaussian_matrix(stepper.dim(), k, seed, kStreamProbe)).Q;
    QRSpectrum out;
    out.running.assign(static_cast<std::size_t>(k), {});
    Vector acc = Vector::Zero(k);
    int counted = 0;
    struct Block {
        int start;
        int steps;
        Vector logs;
    };
    std::vector<Block> blocks;

    for (int n = 0; n < config.T;) {
        const int steps = std::min(config.renorm_every, config.T - n);
        Matrix Y = Q;
        for (int j = 0; j < steps; ++j) Y = stepper.step(n + j, Y);
        BlockQR f = qr_reseed(Y, seed, draws);
        out.reseeds.insert(out.reseeds.end(), f.collapsed.begin(), f.collapsed.end());
        Q = std::move(f.Q);
        if (n >= config.transient) {
            Vector logs(k);
            for (int i = 0; i < k; ++i) logs(i) = log_diag(f.R(i, i));
            acc += logs;
            counted += steps;
            blocks.push_back({n, steps, logs});
            out.running_times.push_back(n + steps);
            for (int i = 0; i < k; ++i) out.running[static_cast<std::size_t>(i)].push_back(acc(i) / counted);
        }
        n += steps;
    }
    if (counted == 0) throw NumericalError("qr_spectrum: no steps after the transient");

    const Vector full = acc / counted;
    // drift: last quarter of the averaging window against the whole window
    const double cut = config.transient + 0.75 * (config.T - config.transient);
    Vector tail = Vector::Zero(k);
    int tail_steps = 0;
    for (const auto& b : blocks) {
        if (b.start >= cut) {
            tail += b.logs;
            tail_steps += b.steps;
        }
    }
    if (tail_steps == 0) {
        tail = blocks.back().logs;
        tail_steps = blocks.back().steps;
    }
    const Vector drift = (tail / tail_steps - full).cwiseAbs();

    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < k; ++i) {
        if (!std::isfinite(full(i))) throw NumericalError("qr_spectrum: non-finite exponent");
        const bool below = full(i) <= config.floor;
        pairs.emplace_back(below ? kMinusInfinity : full(i), below ? 0.0 : drift(i));
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [v, d] : pairs) {
        out.exponents.push_back(v);
        out.drift.push_back(d);
    }
    out.groups = group_exponents(out.exponents, out.drift, config);
    return out;
}

TopExponent top_exponent(const Driver& driver, FiberKind kind, const GridSpec& grid,
                         const SpectrumConfig& config) {
    SpectrumConfig one = config;
    one.k = 1;
    const QRSpectrum s = qr_spectrum(driver, kind, grid, one);
    return {s.exponents[0], s.drift[0]};
}

SpectrumReport oseledets_frames(const Driver& driver, FiberKind kind, const GridSpec& grid,
                                const SpectrumConfig& config) {
    const MetricStepper stepper(driver, kind, grid);
    const int D = stepper.dim();
    config.validate(D);

    SpectrumReport rep;
    rep.fiber = kind;
    rep.grid = grid;
    rep.N = driver.dimension();
    rep.backward_horizon = config.backward_horizon;
    rep.qr = qr_spectrum(driver, kind, grid, config);

    const int k = config.k;
    const int T0 = config.backward_horizon;
    int last = config.temper_horizon;
    if (!config.sample_times.empty()) last = std::max(last, config.sample_times.back());
    const int end = last + config.adjoint_horizon;
    const std::uint64_t seed = probe_seed(driver, config);
    std::uint64_t draws = 1u << 20;

    // forward push from -T0, frames kept for n = 0..last
    std::vector<Matrix> Qn;
    Qn.reserve(static_cast<std::size_t>(last + 1));
    Matrix Q = thin_qr(gaussian_matrix(D, k, seed, kStreamProbe + 10)).Q;
    for (int n = -T0; n < last; ++n) {
        if (n >= 0) Qn.push_back(Q);
        BlockQR f = qr_reseed(stepper.step(n, Q), seed, draws);
        if (n < 0) rep.push_R.push_back(f.R);
        Q = std::move(f.Q);
        if (n == -1) rep.push_Q0 = Q;
    }
    Qn.push_back(Q);

    // transposed iteration from the far horizon back to 0
    std::vector<Matrix> Pn(static_cast<std::size_t>(last + 1));
    Matrix P = thin_qr(gaussian_matrix(D, k, seed, kStreamAdjoint)).Q;
    for (int n = end - 1; n >= 0; --n) {
        P = qr_reseed(stepper.op(n).transpose() * P, seed, draws).Q;
        if (n <= last) Pn[static_cast<std::size_t>(n)] = P;
    }

    const int groups = rep.finite_groups();
    auto covariant = [&](int n, int g) {
        const Matrix& Qm = Qn[static_cast<std::size_t>(n)];
        const Matrix& Pm = Pn[static_cast<std::size_t>(n)];
        const int Dg = rep.cumulative_dim(g);
        const int d = rep.qr.groups[static_cast<std::size_t>(g)].size;
        if (g == 0) return SubspaceFrame(Qm.leftCols(d));
        const int Dp = Dg - d;
        const Matrix X = Pm.leftCols(Dp).transpose() * Qm.leftCols(Dg);
        return orthonormalize(Qm.leftCols(Dg) * null_space(X, d));
    };

    for (int s : config.sample_times) {
        FrameSample fs;
        fs.time = s;
        fs.forward_frame = Qn[static_cast<std::size_t>(s)];
        for (int g = 0; g < groups; ++g) {
            fs.E.push_back(covariant(s, g));
            fs.F_complement.push_back(Pn[static_cast<std::size_t>(s)].leftCols(rep.cumulative_dim(g)));
        }
        rep.frames.push_back(std::move(fs));
    }

    rep.equivariance_angles.assign(static_cast<std::size_t>(groups), 0.0);
    for (std::size_t a = 0; a + 1 < rep.frames.size(); ++a) {
        if (rep.frames[a + 1].time != rep.frames[a].time + 1) continue;
        for (int g = 0; g < groups; ++g) {
            const auto& E0 = rep.frames[a].E[static_cast<std::size_t>(g)];
            const SubspaceFrame pushed = orthonormalize(stepper.step(rep.frames[a].time, E0.basis));
            auto& worst = rep.equivariance_angles[static_cast<std::size_t>(g)];
            worst = std::max(worst, max_principal_angle(pushed, rep.frames[a + 1].E[static_cast<std::size_t>(g)]));
        }
    }

    rep.log_projection_norms.assign(static_cast<std::size_t>(groups), {});
    rep.projection_condition.assign(static_cast<std::size_t>(groups), 1.0);
    if (config.temper_horizon > 0) {
        for (int n = 0; n <= config.temper_horizon; ++n) {
            for (int g = 0; g < groups; ++g) {
                const int Dg = rep.cumulative_dim(g);
                const double nrm = projection_norm(Pn[static_cast<std::size_t>(n)].leftCols(Dg),
                                                   Qn[static_cast<std::size_t>(n)].leftCols(Dg));
                rep.log_projection_norms[static_cast<std::size_t>(g)].push_back(std::log(nrm));
                auto& worst = rep.projection_condition[static_cast<std::size_t>(g)];
                worst = std::max(worst, nrm);
            }
        }
    } else {
        for (int g = 0; g < groups; ++g) {
            const int Dg = rep.cumulative_dim(g);
            rep.projection_condition[static_cast<std::size_t>(g)] =
                projection_norm(Pn[0].leftCols(Dg), Qn[0].leftCols(Dg));
        }
    }
    return rep;
}

RateEstimate rate_of_vector(const Driver& driver, FiberKind kind, const GridSpec& grid,
                            const Vector& raw_coords, int T, int transient, double floor,
                            const std::vector<double>& exponents) {
    const int N = driver.dimension();
    if (raw_coords.size() != fiber_dimension(kind, grid, N))
        throw ConfigError("rate_of_vector: coordinate length does not match fiber");
    if (T < 2 || transient < 0 || transient > T - 2)
        throw ConfigError("rate_of_vector: need 0 <= transient <= T - 2");
    double nrm = fiber_norm(kind, grid, N, driver.p(), raw_coords);
    if (!(nrm > 0.0)) throw ConfigError("rate_of_vector: zero vector");

    RateEstimate est;
    Matrix v = raw_coords / nrm;
    double log_norm = std::log(nrm);
    std::vector<double> ts, ys;
    if (transient == 0) {
        ts.push_back(0.0);
        ys.push_back(log_norm);
    }
    for (int t = 1; t <= T; ++t) {
        v = apply_unit_block(driver, t - 1, kind, grid, v);
        nrm = fiber_norm(kind, grid, N, driver.p(), v.col(0));
        if (nrm == 0.0) {
            est.rate = kMinusInfinity;
            return est;
        }
        log_norm += std::log(nrm);
        v /= nrm;
        if (t >= transient) {
            ts.push_back(t);
            ys.push_back(log_norm);
        }
    }
    est.rate = regression_slope(ts, ys);
    if (est.rate <= floor) {
        est.rate = kMinusInfinity;
        return est;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < exponents.size(); ++i) {
        if (!std::isfinite(exponents[i])) continue;
        const double gap = std::abs(exponents[i] - est.rate);
        if (gap < best) {
            best = gap;
            est.nearest_index = static_cast<int>(i);
        }
    }
    return est;
}

std::vector<double> backward_rate_check(const SpectrumReport& report, int group) {
    if (group < 0 || group >= report.finite_groups())
        throw ConfigError("backward_rate_check: group has no finite exponent");
    auto it = std::find_if(report.frames.begin(), report.frames.end(),
                           [](const FrameSample& f) { return f.time == 0; });
    if (it == report.frames.end()) throw ConfigError("backward_rate_check: no frame sampled at time 0");
    const int T0 = static_cast<int>(report.push_R.size());
    const int first = T0 / 4;
    if (T0 - first < 3)
        throw ConfigError("backward_rate_check: backward horizon too short for a slope");

    const int Dg = report.cumulative_dim(group);
    const Matrix& E = it->E[static_cast<std::size_t>(group)].basis;
    const Matrix coeffs = report.push_Q0.leftCols(Dg).transpose() * E;

    std::vector<double> slopes;
    for (Eigen::Index c = 0; c < coeffs.cols(); ++c) {
        Vector v = coeffs.col(c);
        double log_norm = std::log(v.norm());
        v.normalize();
        // time -m is reached after m inverse steps; keep m in [first, T0 - 1]
        std::vector<double> ts, ys;
        for (int m = 1; m <= T0; ++m) {
            const Matrix& R = report.push_R[static_cast<std::size_t>(T0 - m)];
            v = R.topLeftCorner(Dg, Dg).triangularView<Eigen::Upper>().solve(v);
            const double nv = v.norm();
            if (!std::isfinite(nv) || nv == 0.0)
                throw NumericalError("backward_rate_check: singular R factor on the pushed orbit");
            log_norm += std::log(nv);
            v /= nv;
            if (m <= T0 - first) {
                ts.push_back(-m);
                ys.push_back(log_norm);
            }
        }
        slopes.push_back(regression_slope(ts, ys));
    }
    return slopes;
}

TemperednessSlopes temperedness_check(const SpectrumReport& report) {
    TemperednessSlopes out;
    for (std::size_t g = 0; g < report.log_projection_norms.size(); ++g) {
        const auto& ys = report.log_projection_norms[g];
        if (ys.size() < 2) throw ConfigError("temperedness_check: report has no projection samples");
        std::vector<double> ts(ys.size());
        std::iota(ts.begin(), ts.end(), 0.0);
        out.slopes.push_back(regression_slope(ts, ys));
        out.worst_norm.push_back(report.projection_condition[g]);
    }
    return out;
}

BoundsDecay bounds_decay_check(const Driver& driver, const GridSpec& grid, int T) {
    if (T < 2) throw ConfigError("bounds_decay_check: T must be >= 2");
    BoundsDecay out;
    auto sweep = [&](int sign, std::vector<double>& lc, std::vector<double>& ld,
                     std::vector<double>& ts_d) {
        for (int n = 0; n <= T; ++n) {
            const StepBounds sb = step_bounds(driver, sign * n, grid);
            lc.push_back(std::log(sb.c));
            if (sb.d > 0.0) {
                ld.push_back(std::log(sb.d));
                ts_d.push_back(sign * n);
            } else {
                ++out.zero_d_samples;
            }
        }
    };
    std::vector<double> ts(static_cast<std::size_t>(T + 1));
    std::iota(ts.begin(), ts.end(), 0.0);

    std::vector<double> td_f;
    sweep(1, out.ln_c, out.ln_d, td_f);
    out.slope_ln_c_forward = regression_slope(ts, out.ln_c);
    out.slope_ln_d_forward = td_f.size() >= 2 ? regression_slope(td_f, out.ln_d) : 0.0;

    std::vector<double> lc_b, ld_b, td_b;
    sweep(-1, lc_b, ld_b, td_b);
    std::vector<double> tb(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) tb[i] = -ts[i];
    out.slope_ln_c_backward = regression_slope(tb, lc_b);
    out.slope_ln_d_backward = td_b.size() >= 2 ? regression_slope(td_b, ld_b) : 0.0;
    return out;
}

ComparisonReport compare_C_vs_L(const SpectrumReport& reportC, const SpectrumReport& reportL,
                                const ComparisonTolerances& tol) {
    if (reportC.fiber != FiberKind::C || reportL.fiber != FiberKind::L)
        throw ConfigError("compare_C_vs_L: expected a C report and an L report");
    if (!(reportC.grid == reportL.grid) || reportC.N != reportL.N)
        throw ConfigError("compare_C_vs_L: reports use different grids or dimensions");

    ComparisonReport out;
    out.tolerances = tol;
    const auto& eC = reportC.qr.exponents;
    const auto& eL = reportL.qr.exponents;
    if (eC.size() != eL.size()) out.flags.push_back("mismatched k");
    const std::size_t k = std::min(eC.size(), eL.size());
    bool exps_ok = k > 0;
    for (std::size_t i = 0; i < k; ++i) {
        double gap = 0.0;
        if (std::isfinite(eC[i]) != std::isfinite(eL[i])) {
            gap = std::numeric_limits<double>::infinity();
        } else if (std::isfinite(eC[i])) {
            gap = std::abs(eC[i] - eL[i]);
        }
        out.exponent_gaps.push_back(gap);
        if (!(gap <= tol.exponent)) exps_ok = false;
    }
    out.top_equal = k > 0 && out.exponent_gaps[0] <= tol.exponent;
    out.exponents_equal = exps_ok;

    // metric-coordinate J is an isometry of C into L
    const GridSpec& grid = reportC.grid;
    const int N = reportC.N;
    const Matrix Jm = to_metric(embedding_matrix(grid, N), metric_weights(FiberKind::L, grid, N),
                                metric_weights(FiberKind::C, grid, N));

    const auto& gC = reportC.qr.groups;
    const auto& gL = reportL.qr.groups;
    int groups = std::min(reportC.finite_groups(), reportL.finite_groups());
    if (reportC.finite_groups() != reportL.finite_groups()) out.flags.push_back("mismatched group count");
    for (int g = 0; g < groups; ++g) {
        if (gC[static_cast<std::size_t>(g)].size != gL[static_cast<std::size_t>(g)].size) {
            out.flags.push_back("group " + std::to_string(g) + ": multiplicities differ");
            groups = g;
            break;
        }
        if (gC[static_cast<std::size_t>(g)].unresolved || gL[static_cast<std::size_t>(g)].unresolved)
            out.flags.push_back("group " + std::to_string(g) + ": unresolved gap");
    }

    auto at_zero = [](const SpectrumReport& r) -> const FrameSample* {
        for (const auto& f : r.frames)
            if (f.time == 0) return &f;
        return nullptr;
    };
    const FrameSample* fC = at_zero(reportC);
    const FrameSample* fL = at_zero(reportL);
    if (!fC || !fL) {
        out.flags.push_back("no frames at time 0");
        return out;
    }

    bool e_ok = groups > 0, f_ok = groups > 0;
    for (int g = 0; g < groups; ++g) {
        const auto gi = static_cast<std::size_t>(g);
        const SubspaceFrame jE = orthonormalize(Jm * fC->E[gi].basis);
        const double angle = max_principal_angle(jE, fL->E[gi]);
        out.E_angles.push_back(angle);
        if (!(angle <= tol.angle)) e_ok = false;

        const Matrix& EL = fL->E[gi].basis;
        const double resid = (EL - Jm * (Jm.transpose() * EL)).colwise().norm().maxCoeff();
        out.E_range_residuals.push_back(resid);

        // F^C = J^{-1}(F^L) iff complement(F^C) = J_m^T complement(F^L)
        const SubspaceFrame pulled = orthonormalize(Jm.transpose() * fL->F_complement[gi]);
        const SubspaceFrame own(fC->F_complement[gi]);
        double fa = max_principal_angle(pulled, own);
        if (pulled.dim() != own.dim()) {
            out.flags.push_back("group " + std::to_string(g) + ": pulled-back filtration lost rank");
            fa = std::numbers::pi / 2;
        }
        out.F_angles.push_back(fa);
        if (!(fa <= tol.angle)) f_ok = false;
    }
    out.E_related = e_ok;
    out.F_related = f_ok;
    return out;
}

std::vector<MonodromyMode> monodromy_modes(const Driver& driver, FiberKind kind,
                                           const GridSpec& grid, double base_time, int count) {
    const Matrix U = assemble_unit_operator(driver, base_time, kind, grid).in_metric();
    if (count < 1 || count > U.rows()) throw ConfigError("monodromy_modes: count out of range");
    Eigen::EigenSolver<Matrix> es(U);
    if (es.info() != Eigen::Success) throw NumericalError("monodromy_modes: eigensolver failed");
    const auto& vals = es.eigenvalues();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(vals.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return std::abs(vals(a)) > std::abs(vals(b)); });

    std::vector<MonodromyMode> out;
    for (int i = 0; i < count; ++i) {
        const auto idx = order[static_cast<std::size_t>(i)];
        const Eigen::VectorXcd v = es.eigenvectors().col(idx);
        MonodromyMode m;
        m.multiplier = vals(idx);
        if (std::abs(vals(idx).imag()) <= 1e-10 * std::max(1.0, std::abs(vals(idx)))) {
            m.frame = orthonormalize(v.real());
        } else {
            Matrix re_im(v.size(), 2);
            re_im.col(0) = v.real();
            re_im.col(1) = v.imag();
            m.frame = orthonormalize(re_im);
        }
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace rdde
