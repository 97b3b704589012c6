#include "rdde/harness.hpp"

#include "rdde/errors.hpp"
#include "rdde/linalg.hpp"
#include "rdde/propagator.hpp"

#include <json.hpp>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace rdde {

using nlohmann::json;

namespace {

constexpr std::uint64_t kStreamAuditDriver = 50;
constexpr std::uint64_t kStreamAuditDraw = 60;

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json nums(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(num(x));
    return out;
}

// Sequential draws from the counter-based generator.
class Draws {
public:
    Draws(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}
    double uniform() { return counter_uniform(seed_, stream_, counter_++); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() {
        const double u1 = uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    Matrix normal(Eigen::Index r, Eigen::Index c) {
        Matrix m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal();
        return m;
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double rel_residual(const Matrix& a, const Matrix& b) {
    const double scale = std::max(max_abs(a), max_abs(b));
    return scale > 0.0 ? max_abs(a - b) / scale : 0.0;
}

double rel_residual(const SegmentL& a, const SegmentL& b) {
    return std::max(rel_residual(a.head, b.head), rel_residual(a.density, b.density));
}

SegmentC random_C(Draws& rng, const GridSpec& grid, int N) {
    return SegmentC(grid, rng.normal(N, grid.nodes()));
}

SegmentL random_L(Draws& rng, const GridSpec& grid, int N, double p) {
    SegmentL v(grid, N, p);
    v.head = rng.normal(N, 1).col(0);
    v.density = rng.normal(N, grid.nodes());
    return v;
}

void merge(IdentityAudit& into, const IdentityAudit& a) {
    into.samples += a.samples;
    into.cocycle_integer = std::max(into.cocycle_integer, a.cocycle_integer);
    into.cocycle_fractional = std::max(into.cocycle_fractional, a.cocycle_fractional);
    into.cocycle_offgrid = std::max(into.cocycle_offgrid, a.cocycle_offgrid);
    into.cocycle_fractional_jump = std::max(into.cocycle_fractional_jump, a.cocycle_fractional_jump);
    into.intertwining = std::max(into.intertwining, a.intertwining);
    into.lc_relation = std::max(into.lc_relation, a.lc_relation);
}

void merge(InequalityAudit& into, const InequalityAudit& a) {
    into.samples += a.samples;
    into.checks += a.checks;
    into.violations += a.violations;
    for (const auto& v : a.violated)
        if (into.violated.size() < 10) into.violated.push_back(v);
    into.worst_ratio = std::max(into.worst_ratio, a.worst_ratio);
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

const char* status_name(RunStatus s) {
    switch (s) {
        case RunStatus::ok: return "ok";
        case RunStatus::numerical_failure: return "numerical_failure";
        case RunStatus::acceptance_failed: return "acceptance_failed";
    }
    return "ok";
}

json groups_json(const std::vector<ExponentGroup>& groups) {
    json out = json::array();
    for (const auto& g : groups)
        out.push_back({{"first", g.first},
                       {"size", g.size},
                       {"value", num(g.value)},
                       {"below_floor", g.below_floor},
                       {"unresolved", g.unresolved}});
    return out;
}

// Output bookkeeping for one run.
class Writer {
public:
    Writer(std::filesystem::path dir, RunManifest& manifest) : dir_(std::move(dir)), manifest_(manifest) {}

    void json_file(const std::string& name, const json& j) {
        std::ofstream os(open(name));
        os << j.dump(2) << '\n';
    }

    template <class F>
    void text_file(const std::string& name, F&& fill) {
        std::ofstream os(open(name));
        fill(os);
    }

private:
    std::filesystem::path open(const std::string& name) {
        manifest_.outputs.push_back(name);
        return dir_ / name;
    }

    std::filesystem::path dir_;
    RunManifest& manifest_;
};

class Stages {
public:
    explicit Stages(RunManifest& m) : manifest_(m) {}
    template <class F>
    auto run(const std::string& name, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        auto done = [&] {
            manifest_.stages.push_back(
                {name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
        };
        try {
            if constexpr (std::is_void_v<decltype(f())>) {
                f();
                done();
            } else {
                auto r = f();
                done();
                return r;
            }
        } catch (...) {
            done();
            throw;
        }
    }

private:
    RunManifest& manifest_;
};

FiberKind fiber_of(FiberChoice c) { return c == FiberChoice::L ? FiberKind::L : FiberKind::C; }

json spectrum_json(const SpectrumReport& rep, const std::string& hash) {
    json j;
    j["config_hash"] = hash;
    j["fiber"] = to_string(rep.fiber);
    j["M"] = rep.grid.M;
    j["N"] = rep.N;
    j["exponents"] = nums(rep.qr.exponents);
    j["drift"] = nums(rep.qr.drift);
    j["groups"] = groups_json(rep.qr.groups);
    j["reseeded_columns"] = rep.qr.reseeds.size();
    j["equivariance_angles"] = nums(rep.equivariance_angles);
    j["projection_condition"] = nums(rep.projection_condition);
    json backward = json::array();
    for (int g = 0; g < rep.finite_groups(); ++g) {
        try {
            backward.push_back(nums(backward_rate_check(rep, g)));
        } catch (const std::exception&) {
            backward.push_back(nullptr);
        }
    }
    j["backward_slopes"] = backward;
    if (!rep.log_projection_norms.empty() && !rep.log_projection_norms[0].empty() &&
        rep.log_projection_norms[0].size() >= 2) {
        const auto t = temperedness_check(rep);
        j["temperedness_slopes"] = nums(t.slopes);
    }
    json frames = json::array();
    for (const auto& f : rep.frames) {
        json dims = json::array();
        for (const auto& e : f.E) dims.push_back(e.dim());
        frames.push_back({{"time", f.time}, {"E_dims", dims}});
    }
    j["frames"] = frames;
    return j;
}

void running_csv(std::ostream& os, const QRSpectrum& qr) {
    os << "t";
    for (std::size_t i = 0; i < qr.running.size(); ++i) os << ",lambda_" << i + 1;
    os << '\n';
    os.precision(17);
    for (std::size_t r = 0; r < qr.running_times.size(); ++r) {
        os << qr.running_times[r];
        for (const auto& series : qr.running) os << ',' << series[r];
        os << '\n';
    }
}

void leading_vector_csv(std::ostream& os, const SpectrumReport& rep) {
    // first covariant vector at time 0, back in raw coordinates
    const Vector w = metric_weights(rep.fiber, rep.grid, rep.N);
    const Vector raw = rep.frames.front().E.front().basis.col(0).cwiseQuotient(w.cwiseSqrt());
    if (rep.fiber == FiberKind::C) {
        write_csv(os, SegmentC::from_coords(rep.grid, rep.N, raw));
    } else {
        write_csv(os, SegmentL::from_coords(rep.grid, rep.N, raw));
    }
}

void emit_spectrum(Writer& out, const SpectrumReport& rep, const std::string& hash) {
    const std::string f = to_string(rep.fiber);
    out.json_file("spectrum_" + std::string(f) + ".json", spectrum_json(rep, hash));
    out.text_file("spectrum_" + std::string(f) + ".csv", [&](std::ostream& os) { running_csv(os, rep.qr); });
    if (!rep.frames.empty() && !rep.frames.front().E.empty())
        out.text_file("E1_" + std::string(f) + ".csv", [&](std::ostream& os) { leading_vector_csv(os, rep); });
}

void run_spectrum_like(const ExperimentConfig& c, const std::string& hash, Writer& out, Stages& stages,
                       RunManifest& manifest, bool compare) {
    const Driver driver = Driver::realize(c.driver, required_window(c.spectrum));
    std::vector<FiberKind> kinds;
    if (compare || c.fiber == FiberChoice::both) {
        kinds = {FiberKind::C, FiberKind::L};
    } else {
        kinds = {fiber_of(c.fiber)};
    }
    std::vector<SpectrumReport> reps;
    for (FiberKind k : kinds) {
        reps.push_back(stages.run(std::string("oseledets_") + to_string(k),
                                  [&] { return oseledets_frames(driver, k, c.grid, c.spectrum); }));
        emit_spectrum(out, reps.back(), hash);
        for (const auto& g : reps.back().qr.groups)
            if (g.unresolved)
                manifest.flags.push_back(std::string(to_string(k)) + ": unresolved exponent gap at index " +
                                         std::to_string(g.first));
        if (c.export_operator) {
            out.text_file(std::string("operator_") + to_string(k) + ".csv", [&](std::ostream& os) {
                write_csv(os, assemble_unit_operator(driver, 0.0, k, c.grid));
            });
        }
    }
    if (!compare) return;
    const ComparisonReport cmp = stages.run("compare", [&] { return compare_C_vs_L(reps[0], reps[1], c.tolerances); });
    json j;
    j["config_hash"] = hash;
    j["exponent_gaps"] = nums(cmp.exponent_gaps);
    j["E_angles"] = nums(cmp.E_angles);
    j["F_angles"] = nums(cmp.F_angles);
    j["E_range_residuals"] = nums(cmp.E_range_residuals);
    j["flags"] = cmp.flags;
    j["tolerances"] = {{"exponent", cmp.tolerances.exponent}, {"angle", cmp.tolerances.angle}};
    j["top_equal"] = cmp.top_equal;
    j["exponents_equal"] = cmp.exponents_equal;
    j["E_related"] = cmp.E_related;
    j["F_related"] = cmp.F_related;
    j["pass"] = cmp.pass();
    out.json_file("comparison.json", j);
    for (const auto& f : cmp.flags) manifest.flags.push_back("compare: " + f);
    if (!cmp.pass()) manifest.status = RunStatus::acceptance_failed;
}

void run_converge(const ExperimentConfig& c, const std::string& hash, Writer& out, Stages& stages) {
    const Driver driver = Driver::realize(c.driver, required_window(c.spectrum));
    const int levels = c.converge_levels;
    std::vector<QRSpectrum> results(static_cast<std::size_t>(levels));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(levels));
    stages.run("converge", [&] {
        // levels are independent runs; inner assembly stays serial here
#pragma omp parallel for schedule(dynamic)
        for (int l = 0; l < levels; ++l) {
            try {
                results[static_cast<std::size_t>(l)] =
                    qr_spectrum(driver, FiberKind::C, GridSpec(c.grid.M << l), c.spectrum);
            } catch (...) {
                errors[static_cast<std::size_t>(l)] = std::current_exception();
            }
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    });
    const int k = c.spectrum.k;
    json table = json::array();
    for (int l = 0; l < levels; ++l)
        table.push_back({{"M", c.grid.M << l}, {"exponents", nums(results[static_cast<std::size_t>(l)].exponents)}});
    // successive differences and their ratios; ratio 4 means second order
    json diffs = json::array(), ratios = json::array(), orders = json::array();
    for (int l = 0; l + 1 < levels; ++l) {
        std::vector<double> d;
        for (int i = 0; i < k; ++i)
            d.push_back(std::abs(results[static_cast<std::size_t>(l)].exponents[static_cast<std::size_t>(i)] -
                                 results[static_cast<std::size_t>(l + 1)].exponents[static_cast<std::size_t>(i)]));
        diffs.push_back(nums(d));
    }
    for (std::size_t l = 0; l + 1 < diffs.size(); ++l) {
        std::vector<double> r, o;
        for (int i = 0; i < k; ++i) {
            const json& a = diffs[l][static_cast<std::size_t>(i)];
            const json& b = diffs[l + 1][static_cast<std::size_t>(i)];
            double ratio = std::numeric_limits<double>::quiet_NaN();
            if (a.is_number() && b.is_number() && b.get<double>() > 0.0) ratio = a.get<double>() / b.get<double>();
            r.push_back(ratio);
            o.push_back(std::log2(ratio));
        }
        ratios.push_back(nums(r));
        orders.push_back(nums(o));
    }
    out.json_file("converge.json", {{"config_hash", hash},
                                    {"levels", table},
                                    {"differences", diffs},
                                    {"ratios", ratios},
                                    {"observed_order", orders}});
    out.text_file("converge.csv", [&](std::ostream& os) {
        os << "M";
        for (int i = 0; i < k; ++i) os << ",lambda_" << i + 1;
        os << '\n';
        os.precision(17);
        for (int l = 0; l < levels; ++l) {
            os << (c.grid.M << l);
            for (double e : results[static_cast<std::size_t>(l)].exponents) os << ',' << e;
            os << '\n';
        }
    });
}

void run_oracle(const ExperimentConfig& c, const std::string& hash, Writer& out, Stages& stages,
                RunManifest& manifest) {
    const int count = c.oracle_count > 0 ? c.oracle_count : c.spectrum.k;
    SpectrumConfig sc = c.spectrum;
    sc.k = count;
    const Driver driver = Driver::realize(c.driver, required_window(sc));
    const QRSpectrum qr = stages.run("qr_spectrum", [&] { return qr_spectrum(driver, FiberKind::C, c.grid, sc); });

    std::vector<std::complex<double>> reference;
    std::string kind;
    if (c.driver.kind == DriverKind::constant) {
        kind = "characteristic_roots";
        reference = stages.run("oracle", [&] { return characteristic_root_oracle(c.driver.A0, c.driver.B0, count); });
    } else {
        kind = "monodromy";
        stages.run("oracle", [&] {
            for (const auto& m : monodromy_modes(driver, FiberKind::C, c.grid, 0.0, count))
                reference.push_back(std::log(m.multiplier));
        });
    }
    json rows = json::array();
    bool pass = true;
    for (int i = 0; i < count; ++i) {
        const double est = qr.exponents[static_cast<std::size_t>(i)];
        const double ref = reference[static_cast<std::size_t>(i)].real();
        double gap = std::abs(est - ref);
        if (!std::isfinite(est)) gap = std::numeric_limits<double>::infinity();
        if (!(gap <= c.tolerances.exponent)) pass = false;
        rows.push_back({{"index", i + 1},
                        {"estimate", num(est)},
                        {"oracle_real", ref},
                        {"oracle_imag", reference[static_cast<std::size_t>(i)].imag()},
                        {"gap", num(gap)}});
    }
    out.json_file("oracle.json", {{"config_hash", hash}, {"oracle", kind}, {"rows", rows}, {"pass", pass}});
    out.text_file("oracle.csv", [&](std::ostream& os) {
        os.precision(17);
        os << "index,estimate,oracle_real,oracle_imag,gap\n";
        for (const auto& r : rows)
            os << r["index"] << ',' << r["estimate"] << ',' << r["oracle_real"] << ',' << r["oracle_imag"] << ','
               << r["gap"] << '\n';
    });
    if (!pass) {
        manifest.flags.push_back("oracle: exponent gap above tolerance");
        manifest.status = RunStatus::acceptance_failed;
    }
}

void run_bounds(const ExperimentConfig& c, const std::string& hash, Writer& out, Stages& stages,
                RunManifest& manifest) {
    const int T = c.bounds_T;
    const Driver driver =
        Driver::realize(c.driver, {-static_cast<double>(T) - 2.0, static_cast<double>(T) + 6.0});
    const BoundsDecay bd = stages.run("bounds_decay", [&] { return bounds_decay_check(driver, c.grid, T); });
    const auto summ = summability_report(driver, T);
    IdentityAudit ids;
    InequalityAudit ineq;
    if (c.audit_samples > 0) {
        ids = stages.run("identity_audit",
                         [&] { return audit_identities(driver, c.audit_samples, c.grid, c.seed, T); });
        ineq = stages.run("inequality_audit",
                          [&] { return audit_inequalities(driver, c.audit_samples, c.grid, c.seed, T); });
    }
    json j;
    j["config_hash"] = hash;
    j["T"] = T;
    j["slopes"] = {{"ln_c_forward", bd.slope_ln_c_forward},
                   {"ln_d_forward", bd.slope_ln_d_forward},
                   {"ln_c_backward", bd.slope_ln_c_backward},
                   {"ln_d_backward", bd.slope_ln_d_backward}};
    j["zero_d_samples"] = bd.zero_d_samples;
    j["summability"] = {{"mean_a", summ.mean_a},
                        {"mean_lnplus_int_bq", summ.mean_lnplus_int_bq},
                        {"max_a", summ.max_a},
                        {"max_b", summ.max_b}};
    j["identity_audit"] = {{"samples", ids.samples},
                           {"cocycle_integer", ids.cocycle_integer},
                           {"cocycle_fractional", ids.cocycle_fractional},
                           {"cocycle_offgrid_smooth", ids.cocycle_offgrid},
                           {"cocycle_fractional_jump", ids.cocycle_fractional_jump},
                           {"intertwining", ids.intertwining},
                           {"lc_relation", ids.lc_relation}};
    j["inequality_audit"] = {{"samples", ineq.samples},
                             {"checks", ineq.checks},
                             {"violations", ineq.violations},
                             {"violated", ineq.violated},
                             {"worst_ratio", ineq.worst_ratio}};
    out.json_file("bounds.json", j);
    out.text_file("bounds.csv", [&](std::ostream& os) {
        os.precision(17);
        os << "n,ln_c,ln_d\n";
        std::size_t di = 0;
        for (std::size_t n = 0; n < bd.ln_c.size(); ++n) {
            os << n << ',' << bd.ln_c[n] << ',';
            // ln d is absent where d = 0
            if (bd.zero_d_samples == 0 && di < bd.ln_d.size()) os << bd.ln_d[di++];
            os << '\n';
        }
    });
    if (ineq.violations > 0) manifest.flags.push_back("bounds: inequality violations");
}

}  // namespace

int exit_code(RunStatus status, bool strict) {
    switch (status) {
        case RunStatus::ok: return 0;
        case RunStatus::numerical_failure: return 2;
        case RunStatus::acceptance_failed: return strict ? 3 : 0;
    }
    return 0;
}

void set_threads(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

RunManifest run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
    config.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir))
        throw ConfigError("output.dir: cannot create " + out_dir.string());

    RunManifest manifest;
    manifest.config_hash = config_hash(config);
    manifest.started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    Writer out(out_dir, manifest);
    Stages stages(manifest);

    out.json_file("config.json", json::parse(canonical_json(config)));
    if (config.driver.outside_standard_setting()) manifest.flags.push_back("N = 1: outside the N >= 2 setting");
    try {
        switch (config.experiment) {
            case ExperimentKind::spectrum:
                run_spectrum_like(config, manifest.config_hash, out, stages, manifest, false);
                break;
            case ExperimentKind::compare:
                run_spectrum_like(config, manifest.config_hash, out, stages, manifest, true);
                break;
            case ExperimentKind::converge:
                run_converge(config, manifest.config_hash, out, stages);
                break;
            case ExperimentKind::oracle:
                run_oracle(config, manifest.config_hash, out, stages, manifest);
                break;
            case ExperimentKind::bounds:
                run_bounds(config, manifest.config_hash, out, stages, manifest);
                break;
        }
    } catch (const NumericalError& e) {
        manifest.status = RunStatus::numerical_failure;
        manifest.flags.push_back(std::string("numerical failure: ") + e.what());
    } catch (const WindowError& e) {
        manifest.status = RunStatus::numerical_failure;
        manifest.flags.push_back(std::string("window error: ") + e.what());
    }
    manifest.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json stages_json = json::array();
    for (const auto& s : manifest.stages) stages_json.push_back({{"name", s.name}, {"seconds", s.seconds}});
    manifest.outputs.push_back("manifest.json");
    const json m = {{"config_hash", manifest.config_hash},
                    {"version", manifest.version},
                    {"experiment", to_string(config.experiment)},
                    {"started", manifest.started},
                    {"wall_clock_seconds", manifest.wall_clock_seconds},
                    {"stages", stages_json},
                    {"outputs", manifest.outputs},
                    {"flags", manifest.flags},
                    {"status", status_name(manifest.status)}};
    std::ofstream(out_dir / "manifest.json") << m.dump(2) << '\n';
    return manifest;
}

DriverSpec random_driver_spec(int N, std::uint64_t seed, int index) {
    Draws rng(seed, kStreamAuditDriver + static_cast<std::uint64_t>(index) * 7919);
    auto mat = [&](double scale) {
        Matrix m(N, N);
        for (int j = 0; j < N; ++j)
            for (int i = 0; i < N; ++i) m(i, j) = rng.uniform(-scale, scale);
        return m;
    };
    DriverSpec s;
    s.dimension = N;
    s.seed = seed + static_cast<std::uint64_t>(index);
    switch (index % 3) {
        case 0:
            s.kind = DriverKind::constant;
            s.A0 = mat(1.0);
            s.B0 = mat(1.0);
            break;
        case 1:
            s.kind = DriverKind::quasi_periodic;
            s.A0 = mat(1.0);
            s.B0 = mat(1.0);
            s.quasi.frequencies = {1.0, std::numbers::sqrt2};
            s.quasi.A_cos = {mat(0.5), mat(0.5)};
            s.quasi.B_sin = {mat(0.5), mat(0.5)};
            break;
        default:
            s.kind = DriverKind::telegraph;
            s.telegraph.states = {{mat(1.0), mat(1.0)}, {mat(1.0), mat(1.0)}};
            s.telegraph.generator = Matrix(2, 2);
            s.telegraph.generator << -1.0, 1.0, 1.0, -1.0;
            break;
    }
    return s;
}

IdentityAudit audit_identities(const Driver& driver, int samples, const GridSpec& grid,
                               std::uint64_t seed, double horizon) {
    Draws rng(seed, kStreamAuditDraw);
    const int N = driver.dimension();
    IdentityAudit a;
    for (int s = 0; s < samples; ++s) {
        const double base = rng.uniform(0.0, horizon);
        const SegmentC u = random_C(rng, grid, N);
        const SegmentL v = random_L(rng, grid, N, driver.p());

        // integer times: t + r with t, r in {1, 2}
        const int m = 1 + static_cast<int>(rng.uniform() * 2.0);
        const int n = 1 + static_cast<int>(rng.uniform() * 2.0);
        a.cocycle_integer = std::max(
            a.cocycle_integer, rel_residual(propagate(driver, base, u, m + n).values,
                                            propagate(driver, base + m, propagate(driver, base, u, m), n).values));
        a.cocycle_integer = std::max(
            a.cocycle_integer, rel_residual(propagate(driver, base, v, m + n),
                                            propagate(driver, base + m, propagate(driver, base, v, m), n)));

        // fractional times on the grid: multiples of h that are not integers
        auto grid_time = [&] {
            int j = 0;
            while (j % grid.M == 0) j = 1 + static_cast<int>(rng.uniform() * 1.5 * grid.M);
            return static_cast<double>(j) / grid.M;
        };
        const double r1 = grid_time(), r2 = grid_time();
        a.cocycle_fractional = std::max(
            a.cocycle_fractional,
            rel_residual(propagate(driver, base, u, r1 + r2).values,
                         propagate(driver, base + r1, propagate(driver, base, u, r1), r2).values));
        // L data continuous at s = 0; with a jump the first split leaves it on a
        // node, which holds only one side of it (first order in h)
        SegmentL vc = v;
        vc.head = vc.density.col(grid.M);
        a.cocycle_fractional = std::max(
            a.cocycle_fractional, rel_residual(propagate(driver, base, vc, r1 + r2),
                                               propagate(driver, base + r1, propagate(driver, base, vc, r1), r2)));
        a.cocycle_fractional_jump = std::max(
            a.cocycle_fractional_jump,
            rel_residual(propagate(driver, base, v, r1 + r2),
                         propagate(driver, base + r1, propagate(driver, base, v, r1), r2)));

        // off-grid split of smooth data, second order in h
        {
            Matrix sv(N, grid.nodes());
            const Vector amp = rng.normal(N, 1).col(0), freq = rng.normal(N, 1).col(0);
            for (int j = 0; j <= grid.M; ++j)
                for (int i = 0; i < N; ++i) sv(i, j) = amp(i) * std::cos(freq(i) * grid.node(j) + i);
            const SegmentC smooth(grid, sv);
            const double o1 = rng.uniform(0.0, 1.5), o2 = rng.uniform(0.0, 1.5);
            a.cocycle_offgrid = std::max(
                a.cocycle_offgrid, rel_residual(propagate(driver, base, smooth, o1 + o2).values,
                                                propagate(driver, base + o1, propagate(driver, base, smooth, o1), o2)
                                                    .values));
        }

        // J U^(C) = U^(L) J, at unit and fractional times
        for (double t : {1.0, r1}) {
            a.intertwining = std::max(
                a.intertwining, rel_residual(embed_J(propagate(driver, base, u, t), driver.p()),
                                             propagate(driver, base, embed_J(u, driver.p()), t)));
        }

        // U^(L)(t) = J U^(L,C)(t), t >= 1
        const double t = rng.uniform(1.0, 3.0);
        a.lc_relation = std::max(a.lc_relation, rel_residual(embed_J(op_LC(driver, base, v, t), driver.p()),
                                                             propagate(driver, base, v, t)));
        ++a.samples;
    }
    return a;
}

InequalityAudit audit_inequalities(const Driver& driver, int samples, const GridSpec& grid,
                                   std::uint64_t seed, double horizon) {
    Draws rng(seed, kStreamAuditDraw + 1);
    const int N = driver.dimension();
    const double p = driver.p();
    InequalityAudit a;
    auto check = [&](const char* what, double lhs, double rhs, double slack) {
        ++a.checks;
        if (rhs > 0.0) a.worst_ratio = std::max(a.worst_ratio, lhs / rhs);
        if (lhs > rhs * (1.0 + slack) + 1e-300) {
            ++a.violations;
            if (a.violated.size() < 10) {
                std::ostringstream os;
                os.precision(12);
                os << what << ": " << lhs << " > " << rhs;
                a.violated.push_back(os.str());
            }
        }
    };
    constexpr double kRound = 1e-12;
    for (int s = 0; s < samples; ++s) {
        const double base = rng.uniform(0.0, horizon);
        const double t = rng.uniform(0.0, 1.0);
        const double tau = rng.uniform(0.0, 2.0);
        const SegmentC u = random_C(rng, grid, N);
        const SegmentL v = random_L(rng, grid, N, p);

        const StepBounds sb = step_bounds(driver, base, grid);
        const double k1 = sb.c * (1.0 + sb.d);
        // pointwise: ||z(t)|| <= c (1 + d) ||u||_L
        check("pointwise (L)", propagate(driver, base, v, t).head.norm(), k1 * norm_L(v), kRound);
        check("pointwise (C)", propagate(driver, base, u, t).at_zero().norm(), k1 * norm_L(embed_J(u, p)), kRound);
        // operator bounds 3 c (1 + d)
        check("U^(C) bound", norm_C(propagate(driver, base, u, t)), 3.0 * k1 * norm_C(u), kRound);
        check("U^(L) bound", norm_L(propagate(driver, base, v, t)), 3.0 * k1 * norm_L(v), kRound);
        check("U^(C)(1) bound", norm_C(step_unit_C(driver, base, u)), 3.0 * k1 * norm_C(u), kRound);
        check("U^(L)(1) bound", norm_L(step_unit_L(driver, base, v)), 3.0 * k1 * norm_L(v), kRound);
        check("U^(L,C)(1) bound", norm_C(op_LC(driver, base, v, 1.0)), k1 * norm_L(v), kRound);

        // L-to-C estimates at time tau
        const StepBounds sb2 = step_bounds(driver, base + tau, grid);
        const double k2 = sb2.c * (1.0 + sb2.d);
        const double w = norm_L(propagate(driver, base, v, tau));
        check("L-to-C (i)", norm_C(op_LC(driver, base, v, tau + 1.0)), k2 * w, kRound);
        check("L-to-C (ii)", norm_L(propagate(driver, base, v, tau + 1.0)), 2.0 * k2 * w, kRound);

        // fundamental matrix bound, RK4 error allowed on top
        double t1 = base + rng.uniform(0.0, 1.0), t2 = base + rng.uniform(0.0, 1.0);
        if (t1 > t2) std::swap(t1, t2);
        check("U0 exponential bound", matrix_norm2(fundamental_matrix(driver, t1, t2, grid).matrix),
              std::exp(integral_of_a(driver, t1, t2)), 1e-8);
        check("c <= exp(int a)", sb.c, sb.c_upper, 1e-8);
        ++a.samples;
    }
    return a;
}

IdentityAudit audit_identities(int samples, const GridSpec& grid, std::uint64_t seed) {
    IdentityAudit total;
    for (int s = 0; s < samples; ++s) {
        const Driver d = Driver::realize(random_driver_spec(2, seed, s), {-1.0, 12.0});
        merge(total, audit_identities(d, 1, grid, seed + static_cast<std::uint64_t>(s), 5.0));
    }
    return total;
}

InequalityAudit audit_inequalities(int samples, const GridSpec& grid, std::uint64_t seed) {
    InequalityAudit total;
    for (int s = 0; s < samples; ++s) {
        const Driver d = Driver::realize(random_driver_spec(2, seed, s), {-1.0, 12.0});
        merge(total, audit_inequalities(d, 1, grid, seed + static_cast<std::uint64_t>(s), 5.0));
    }
    return total;
}

}  // namespace rdde
