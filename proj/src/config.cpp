#include "rdde/harness.hpp"

#include "rdde/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace rdde {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(known.begin(), known.end());
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!ok.count(key)) throw ConfigError((where.empty() ? "" : where + ".") + key + ": unknown field");
    }
}

std::string field(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
}

double get_number(const json& v, const std::string& name) {
    if (!v.is_number()) throw ConfigError(name + ": expected a number");
    return v.get<double>();
}

int get_int(const json& v, const std::string& name) {
    if (!v.is_number_integer()) throw ConfigError(name + ": expected an integer");
    const auto x = v.get<long long>();
    if (x < -(1LL << 30) || x > (1LL << 30)) throw ConfigError(name + ": integer out of range");
    return static_cast<int>(x);
}

std::uint64_t get_seed(const json& v, const std::string& name) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        const auto x = v.get<long long>();
        if (x < 0) throw ConfigError(name + ": must be >= 0");
        return static_cast<std::uint64_t>(x);
    }
    throw ConfigError(name + ": expected a non-negative integer");
}

Matrix get_matrix(const json& v, int n, const std::string& name) {
    if (!v.is_array() || static_cast<int>(v.size()) != n)
        throw ConfigError(name + ": expected " + std::to_string(n) + " rows");
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
        const json& row = v[static_cast<std::size_t>(i)];
        const std::string rname = name + "[" + std::to_string(i) + "]";
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            throw ConfigError(rname + ": expected " + std::to_string(n) + " entries");
        for (int j = 0; j < n; ++j) m(i, j) = get_number(row[static_cast<std::size_t>(j)], rname);
    }
    return m;
}

std::vector<Matrix> get_matrix_list(const json& v, int n, const std::string& name) {
    if (!v.is_array()) throw ConfigError(name + ": expected a list of matrices");
    std::vector<Matrix> out;
    for (std::size_t k = 0; k < v.size(); ++k)
        out.push_back(get_matrix(v[k], n, name + "[" + std::to_string(k) + "]"));
    return out;
}

std::vector<double> get_numbers(const json& v, const std::string& name) {
    if (!v.is_array()) throw ConfigError(name + ": expected a list of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k)
        out.push_back(get_number(v[k], name + "[" + std::to_string(k) + "]"));
    return out;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json matrix_list_json(const std::vector<Matrix>& list) {
    json out = json::array();
    for (const auto& m : list) out.push_back(matrix_json(m));
    return out;
}

DriverSpec parse_driver(const json& j) {
    const std::string w = "driver";
    check_keys(j, w,
               {"kind", "dimension", "p", "A", "B", "frequencies", "A_cos", "A_sin", "B_cos", "B_sin",
                "phases", "states", "generator"});
    DriverSpec s;
    if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("driver.kind: required string");
    s.kind = driver_kind_from_string(j["kind"].get<std::string>());
    if (!j.contains("dimension")) throw ConfigError("driver.dimension: required");
    s.dimension = get_int(j["dimension"], "driver.dimension");
    if (s.dimension < 1) throw ConfigError("driver.dimension: must be >= 1");
    if (j.contains("p")) s.p = get_number(j["p"], "driver.p");
    const int n = s.dimension;

    auto need = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw ConfigError(field(w, key) + ": required for kind " + to_string(s.kind));
        return j[key];
    };
    auto forbid = [&](std::initializer_list<const char*> keys) {
        for (const char* key : keys)
            if (j.contains(key))
                throw ConfigError(field(w, key) + ": not used by kind " + to_string(s.kind));
    };
    switch (s.kind) {
        case DriverKind::constant:
            forbid({"frequencies", "A_cos", "A_sin", "B_cos", "B_sin", "phases", "states", "generator"});
            s.A0 = get_matrix(need("A"), n, "driver.A");
            s.B0 = get_matrix(need("B"), n, "driver.B");
            break;
        case DriverKind::quasi_periodic:
            forbid({"states", "generator"});
            s.A0 = get_matrix(need("A"), n, "driver.A");
            s.B0 = get_matrix(need("B"), n, "driver.B");
            s.quasi.frequencies = get_numbers(need("frequencies"), "driver.frequencies");
            if (j.contains("A_cos")) s.quasi.A_cos = get_matrix_list(j["A_cos"], n, "driver.A_cos");
            if (j.contains("A_sin")) s.quasi.A_sin = get_matrix_list(j["A_sin"], n, "driver.A_sin");
            if (j.contains("B_cos")) s.quasi.B_cos = get_matrix_list(j["B_cos"], n, "driver.B_cos");
            if (j.contains("B_sin")) s.quasi.B_sin = get_matrix_list(j["B_sin"], n, "driver.B_sin");
            if (j.contains("phases")) s.quasi.phases = get_numbers(j["phases"], "driver.phases");
            break;
        case DriverKind::telegraph: {
            forbid({"A", "B", "frequencies", "A_cos", "A_sin", "B_cos", "B_sin", "phases"});
            const json& st = need("states");
            if (!st.is_array()) throw ConfigError("driver.states: expected a list");
            for (std::size_t k = 0; k < st.size(); ++k) {
                const std::string sw = "driver.states[" + std::to_string(k) + "]";
                check_keys(st[k], sw, {"A", "B"});
                if (!st[k].contains("A") || !st[k].contains("B"))
                    throw ConfigError(sw + ": needs A and B");
                s.telegraph.states.push_back(
                    {get_matrix(st[k]["A"], n, sw + ".A"), get_matrix(st[k]["B"], n, sw + ".B")});
            }
            const json& g = need("generator");
            const int m = static_cast<int>(st.size());
            if (m < 1) throw ConfigError("driver.states: at least one state required");
            s.telegraph.generator = get_matrix(g, m, "driver.generator");
            break;
        }
    }
    return s;
}

json driver_json(const DriverSpec& s) {
    json j;
    j["kind"] = to_string(s.kind);
    j["dimension"] = s.dimension;
    j["p"] = s.p;
    switch (s.kind) {
        case DriverKind::constant:
            j["A"] = matrix_json(s.A0);
            j["B"] = matrix_json(s.B0);
            break;
        case DriverKind::quasi_periodic:
            j["A"] = matrix_json(s.A0);
            j["B"] = matrix_json(s.B0);
            j["frequencies"] = s.quasi.frequencies;
            j["A_cos"] = matrix_list_json(s.quasi.A_cos);
            j["A_sin"] = matrix_list_json(s.quasi.A_sin);
            j["B_cos"] = matrix_list_json(s.quasi.B_cos);
            j["B_sin"] = matrix_list_json(s.quasi.B_sin);
            j["phases"] = s.quasi.phases;
            break;
        case DriverKind::telegraph: {
            json st = json::array();
            for (const auto& x : s.telegraph.states) st.push_back({{"A", matrix_json(x.A)}, {"B", matrix_json(x.B)}});
            j["states"] = st;
            j["generator"] = matrix_json(s.telegraph.generator);
            break;
        }
    }
    return j;
}

void parse_spectrum(const json& j, SpectrumConfig& s, FiberChoice& fiber) {
    const std::string w = "spectrum";
    check_keys(j, w,
               {"k", "T", "renorm_every", "transient", "backward_horizon", "adjoint_horizon",
                "sample_times", "temper_horizon", "floor", "gap_factor", "min_gap_tol",
                "resolution_margin", "probe_seed", "fiber"});
    auto i = [&](const char* key, int& dst) {
        if (j.contains(key)) dst = get_int(j[key], field(w, key));
    };
    auto d = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = get_number(j[key], field(w, key));
    };
    i("k", s.k);
    i("T", s.T);
    i("renorm_every", s.renorm_every);
    i("transient", s.transient);
    i("backward_horizon", s.backward_horizon);
    i("adjoint_horizon", s.adjoint_horizon);
    i("temper_horizon", s.temper_horizon);
    d("floor", s.floor);
    d("gap_factor", s.gap_factor);
    d("min_gap_tol", s.min_gap_tol);
    d("resolution_margin", s.resolution_margin);
    if (j.contains("probe_seed")) s.probe_seed = get_seed(j["probe_seed"], "spectrum.probe_seed");
    if (j.contains("sample_times")) {
        const json& st = j["sample_times"];
        if (!st.is_array()) throw ConfigError("spectrum.sample_times: expected a list of integers");
        s.sample_times.clear();
        for (std::size_t k = 0; k < st.size(); ++k)
            s.sample_times.push_back(get_int(st[k], "spectrum.sample_times[" + std::to_string(k) + "]"));
    }
    if (j.contains("fiber")) {
        if (!j["fiber"].is_string()) throw ConfigError("spectrum.fiber: expected \"C\", \"L\" or \"both\"");
        const auto f = j["fiber"].get<std::string>();
        if (f == "C") fiber = FiberChoice::C;
        else if (f == "L") fiber = FiberChoice::L;
        else if (f == "both") fiber = FiberChoice::both;
        else throw ConfigError("spectrum.fiber: expected \"C\", \"L\" or \"both\"");
    }
}

ExperimentKind experiment_from_string(const std::string& name) {
    if (name == "spectrum") return ExperimentKind::spectrum;
    if (name == "compare") return ExperimentKind::compare;
    if (name == "converge") return ExperimentKind::converge;
    if (name == "oracle") return ExperimentKind::oracle;
    if (name == "bounds") return ExperimentKind::bounds;
    throw ConfigError("experiment: unknown experiment '" + name + "'");
}

const char* fiber_choice_name(FiberChoice f) {
    switch (f) {
        case FiberChoice::C: return "C";
        case FiberChoice::L: return "L";
        case FiberChoice::both: return "both";
    }
    return "C";
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

// FNV-1a, 64 bit
std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::spectrum: return "spectrum";
        case ExperimentKind::compare: return "compare";
        case ExperimentKind::converge: return "converge";
        case ExperimentKind::oracle: return "oracle";
        case ExperimentKind::bounds: return "bounds";
    }
    return "unknown";
}

void ExperimentConfig::validate() const {
    driver.validate();
    if (grid.M < 4) throw ConfigError("grid.M: must be >= 4");
    const int N = driver.dimension;
    spectrum.validate(fiber_dimension(FiberKind::C, grid, N));
    if (!(tolerances.exponent > 0.0)) throw ConfigError("tolerances.exponent: must be > 0");
    if (!(tolerances.angle > 0.0)) throw ConfigError("tolerances.angle: must be > 0");
    if (oracle_count < 0) throw ConfigError("oracle.count: must be >= 0");
    if (converge_levels < 2 || converge_levels > 5) throw ConfigError("converge.levels: must lie in [2, 5]");
    if (bounds_T < 2) throw ConfigError("bounds.T: must be >= 2");
    if (audit_samples < 0) throw ConfigError("bounds.audit_samples: must be >= 0");
    if (out_dir.empty()) throw ConfigError("output.dir: must not be empty");
    if (experiment == ExperimentKind::oracle) {
        const bool periodic = driver.kind == DriverKind::quasi_periodic;
        if (driver.kind != DriverKind::constant && !periodic)
            throw ConfigError("driver.kind: oracle needs a constant or periodic driver");
        if (periodic) {
            for (double w : driver.quasi.frequencies) {
                const double r = w / (2.0 * 3.14159265358979323846);
                if (std::abs(r - std::round(r)) > 1e-12)
                    throw ConfigError("driver.frequencies: oracle needs period 1 (multiples of 2 pi)");
            }
        }
    }
}

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        std::ostringstream os;
        os << "parse error at line " << line << ", column " << col << ": " << e.what();
        throw ConfigError(os.str());
    }
    check_keys(j, "", {"experiment", "seed", "driver", "grid", "spectrum", "tolerances", "oracle",
                       "converge", "bounds", "output", "export_operator"});
    ExperimentConfig c;
    if (!j.contains("experiment") || !j["experiment"].is_string())
        throw ConfigError("experiment: required string");
    c.experiment = experiment_from_string(j["experiment"].get<std::string>());
    if (j.contains("seed")) c.seed = get_seed(j["seed"], "seed");
    if (!j.contains("driver")) throw ConfigError("driver: required");
    c.driver = parse_driver(j["driver"]);
    c.driver.seed = c.seed;
    if (j.contains("grid")) {
        check_keys(j["grid"], "grid", {"M"});
        if (j["grid"].contains("M")) {
            const int M = get_int(j["grid"]["M"], "grid.M");
            if (M < 4) throw ConfigError("grid.M: must be >= 4");
            c.grid = GridSpec(M);
        }
    }
    if (j.contains("spectrum")) parse_spectrum(j["spectrum"], c.spectrum, c.fiber);
    if (j.contains("tolerances")) {
        check_keys(j["tolerances"], "tolerances", {"exponent", "angle"});
        if (j["tolerances"].contains("exponent"))
            c.tolerances.exponent = get_number(j["tolerances"]["exponent"], "tolerances.exponent");
        if (j["tolerances"].contains("angle"))
            c.tolerances.angle = get_number(j["tolerances"]["angle"], "tolerances.angle");
    }
    if (j.contains("oracle")) {
        check_keys(j["oracle"], "oracle", {"count"});
        if (j["oracle"].contains("count")) c.oracle_count = get_int(j["oracle"]["count"], "oracle.count");
    }
    if (j.contains("converge")) {
        check_keys(j["converge"], "converge", {"levels"});
        if (j["converge"].contains("levels"))
            c.converge_levels = get_int(j["converge"]["levels"], "converge.levels");
    }
    if (j.contains("bounds")) {
        check_keys(j["bounds"], "bounds", {"T", "audit_samples"});
        if (j["bounds"].contains("T")) c.bounds_T = get_int(j["bounds"]["T"], "bounds.T");
        if (j["bounds"].contains("audit_samples"))
            c.audit_samples = get_int(j["bounds"]["audit_samples"], "bounds.audit_samples");
    }
    if (j.contains("output")) {
        check_keys(j["output"], "output", {"dir"});
        if (j["output"].contains("dir")) {
            if (!j["output"]["dir"].is_string()) throw ConfigError("output.dir: expected a string");
            c.out_dir = j["output"]["dir"].get<std::string>();
        }
    }
    if (j.contains("export_operator")) {
        if (!j["export_operator"].is_boolean()) throw ConfigError("export_operator: expected true or false");
        c.export_operator = j["export_operator"].get<bool>();
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str());
}

std::string canonical_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = to_string(c.experiment);
    j["seed"] = c.seed;
    j["driver"] = driver_json(c.driver);
    j["grid"] = {{"M", c.grid.M}};
    const auto& s = c.spectrum;
    j["spectrum"] = {{"k", s.k},
                     {"T", s.T},
                     {"renorm_every", s.renorm_every},
                     {"transient", s.transient},
                     {"backward_horizon", s.backward_horizon},
                     {"adjoint_horizon", s.adjoint_horizon},
                     {"sample_times", s.sample_times},
                     {"temper_horizon", s.temper_horizon},
                     {"floor", s.floor},
                     {"gap_factor", s.gap_factor},
                     {"min_gap_tol", s.min_gap_tol},
                     {"resolution_margin", s.resolution_margin},
                     {"probe_seed", s.probe_seed},
                     {"fiber", fiber_choice_name(c.fiber)}};
    j["tolerances"] = {{"exponent", c.tolerances.exponent}, {"angle", c.tolerances.angle}};
    j["oracle"] = {{"count", c.oracle_count}};
    j["converge"] = {{"levels", c.converge_levels}};
    j["bounds"] = {{"T", c.bounds_T}, {"audit_samples", c.audit_samples}};
    j["export_operator"] = c.export_operator;
    return j.dump();
}

std::string config_hash(const ExperimentConfig& config) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << fnv1a(canonical_json(config));
    return os.str();
}

}  // namespace rdde
