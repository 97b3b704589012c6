#pragma once

// Experiment configuration, runs and report emission for the rdde CLI.

#include "rdde/driver.hpp"
#include "rdde/fiber.hpp"
#include "rdde/spectrum.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rdde {

inline constexpr const char* kVersion = "0.1.0";

enum class ExperimentKind { spectrum, compare, converge, oracle, bounds };

std::string to_string(ExperimentKind kind);

enum class FiberChoice { C, L, both };

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::spectrum;
    DriverSpec driver;
    GridSpec grid;
    SpectrumConfig spectrum;
    FiberChoice fiber = FiberChoice::C;
    ComparisonTolerances tolerances;
    int oracle_count = 0;            // 0: use spectrum.k
    int converge_levels = 3;         // M, 2M, 4M, ...
    int bounds_T = 500;
    int audit_samples = 100;
    bool export_operator = false;    // write the unit operator at time 0 as CSV
    std::string out_dir = "rdde_out";
    std::uint64_t seed = 0;

    /// Re-checks every sub-config; throws ConfigError naming the field.
    void validate() const;
};

/// Parses JSON text. Syntax errors report line and column; schema and
/// invariant errors name the offending field. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the effective configuration (sorted keys, all defaults
/// filled in), so the hash is stable across re-serialization. The output
/// directory is not part of it.
std::string canonical_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

struct StageTiming {
    std::string name;
    double seconds = 0.0;
};

enum class RunStatus { ok, numerical_failure, acceptance_failed };

struct RunManifest {
    std::string config_hash;
    std::string version = kVersion;
    std::string started;  // UTC, ISO 8601
    double wall_clock_seconds = 0.0;
    std::vector<StageTiming> stages;
    std::vector<std::string> outputs;
    std::vector<std::string> flags;
    RunStatus status = RunStatus::ok;
};

/// Exit code convention of the CLI.
int exit_code(RunStatus status, bool strict);

/// Runs the experiment and writes reports plus manifest.json into out_dir.
RunManifest run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Sets the OpenMP team size used by operator assembly (<= 0 keeps the default).
void set_threads(int threads);

// Verification sweeps shared by the `bounds` experiment and the acceptance checks.

struct IdentityAudit {
    int samples = 0;
    double cocycle_integer = 0.0;     // max relative residuals
    double cocycle_fractional = 0.0;  // non-integer multiples of h
    double cocycle_offgrid = 0.0;     // arbitrary real split, smooth data; O(h^2)
    double cocycle_fractional_jump = 0.0;  // L data with head != density(0); O(h)
    double intertwining = 0.0;
    double lc_relation = 0.0;
};

struct InequalityAudit {
    int samples = 0;
    int checks = 0;
    int violations = 0;
    std::vector<std::string> violated;  // descriptions of the first few
    double worst_ratio = 0.0;           // max lhs / rhs seen
};

/// Random drivers of every kind, used for audits.
DriverSpec random_driver_spec(int N, std::uint64_t seed, int index);

IdentityAudit audit_identities(int samples, const GridSpec& grid, std::uint64_t seed);
InequalityAudit audit_inequalities(int samples, const GridSpec& grid, std::uint64_t seed);

/// Same audits along one given driver (window must cover [0, horizon + 4]).
IdentityAudit audit_identities(const Driver& driver, int samples, const GridSpec& grid,
                               std::uint64_t seed, double horizon);
InequalityAudit audit_inequalities(const Driver& driver, int samples, const GridSpec& grid,
                                   std::uint64_t seed, double horizon);

}  // namespace rdde
