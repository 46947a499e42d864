#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "crossdiff/diagnostics.hpp"
#include "crossdiff/evolve.hpp"
#include "crossdiff/minimize.hpp"

namespace crossdiff {

struct DomainSpec {
    int dim = 1;
    double a = -1.0, b = 1.0;  ///< 1D interval
    int n = 1001;              ///< 1D node count
    double radius = 2.0;       ///< 2D disc
    double h = 0.1;            ///< 2D target resolution
};

struct InitSpec {
    enum class Kind { random, heaviside, uniform, nested, split, file };
    Kind kind = Kind::random;
    std::uint64_t seed = 1;
    double amplitude = 1.0 / 3.0;  ///< heaviside bumps
    double halfwidth = 0.5;
    double gamma = 1e-3;
    std::vector<double> centers = {0.0};
    double tilt_r_slope = 0.0, tilt_r_offset = 1.0;  ///< random init modulation a x + b
    double tilt_b_slope = 0.0, tilt_b_offset = 1.0;
    std::string path;  ///< fields.csv to resume from (kind == file)
};

enum class RunMode { minimize, evolve };

/// Complete, reproducible description of one run (or an eps sweep of runs).
struct RunSpec {
    RunMode mode = RunMode::minimize;
    DomainSpec domain;
    ModelParams params;
    AdmmOptions admm;
    EvolveOptions evolve;
    InitSpec init;
    std::vector<double> eps_sweep;  ///< nonempty: repeat the minimize run per eps
    int trace_every = 1;
    std::string label;
};

/// Parse and validate a config document. Throws ConfigError carrying the
/// offending field path.
RunSpec parse_config(const nlohmann::json& config);
nlohmann::json to_config(const RunSpec& spec);
RunSpec load_config(const std::string& path);

/// Result of a single (non-sweep) run.
struct RunOutput {
    Field r, b;
    std::vector<AdmmTraceRow> admm_trace;
    std::vector<EvolveTraceRow> evolve_trace;
    std::vector<EvolveState> snapshots;
    bool converged = false;
    int iterations = 0;
    double overlap = 0.0;
    EnergyBreakdown energy;
};

struct SweepEntry {
    double eps = 0.0;
    double overlap = 0.0;
    double l2_distance_to_first = 0.0;  ///< L2 distance of r to the first entry's r
    double total_energy = 0.0;
};

struct RunArtifacts {
    std::filesystem::path dir;
    RunOutput output;                 ///< single run, or the last sweep entry
    std::vector<SweepEntry> sweep;
    std::vector<RunOutput> sweep_outputs;
};

/// Execute a spec and write trace.csv, fields.csv, mesh.txt, manifest.json
/// (and snapshot/summary files where applicable) under out_dir. Byte-identical
/// outputs for identical spec and seed.
RunArtifacts run_spec(const RunSpec& spec, const std::filesystem::path& out_dir);

/// Re-verify the invariants of a stored artifact directory.
struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};
std::vector<CheckResult> check_artifacts(const std::filesystem::path& dir);

/// Built-in configurations, one per study; keys are preset names.
std::map<std::string, nlohmann::json> preset_registry();
RunSpec preset(const std::string& name);

}  // namespace crossdiff
