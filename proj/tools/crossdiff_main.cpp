#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "crossdiff/csv.hpp"
#include "crossdiff/errors.hpp"
#include "crossdiff/run.hpp"

namespace {

crossdiff::RunSpec resolve_spec(const std::string& source) {
    if (std::filesystem::exists(source)) return crossdiff::load_config(source);
    return crossdiff::preset(source);
}

int run_command(const std::string& source, const std::string& out_dir) {
    const crossdiff::RunSpec spec = resolve_spec(source);
    const crossdiff::RunArtifacts artifacts = crossdiff::run_spec(spec, out_dir);
    const crossdiff::RunOutput& out = artifacts.output;
    if (!artifacts.sweep.empty()) {
        std::printf("sweep of %zu runs written to %s\n", artifacts.sweep.size(), out_dir.c_str());
        for (const crossdiff::SweepEntry& entry : artifacts.sweep) {
            std::printf("  eps=%s overlap=%s distance=%s total=%s\n",
                        crossdiff::format_double(entry.eps).c_str(),
                        crossdiff::format_double(entry.overlap).c_str(),
                        crossdiff::format_double(entry.l2_distance_to_first).c_str(),
                        crossdiff::format_double(entry.total_energy).c_str());
        }
    } else if (spec.mode == crossdiff::RunMode::evolve) {
        std::printf("evolve %s after %d steps, overlap=%s, total=%s, artifacts in %s\n",
                    out.converged ? "reached stationarity" : "hit the time horizon", out.iterations,
                    crossdiff::format_double(out.overlap).c_str(),
                    crossdiff::format_double(out.energy.total).c_str(), out_dir.c_str());
    } else {
        std::printf("minimize %s after %d iterations, overlap=%s, total=%s, artifacts in %s\n",
                    out.converged ? "converged" : "stopped", out.iterations,
                    crossdiff::format_double(out.overlap).c_str(),
                    crossdiff::format_double(out.energy.total).c_str(), out_dir.c_str());
    }
    return out.converged || spec.mode == crossdiff::RunMode::evolve ? 0 : 4;
}

int preset_command(const std::string& name) {
    const auto registry = crossdiff::preset_registry();
    if (name.empty()) {
        for (const auto& [key, config] : registry) {
            std::printf("%-22s %s\n", key.c_str(), config.value("label", "").c_str());
        }
        return 0;
    }
    const auto it = registry.find(name);
    if (it == registry.end()) {
        crossdiff::preset(name);  // throws with the available names
        return 1;
    }
    std::printf("%s\n", it->second.dump(2).c_str());
    return 0;
}

int check_command(const std::string& dir) {
    const auto results = crossdiff::check_artifacts(dir);
    int failures = 0;
    for (const crossdiff::CheckResult& result : results) {
        if (!result.passed) ++failures;
        std::printf("%s %s: %s\n", result.passed ? "PASS" : "FAIL", result.name.c_str(),
                    result.detail.c_str());
    }
    std::printf("%s checks=%zu failures=%d\n", failures == 0 ? "PASS" : "FAIL", results.size(),
                failures);
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-species nonlocal cross-diffusion: minimization, evolution, diagnostics"};
    app.require_subcommand(1);

    std::string source, out_dir = "out", preset_name, artifact_dir;

    CLI::App* run = app.add_subcommand("run", "execute a config file or preset");
    run->add_option("config", source, "config path or preset name")->required();
    run->add_option("-o,--out", out_dir, "artifact directory");

    CLI::App* preset = app.add_subcommand("preset", "list presets or print one as JSON");
    preset->add_option("name", preset_name, "preset name");

    CLI::App* check = app.add_subcommand("check", "re-verify invariants of stored artifacts");
    check->add_option("dir", artifact_dir, "artifact directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(source, out_dir);
        if (preset->parsed()) return preset_command(preset_name);
        return check_command(artifact_dir);
    } catch (const crossdiff::ConfigError& err) {
        std::fprintf(stderr, "error (config): %s\n", err.what());
        return 2;
    } catch (const crossdiff::MeshError& err) {
        std::fprintf(stderr, "error (mesh): %s\n", err.what());
        return 2;
    } catch (const crossdiff::FeasibilityError& err) {
        std::fprintf(stderr, "error (feasibility): %s\n", err.what());
        return 3;
    } catch (const crossdiff::SolveError& err) {
        std::fprintf(stderr, "error (solve): %s\n", err.what());
        return 3;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
}
