// experiment.hpp — Experiment configs, run manifests, and the command-line runner

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsl/dynamics.hpp"
#include "qsl/krotov.hpp"
#include "qsl/model.hpp"
#include "qsl/protocols.hpp"
#include "qsl/scan.hpp"

namespace qsl {

inline constexpr const char* artifact_version = "1.0.0";

// Bisection bracket for one scan. Absolute times by default; with
// relative = true the three time fields are fractions of the process's
// sudden-switch time.
struct ScanRequest {
    double t_low = 0.0;
    double t_high = 0.0;
    double resolution = 0.0;
    int pre_grid_points = 0;
    std::optional<double> dt_target;
    bool relative = false;
};

enum class SweepAxis { spacing, gap_b, levels };

// Column/config token for the axis: "eps0", "delta_b", or "n".
std::string sweep_axis_name(SweepAxis axis);

// One scan per swept value. The bracket fields are always fractions of each
// point's own sudden-switch time, since the natural time scale moves with
// the swept quantity.
struct SweepRequest {
    SweepAxis axis = SweepAxis::spacing;
    std::vector<double> values;
    ScanRequest bracket;
};

// Eigenenergy curves E_k(lambda) over an interval.
struct SpectrumRequest {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    int n_points = 0;
};

struct AnalysisRequest {
    int baseline_window = 0;  // 0: derive from the level spacing and the grid
};

struct ExperimentConfig {
    SystemSpec system;
    std::optional<ProcessSpec> process;
    std::optional<TimeGrid> grid;
    GuessConfig guess;  // smoothing_width 0: derive as 0.02 * sudden-switch time
    KrotovConfig krotov;
    VerdictConfig verdict;
    std::optional<ScanRequest> scan;
    std::optional<SweepRequest> sweep;
    std::optional<SpectrumRequest> spectrum;
    AnalysisRequest analysis;
    std::optional<std::string> input_field;  // field CSV consumed by a command
    std::string output_dir = ".";
};

// Strict parse: unknown keys, type mismatches, and a config holding both a
// scan and a sweep are errors. A run manifest is accepted anywhere a config
// is: its embedded config is extracted, which is what makes re-running from
// a manifest a one-flag operation.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);

// Canonical form: every default materialized, keys sorted. Embedding this in
// manifests makes config -> run -> manifest -> re-run a fixed point.
nlohmann::json experiment_config_json(const ExperimentConfig& cfg);

ExperimentConfig load_experiment_config(const std::string& path);

struct CliOptions {
    int workers = 0;  // 0: one per hardware thread
    bool verbose = false;
};

// Each command writes its result files plus manifest.json into
// cfg.output_dir and returns the manifest document. One experiment per
// output directory keeps every output referenced by exactly one manifest.
nlohmann::json cmd_spectrum(const ExperimentConfig& cfg, const CliOptions& opts);
nlohmann::json cmd_propagate(const ExperimentConfig& cfg, const CliOptions& opts);
nlohmann::json cmd_optimize(const ExperimentConfig& cfg, const CliOptions& opts);
nlohmann::json cmd_qsl_scan(const ExperimentConfig& cfg, const CliOptions& opts);
nlohmann::json cmd_sweep(const ExperimentConfig& cfg, SweepAxis axis, const CliOptions& opts);
nlohmann::json cmd_analyze_field(const ExperimentConfig& cfg, const CliOptions& opts);

// argv-level entry point: parses flags, dispatches the subcommand, prints
// the manifest path on success. On failure prints one machine-readable JSON
// line to stderr and returns nonzero.
int run_cli(int argc, const char* const* argv);

}  // namespace qsl
