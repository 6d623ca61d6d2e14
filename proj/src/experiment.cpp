// experiment.cpp — Config parsing, experiment orchestration, and the CLI

#include "qsl/experiment.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qsl/analysis.hpp"
#include "qsl/serialize.hpp"

namespace qsl {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- parsing

void reject_unknown_keys(const json& obj, const std::string& context,
                         std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        const std::string& key = item.key();
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&key](const char* a) { return key == a; });
        if (!known) {
            throw std::invalid_argument("unknown key '" + key + "' in " + context);
        }
    }
}

const json& require_object(const json& doc, const std::string& context) {
    if (!doc.is_object()) {
        throw std::invalid_argument(context + " must be a JSON object");
    }
    return doc;
}

const json& member(const json& obj, const char* key, const std::string& context) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw std::invalid_argument(context + "." + key + " is required");
    }
    return *it;
}

double as_double(const json& v, const std::string& name) {
    if (!v.is_number()) {
        throw std::invalid_argument(name + " must be a number");
    }
    return v.get<double>();
}

int as_int(const json& v, const std::string& name) {
    if (!v.is_number_integer()) {
        throw std::invalid_argument(name + " must be an integer");
    }
    return v.get<int>();
}

bool as_bool(const json& v, const std::string& name) {
    if (!v.is_boolean()) {
        throw std::invalid_argument(name + " must be a boolean");
    }
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& name) {
    if (!v.is_string()) {
        throw std::invalid_argument(name + " must be a string");
    }
    return v.get<std::string>();
}

double member_double(const json& obj, const char* key, const std::string& context) {
    return as_double(member(obj, key, context), context + "." + key);
}

int member_int(const json& obj, const char* key, const std::string& context) {
    return as_int(member(obj, key, context), context + "." + key);
}

double opt_double(const json& obj, const char* key, const std::string& context, double fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : as_double(*it, context + "." + std::string(key));
}

int opt_int(const json& obj, const char* key, const std::string& context, int fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : as_int(*it, context + "." + std::string(key));
}

bool opt_bool(const json& obj, const char* key, const std::string& context, bool fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : as_bool(*it, context + "." + std::string(key));
}

SystemSpec parse_system(const json& obj) {
    require_object(obj, "system");
    reject_unknown_keys(obj, "system", {"n_levels", "gaps", "spacing"});
    SystemSpec spec;
    spec.n_levels = member_int(obj, "n_levels", "system");
    spec.spacing = member_double(obj, "spacing", "system");
    const json& gaps = member(obj, "gaps", "system");
    if (gaps.is_number()) {
        spec.gaps.assign(std::max(spec.n_levels - 1, 0), gaps.get<double>());
    } else if (gaps.is_array()) {
        for (std::size_t i = 0; i < gaps.size(); ++i) {
            spec.gaps.push_back(as_double(gaps[i], "system.gaps[" + std::to_string(i) + "]"));
        }
    } else {
        throw std::invalid_argument("system.gaps must be a number or an array of numbers");
    }
    spec.validate();
    return spec;
}

ProcessSpec parse_process(const json& obj) {
    require_object(obj, "process");
    reject_unknown_keys(obj, "process", {"initial_index", "goal_index"});
    ProcessSpec process;
    process.initial_index = member_int(obj, "initial_index", "process");
    process.goal_index = member_int(obj, "goal_index", "process");
    return process;
}

TimeGrid parse_grid(const json& obj) {
    require_object(obj, "grid");
    reject_unknown_keys(obj, "grid", {"duration", "n_steps"});
    TimeGrid grid{member_double(obj, "duration", "grid"), member_int(obj, "n_steps", "grid")};
    grid.validate();
    return grid;
}

GuessConfig parse_guess(const json& obj) {
    require_object(obj, "guess");
    reject_unknown_keys(obj, "guess", {"smoothing_width", "linear_slope_fraction"});
    GuessConfig guess;
    guess.smoothing_width = opt_double(obj, "smoothing_width", "guess", 0.0);
    guess.linear_slope_fraction = opt_double(obj, "linear_slope_fraction", "guess", 0.05);
    if (!(guess.smoothing_width >= 0.0)) {
        throw std::invalid_argument("guess.smoothing_width must be nonnegative (0 derives it)");
    }
    return guess;
}

KrotovConfig parse_krotov(const json& obj) {
    require_object(obj, "krotov");
    reject_unknown_keys(obj, "krotov", {"step_weight", "shape", "max_iterations",
                                        "target_infidelity", "max_step_backoffs"});
    KrotovConfig cfg;
    if (auto it = obj.find("step_weight"); it != obj.end() && !it->is_null()) {
        cfg.step_weight = as_double(*it, "krotov.step_weight");
    }
    if (auto it = obj.find("shape"); it != obj.end()) {
        require_object(*it, "krotov.shape");
        reject_unknown_keys(*it, "krotov.shape", {"kind", "edge_fraction"});
        if (auto kind = it->find("kind"); kind != it->end()) {
            const std::string name = as_string(*kind, "krotov.shape.kind");
            if (name == "flat") {
                cfg.shape.kind = ShapeKind::flat;
            } else if (name == "ramped") {
                cfg.shape.kind = ShapeKind::ramped;
            } else {
                throw std::invalid_argument("krotov.shape.kind must be 'flat' or 'ramped'");
            }
        }
        cfg.shape.edge_fraction =
            opt_double(*it, "edge_fraction", "krotov.shape", cfg.shape.edge_fraction);
    }
    cfg.max_iterations = opt_int(obj, "max_iterations", "krotov", cfg.max_iterations);
    cfg.target_infidelity = opt_double(obj, "target_infidelity", "krotov", cfg.target_infidelity);
    cfg.max_step_backoffs = opt_int(obj, "max_step_backoffs", "krotov", cfg.max_step_backoffs);
    cfg.validate();
    return cfg;
}

VerdictConfig parse_verdict(const json& obj) {
    require_object(obj, "verdict");
    reject_unknown_keys(obj, "verdict", {"tail_fraction", "smoothing_window",
                                         "curvature_tolerance", "success_infidelity"});
    VerdictConfig cfg;
    cfg.tail_fraction = opt_double(obj, "tail_fraction", "verdict", cfg.tail_fraction);
    cfg.smoothing_window = opt_int(obj, "smoothing_window", "verdict", cfg.smoothing_window);
    cfg.curvature_tolerance =
        opt_double(obj, "curvature_tolerance", "verdict", cfg.curvature_tolerance);
    cfg.success_infidelity =
        opt_double(obj, "success_infidelity", "verdict", cfg.success_infidelity);
    cfg.validate();
    return cfg;
}

void validate_bracket(const ScanRequest& request, const std::string& context) {
    if (!(std::isfinite(request.t_low) && request.t_low > 0.0) ||
        !(std::isfinite(request.t_high) && request.t_high > request.t_low)) {
        throw std::invalid_argument(context + ": need 0 < t_low < t_high");
    }
    if (!(std::isfinite(request.resolution) && request.resolution > 0.0)) {
        throw std::invalid_argument(context + ".resolution must be positive");
    }
    if (request.pre_grid_points < 0) {
        throw std::invalid_argument(context + ".pre_grid_points must be nonnegative");
    }
    if (request.dt_target && !(*request.dt_target > 0.0)) {
        throw std::invalid_argument(context + ".dt_target must be positive");
    }
}

ScanRequest parse_bracket(const json& obj, const std::string& context, bool relative_fixed) {
    ScanRequest request;
    request.t_low = member_double(obj, "t_low", context);
    request.t_high = member_double(obj, "t_high", context);
    request.resolution = member_double(obj, "resolution", context);
    request.pre_grid_points = opt_int(obj, "pre_grid_points", context, 0);
    if (auto it = obj.find("dt_target"); it != obj.end() && !it->is_null()) {
        request.dt_target = as_double(*it, context + ".dt_target");
    }
    request.relative = relative_fixed || opt_bool(obj, "relative", context, false);
    validate_bracket(request, context);
    return request;
}

ScanRequest parse_scan(const json& obj) {
    require_object(obj, "scan");
    reject_unknown_keys(obj, "scan", {"t_low", "t_high", "resolution", "pre_grid_points",
                                      "dt_target", "relative"});
    return parse_bracket(obj, "scan", false);
}

SweepAxis parse_axis(const std::string& token) {
    if (token == "eps0") {
        return SweepAxis::spacing;
    }
    if (token == "delta_b") {
        return SweepAxis::gap_b;
    }
    if (token == "n") {
        return SweepAxis::levels;
    }
    throw std::invalid_argument("sweep.axis must be 'eps0', 'delta_b', or 'n'");
}

SweepRequest parse_sweep(const json& obj) {
    require_object(obj, "sweep");
    reject_unknown_keys(obj, "sweep", {"axis", "values", "t_low", "t_high", "resolution",
                                       "pre_grid_points", "dt_target"});
    SweepRequest sweep;
    sweep.axis = parse_axis(as_string(member(obj, "axis", "sweep"), "sweep.axis"));
    const json& values = member(obj, "values", "sweep");
    if (!values.is_array() || values.empty()) {
        throw std::invalid_argument("sweep.values must be a non-empty array");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        sweep.values.push_back(as_double(values[i], "sweep.values[" + std::to_string(i) + "]"));
    }
    sweep.bracket = parse_bracket(obj, "sweep", true);
    return sweep;
}

SpectrumRequest parse_spectrum(const json& obj) {
    require_object(obj, "spectrum");
    reject_unknown_keys(obj, "spectrum", {"lambda_min", "lambda_max", "n_points"});
    SpectrumRequest req;
    req.lambda_min = member_double(obj, "lambda_min", "spectrum");
    req.lambda_max = member_double(obj, "lambda_max", "spectrum");
    req.n_points = member_int(obj, "n_points", "spectrum");
    if (!(req.lambda_min < req.lambda_max)) {
        throw std::invalid_argument("spectrum: need lambda_min < lambda_max");
    }
    if (req.n_points < 2) {
        throw std::invalid_argument("spectrum.n_points must be at least 2");
    }
    return req;
}

AnalysisRequest parse_analysis(const json& obj) {
    require_object(obj, "analysis");
    reject_unknown_keys(obj, "analysis", {"baseline_window"});
    AnalysisRequest req;
    req.baseline_window = opt_int(obj, "baseline_window", "analysis", 0);
    if (req.baseline_window != 0 &&
        (req.baseline_window < 3 || req.baseline_window % 2 == 0)) {
        throw std::invalid_argument(
            "analysis.baseline_window must be 0 (auto) or odd and at least 3");
    }
    return req;
}

// --------------------------------------------------------------- canonical

json bracket_json(const ScanRequest& request) {
    json obj;
    obj["t_low"] = request.t_low;
    obj["t_high"] = request.t_high;
    obj["resolution"] = request.resolution;
    obj["pre_grid_points"] = request.pre_grid_points;
    obj["dt_target"] = request.dt_target ? json(*request.dt_target) : json(nullptr);
    return obj;
}

std::string shape_kind_name(ShapeKind kind) {
    return kind == ShapeKind::flat ? "flat" : "ramped";
}

std::string termination_name(Termination t) {
    return t == Termination::target_reached ? "target_reached" : "iteration_cap";
}

std::string verdict_name(Verdict v) {
    return v == Verdict::converging ? "converging" : "stalled";
}

// ------------------------------------------------------------ run support

std::string iso_utc_now() {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Collects the relative names of the files a command writes, so the manifest
// can list exactly what the run produced.
class OutputDir {
  public:
    explicit OutputDir(const std::string& dir) : dir_(dir) {
        std::filesystem::create_directories(dir);
    }
    std::string file(const std::string& name) {
        names_.push_back(name);
        return dir_ + "/" + name;
    }
    const std::string& dir() const { return dir_; }
    const std::vector<std::string>& names() const { return names_; }

  private:
    std::string dir_;
    std::vector<std::string> names_;
};

json finish_manifest(const char* command, const ExperimentConfig& cfg, const OutputDir& out,
                     const json& results, double seconds) {
    json manifest;
    manifest["tool"] = "qslrun";
    manifest["version"] = artifact_version;
    manifest["command"] = command;
    manifest["created_utc"] = iso_utc_now();
    manifest["duration_seconds"] = seconds;
    manifest["outputs"] = out.names();
    manifest["results"] = results;
    manifest["config"] = experiment_config_json(cfg);
    write_json_file(out.dir() + "/manifest.json", manifest);
    return manifest;
}

double sudden_time(const SystemSpec& spec, const ProcessSpec& process) {
    return sudden_switch(spec, process).total_time;
}

GuessConfig effective_guess(const GuessConfig& guess, double t_sudden) {
    GuessConfig result = guess;
    if (result.smoothing_width == 0.0) {
        result.smoothing_width = 0.02 * t_sudden;
    }
    return result;
}

ScanConfig resolve_scan(const ScanRequest& request, double t_sudden) {
    const double unit = request.relative ? t_sudden : 1.0;
    ScanConfig scan;
    scan.t_low = request.t_low * unit;
    scan.t_high = request.t_high * unit;
    scan.resolution = request.resolution * unit;
    scan.pre_grid_points = request.pre_grid_points;
    scan.dt_target = request.dt_target;
    scan.validate();
    return scan;
}

const ProcessSpec& require_process(const ExperimentConfig& cfg, const char* command) {
    if (!cfg.process) {
        throw std::invalid_argument(std::string(command) + " requires a process block");
    }
    return *cfg.process;
}

void write_populations_csv(const std::string& path, const Trajectory& traj) {
    const Eigen::MatrixXd p = populations(traj);
    const double dt = traj.grid.dt();
    std::vector<std::string> header{"t"};
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
        header.push_back("P_" + std::to_string(k));
    }
    std::vector<std::vector<std::string>> rows;
    rows.reserve(p.rows());
    for (Eigen::Index j = 0; j < p.rows(); ++j) {
        std::vector<double> row{j * dt};
        for (Eigen::Index k = 0; k < p.cols(); ++k) {
            row.push_back(p(j, k));
        }
        rows.push_back(numeric_row(row));
    }
    write_csv(path, header, rows);
}

json record_json(const KrotovRecord& record) {
    json obj;
    obj["final_infidelity"] = record.final_infidelity();
    obj["min_infidelity"] = record.min_infidelity();
    obj["iterations_run"] = record.iterations_run;
    obj["terminated_by"] = termination_name(record.terminated_by);
    obj["step_weight_used"] = record.step_weight_used;
    obj["infidelity_history"] = record.infidelity_history;
    return obj;
}

}  // namespace

// ----------------------------------------------------------------- config

std::string sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::spacing:
            return "eps0";
        case SweepAxis::gap_b:
            return "delta_b";
        case SweepAxis::levels:
            return "n";
    }
    throw std::logic_error("unreachable sweep axis");
}

ExperimentConfig parse_experiment_config(const json& doc) {
    require_object(doc, "config");
    if (doc.contains("tool") && doc.contains("config")) {
        // A run manifest: re-run from its embedded config.
        return parse_experiment_config(doc.at("config"));
    }
    reject_unknown_keys(doc, "config",
                        {"system", "process", "grid", "guess", "krotov", "verdict", "scan",
                         "sweep", "spectrum", "analysis", "input_field", "output_dir"});

    ExperimentConfig cfg;
    cfg.system = parse_system(member(doc, "system", "config"));
    if (auto it = doc.find("process"); it != doc.end()) {
        cfg.process = parse_process(*it);
        cfg.process->validate(cfg.system.n_levels);
    }
    if (auto it = doc.find("grid"); it != doc.end()) {
        cfg.grid = parse_grid(*it);
    }
    if (auto it = doc.find("guess"); it != doc.end()) {
        cfg.guess = parse_guess(*it);
    }
    if (auto it = doc.find("krotov"); it != doc.end()) {
        cfg.krotov = parse_krotov(*it);
    }
    if (auto it = doc.find("verdict"); it != doc.end()) {
        cfg.verdict = parse_verdict(*it);
    }
    if (auto it = doc.find("scan"); it != doc.end()) {
        cfg.scan = parse_scan(*it);
    }
    if (auto it = doc.find("sweep"); it != doc.end()) {
        cfg.sweep = parse_sweep(*it);
    }
    if (cfg.scan && cfg.sweep) {
        throw std::invalid_argument("config must hold exactly one of scan and sweep, not both");
    }
    if (auto it = doc.find("spectrum"); it != doc.end()) {
        cfg.spectrum = parse_spectrum(*it);
    }
    if (auto it = doc.find("analysis"); it != doc.end()) {
        cfg.analysis = parse_analysis(*it);
    }
    if (auto it = doc.find("input_field"); it != doc.end() && !it->is_null()) {
        cfg.input_field = as_string(*it, "config.input_field");
    }
    if (auto it = doc.find("output_dir"); it != doc.end()) {
        cfg.output_dir = as_string(*it, "config.output_dir");
        if (cfg.output_dir.empty()) {
            throw std::invalid_argument("config.output_dir must not be empty");
        }
    }
    return cfg;
}

json experiment_config_json(const ExperimentConfig& cfg) {
    json doc;
    doc["system"] = {{"n_levels", cfg.system.n_levels},
                     {"gaps", cfg.system.gaps},
                     {"spacing", cfg.system.spacing}};
    if (cfg.process) {
        doc["process"] = {{"initial_index", cfg.process->initial_index},
                          {"goal_index", cfg.process->goal_index}};
    }
    if (cfg.grid) {
        doc["grid"] = {{"duration", cfg.grid->duration}, {"n_steps", cfg.grid->n_steps}};
    }
    doc["guess"] = {{"smoothing_width", cfg.guess.smoothing_width},
                    {"linear_slope_fraction", cfg.guess.linear_slope_fraction}};
    doc["krotov"] = {
        {"step_weight", cfg.krotov.step_weight ? json(*cfg.krotov.step_weight) : json(nullptr)},
        {"shape",
         {{"kind", shape_kind_name(cfg.krotov.shape.kind)},
          {"edge_fraction", cfg.krotov.shape.edge_fraction}}},
        {"max_iterations", cfg.krotov.max_iterations},
        {"target_infidelity", cfg.krotov.target_infidelity},
        {"max_step_backoffs", cfg.krotov.max_step_backoffs}};
    doc["verdict"] = {{"tail_fraction", cfg.verdict.tail_fraction},
                      {"smoothing_window", cfg.verdict.smoothing_window},
                      {"curvature_tolerance", cfg.verdict.curvature_tolerance},
                      {"success_infidelity", cfg.verdict.success_infidelity}};
    if (cfg.scan) {
        doc["scan"] = bracket_json(*cfg.scan);
        doc["scan"]["relative"] = cfg.scan->relative;
    }
    if (cfg.sweep) {
        doc["sweep"] = bracket_json(cfg.sweep->bracket);
        doc["sweep"]["axis"] = sweep_axis_name(cfg.sweep->axis);
        doc["sweep"]["values"] = cfg.sweep->values;
    }
    if (cfg.spectrum) {
        doc["spectrum"] = {{"lambda_min", cfg.spectrum->lambda_min},
                           {"lambda_max", cfg.spectrum->lambda_max},
                           {"n_points", cfg.spectrum->n_points}};
    }
    doc["analysis"] = {{"baseline_window", cfg.analysis.baseline_window}};
    if (cfg.input_field) {
        doc["input_field"] = *cfg.input_field;
    }
    doc["output_dir"] = cfg.output_dir;
    return doc;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_json_file(path));
}

// --------------------------------------------------------------- commands

json cmd_spectrum(const ExperimentConfig& cfg, const CliOptions&) {
    if (!cfg.spectrum) {
        throw std::invalid_argument("spectrum requires a spectrum block");
    }
    const SpectrumRequest& req = *cfg.spectrum;
    Stopwatch watch;
    OutputDir out(cfg.output_dir);

    std::vector<std::string> header{"lambda"};
    for (int k = 0; k < cfg.system.n_levels; ++k) {
        header.push_back("E_" + std::to_string(k));
    }
    std::vector<std::vector<std::string>> rows;
    rows.reserve(req.n_points);
    for (int i = 0; i < req.n_points; ++i) {
        const double lambda_value =
            req.lambda_min + i * (req.lambda_max - req.lambda_min) / (req.n_points - 1);
        std::vector<double> row{lambda_value};
        for (double energy : eigen_spectrum(cfg.system, lambda_value)) {
            row.push_back(energy);
        }
        rows.push_back(numeric_row(row));
    }
    write_csv(out.file("spectrum.csv"), header, rows);

    json results{{"n_points", req.n_points}, {"n_levels", cfg.system.n_levels}};
    return finish_manifest("spectrum", cfg, out, results, watch.seconds());
}

json cmd_propagate(const ExperimentConfig& cfg, const CliOptions&) {
    const ProcessSpec& process = require_process(cfg, "propagate");
    Stopwatch watch;
    OutputDir out(cfg.output_dir);

    ControlField field;
    if (cfg.input_field) {
        field = read_field_csv(*cfg.input_field);
    } else {
        const double t_s = sudden_time(cfg.system, process);
        const TimeGrid grid = cfg.grid ? *cfg.grid : scan_grid(cfg.system, t_s, std::nullopt);
        field = sudden_switch(cfg.system, process, grid).first;
    }

    const QuantumState initial = basis_state(cfg.system.n_levels, process.initial_index);
    const QuantumState goal = basis_state(cfg.system.n_levels, process.goal_index);
    const Trajectory traj = propagate(cfg.system, field, initial);

    double norm_error = 0.0;
    for (const QuantumState& state : traj.states) {
        norm_error = std::max(norm_error, std::abs(state.norm() - 1.0));
    }

    write_field_csv(out.file("propagated_field.csv"), field);
    write_populations_csv(out.file("populations.csv"), traj);
    json results{{"duration", field.grid.duration},
                 {"n_steps", field.grid.n_steps},
                 {"final_infidelity", infidelity(traj.states.back(), goal)},
                 {"max_norm_error", norm_error}};
    write_json_file(out.file("propagate_summary.json"), results);

    return finish_manifest("propagate", cfg, out, results, watch.seconds());
}

json cmd_optimize(const ExperimentConfig& cfg, const CliOptions&) {
    const ProcessSpec& process = require_process(cfg, "optimize");
    if (!cfg.grid) {
        throw std::invalid_argument("optimize requires a grid block");
    }
    Stopwatch watch;
    OutputDir out(cfg.output_dir);

    const double t_s = sudden_time(cfg.system, process);
    const GuessConfig guess_cfg = effective_guess(cfg.guess, t_s);
    const ControlField guess = initial_guess(cfg.system, process, *cfg.grid, guess_cfg);
    const KrotovRecord record = optimize(cfg.system, process, *cfg.grid, guess, cfg.krotov);

    const QuantumState initial = basis_state(cfg.system.n_levels, process.initial_index);
    const Trajectory traj = propagate(cfg.system, record.final_field, initial);

    write_field_csv(out.file("guess_field.csv"), guess);
    write_field_csv(out.file("optimized_field.csv"), record.final_field);
    write_populations_csv(out.file("populations.csv"), traj);

    json record_doc = record_json(record);
    record_doc["t_sudden"] = t_s;
    record_doc["duration"] = cfg.grid->duration;
    record_doc["duration_over_t_sudden"] = cfg.grid->duration / t_s;
    write_json_file(out.file("optimize_record.json"), record_doc);

    json results{{"final_infidelity", record.final_infidelity()},
                 {"iterations_run", record.iterations_run},
                 {"terminated_by", termination_name(record.terminated_by)}};
    return finish_manifest("optimize", cfg, out, results, watch.seconds());
}

json cmd_qsl_scan(const ExperimentConfig& cfg, const CliOptions&) {
    const ProcessSpec& process = require_process(cfg, "qsl-scan");
    if (!cfg.scan) {
        throw std::invalid_argument("qsl-scan requires a scan block");
    }
    Stopwatch watch;
    OutputDir out(cfg.output_dir);

    const double t_s = sudden_time(cfg.system, process);
    const ScanConfig scan = resolve_scan(*cfg.scan, t_s);
    const GuessConfig guess_cfg = effective_guess(cfg.guess, t_s);
    const QslScanResult result =
        qsl_scan(cfg.system, process, scan, cfg.krotov, cfg.verdict, guess_cfg);

    std::vector<std::vector<std::string>> rows;
    rows.reserve(result.probes.size());
    for (const ProbeResult& probe : result.probes) {
        rows.push_back({format_double(probe.time), verdict_name(probe.verdict),
                        format_double(probe.min_infidelity), std::to_string(probe.iterations_run),
                        std::to_string(probe.n_steps)});
    }
    write_csv(out.file("scan_probes.csv"),
              {"T", "verdict", "min_infidelity", "iterations", "n_steps"}, rows);
    write_field_csv(out.file("qsl_field.csv"), result.nearest_converging.final_field);

    json summary{{"t_qsl", result.t_qsl},
                 {"half_width", result.resolution},
                 {"t_sudden", t_s},
                 {"ratio", result.t_qsl / t_s},
                 {"nearest_converging_time", result.nearest_converging_time},
                 {"nearest_converging_infidelity", result.nearest_converging.min_infidelity()},
                 {"probes", static_cast<int>(result.probes.size())}};
    write_json_file(out.file("scan_result.json"), summary);

    return finish_manifest("qsl-scan", cfg, out, summary, watch.seconds());
}

namespace {

struct PointSetup {
    SystemSpec spec;
    ProcessSpec process;
};

PointSetup make_point(const ExperimentConfig& cfg, SweepAxis axis, double value) {
    switch (axis) {
        case SweepAxis::spacing: {
            PointSetup point{cfg.system, require_process(cfg, "sweep-eps0")};
            point.spec.spacing = value;
            point.spec.validate();
            return point;
        }
        case SweepAxis::gap_b: {
            if (cfg.system.n_levels != 3) {
                throw std::invalid_argument("sweep-gap requires a 3-level system");
            }
            PointSetup point{cfg.system, require_process(cfg, "sweep-gap")};
            point.spec.gaps[1] = value;
            point.spec.validate();
            return point;
        }
        case SweepAxis::levels: {
            if (cfg.process) {
                throw std::invalid_argument(
                    "sweep-n derives the process from N; omit the process block");
            }
            for (double gap : cfg.system.gaps) {
                if (gap != cfg.system.gaps.front()) {
                    throw std::invalid_argument("sweep-n requires uniform gaps");
                }
            }
            if (!(value >= 2.0) || value != std::floor(value)) {
                throw std::invalid_argument("sweep-n values must be integers of at least 2");
            }
            const int n = static_cast<int>(value);
            PointSetup point;
            point.spec.n_levels = n;
            point.spec.gaps.assign(n - 1, cfg.system.gaps.front());
            point.spec.spacing = cfg.system.spacing;
            point.spec.validate();
            point.process = ProcessSpec{0, n - 1};
            return point;
        }
    }
    throw std::logic_error("unreachable sweep axis");
}

struct PointOutcome {
    double value = 0.0;
    bool failed = false;
    std::string error;
    double t_qsl = std::numeric_limits<double>::quiet_NaN();
    double half_width = std::numeric_limits<double>::quiet_NaN();
    double t_sudden = std::numeric_limits<double>::quiet_NaN();
    double ratio = std::numeric_limits<double>::quiet_NaN();
    double best_infidelity = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;
};

}  // namespace

json cmd_sweep(const ExperimentConfig& cfg, SweepAxis axis, const CliOptions& opts) {
    if (!cfg.sweep) {
        throw std::invalid_argument("sweep commands require a sweep block");
    }
    const SweepRequest& sweep = *cfg.sweep;
    if (sweep.axis != axis) {
        throw std::invalid_argument("config sweep axis '" + sweep_axis_name(sweep.axis) +
                                    "' does not match the sweep-" +
                                    (axis == SweepAxis::spacing
                                         ? "eps0"
                                         : axis == SweepAxis::gap_b ? "gap" : "n") +
                                    " command");
    }
    Stopwatch watch;
    OutputDir out(cfg.output_dir);

    std::vector<PointOutcome> outcomes(sweep.values.size());
    std::atomic<std::size_t> cursor{0};
    std::mutex log_mutex;

    auto run_points = [&]() {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= sweep.values.size()) {
                return;
            }
            PointOutcome& slot = outcomes[i];
            slot.value = sweep.values[i];
            Stopwatch point_watch;
            try {
                const PointSetup point = make_point(cfg, axis, slot.value);
                const double t_s = sudden_time(point.spec, point.process);
                const ScanConfig scan = resolve_scan(sweep.bracket, t_s);
                const GuessConfig guess_cfg = effective_guess(cfg.guess, t_s);
                const QslScanResult result =
                    qsl_scan(point.spec, point.process, scan, cfg.krotov, cfg.verdict, guess_cfg);
                slot.t_qsl = result.t_qsl;
                slot.half_width = result.resolution;
                slot.t_sudden = t_s;
                slot.ratio = result.t_qsl / t_s;
                slot.best_infidelity = result.nearest_converging.min_infidelity();
            } catch (const std::exception& e) {
                slot.failed = true;
                slot.error = e.what();
            }
            slot.seconds = point_watch.seconds();
            if (opts.verbose) {
                std::lock_guard<std::mutex> lock(log_mutex);
                if (slot.failed) {
                    std::fprintf(stderr, "%s=%g failed: %s\n", sweep_axis_name(axis).c_str(),
                                 slot.value, slot.error.c_str());
                } else {
                    std::fprintf(stderr, "%s=%g t_qsl=%.6g ratio=%.4f (%.1fs)\n",
                                 sweep_axis_name(axis).c_str(), slot.value, slot.t_qsl,
                                 slot.ratio, slot.seconds);
                }
            }
        }
    };

    int workers = opts.workers > 0
                      ? opts.workers
                      : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min<int>(workers, static_cast<int>(sweep.values.size()));
    if (workers <= 1) {
        run_points();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(run_points);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }

    // Row order is by sweep value, independent of completion order.
    std::vector<std::size_t> order(outcomes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&outcomes](std::size_t a, std::size_t b) {
        return outcomes[a].value < outcomes[b].value;
    });

    std::vector<std::vector<std::string>> rows;
    rows.reserve(outcomes.size());
    json errors = json::object();
    json durations = json::object();
    int failed = 0;
    for (std::size_t i : order) {
        const PointOutcome& o = outcomes[i];
        std::vector<std::string> row = numeric_row(
            {o.value, o.t_qsl, o.half_width, o.t_sudden, o.ratio, o.best_infidelity});
        row.push_back(o.failed ? "failed" : "ok");
        rows.push_back(std::move(row));
        durations[format_double(o.value)] = o.seconds;
        if (o.failed) {
            ++failed;
            errors[format_double(o.value)] = o.error;
        }
    }
    write_csv(out.file("sweep_results.csv"),
              {sweep_axis_name(axis), "t_qsl", "half_width", "t_sudden", "ratio",
               "best_infidelity", "status"},
              rows);

    json results{{"points", static_cast<int>(outcomes.size())},
                 {"failed", failed},
                 {"errors", errors},
                 {"point_durations_seconds", durations}};
    const std::string command = "sweep-" + std::string(axis == SweepAxis::spacing
                                                           ? "eps0"
                                                           : axis == SweepAxis::gap_b ? "gap"
                                                                                      : "n");
    return finish_manifest(command.c_str(), cfg, out, results, watch.seconds());
}

json cmd_analyze_field(const ExperimentConfig& cfg, const CliOptions&) {
    if (!cfg.input_field) {
        throw std::invalid_argument("analyze-field requires --field or config input_field");
    }
    Stopwatch watch;
    OutputDir out(cfg.output_dir);

    const ControlField field = read_field_csv(*cfg.input_field);
    const int window =
        cfg.analysis.baseline_window > 0
            ? cfg.analysis.baseline_window
            : default_baseline_window(cfg.system.spacing, field.grid.dt(), field.grid.n_steps);
    const ControlField baseline = extract_baseline(field, window);
    const FieldSpectrum spectrum = field_spectrum(field, window);

    std::vector<std::vector<std::string>> rows;
    rows.reserve(spectrum.frequencies.size());
    for (std::size_t k = 0; k < spectrum.frequencies.size(); ++k) {
        rows.push_back(numeric_row({spectrum.frequencies[k], spectrum.amplitudes[k]}));
    }
    write_csv(out.file("field_spectrum.csv"), {"frequency", "amplitude"}, rows);
    write_field_csv(out.file("baseline.csv"), baseline);

    json summary{{"dominant_frequency", spectrum.dominant_frequency
                                            ? json(*spectrum.dominant_frequency)
                                            : json(nullptr)},
                 {"max_amplitude", spectrum.max_amplitude},
                 {"baseline_window", window},
                 {"n_samples", field.grid.n_steps},
                 {"dt", field.grid.dt()}};
    write_json_file(out.file("analysis_summary.json"), summary);

    return finish_manifest("analyze-field", cfg, out, summary, watch.seconds());
}

// -------------------------------------------------------------------- CLI

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Optimal-control determination of quantum-speed-limit times for "
                 "avoided-crossing ladders"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string field_path;
    CliOptions opts;

    app.add_option("--config", config_path, "Experiment config or run manifest (JSON)");
    app.add_option("--out", out_dir, "Output directory, overrides config output_dir");
    app.add_option("--workers", opts.workers, "Concurrent sweep workers (0: hardware threads)");
    app.add_flag("--verbose", opts.verbose, "Per-point progress on stderr");
    app.add_option("--field", field_path, "Field CSV for propagate/analyze-field");

    app.add_subcommand("spectrum", "Eigenenergy curves over a control range")->fallthrough();
    app.add_subcommand("propagate", "Evolve a field and record populations")->fallthrough();
    app.add_subcommand("optimize", "Single fixed-duration field optimization")->fallthrough();
    app.add_subcommand("qsl-scan", "Bisect the shortest controllable duration")->fallthrough();
    app.add_subcommand("sweep-eps0", "QSL scan per crossing separation")->fallthrough();
    app.add_subcommand("sweep-gap", "QSL scan per second-crossing gap")->fallthrough();
    app.add_subcommand("sweep-n", "QSL scan per ladder size")->fallthrough();
    app.add_subcommand("analyze-field", "Baseline and residual spectrum of a field")
        ->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help and friends
        }
        const json error{{"error", std::string(e.what())}};
        std::fprintf(stderr, "%s\n", error.dump().c_str());
        return e.get_exit_code();
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (config_path.empty()) {
            throw std::invalid_argument("--config is required");
        }
        ExperimentConfig cfg = load_experiment_config(config_path);
        if (!out_dir.empty()) {
            cfg.output_dir = out_dir;
        }
        if (!field_path.empty()) {
            cfg.input_field = field_path;
        }

        if (command == "spectrum") {
            cmd_spectrum(cfg, opts);
        } else if (command == "propagate") {
            cmd_propagate(cfg, opts);
        } else if (command == "optimize") {
            cmd_optimize(cfg, opts);
        } else if (command == "qsl-scan") {
            cmd_qsl_scan(cfg, opts);
        } else if (command == "sweep-eps0") {
            cmd_sweep(cfg, SweepAxis::spacing, opts);
        } else if (command == "sweep-gap") {
            cmd_sweep(cfg, SweepAxis::gap_b, opts);
        } else if (command == "sweep-n") {
            cmd_sweep(cfg, SweepAxis::levels, opts);
        } else {
            cmd_analyze_field(cfg, opts);
        }
        std::printf("%s/manifest.json\n", cfg.output_dir.c_str());
        return 0;
    } catch (const std::exception& e) {
        const json error{{"error", std::string(e.what())}, {"command", command}};
        std::fprintf(stderr, "%s\n", error.dump().c_str());
        return 1;
    }
}

}  // namespace qsl
