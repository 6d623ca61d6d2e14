// scan.hpp — Convergence-based QSL time determination by bisection over T

#pragma once

#include <optional>
#include <vector>

#include "qsl/krotov.hpp"
#include "qsl/model.hpp"
#include "qsl/protocols.hpp"

namespace qsl {

enum class Verdict { converging, stalled };

// Classification of one infidelity history: a run is converging when it
// reached success_infidelity, or when the smoothed history still curves
// downward over its tail; a flat plateau above the threshold is stalled.
struct VerdictConfig {
    double tail_fraction = 0.25;        // portion of the history analyzed
    int smoothing_window = 21;          // moving-average width, odd
    double curvature_tolerance = 1e-12; // second differences above -tol count as flat
    double success_infidelity = 1e-4;

    void validate() const;
    // Shortest history the curvature clause accepts. The success clause is
    // checked first and has no length requirement, so a run that terminated
    // early at the target is classified without one.
    int min_history_length() const;
};

Verdict convergence_verdict(const KrotovRecord& record, const VerdictConfig& cfg);

struct ScanConfig {
    double t_low = 0.0;    // must classify as stalled
    double t_high = 0.0;   // must classify as converging
    double resolution = 0.0;  // bisect until bracket width <= resolution
    // Extra evenly spaced probes between the endpoints before bisecting;
    // tightens the bracket and exposes verdict non-monotonicity early.
    int pre_grid_points = 0;
    // Interval width used to build each probe grid; defaults to
    // min(0.02/gap_min, 0.1/eps0).
    std::optional<double> dt_target;

    void validate() const;
};

// One fixed-T optimization inside a scan, reduced to its diagnostics.
struct ProbeResult {
    double time = 0.0;
    Verdict verdict = Verdict::stalled;
    double min_infidelity = 1.0;
    int iterations_run = 0;
    int n_steps = 0;
};

struct QslScanResult {
    std::vector<double> probed_times;  // ascending
    std::vector<Verdict> verdicts;     // matching probed_times
    double t_qsl = 0.0;                // final bracket midpoint
    double resolution = 0.0;           // final bracket half-width
    std::vector<ProbeResult> probes;   // ascending in time, with diagnostics
    // Full record of the converging run at the lowest probed T, the run
    // closest to the reported QSL time; kept for field analysis.
    KrotovRecord nearest_converging;
    double nearest_converging_time = 0.0;
};

double default_dt_target(const SystemSpec& spec);

// Grid with interval width at most dt_target covering [0, duration].
TimeGrid scan_grid(const SystemSpec& spec, double duration, std::optional<double> dt_target);

// Bisect on T between a stalled and a converging endpoint, rebuilding the
// initial guess on each probe's grid. Fails loudly when the endpoint verdicts
// are wrong or the verdicts are not monotone in T.
QslScanResult qsl_scan(const SystemSpec& spec, const ProcessSpec& process, const ScanConfig& scan,
                       const KrotovConfig& krotov_cfg, const VerdictConfig& verdict_cfg,
                       const GuessConfig& guess_cfg);

}  // namespace qsl
