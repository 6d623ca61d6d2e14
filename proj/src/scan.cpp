// scan.cpp — Verdict classification and the bisection scan over evolution time

#include "qsl/scan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qsl {

void VerdictConfig::validate() const {
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
        throw std::invalid_argument("VerdictConfig: tail_fraction must lie in (0, 1]");
    }
    if (smoothing_window < 3 || smoothing_window % 2 == 0) {
        throw std::invalid_argument("VerdictConfig: smoothing_window must be odd and at least 3");
    }
    if (!(curvature_tolerance >= 0.0)) {
        throw std::invalid_argument("VerdictConfig: curvature_tolerance must be nonnegative");
    }
    if (!(success_infidelity >= 0.0)) {
        throw std::invalid_argument("VerdictConfig: success_infidelity must be nonnegative");
    }
}

int VerdictConfig::min_history_length() const {
    const double by_window = 2.0 * smoothing_window / tail_fraction;
    const double by_tail = 50.0 / tail_fraction;  // the tail must cover >= 50 iterations
    return static_cast<int>(std::ceil(std::max(by_window, by_tail)));
}

Verdict convergence_verdict(const KrotovRecord& record, const VerdictConfig& cfg) {
    cfg.validate();
    const std::vector<double>& history = record.infidelity_history;
    if (history.empty()) {
        throw std::invalid_argument("convergence_verdict: empty infidelity history");
    }

    // Success clause: reaching the threshold is converging by any reading,
    // and covers runs that terminated at the target after a few iterations.
    if (record.min_infidelity() <= cfg.success_infidelity) {
        return Verdict::converging;
    }

    const int length = static_cast<int>(history.size());
    const int needed = cfg.min_history_length();
    if (length < needed) {
        throw std::invalid_argument("convergence_verdict: history of " + std::to_string(length) +
                                    " entries is too short for the curvature test; run at least " +
                                    std::to_string(needed) + " iterations");
    }

    // Centered moving average via prefix sums.
    const int half = cfg.smoothing_window / 2;
    std::vector<double> prefix(length + 1, 0.0);
    for (int i = 0; i < length; ++i) {
        prefix[i + 1] = prefix[i] + history[i];
    }
    const int smoothed_length = length - 2 * half;
    std::vector<double> smoothed(smoothed_length);
    for (int i = 0; i < smoothed_length; ++i) {
        smoothed[i] = (prefix[i + 2 * half + 1] - prefix[i]) / cfg.smoothing_window;
    }

    // Mean second difference over the tail of the smoothed history.
    const int diff_length = smoothed_length - 2;
    int tail = static_cast<int>(std::floor(cfg.tail_fraction * length));
    tail = std::clamp(tail, 1, diff_length);
    double mean = 0.0;
    for (int i = diff_length - tail; i < diff_length; ++i) {
        mean += smoothed[i + 2] - 2.0 * smoothed[i + 1] + smoothed[i];
    }
    mean /= tail;
    return mean < -cfg.curvature_tolerance ? Verdict::converging : Verdict::stalled;
}

void ScanConfig::validate() const {
    if (!(t_low > 0.0) || !std::isfinite(t_low)) {
        throw std::invalid_argument("ScanConfig: t_low must be positive and finite");
    }
    if (!(t_high > t_low) || !std::isfinite(t_high)) {
        throw std::invalid_argument("ScanConfig: t_high must exceed t_low");
    }
    if (!(resolution > 0.0) || !std::isfinite(resolution)) {
        throw std::invalid_argument("ScanConfig: resolution must be positive and finite");
    }
    if (pre_grid_points < 0) {
        throw std::invalid_argument("ScanConfig: pre_grid_points must be nonnegative");
    }
    if (dt_target && !(*dt_target > 0.0 && std::isfinite(*dt_target))) {
        throw std::invalid_argument("ScanConfig: dt_target must be positive and finite");
    }
}

double default_dt_target(const SystemSpec& spec) {
    spec.validate();
    return std::min(0.02 / spec.min_gap(), 0.1 / spec.spacing);
}

TimeGrid scan_grid(const SystemSpec& spec, double duration, std::optional<double> dt_target) {
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw std::invalid_argument("scan_grid: duration must be positive and finite");
    }
    const double target = dt_target ? *dt_target : default_dt_target(spec);
    TimeGrid grid;
    grid.duration = duration;
    grid.n_steps = std::max(1, static_cast<int>(std::ceil(duration / target)));
    return grid;
}

namespace {

ProbeResult run_probe(const SystemSpec& spec, const ProcessSpec& process, double duration,
                      const ScanConfig& scan, const KrotovConfig& krotov_cfg,
                      const VerdictConfig& verdict_cfg, const GuessConfig& guess_cfg,
                      KrotovRecord& record_out) {
    const TimeGrid grid = scan_grid(spec, duration, scan.dt_target);
    const ControlField guess = initial_guess(spec, process, grid, guess_cfg);
    record_out = optimize(spec, process, grid, guess, krotov_cfg);

    ProbeResult probe;
    probe.time = duration;
    probe.verdict = convergence_verdict(record_out, verdict_cfg);
    probe.min_infidelity = record_out.min_infidelity();
    probe.iterations_run = record_out.iterations_run;
    probe.n_steps = grid.n_steps;
    return probe;
}

// Highest stalled probe must sit strictly below the lowest converging probe.
void check_verdict_monotonicity(const std::vector<ProbeResult>& probes) {
    double max_stalled = -std::numeric_limits<double>::infinity();
    double min_converging = std::numeric_limits<double>::infinity();
    for (const ProbeResult& probe : probes) {
        if (probe.verdict == Verdict::stalled) {
            max_stalled = std::max(max_stalled, probe.time);
        } else {
            min_converging = std::min(min_converging, probe.time);
        }
    }
    if (max_stalled > min_converging) {
        throw std::runtime_error(
            "qsl_scan: verdicts are not monotone in T (stalled at " + std::to_string(max_stalled) +
            " above converging at " + std::to_string(min_converging) +
            "); the convergence criterion is unstable on this problem");
    }
}

}  // namespace

QslScanResult qsl_scan(const SystemSpec& spec, const ProcessSpec& process, const ScanConfig& scan,
                       const KrotovConfig& krotov_cfg, const VerdictConfig& verdict_cfg,
                       const GuessConfig& guess_cfg) {
    spec.validate();
    process.validate(spec.n_levels);
    scan.validate();
    krotov_cfg.validate();
    verdict_cfg.validate();

    QslScanResult result;
    KrotovRecord record;

    auto probe_at = [&](double duration) {
        ProbeResult probe =
            run_probe(spec, process, duration, scan, krotov_cfg, verdict_cfg, guess_cfg, record);
        if (probe.verdict == Verdict::converging &&
            (result.nearest_converging.infidelity_history.empty() ||
             duration < result.nearest_converging_time)) {
            result.nearest_converging = record;
            result.nearest_converging_time = duration;
        }
        result.probes.push_back(probe);
        return probe.verdict;
    };

    if (probe_at(scan.t_low) != Verdict::stalled) {
        throw std::runtime_error("qsl_scan: run at t_low = " + std::to_string(scan.t_low) +
                                 " already converges; lower the bracket start");
    }
    if (probe_at(scan.t_high) != Verdict::converging) {
        throw std::runtime_error("qsl_scan: run at t_high = " + std::to_string(scan.t_high) +
                                 " stalls; raise the bracket end");
    }

    double low = scan.t_low;
    double high = scan.t_high;
    for (int i = 1; i <= scan.pre_grid_points; ++i) {
        const double t = scan.t_low +
                         (scan.t_high - scan.t_low) * i / (scan.pre_grid_points + 1);
        if (probe_at(t) == Verdict::converging) {
            high = std::min(high, t);
        } else {
            low = std::max(low, t);
        }
    }
    check_verdict_monotonicity(result.probes);

    while (high - low > scan.resolution) {
        const double mid = 0.5 * (low + high);
        if (probe_at(mid) == Verdict::converging) {
            high = mid;
        } else {
            low = mid;
        }
    }

    check_verdict_monotonicity(result.probes);
    result.t_qsl = 0.5 * (low + high);
    result.resolution = 0.5 * (high - low);

    std::sort(result.probes.begin(), result.probes.end(),
              [](const ProbeResult& a, const ProbeResult& b) { return a.time < b.time; });
    result.probed_times.reserve(result.probes.size());
    result.verdicts.reserve(result.probes.size());
    for (const ProbeResult& probe : result.probes) {
        result.probed_times.push_back(probe.time);
        result.verdicts.push_back(probe.verdict);
    }
    return result;
}

}  // namespace qsl
