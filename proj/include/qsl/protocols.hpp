// protocols.hpp — Sudden-switch reference protocols and optimizer guess fields

#pragma once

#include <utility>
#include <vector>

#include "qsl/dynamics.hpp"
#include "qsl/model.hpp"

namespace qsl {

// State-to-state transfer between two diabatic basis states. The control path
// traverses the consecutive index range between them, one avoided crossing
// per adjacent pair.
struct ProcessSpec {
    int initial_index = 0;
    int goal_index = 1;

    void validate(int n_levels) const;
    // Crossing indices in traversal order (crossing j sits between levels
    // j and j+1 at lambda = j * eps0).
    std::vector<int> traversed_crossings() const;
};

// Shaping of the optimizer's initial guess: the rescaled staircase is blurred
// with a Gaussian kernel and tilted by a small linear-in-time correction.
struct GuessConfig {
    double smoothing_width = 0.0;        // Gaussian sigma, time units
    double linear_slope_fraction = 0.05; // alpha: endpoint tilt of alpha * eps0

    void validate(double duration) const;
};

// lambda values where adjacent diabatic levels j, j+1 are degenerate:
// lambda_j = j * eps0 for j = 0..N-2.
std::vector<double> crossing_positions(const SystemSpec& spec);

struct StaircaseSegment {
    double level = 0.0;     // lambda held on this segment
    double duration = 0.0;  // pi / gap of the crossing
};

// Hold lambda at each traversed crossing for pi/Delta, jumping instantly
// between crossings, in path order.
struct SuddenSwitchProtocol {
    std::vector<StaircaseSegment> segments;
    double total_time = 0.0;  // sum of segment durations

    // Staircase level at time t in [0, total_time].
    double level_at(double t) const;
};

SuddenSwitchProtocol sudden_switch(const SystemSpec& spec, const ProcessSpec& process);

// Staircase sampled onto a grid whose duration equals the protocol time;
// segment durations are rounded to whole intervals by largest remainder.
// Throws if any segment would get fewer than 10 intervals.
ControlField sample_staircase(const SuddenSwitchProtocol& protocol, const TimeGrid& grid);

// Gridded sudden switch plus its analytic total time.
std::pair<ControlField, double> sudden_switch(const SystemSpec& spec, const ProcessSpec& process,
                                              const TimeGrid& grid);

// Optimizer seed: staircase rescaled to fill [0, T], Gaussian-smoothed
// (reflective boundaries), plus alpha * eps0 * (t/T - 1/2).
ControlField initial_guess(const SystemSpec& spec, const ProcessSpec& process,
                           const TimeGrid& grid, const GuessConfig& cfg);

}  // namespace qsl
