#include "qsl/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qsl {

void ProcessSpec::validate(int n_levels) const {
    if (initial_index < 0 || initial_index >= n_levels) {
        throw std::invalid_argument("ProcessSpec: initial_index out of range");
    }
    if (goal_index < 0 || goal_index >= n_levels) {
        throw std::invalid_argument("ProcessSpec: goal_index out of range");
    }
    if (initial_index == goal_index) {
        throw std::invalid_argument("ProcessSpec: initial and goal state coincide");
    }
}

std::vector<int> ProcessSpec::traversed_crossings() const {
    std::vector<int> path;
    if (goal_index > initial_index) {
        for (int j = initial_index; j < goal_index; ++j) path.push_back(j);
    } else {
        for (int j = initial_index - 1; j >= goal_index; --j) path.push_back(j);
    }
    return path;
}

void GuessConfig::validate(double duration) const {
    if (!(smoothing_width > 0.0) || !std::isfinite(smoothing_width)) {
        throw std::invalid_argument("GuessConfig: smoothing_width must be finite and > 0");
    }
    if (smoothing_width >= duration / 10.0) {
        throw std::invalid_argument("GuessConfig: smoothing_width must be < T/10");
    }
    if (!(std::abs(linear_slope_fraction) <= 0.2)) {
        throw std::invalid_argument("GuessConfig: |linear_slope_fraction| must be <= 0.2");
    }
}

std::vector<double> crossing_positions(const SystemSpec& spec) {
    spec.validate();
    std::vector<double> positions(spec.n_levels - 1);
    for (int j = 0; j < spec.n_levels - 1; ++j) positions[j] = j * spec.spacing;
    return positions;
}

double SuddenSwitchProtocol::level_at(double t) const {
    double edge = 0.0;
    for (const auto& seg : segments) {
        edge += seg.duration;
        if (t < edge) return seg.level;
    }
    return segments.back().level;
}

SuddenSwitchProtocol sudden_switch(const SystemSpec& spec, const ProcessSpec& process) {
    spec.validate();
    process.validate(spec.n_levels);
    const std::vector<double> positions = crossing_positions(spec);

    SuddenSwitchProtocol protocol;
    for (int j : process.traversed_crossings()) {
        const double hold = std::numbers::pi / spec.gaps[j];
        protocol.segments.push_back({positions[j], hold});
        protocol.total_time += hold;
    }
    return protocol;
}

ControlField sample_staircase(const SuddenSwitchProtocol& protocol, const TimeGrid& grid) {
    grid.validate();
    if (std::abs(grid.duration - protocol.total_time) > 1e-9 * protocol.total_time) {
        throw std::invalid_argument("sample_staircase: grid duration differs from protocol time");
    }
    const int m = grid.n_steps;
    const int n_seg = static_cast<int>(protocol.segments.size());

    // Whole-interval apportionment: floor everything, then hand the leftover
    // intervals to the largest fractional remainders (earliest segment wins ties).
    std::vector<int> counts(n_seg);
    std::vector<double> remainders(n_seg);
    int assigned = 0;
    for (int s = 0; s < n_seg; ++s) {
        const double exact = protocol.segments[s].duration / protocol.total_time * m;
        counts[s] = static_cast<int>(std::floor(exact));
        remainders[s] = exact - counts[s];
        assigned += counts[s];
    }
    std::vector<int> order(n_seg);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainders[a] > remainders[b]; });
    for (int i = 0; i < m - assigned; ++i) counts[order[i % n_seg]] += 1;

    for (int s = 0; s < n_seg; ++s) {
        if (counts[s] < 10) {
            throw std::invalid_argument("sample_staircase: grid too coarse, segment " +
                                        std::to_string(s) + " got " +
                                        std::to_string(counts[s]) + " intervals (< 10)");
        }
    }

    ControlField field;
    field.grid = grid;
    field.values.reserve(m);
    for (int s = 0; s < n_seg; ++s) {
        field.values.insert(field.values.end(), counts[s], protocol.segments[s].level);
    }
    return field;
}

std::pair<ControlField, double> sudden_switch(const SystemSpec& spec, const ProcessSpec& process,
                                              const TimeGrid& grid) {
    const SuddenSwitchProtocol protocol = sudden_switch(spec, process);
    return {sample_staircase(protocol, grid), protocol.total_time};
}

ControlField initial_guess(const SystemSpec& spec, const ProcessSpec& process,
                           const TimeGrid& grid, const GuessConfig& cfg) {
    grid.validate();
    cfg.validate(grid.duration);
    const SuddenSwitchProtocol protocol = sudden_switch(spec, process);

    const double t = grid.duration;
    const double rescale = t / protocol.total_time;
    const double shortest =
        rescale * std::min_element(protocol.segments.begin(), protocol.segments.end(),
                                   [](const auto& a, const auto& b) {
                                       return a.duration < b.duration;
                                   })
                      ->duration;
    if (cfg.smoothing_width >= shortest) {
        throw std::invalid_argument(
            "initial_guess: smoothing_width >= shortest rescaled segment (" +
            std::to_string(shortest) + "); the staircase structure would be lost");
    }

    // Rescaled staircase sampled at interval midpoints.
    const int m = grid.n_steps;
    const double dt = grid.dt();
    std::vector<double> raw(m);
    for (int j = 0; j < m; ++j) {
        raw[j] = protocol.level_at(grid.midpoint(j) / rescale);
    }

    // Gaussian blur, kernel truncated at 4 sigma, reflective boundary.
    const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * cfg.smoothing_width / dt)));
    std::vector<double> kernel(2 * radius + 1);
    double norm = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double x = i * dt / cfg.smoothing_width;
        kernel[i + radius] = std::exp(-0.5 * x * x);
        norm += kernel[i + radius];
    }
    for (double& k : kernel) k /= norm;

    auto reflect = [m](int idx) {
        while (idx < 0 || idx >= m) {
            if (idx < 0) idx = -idx - 1;
            if (idx >= m) idx = 2 * m - 1 - idx;
        }
        return idx;
    };

    ControlField field;
    field.grid = grid;
    field.values.assign(m, 0.0);
    for (int j = 0; j < m; ++j) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
            acc += kernel[i + radius] * raw[reflect(j + i)];
        }
        field.values[j] = acc + cfg.linear_slope_fraction * spec.spacing *
                                    (grid.midpoint(j) / t - 0.5);
    }
    return field;
}

}  // namespace qsl
