// krotov.hpp — Monotonic iterative control-field optimization for state transfer

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qsl/dynamics.hpp"
#include "qsl/model.hpp"
#include "qsl/protocols.hpp"

namespace qsl {

enum class ShapeKind { flat, ramped };

// Update shape S(t): flat is 1 everywhere; ramped rises from 0 over the first
// edge_fraction of the window with a sin^2 profile and falls symmetrically.
struct ShapeProfile {
    ShapeKind kind = ShapeKind::flat;
    double edge_fraction = 0.1;

    void validate() const;
    double at(double t, double duration) const;
};

struct KrotovConfig {
    // Inverse update magnitude mu. When unset, mu = 0.625 / eps0; scaling with
    // the inverse level spacing keeps the update size covariant under a
    // rescaling of all energies, and the constant is calibrated so the
    // optimizer resolves transfer-time thresholds without backoff stalls.
    std::optional<double> step_weight;
    ShapeProfile shape;
    int max_iterations = 5000;
    double target_infidelity = 1e-4;
    // When an accepted sweep would raise the infidelity, mu is doubled and the
    // sweep retried, at most this many times per iteration.
    int max_step_backoffs = 60;

    void validate() const;
    double resolve_step_weight(double spacing) const;
};

enum class Termination { target_reached, iteration_cap };

// One optimization run: infidelity after each accepted iteration (entry 0 is
// the guess) plus the field that produced the last entry.
struct KrotovRecord {
    std::vector<double> infidelity_history;
    ControlField final_field;
    int iterations_run = 0;
    Termination terminated_by = Termination::iteration_cap;
    double step_weight_used = 0.0;  // mu after any backoff doublings

    double final_infidelity() const { return infidelity_history.back(); }
    double min_infidelity() const;
};

// states[j] = exp(+i H(lambda_j) dt) states[j+1], seeded at t=T with the
// caller's costate (typically <goal|psi(T)> * |goal>, whose norm may be < 1;
// the stepping is unitary, so the norm stays constant along the trajectory).
Trajectory backward_propagate(const SystemSpec& spec, const ControlField& field,
                              const QuantumState& terminal_costate);

// One sequential update sweep: forward-propagate under the current field,
// backward-propagate the goal-projected costate, then walk the intervals
// updating lambda_j by (S(t_j)/mu) * Im<chi(t_j)|dH/dlambda|psi_new(t_j)>
// with psi_new propagated through each freshly updated interval. Returns the
// new field and the infidelity it achieves.
std::pair<ControlField, double> krotov_step(const SystemSpec& spec, const ProcessSpec& process,
                                            const ControlField& field, const KrotovConfig& cfg);

// Iterate krotov_step until target_infidelity or max_iterations, recording the
// infidelity after every accepted iteration. Deterministic given its inputs.
KrotovRecord optimize(const SystemSpec& spec, const ProcessSpec& process, const TimeGrid& grid,
                      const ControlField& guess, const KrotovConfig& cfg);

}  // namespace qsl
