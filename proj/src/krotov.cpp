// krotov.cpp — Sequential Krotov update sweeps with monotonicity backoff

#include "qsl/krotov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qsl {

namespace {

constexpr double pi = 3.14159265358979323846;

// Im<chi| dH/dlambda |psi>. The derivative is the projector onto even
// diabatic states, so only even components enter the sum.
double update_overlap(const QuantumState& chi, const QuantumState& psi) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < chi.size(); i += 2) {
        total += std::imag(std::conj(chi[i]) * psi[i]);
    }
    return total;
}

}  // namespace

void ShapeProfile::validate() const {
    if (kind == ShapeKind::ramped && !(edge_fraction > 0.0 && edge_fraction < 0.5)) {
        throw std::invalid_argument("ShapeProfile: edge_fraction must lie in (0, 0.5)");
    }
}

double ShapeProfile::at(double t, double duration) const {
    if (kind == ShapeKind::flat) {
        return 1.0;
    }
    if (t <= 0.0 || t >= duration) {
        return 0.0;
    }
    const double edge = edge_fraction * duration;
    if (t < edge) {
        const double s = std::sin(0.5 * pi * t / edge);
        return s * s;
    }
    if (t > duration - edge) {
        const double s = std::sin(0.5 * pi * (duration - t) / edge);
        return s * s;
    }
    return 1.0;
}

void KrotovConfig::validate() const {
    if (step_weight && !(std::isfinite(*step_weight) && *step_weight > 0.0)) {
        throw std::invalid_argument("KrotovConfig: step_weight must be positive and finite");
    }
    shape.validate();
    if (max_iterations < 1) {
        throw std::invalid_argument("KrotovConfig: max_iterations must be at least 1");
    }
    if (!(target_infidelity >= 0.0)) {
        throw std::invalid_argument("KrotovConfig: target_infidelity must be nonnegative");
    }
    if (max_step_backoffs < 0) {
        throw std::invalid_argument("KrotovConfig: max_step_backoffs must be nonnegative");
    }
}

double KrotovConfig::resolve_step_weight(double spacing) const {
    return step_weight ? *step_weight : 0.625 / spacing;
}

double KrotovRecord::min_infidelity() const {
    if (infidelity_history.empty()) {
        throw std::logic_error("KrotovRecord: empty infidelity history");
    }
    return *std::min_element(infidelity_history.begin(), infidelity_history.end());
}

Trajectory backward_propagate(const SystemSpec& spec, const ControlField& field,
                              const QuantumState& terminal_costate) {
    spec.validate();
    field.validate();
    if (terminal_costate.size() != spec.n_levels) {
        throw std::invalid_argument("backward_propagate: costate dimension does not match n_levels");
    }
    if (!terminal_costate.allFinite()) {
        throw std::invalid_argument("backward_propagate: costate has non-finite entries");
    }

    const int m = field.grid.n_steps;
    const double dt = field.grid.dt();
    StepPropagator prop(spec, dt);

    Trajectory traj;
    traj.grid = field.grid;
    traj.states.resize(m + 1);
    traj.states[m] = terminal_costate;
    for (int j = m - 1; j >= 0; --j) {
        traj.states[j] = traj.states[j + 1];
        prop.step(field.values[j], -dt, traj.states[j]);
    }
    return traj;
}

std::pair<ControlField, double> krotov_step(const SystemSpec& spec, const ProcessSpec& process,
                                            const ControlField& field, const KrotovConfig& cfg) {
    spec.validate();
    field.validate();
    process.validate(spec.n_levels);
    cfg.validate();

    const TimeGrid& grid = field.grid;
    const int m = grid.n_steps;
    const double dt = grid.dt();
    const double mu = cfg.resolve_step_weight(spec.spacing);

    const QuantumState initial = basis_state(spec.n_levels, process.initial_index);
    const QuantumState goal = basis_state(spec.n_levels, process.goal_index);

    const Trajectory forward = propagate(spec, field, initial);
    const QuantumState costate_seed = goal.dot(forward.states[m]) * goal;
    const Trajectory costate = backward_propagate(spec, field, costate_seed);

    StepPropagator prop(spec, dt);
    ControlField updated = field;
    QuantumState psi = initial;
    for (int j = 0; j < m; ++j) {
        const double s = cfg.shape.at(j * dt, grid.duration);
        const double g = update_overlap(costate.states[j], psi);
        const double lambda_new = field.values[j] + (s / mu) * g;
        if (!std::isfinite(lambda_new)) {
            throw std::runtime_error("krotov_step: non-finite field update at interval " +
                                     std::to_string(j));
        }
        updated.values[j] = lambda_new;
        prop.step(lambda_new, dt, psi);
    }
    return {std::move(updated), infidelity(psi, goal)};
}

KrotovRecord optimize(const SystemSpec& spec, const ProcessSpec& process, const TimeGrid& grid,
                      const ControlField& guess, const KrotovConfig& cfg) {
    spec.validate();
    grid.validate();
    guess.validate();
    process.validate(spec.n_levels);
    cfg.validate();
    if (!(guess.grid == grid)) {
        throw std::invalid_argument("optimize: guess field lives on a different grid");
    }
    const double dt = grid.dt();
    if (dt * spec.spacing > 0.1 * (1.0 + 1e-9)) {
        throw std::invalid_argument(
            "optimize: grid too coarse, dt * spacing must not exceed 0.1");
    }

    const int m = grid.n_steps;
    const int n = spec.n_levels;
    const QuantumState initial = basis_state(n, process.initial_index);
    const QuantumState goal = basis_state(n, process.goal_index);

    StepPropagator prop(spec, dt);

    // Per-interval eigensystems of the current field, reused by the backward
    // pass of the next iteration; "trial" is overwritten by each update sweep
    // and swapped in on acceptance, so a rejected sweep never disturbs the
    // accepted state.
    struct IntervalEigen {
        Eigen::MatrixXd v;
        Eigen::VectorXd e;
    };
    std::vector<IntervalEigen> current(m), trial(m);
    for (auto* cache : {&current, &trial}) {
        for (auto& entry : *cache) {
            entry.v.resize(n, n);
            entry.e.resize(n);
        }
    }

    ControlField field = guess;
    std::vector<double> trial_values(m);
    std::vector<QuantumState> costate(m + 1);

    QuantumState psi = initial;
    for (int j = 0; j < m; ++j) {
        prop.eigensystem(field.values[j], current[j].v, current[j].e);
        prop.apply_exp(current[j].v, current[j].e, dt, psi);
    }
    QuantumState psi_final = psi;

    KrotovRecord record;
    record.final_field = field;
    record.infidelity_history.reserve(cfg.max_iterations + 1);
    record.infidelity_history.push_back(infidelity(psi_final, goal));

    double mu = cfg.resolve_step_weight(spec.spacing);
    double current_infidelity = record.infidelity_history.front();

    for (int k = 0; k < cfg.max_iterations; ++k) {
        if (current_infidelity <= cfg.target_infidelity) {
            record.terminated_by = Termination::target_reached;
            break;
        }

        costate[m] = goal.dot(psi_final) * goal;
        for (int j = m - 1; j >= 0; --j) {
            costate[j] = costate[j + 1];
            prop.apply_exp(current[j].v, current[j].e, -dt, costate[j]);
        }

        // Update sweep with immediate replacement; mu is doubled and the
        // sweep redone whenever the result would raise the infidelity.
        bool accepted = false;
        int backoffs_left = cfg.max_step_backoffs;
        while (true) {
            psi = initial;
            int bad_interval = -1;
            for (int j = 0; j < m; ++j) {
                const double s = cfg.shape.at(j * dt, grid.duration);
                const double g = update_overlap(costate[j], psi);
                const double lambda_new = field.values[j] + (s / mu) * g;
                if (!std::isfinite(lambda_new)) {
                    bad_interval = j;
                    break;
                }
                trial_values[j] = lambda_new;
                prop.eigensystem(lambda_new, trial[j].v, trial[j].e);
                prop.apply_exp(trial[j].v, trial[j].e, dt, psi);
            }
            const double trial_infidelity = bad_interval < 0
                                                ? infidelity(psi, goal)
                                                : std::numeric_limits<double>::infinity();
            if (bad_interval < 0 && trial_infidelity <= current_infidelity) {
                field.values.swap(trial_values);
                current.swap(trial);
                psi_final = psi;
                current_infidelity = trial_infidelity;
                accepted = true;
                break;
            }
            if (backoffs_left == 0) {
                if (bad_interval >= 0) {
                    throw std::runtime_error("optimize: non-finite field update at interval " +
                                             std::to_string(bad_interval));
                }
                break;  // no improving step within the backoff budget
            }
            --backoffs_left;
            mu *= 2.0;
        }
        if (!accepted) {
            break;
        }
        record.infidelity_history.push_back(current_infidelity);
        record.iterations_run += 1;
        if (current_infidelity <= cfg.target_infidelity) {
            record.terminated_by = Termination::target_reached;
            break;
        }
    }

    record.final_field = std::move(field);
    record.step_weight_used = mu;
    return record;
}

}  // namespace qsl
