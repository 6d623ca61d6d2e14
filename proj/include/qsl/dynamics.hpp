// dynamics.hpp — Schrodinger propagation under piecewise-constant control,
// populations, infidelity, and the time-independent speed-limit bound.

#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "qsl/model.hpp"

namespace qsl {

// Uniform grid of M intervals covering [0, T]. Field samples live one per
// interval; states live on the M+1 grid points.
struct TimeGrid {
    double duration = 1.0;  // T
    int n_steps = 1;        // M

    double dt() const { return duration / n_steps; }
    double midpoint(int interval) const { return (interval + 0.5) * dt(); }
    void validate() const;

    bool operator==(const TimeGrid&) const = default;
};

// Real control lambda(t), constant on each grid interval. values[j] is the
// level held on [t_j, t_{j+1}); continuous guesses are sampled at midpoints.
struct ControlField {
    TimeGrid grid;
    std::vector<double> values;

    void validate() const;
};

using QuantumState = Eigen::VectorXcd;

QuantumState basis_state(int dim, int index);

// Grid-point samples of a propagated state, including t=0 and t=T.
struct Trajectory {
    TimeGrid grid;
    std::vector<QuantumState> states;  // M+1 entries
};

// Exact per-interval stepper: applies exp(-i * tau * H(lambda)) through the
// eigendecomposition of the real symmetric tridiagonal H. One instance per
// run; instances share nothing, so independent runs may step concurrently.
class StepPropagator {
public:
    StepPropagator(const SystemSpec& spec, double dt);

    int dim() const { return static_cast<int>(diag_.size()); }
    double dt() const { return dt_; }

    // Eigensystem of H(lambda): columns of v, ascending e.
    void eigensystem(double lambda_value, Eigen::MatrixXd& v, Eigen::VectorXd& e);

    // psi <- v * exp(-i * e * tau) * v^T * psi  (tau < 0 steps backward)
    void apply_exp(const Eigen::MatrixXd& v, const Eigen::VectorXd& e, double tau,
                   QuantumState& psi);

    // Convenience: one forward (+dt) or backward (-dt) step at fixed lambda.
    void step(double lambda_value, double tau, QuantumState& psi);

private:
    double dt_;
    Eigen::VectorXd diag_;
    Eigen::VectorXd subdiag_;
    Eigen::VectorXd diag_base_;  // diabatic energies at lambda = 0
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver_;
    Eigen::VectorXd wr_, wi_, wr2_, wi2_;  // matvec workspace
};

// states[j+1] = exp(-i H(lambda_j) dt) states[j]; exact per interval.
Trajectory propagate(const SystemSpec& spec, const ControlField& field,
                     const QuantumState& initial);

// Row j holds |<k|psi(t_j)>|^2 for k = 0..N-1.
Eigen::MatrixXd populations(const Trajectory& traj);

// 1 - |<goal|final>|^2, clamped to [0, 1].
double infidelity(const QuantumState& final_state, const QuantumState& goal);

// Time-independent bound arccos(|<initial|final>|) / dE with
// dE^2 = <H^2> - <H>^2 taken in the initial state at fixed lambda.
// nullopt means the bound is undefined (dE = 0 with non-parallel states).
std::optional<double> mt_bound(const SystemSpec& spec, double lambda_value,
                               const QuantumState& initial, const QuantumState& final_state);

}  // namespace qsl
