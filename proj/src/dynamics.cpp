#include "qsl/dynamics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qsl {

void TimeGrid::validate() const {
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw std::invalid_argument("TimeGrid: duration must be finite and > 0");
    }
    if (n_steps < 1) {
        throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
    }
}

void ControlField::validate() const {
    grid.validate();
    if (static_cast<int>(values.size()) != grid.n_steps) {
        throw std::invalid_argument("ControlField: expected " + std::to_string(grid.n_steps) +
                                    " values, got " + std::to_string(values.size()));
    }
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (!std::isfinite(values[j])) {
            throw std::invalid_argument("ControlField: non-finite value at interval " +
                                        std::to_string(j));
        }
    }
}

QuantumState basis_state(int dim, int index) {
    if (dim < 1 || index < 0 || index >= dim) {
        throw std::invalid_argument("basis_state: index " + std::to_string(index) +
                                    " out of range for dimension " + std::to_string(dim));
    }
    QuantumState psi = QuantumState::Zero(dim);
    psi(index) = 1.0;
    return psi;
}

StepPropagator::StepPropagator(const SystemSpec& spec, double dt)
    : dt_(dt),
      diag_(spec.n_levels),
      subdiag_(coupling_subdiagonal(spec)),
      diag_base_(diabatic_energies(spec, 0.0)) {
    const int n = spec.n_levels;
    wr_.resize(n);
    wi_.resize(n);
    wr2_.resize(n);
    wi2_.resize(n);
}

void StepPropagator::eigensystem(double lambda_value, Eigen::MatrixXd& v, Eigen::VectorXd& e) {
    diag_ = diag_base_;
    for (int k = 0; k < diag_.size(); k += 2) diag_(k) += lambda_value;
    solver_.computeFromTridiagonal(diag_, subdiag_, Eigen::ComputeEigenvectors);
    if (solver_.info() != Eigen::Success) {
        throw std::runtime_error("StepPropagator: eigensolver failed at lambda = " +
                                 std::to_string(lambda_value));
    }
    v = solver_.eigenvectors();
    e = solver_.eigenvalues();
}

void StepPropagator::apply_exp(const Eigen::MatrixXd& v, const Eigen::VectorXd& e, double tau,
                               QuantumState& psi) {
    const int n = dim();
    wr_.noalias() = v.transpose() * psi.real();
    wi_.noalias() = v.transpose() * psi.imag();
    for (int k = 0; k < n; ++k) {
        const double c = std::cos(e(k) * tau);
        const double s = std::sin(e(k) * tau);
        // (wr + i wi) * (c - i s)
        const double re = wr_(k) * c + wi_(k) * s;
        const double im = wi_(k) * c - wr_(k) * s;
        wr_(k) = re;
        wi_(k) = im;
    }
    wr2_.noalias() = v * wr_;
    wi2_.noalias() = v * wi_;
    psi.real() = wr2_;
    psi.imag() = wi2_;
}

void StepPropagator::step(double lambda_value, double tau, QuantumState& psi) {
    Eigen::MatrixXd v;
    Eigen::VectorXd e;
    eigensystem(lambda_value, v, e);
    apply_exp(v, e, tau, psi);
}

Trajectory propagate(const SystemSpec& spec, const ControlField& field,
                     const QuantumState& initial) {
    spec.validate();
    field.validate();
    if (initial.size() != spec.n_levels) {
        throw std::invalid_argument("propagate: initial state dimension " +
                                    std::to_string(initial.size()) + " does not match N = " +
                                    std::to_string(spec.n_levels));
    }
    Trajectory traj;
    traj.grid = field.grid;
    traj.states.resize(field.grid.n_steps + 1);
    traj.states[0] = initial;

    StepPropagator prop(spec, field.grid.dt());
    QuantumState psi = initial;
    for (int j = 0; j < field.grid.n_steps; ++j) {
        prop.step(field.values[j], prop.dt(), psi);
        traj.states[j + 1] = psi;
    }
    return traj;
}

Eigen::MatrixXd populations(const Trajectory& traj) {
    if (traj.states.empty()) {
        throw std::invalid_argument("populations: empty trajectory");
    }
    const int n = static_cast<int>(traj.states[0].size());
    Eigen::MatrixXd p(traj.states.size(), n);
    for (std::size_t j = 0; j < traj.states.size(); ++j) {
        p.row(j) = traj.states[j].cwiseAbs2().transpose();
    }
    return p;
}

double infidelity(const QuantumState& final_state, const QuantumState& goal) {
    if (final_state.size() != goal.size()) {
        throw std::invalid_argument("infidelity: state dimensions differ");
    }
    const double overlap2 = std::norm(goal.dot(final_state));
    return std::clamp(1.0 - overlap2, 0.0, 1.0);
}

std::optional<double> mt_bound(const SystemSpec& spec, double lambda_value,
                               const QuantumState& initial, const QuantumState& final_state) {
    if (initial.size() != final_state.size()) {
        throw std::invalid_argument("mt_bound: state dimensions differ");
    }
    if (initial.size() != spec.n_levels) {
        throw std::invalid_argument("mt_bound: state dimension does not match N");
    }
    const Eigen::MatrixXcd h = build_hamiltonian(spec, lambda_value);
    const Eigen::VectorXcd hpsi = h * initial;
    const double mean = initial.dot(hpsi).real();
    const double second_moment = hpsi.squaredNorm();
    const double variance = std::max(0.0, second_moment - mean * mean);
    const double de = std::sqrt(variance);

    const double overlap = std::min(1.0, std::abs(initial.dot(final_state)));
    const double angle = std::acos(overlap);
    if (angle == 0.0) return 0.0;

    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if (de <= 1e-14 * scale) return std::nullopt;  // bound undefined/infinite
    return angle / de;
}

}  // namespace qsl
