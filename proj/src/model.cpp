#include "qsl/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qsl {

double SystemSpec::min_gap() const {
    return *std::min_element(gaps.begin(), gaps.end());
}

void SystemSpec::validate() const {
    if (n_levels < 2) {
        throw std::invalid_argument("SystemSpec: n_levels must be >= 2, got " +
                                    std::to_string(n_levels));
    }
    if (static_cast<int>(gaps.size()) != n_levels - 1) {
        throw std::invalid_argument("SystemSpec: expected " + std::to_string(n_levels - 1) +
                                    " gaps, got " + std::to_string(gaps.size()));
    }
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        if (!(gaps[i] > 0.0) || !std::isfinite(gaps[i])) {
            throw std::invalid_argument("SystemSpec: gaps[" + std::to_string(i) +
                                        "] must be finite and > 0");
        }
    }
    if (!(spacing > 0.0) || !std::isfinite(spacing)) {
        throw std::invalid_argument("SystemSpec: spacing must be finite and > 0");
    }
}

bool is_hermitian(const Eigen::MatrixXcd& m, double tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

Eigen::VectorXd diabatic_energies(const SystemSpec& spec, double lambda_value) {
    spec.validate();
    Eigen::VectorXd diag(spec.n_levels);
    for (int k = 0; k < spec.n_levels; ++k) {
        const int n = k / 2;
        diag(k) = (k % 2 == 0) ? lambda_value - n * spec.spacing : n * spec.spacing;
    }
    return diag;
}

Eigen::VectorXd coupling_subdiagonal(const SystemSpec& spec) {
    spec.validate();
    Eigen::VectorXd sub(spec.n_levels - 1);
    for (int n = 0; n < spec.n_levels - 1; ++n) sub(n) = 0.5 * spec.gaps[n];
    return sub;
}

Eigen::MatrixXcd build_hamiltonian(const SystemSpec& spec, double lambda_value) {
    const Eigen::VectorXd diag = diabatic_energies(spec, lambda_value);
    const Eigen::VectorXd sub = coupling_subdiagonal(spec);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(spec.n_levels, spec.n_levels);
    for (int k = 0; k < spec.n_levels; ++k) h(k, k) = diag(k);
    for (int n = 0; n < spec.n_levels - 1; ++n) {
        h(n, n + 1) = sub(n);
        h(n + 1, n) = sub(n);
    }
    return h;
}

Eigen::MatrixXcd coupling_derivative(const SystemSpec& spec) {
    spec.validate();
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(spec.n_levels, spec.n_levels);
    for (int k = 0; k < spec.n_levels; k += 2) p(k, k) = 1.0;
    return p;
}

std::vector<double> eigen_spectrum(const SystemSpec& spec, double lambda_value) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diabatic_energies(spec, lambda_value),
                                  coupling_subdiagonal(spec), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigen_spectrum: eigensolver failed");
    }
    const Eigen::VectorXd& ev = solver.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

}  // namespace qsl
