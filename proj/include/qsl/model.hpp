// model.hpp — N-level diabatic Hamiltonian with nearest-neighbor avoided crossings

#pragma once

#include <Eigen/Dense>

#include <vector>

namespace qsl {

// Parameters of the N-level ladder model. In the diabatic basis {|0>..|N-1>}
// the level |2n> has energy lambda - n*eps0, the level |2n+1> has energy
// n*eps0, and adjacent levels n, n+1 are coupled with strength gaps[n]/2.
// Only nearest-neighbor couplings exist, so every crossing between
// non-adjacent diabatic levels stays exact (closed).
//
// Units: hbar = 1; energies and 1/time share one scale. The CLI conventionally
// normalizes gaps[0] = 1 so times come out in units of 1/Delta_A.
struct SystemSpec {
    int n_levels = 2;
    std::vector<double> gaps;  // N-1 minimum gaps, all > 0
    double spacing = 1.0;      // eps0: distance between adjacent crossings, > 0

    double min_gap() const;
    void validate() const;  // throws std::invalid_argument on bad parameters
};

// Entrywise check |m - m^dagger| <= tol * max(1, max |entry|).
bool is_hermitian(const Eigen::MatrixXcd& m, double tol = 1e-12);

// Diagonal of H(lambda): the control couples to the even diabatic states only.
Eigen::VectorXd diabatic_energies(const SystemSpec& spec, double lambda_value);

// Constant subdiagonal gaps[n]/2 of the tridiagonal H.
Eigen::VectorXd coupling_subdiagonal(const SystemSpec& spec);

// H(lambda) in the diabatic basis: real symmetric tridiagonal, returned dense.
Eigen::MatrixXcd build_hamiltonian(const SystemSpec& spec, double lambda_value);

// dH/dlambda = sum_n |2n><2n|, the projector onto even diabatic states.
Eigen::MatrixXcd coupling_derivative(const SystemSpec& spec);

// Ascending eigenvalues of H(lambda).
std::vector<double> eigen_spectrum(const SystemSpec& spec, double lambda_value);

}  // namespace qsl
