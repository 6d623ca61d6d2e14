// Piecewise-constant propagation, populations, infidelity, and the
// Mandelstam-Tamm bound.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qsl/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace qsl;

namespace {

constexpr double pi = std::numbers::pi;

SystemSpec three_level() {
    SystemSpec spec;
    spec.n_levels = 3;
    spec.gaps = {1.0, 0.8};
    spec.spacing = 7.0;
    return spec;
}

ControlField oracle_field() {
    ControlField field;
    field.grid = TimeGrid{2.0, 16};
    const double dt = field.grid.dt();
    field.values.resize(16);
    for (int j = 0; j < 16; ++j) {
        field.values[j] = 3.5 + 2.0 * std::sin(1.7 * (j + 0.5) * dt);
    }
    return field;
}

}  // namespace

TEST_CASE("propagation matches an independent exponential integrator") {
    // Final state computed in numpy by per-interval eigendecomposition of the
    // same Hamiltonian (N=3, gaps {1.0, 0.8}, eps0=7, T=2, M=16).
    const std::complex<double> expected[] = {
        {-0.96533651624037442, 0.0023383249968282785},
        {-0.25724746730029446, 0.018683899270773675},
        {-0.025637436497094997, -0.030615632846449921},
    };
    const Trajectory traj = propagate(three_level(), oracle_field(), basis_state(3, 0));
    REQUIRE(traj.states.size() == 17);
    const QuantumState& final_state = traj.states.back();
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(final_state(i) - expected[i]) <= 1e-12);
    }
}

TEST_CASE("norms stay at one through long random evolutions") {
    std::mt19937 rng(20240811);
    std::uniform_real_distribution<double> gap_draw(0.3, 2.0);
    std::uniform_real_distribution<double> eps_draw(2.0, 30.0);
    std::uniform_int_distribution<int> level_draw(2, 6);

    for (int run = 0; run < 20; ++run) {
        SystemSpec spec;
        spec.n_levels = level_draw(rng);
        for (int i = 0; i < spec.n_levels - 1; ++i) {
            spec.gaps.push_back(gap_draw(rng));
        }
        spec.spacing = eps_draw(rng);

        ControlField field;
        field.grid = TimeGrid{5.0, 200};
        std::uniform_real_distribution<double> lam_draw(-spec.spacing, 2.0 * spec.spacing);
        for (int j = 0; j < 200; ++j) {
            field.values.push_back(lam_draw(rng));
        }

        const Trajectory traj = propagate(spec, field, basis_state(spec.n_levels, 0));
        for (const QuantumState& psi : traj.states) {
            CHECK(std::abs(psi.norm() - 1.0) <= 1e-10);
        }
    }
}

TEST_CASE("propagator steps compose") {
    const SystemSpec spec = three_level();
    const ControlField field = oracle_field();
    const Trajectory whole = propagate(spec, field, basis_state(3, 0));

    // Restart from the midpoint state; the tail must reproduce the full run.
    ControlField tail;
    tail.grid = TimeGrid{1.0, 8};
    tail.values.assign(field.values.begin() + 8, field.values.end());
    const Trajectory second = propagate(spec, tail, whole.states[8]);
    CHECK((second.states.back() - whole.states.back()).norm() <= 1e-13);
}

TEST_CASE("two-level resonant transfer completes at pi over the gap") {
    SystemSpec spec;
    spec.n_levels = 2;
    spec.gaps = {0.9};
    spec.spacing = 5.0;

    ControlField field;
    field.grid = TimeGrid{pi / 0.9, 40};
    field.values.assign(40, 0.0);  // hold the crossing

    const Trajectory traj = propagate(spec, field, basis_state(2, 0));
    CHECK(infidelity(traj.states.back(), basis_state(2, 1)) <= 1e-10);

    // Halfway through, the populations are split evenly.
    const Eigen::MatrixXd pops = populations(traj);
    CHECK(pops(20, 0) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(pops(20, 1) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("population rows sum to one") {
    const Trajectory traj = propagate(three_level(), oracle_field(), basis_state(3, 0));
    const Eigen::MatrixXd pops = populations(traj);
    REQUIRE(pops.rows() == 17);
    REQUIRE(pops.cols() == 3);
    for (int j = 0; j < pops.rows(); ++j) {
        CHECK(pops.row(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("infidelity is clamped and phase-invariant") {
    const QuantumState a = basis_state(2, 0);
    QuantumState b = a * std::polar(1.0, 0.83);
    CHECK(infidelity(a, a) == 0.0);
    CHECK(infidelity(b, a) <= 1e-15);
    CHECK(infidelity(basis_state(2, 0), basis_state(2, 1)) == 1.0);
}

TEST_CASE("mt bound equals pi over the gap for the resonant two-level pair") {
    SystemSpec spec;
    spec.n_levels = 2;
    spec.gaps = {1.0};
    spec.spacing = 5.0;

    // At the crossing the energy spread in a diabatic state is gap/2 and the
    // states are orthogonal, so the bound is (pi/2) / (gap/2) = pi/gap.
    const auto bound = mt_bound(spec, 0.0, basis_state(2, 0), basis_state(2, 1));
    REQUIRE(bound.has_value());
    CHECK(std::abs(*bound - pi) <= 1e-12);
}

TEST_CASE("mt bound degenerates cleanly at zero energy spread") {
    SystemSpec spec;
    spec.n_levels = 2;
    spec.gaps = {1e-300};  // effectively uncoupled levels
    spec.spacing = 5.0;

    // A diabatic state of an essentially uncoupled pair has no energy spread,
    // so no finite time bound exists for reaching the orthogonal partner.
    CHECK_FALSE(mt_bound(spec, 3.0, basis_state(2, 0), basis_state(2, 1)).has_value());

    // Identical states need no evolution at all.
    const auto zero = mt_bound(spec, 3.0, basis_state(2, 0), basis_state(2, 0));
    REQUIRE(zero.has_value());
    CHECK(*zero == 0.0);
}

TEST_CASE("grid and field validation reject malformed inputs") {
    CHECK_THROWS_AS((TimeGrid{0.0, 4}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((TimeGrid{1.0, 0}.validate()), std::invalid_argument);

    ControlField field;
    field.grid = TimeGrid{1.0, 4};
    field.values = {0.0, 1.0};
    CHECK_THROWS_AS(field.validate(), std::invalid_argument);

    field.values = {0.0, 1.0, std::nan(""), 2.0};
    CHECK_THROWS_AS(field.validate(), std::invalid_argument);
}
