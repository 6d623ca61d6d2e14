// Structure and spectrum of the N-level ladder Hamiltonian.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qsl/model.hpp"

#include <cmath>

using namespace qsl;

namespace {

SystemSpec four_level() {
    SystemSpec spec;
    spec.n_levels = 4;
    spec.gaps = {1.0, 0.7, 1.3};
    spec.spacing = 10.0;
    return spec;
}

}  // namespace

TEST_CASE("hamiltonian has the stated tridiagonal structure") {
    const SystemSpec spec = four_level();
    const double lambda = 3.7;
    const Eigen::MatrixXcd h = build_hamiltonian(spec, lambda);

    REQUIRE(h.rows() == 4);
    REQUIRE(h.cols() == 4);

    // Even diabatic levels carry lambda - n*eps0, odd levels sit at n*eps0.
    CHECK(h(0, 0).real() == doctest::Approx(lambda).epsilon(1e-15));
    CHECK(h(1, 1).real() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(h(2, 2).real() == doctest::Approx(lambda - 10.0).epsilon(1e-15));
    CHECK(h(3, 3).real() == doctest::Approx(10.0).epsilon(1e-15));

    for (int i = 0; i < 3; ++i) {
        CHECK(h(i, i + 1).real() == doctest::Approx(spec.gaps[i] / 2.0).epsilon(1e-15));
        CHECK(h(i + 1, i).real() == doctest::Approx(spec.gaps[i] / 2.0).epsilon(1e-15));
    }
    CHECK(h(0, 2) == std::complex<double>(0.0, 0.0));
    CHECK(h(0, 3) == std::complex<double>(0.0, 0.0));
    CHECK(h(1, 3) == std::complex<double>(0.0, 0.0));
    CHECK(h.imag().cwiseAbs().maxCoeff() == 0.0);
    CHECK(is_hermitian(h));
}

TEST_CASE("eigenvalues match an independent diagonalization") {
    // Reference spectrum computed with numpy.linalg.eigvalsh for the same
    // matrix (N=4, gaps {1.0, 0.7, 1.3}, eps0=10, lambda=3.7).
    const double expected[] = {
        -6.345230378786062,
        -0.047254984180066475,
        3.7665867768520886,
        10.025898586114044,
    };
    const std::vector<double> spectrum = eigen_spectrum(four_level(), 3.7);
    REQUIRE(spectrum.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(spectrum[i] == doctest::Approx(expected[i]).epsilon(1e-13));
    }
}

TEST_CASE("two-level spectrum at the crossing is plus-minus half the gap") {
    SystemSpec spec;
    spec.n_levels = 2;
    spec.gaps = {1.0};
    spec.spacing = 5.0;
    const std::vector<double> spectrum = eigen_spectrum(spec, 0.0);
    REQUIRE(spectrum.size() == 2);
    CHECK(spectrum[0] == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(spectrum[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("minimum gap at a crossing approaches the coupling for isolated crossings") {
    SystemSpec spec;
    spec.n_levels = 3;
    spec.gaps = {1.0, 0.6};
    spec.spacing = 1000.0;
    // At lambda = spacing the levels 1 and 2 are degenerate before coupling;
    // the spectator level sits eps0 higher, so its repulsion is O(gap^2/eps0)
    // and the crossing pair is the two lowest eigenvalues.
    const std::vector<double> spectrum = eigen_spectrum(spec, spec.spacing);
    const double gap = spectrum[1] - spectrum[0];
    CHECK(gap == doctest::Approx(0.6).epsilon(1e-4));
}

TEST_CASE("coupling derivative is the projector onto even diabatic states") {
    const Eigen::MatrixXcd p = coupling_derivative(four_level());
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const double expected = (i == j && i % 2 == 0) ? 1.0 : 0.0;
            CHECK(p(i, j).real() == expected);
            CHECK(p(i, j).imag() == 0.0);
        }
    }
}

TEST_CASE("diabatic energies follow the ladder pattern") {
    const Eigen::VectorXd d = diabatic_energies(four_level(), -2.5);
    CHECK(d(0) == -2.5);
    CHECK(d(1) == 0.0);
    CHECK(d(2) == -12.5);
    CHECK(d(3) == 10.0);

    const Eigen::VectorXd sub = coupling_subdiagonal(four_level());
    REQUIRE(sub.size() == 3);
    CHECK(sub(0) == 0.5);
    CHECK(sub(1) == 0.35);
    CHECK(sub(2) == 0.65);
}

TEST_CASE("validation rejects malformed systems") {
    SystemSpec spec = four_level();

    SUBCASE("too few levels") {
        spec.n_levels = 1;
        spec.gaps = {};
        CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    }
    SUBCASE("gap count mismatch") {
        spec.gaps = {1.0, 0.7};
        CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    }
    SUBCASE("nonpositive gap") {
        spec.gaps[1] = 0.0;
        CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    }
    SUBCASE("nonpositive spacing") {
        spec.spacing = -1.0;
        CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    }
    SUBCASE("well-formed spec passes") {
        CHECK_NOTHROW(spec.validate());
        CHECK(spec.min_gap() == 0.7);
    }
}
