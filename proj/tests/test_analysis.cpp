// Baseline extraction, residual spectra with the sideband-pair carrier
// estimate, and the scaling-law fits.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qsl/analysis.hpp"

#include <cmath>
#include <numbers>

using namespace qsl;

namespace {

constexpr double pi = std::numbers::pi;

ControlField make_field(double duration, int n_steps) {
    ControlField field;
    field.grid = TimeGrid{duration, n_steps};
    field.values.assign(n_steps, 0.0);
    return field;
}

}  // namespace

TEST_CASE("moving-average baseline reproduces a linear ramp away from the edges") {
    ControlField field = make_field(1.0, 40);
    for (int i = 0; i < 40; ++i) field.values[i] = 2.0 + 0.5 * i;

    const ControlField baseline = extract_baseline(field, 5);
    for (int i = 2; i < 38; ++i) {
        CHECK(baseline.values[i] == doctest::Approx(field.values[i]).epsilon(1e-12));
    }
    // Truncated edge windows average fewer samples on one side.
    CHECK(baseline.values[0] == doctest::Approx(2.0 + 0.5).epsilon(1e-12));
    CHECK(baseline.values[39] == doctest::Approx(2.0 + 0.5 * 38.0).epsilon(1e-12));
}

TEST_CASE("baseline windows are validated against the record") {
    const ControlField field = make_field(1.0, 40);
    CHECK_THROWS_WITH_AS(extract_baseline(field, 4),
                         doctest::Contains("window must be odd and at least 3"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(extract_baseline(field, 1),
                         doctest::Contains("window must be odd and at least 3"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(extract_baseline(field, 25),
                         doctest::Contains("exceeds half the record (40 samples)"),
                         std::invalid_argument);
    CHECK_NOTHROW(extract_baseline(field, 19));
}

TEST_CASE("a tone over a stepped baseline is recovered at its exact bin") {
    // Tanh step plus an on-bin tone whose period equals the baseline window,
    // so the moving average passes the tone untouched.
    const int m = 300;
    ControlField field = make_field(3.0, m);
    const double amp = 0.8;
    const double freq = 1.0 / 0.15;  // bin 20 of a 3.0-long record
    for (int i = 0; i < m; ++i) {
        const double t = field.grid.midpoint(i);
        field.values[i] =
            2.5 + 2.5 * std::tanh((t - 1.5) / 0.3) + amp * std::sin(2.0 * pi * freq * t + 0.7);
    }

    const FieldSpectrum spectrum = field_spectrum(field, 15);
    REQUIRE(spectrum.dominant_frequency.has_value());
    CHECK(*spectrum.dominant_frequency == spectrum.frequencies[20]);
    CHECK(spectrum.frequencies[20] == doctest::Approx(freq).epsilon(1e-12));
    CHECK(spectrum.amplitudes[20] == doctest::Approx(amp).epsilon(0.05));
    CHECK(spectrum.max_amplitude == doctest::Approx(amp).epsilon(0.05));
}

TEST_CASE("well-separated tones are not merged into a sideband pair") {
    const int m = 256;
    ControlField field = make_field(2.56, m);
    const double f1 = 20.0 / 2.56;
    const double f2 = 60.0 / 2.56;
    for (int i = 0; i < m; ++i) {
        const double t = field.grid.midpoint(i);
        field.values[i] =
            5.0 + 1.0 * std::sin(2.0 * pi * f1 * t) + 0.9 * std::sin(2.0 * pi * f2 * t + 0.4);
    }

    const FieldSpectrum spectrum = field_spectrum(field, 25);
    REQUIRE(spectrum.dominant_frequency.has_value());
    CHECK(*spectrum.dominant_frequency == spectrum.frequencies[20]);
    CHECK(spectrum.amplitudes[20] >= 0.9);
    CHECK(spectrum.amplitudes[60] == doctest::Approx(0.9).epsilon(0.1));
}

TEST_CASE("a close second lobe below the amplitude gate does not shift the carrier") {
    const int m = 256;
    ControlField field = make_field(2.56, m);
    const double f1 = 30.0 / 2.56;
    const double f2 = 33.0 / 2.56;  // 3 bins away, half the amplitude
    for (int i = 0; i < m; ++i) {
        const double t = field.grid.midpoint(i);
        field.values[i] =
            1.0 * std::sin(2.0 * pi * f1 * t) + 0.5 * std::sin(2.0 * pi * f2 * t + 1.1);
    }

    const FieldSpectrum spectrum = field_spectrum(field, 25);
    REQUIRE(spectrum.dominant_frequency.has_value());
    CHECK(*spectrum.dominant_frequency == spectrum.frequencies[30]);
}

TEST_CASE("an antiphase-modulated carrier is recovered as the sideband midpoint") {
    // A sign flip between halves of the record splits the carrier line into
    // sidebands at one bin on either side with a notch at the carrier itself.
    const int m = 4096;
    ControlField field = make_field(40.96, m);
    const double carrier = 512.0 / 40.96;
    for (int i = 0; i < m; ++i) {
        const double t = field.grid.midpoint(i);
        const double envelope = i < m / 2 ? 1.0 : -1.0;
        field.values[i] = envelope * std::sin(2.0 * pi * carrier * t);
    }

    const FieldSpectrum spectrum = field_spectrum(field, 9);
    REQUIRE(spectrum.dominant_frequency.has_value());
    CHECK(*spectrum.dominant_frequency == doctest::Approx(carrier).epsilon(1e-9));
    // The notch: the carrier bin itself is weaker than both sidebands.
    CHECK(spectrum.amplitudes[512] < spectrum.amplitudes[511]);
    CHECK(spectrum.amplitudes[512] < spectrum.amplitudes[513]);
}

TEST_CASE("a constant field has an empty spectrum and no dominant bin") {
    ControlField field = make_field(1.0, 40);
    field.values.assign(40, 3.7);
    const FieldSpectrum spectrum = field_spectrum(field, 9);
    CHECK_FALSE(spectrum.dominant_frequency.has_value());
    // The reported peak residual is the honest float-level remainder of the
    // baseline subtraction, bounded by the silence threshold.
    CHECK(spectrum.max_amplitude <= 1e-12 * 3.7);
    for (double a : spectrum.amplitudes) CHECK(a == 0.0);
}

TEST_CASE("default baseline window covers one oscillation period") {
    // spacing 10, dt 0.01: period 2pi/10 spans 62.8 samples, rounded odd.
    CHECK(default_baseline_window(10.0, 0.01, 597) == 63);
    // Capped at the largest odd count not exceeding half the record.
    CHECK(default_baseline_window(10.0, 0.01, 100) == 49);
    // Rounded up to the smallest legal window on very coarse sampling.
    CHECK(default_baseline_window(1000.0, 0.01, 597) == 3);
    // Even round-off is bumped to the next odd count.
    CHECK(default_baseline_window(10.0, 0.0157, 597) == 41);
    CHECK_THROWS_AS(default_baseline_window(0.0, 0.01, 100), std::invalid_argument);
    CHECK_THROWS_AS(default_baseline_window(10.0, 0.01, 0), std::invalid_argument);
}

TEST_CASE("per-added-level saving is recovered exactly from synthetic scan times") {
    const double gap = 1.0;
    const double tau = 0.7;
    std::vector<std::pair<int, double>> points;
    for (int n = 2; n <= 6; ++n) {
        points.emplace_back(n, (n - 1) * pi / gap - (n - 2) * tau);
    }

    const SpeedupFit fit = fit_beta_tau(points, gap);
    CHECK(fit.tau == doctest::Approx(tau).epsilon(1e-12));
    CHECK_FALSE(fit.speedup_absent);
    for (double r : fit.residuals) CHECK(std::abs(r) <= 1e-14);

    REQUIRE(fit.beta_curve.size() == 5);
    CHECK(fit.beta_curve.front().first == 2);
    CHECK(fit.beta_curve.front().second == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.beta_curve.back().first == 6);
    CHECK(fit.beta_curve.back().second ==
          doctest::Approx(1.0 - 0.8 * tau * gap / pi).epsilon(1e-12));
}

TEST_CASE("scan times above the reference mark the speed-up as absent") {
    std::vector<std::pair<int, double>> points;
    for (int n = 2; n <= 5; ++n) {
        points.emplace_back(n, (n - 1) * pi + (n - 2) * 0.1);
    }
    const SpeedupFit fit = fit_beta_tau(points, 1.0);
    CHECK(fit.tau == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(fit.speedup_absent);
}

TEST_CASE("saving fit validates its inputs") {
    CHECK_THROWS_WITH_AS(fit_beta_tau({{2, 3.0}, {3, 6.0}, {4, 9.0}}, 0.0),
                         doctest::Contains("gap must be positive"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(fit_beta_tau({{1, 3.0}, {3, 6.0}, {4, 9.0}}, 1.0),
                         doctest::Contains("N must be at least 2"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(fit_beta_tau({{2, 3.0}, {3, 6.0}, {3, 6.1}}, 1.0),
                         doctest::Contains("at least 3 distinct N"), std::invalid_argument);
}

TEST_CASE("two-crossing scaling fit recovers a proportional law exactly") {
    const double delta_a = 1.0;
    std::vector<std::pair<double, double>> points;
    for (double delta_b : {0.5, 1.0, 2.0}) {
        points.emplace_back(delta_b, 0.9 * (pi / delta_a + pi / delta_b));
    }
    const auto [beta, residuals] = gap_scaling_fit(points, delta_a);
    CHECK(beta == doctest::Approx(0.9).epsilon(1e-12));
    for (double r : residuals) CHECK(std::abs(r) <= 1e-14);

    CHECK_THROWS_AS(gap_scaling_fit(points, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(gap_scaling_fit({{1.0, 3.0}, {2.0, 5.0}}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(gap_scaling_fit({{1.0, 3.0}, {-2.0, 5.0}, {0.5, 9.0}}, 1.0),
                    std::invalid_argument);
}

TEST_CASE("least-squares line recovers exact linear data") {
    std::vector<std::pair<double, double>> points;
    for (double x : {0.0, 1.0, 2.0, 3.0}) points.emplace_back(x, 2.0 * x + 1.0);
    const LineFit fit = linearity_check(points);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_WITH_AS(linearity_check({{1.0, 0.0}, {1.0, 1.0}, {1.0, 2.0}}),
                         doctest::Contains("all x values coincide"), std::invalid_argument);
    CHECK_THROWS_AS(linearity_check({{1.0, 0.0}, {2.0, 1.0}}), std::invalid_argument);
}
