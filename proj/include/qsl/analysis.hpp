// analysis.hpp — Optimized-field post-processing: baselines, spectra, speed-up fits

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qsl/dynamics.hpp"

namespace qsl {

// One-sided amplitude spectrum of a field's oscillatory part. Amplitudes are
// taper-corrected so a pure sinusoid reports its real amplitude.
struct FieldSpectrum {
    std::vector<double> frequencies;  // cycles per unit time, ascending from 0
    std::vector<double> amplitudes;   // matching, nonnegative
    // Carrier estimate: the strongest non-DC local maximum, except that a
    // second comparable local maximum nearby marks a sideband pair split by
    // amplitude modulation, in which case the midpoint of the two lobes is
    // reported. Absent when the residual is numerically zero.
    std::optional<double> dominant_frequency;
    double max_amplitude = 0.0;  // max |field - baseline| over the record
};

// Fit of the per-added-level saving tau in t_qsl(N) = (N-1)pi/gap - (N-2)tau,
// with the implied speed-up curve beta(N) = 1 - ((N-2)/(N-1)) * (tau*gap/pi).
struct SpeedupFit {
    double tau = 0.0;
    std::vector<std::pair<int, double>> beta_curve;  // (N, beta)
    std::vector<double> residuals;  // (t_qsl - model) / T_S per input point
    bool speedup_absent = false;    // tau came out negative
};

// Centered moving average of the field samples (window truncated at the
// record edges). The residual field - baseline is the oscillatory part.
ControlField extract_baseline(const ControlField& field, int window);

// Detrend with extract_baseline, Hann-taper the residual, and transform.
// max_amplitude is the peak residual magnitude over the record.
FieldSpectrum field_spectrum(const ControlField& field, int window);

// Baseline window covering one oscillation period at frequency spacing/2pi,
// rounded to an odd sample count and capped at half the record so the choice
// stays valid on short records. One period is the narrowest window whose
// moving average passes the oscillation itself untouched while still pinning
// the slow baseline; wider windows let the switching transients of a stepped
// baseline leak into the oscillation band.
int default_baseline_window(double spacing, double dt, int n_steps);

SpeedupFit fit_beta_tau(const std::vector<std::pair<int, double>>& points, double gap);

// Least-squares beta in t_qsl = beta * (pi/delta_a + pi/delta_b); returns
// beta and per-point relative residuals (t_qsl - model) / model.
std::pair<double, std::vector<double>> gap_scaling_fit(
    const std::vector<std::pair<double, double>>& points, double delta_a);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Ordinary least-squares line through (x, y) points.
LineFit linearity_check(const std::vector<std::pair<double, double>>& points);

}  // namespace qsl
