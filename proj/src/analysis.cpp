// analysis.cpp — Baseline extraction, residual spectra, and scaling-law fits

#include "qsl/analysis.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>

namespace qsl {

namespace {

constexpr double pi = std::numbers::pi;

// Sideband-merge gates: a second spectral lobe counts as the mirror sideband
// of the strongest one when it reaches this fraction of its amplitude and
// sits within this many bins of it.
constexpr double sideband_amplitude_fraction = 0.6;
constexpr int sideband_max_separation_bins = 4;

}  // namespace

ControlField extract_baseline(const ControlField& field, int window) {
    field.validate();
    if (window < 3 || window % 2 == 0) {
        throw std::invalid_argument("extract_baseline: window must be odd and at least 3");
    }
    const int m = field.grid.n_steps;
    if (window > m / 2) {
        throw std::invalid_argument("extract_baseline: window of " + std::to_string(window) +
                                    " samples exceeds half the record (" + std::to_string(m) +
                                    " samples)");
    }

    std::vector<double> prefix(m + 1, 0.0);
    for (int i = 0; i < m; ++i) {
        prefix[i + 1] = prefix[i] + field.values[i];
    }
    const int half = window / 2;
    ControlField baseline = field;
    for (int i = 0; i < m; ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(m - 1, i + half);
        baseline.values[i] = (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1);
    }
    return baseline;
}

FieldSpectrum field_spectrum(const ControlField& field, int window) {
    const ControlField baseline = extract_baseline(field, window);
    const int m = field.grid.n_steps;
    const double dt = field.grid.dt();

    std::vector<double> residual(m);
    double peak = 0.0;
    double field_scale = 1.0;
    for (int i = 0; i < m; ++i) {
        residual[i] = field.values[i] - baseline.values[i];
        peak = std::max(peak, std::abs(residual[i]));
        field_scale = std::max(field_scale, std::abs(field.values[i]));
    }

    FieldSpectrum spectrum;
    spectrum.max_amplitude = peak;
    const int bins = m / 2 + 1;
    spectrum.frequencies.resize(bins);
    spectrum.amplitudes.assign(bins, 0.0);
    for (int k = 0; k < bins; ++k) {
        spectrum.frequencies[k] = k / (m * dt);
    }
    if (peak <= 1e-12 * field_scale) {
        return spectrum;  // no oscillation: flat zero spectrum, no dominant bin
    }

    std::vector<double> tapered(m);
    double taper_sum = 0.0;
    for (int i = 0; i < m; ++i) {
        const double w = 0.5 * (1.0 - std::cos(2.0 * pi * i / (m - 1)));
        tapered[i] = residual[i] * w;
        taper_sum += w;
    }

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> transform;
    fft.fwd(transform, tapered);

    for (int k = 0; k < bins; ++k) {
        const bool shared_bin = k == 0 || 2 * k == m;  // DC and Nyquist have no mirror
        spectrum.amplitudes[k] = (shared_bin ? 1.0 : 2.0) * std::abs(transform[k]) / taper_sum;
    }

    // Non-DC local maxima, strongest first. Amplitude modulation with a sign
    // flip between segments splits a carrier line into two sidebands with a
    // notch in between; the raw peak then sits one sideband off the carrier.
    // When a second comparable lobe is found near the strongest one, the
    // carrier is the midpoint of the pair. A clean single tone produces one
    // lobe and reduces to the plain peak bin.
    std::vector<int> maxima;
    for (int k = 1; k < bins; ++k) {
        const double left = k > 1 ? spectrum.amplitudes[k - 1] : 0.0;
        const double right = k + 1 < bins ? spectrum.amplitudes[k + 1] : 0.0;
        if (spectrum.amplitudes[k] >= left && spectrum.amplitudes[k] >= right) {
            maxima.push_back(k);
        }
    }
    std::sort(maxima.begin(), maxima.end(), [&](int a, int b) {
        if (spectrum.amplitudes[a] != spectrum.amplitudes[b]) {
            return spectrum.amplitudes[a] > spectrum.amplitudes[b];
        }
        return a < b;
    });
    const int lobe = maxima.front();
    spectrum.dominant_frequency = spectrum.frequencies[lobe];
    for (std::size_t j = 1; j < maxima.size(); ++j) {
        const int other = maxima[j];
        if (spectrum.amplitudes[other] >= sideband_amplitude_fraction * spectrum.amplitudes[lobe] &&
            std::abs(other - lobe) <= sideband_max_separation_bins) {
            spectrum.dominant_frequency =
                0.5 * (spectrum.frequencies[lobe] + spectrum.frequencies[other]);
            break;
        }
    }
    return spectrum;
}

int default_baseline_window(double spacing, double dt, int n_steps) {
    if (!(spacing > 0.0) || !(dt > 0.0) || n_steps < 1) {
        throw std::invalid_argument(
            "default_baseline_window: spacing, dt, and n_steps must be positive");
    }
    const double period = 2.0 * pi / spacing;
    int window = static_cast<int>(std::lround(period / dt));
    if (window % 2 == 0) {
        window += 1;
    }
    int cap = n_steps / 2;
    if (cap % 2 == 0) {
        cap -= 1;
    }
    return std::max(std::min(window, cap), 3);
}

SpeedupFit fit_beta_tau(const std::vector<std::pair<int, double>>& points, double gap) {
    if (!(gap > 0.0)) {
        throw std::invalid_argument("fit_beta_tau: gap must be positive");
    }
    std::set<int> levels;
    for (const auto& [n, t] : points) {
        if (n < 2) {
            throw std::invalid_argument("fit_beta_tau: N must be at least 2");
        }
        levels.insert(n);
    }
    if (levels.size() < 3) {
        throw std::invalid_argument("fit_beta_tau: need at least 3 distinct N");
    }

    // Least squares for tau in t = (N-1)pi/gap - (N-2)tau; N=2 points have
    // zero design weight and only contribute to the residual list.
    double numerator = 0.0;
    double denominator = 0.0;
    for (const auto& [n, t] : points) {
        const double x = n - 2;
        const double sudden = (n - 1) * pi / gap;
        numerator += x * (sudden - t);
        denominator += x * x;
    }
    SpeedupFit fit;
    fit.tau = numerator / denominator;
    fit.speedup_absent = fit.tau < 0.0;

    for (int n : levels) {
        fit.beta_curve.emplace_back(n, 1.0 - (double(n - 2) / (n - 1)) * (fit.tau * gap / pi));
    }
    fit.residuals.reserve(points.size());
    for (const auto& [n, t] : points) {
        const double sudden = (n - 1) * pi / gap;
        const double model = sudden - (n - 2) * fit.tau;
        fit.residuals.push_back((t - model) / sudden);
    }
    return fit;
}

std::pair<double, std::vector<double>> gap_scaling_fit(
    const std::vector<std::pair<double, double>>& points, double delta_a) {
    if (!(delta_a > 0.0)) {
        throw std::invalid_argument("gap_scaling_fit: delta_a must be positive");
    }
    if (points.size() < 3) {
        throw std::invalid_argument("gap_scaling_fit: need at least 3 points");
    }
    double numerator = 0.0;
    double denominator = 0.0;
    for (const auto& [delta_b, t] : points) {
        if (!(delta_b > 0.0) || !(t > 0.0)) {
            throw std::invalid_argument("gap_scaling_fit: gaps and times must be positive");
        }
        const double sudden = pi / delta_a + pi / delta_b;
        numerator += t * sudden;
        denominator += sudden * sudden;
    }
    const double beta = numerator / denominator;
    std::vector<double> residuals;
    residuals.reserve(points.size());
    for (const auto& [delta_b, t] : points) {
        const double model = beta * (pi / delta_a + pi / delta_b);
        residuals.push_back((t - model) / model);
    }
    return {beta, residuals};
}

LineFit linearity_check(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) {
        throw std::invalid_argument("linearity_check: need at least 3 points");
    }
    const double n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double var_x = sxx - sx * sx / n;
    if (var_x == 0.0) {
        throw std::invalid_argument("linearity_check: all x values coincide");
    }
    LineFit fit;
    fit.slope = (sxy - sx * sy / n) / var_x;
    fit.intercept = (sy - fit.slope * sx) / n;

    double ss_res = 0.0, ss_tot = 0.0;
    const double mean_y = sy / n;
    for (const auto& [x, y] : points) {
        const double predicted = fit.slope * x + fit.intercept;
        ss_res += (y - predicted) * (y - predicted);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    fit.r_squared = ss_tot == 0.0 ? (ss_res == 0.0 ? 1.0 : 0.0) : 1.0 - ss_res / ss_tot;
    return fit;
}

}  // namespace qsl
