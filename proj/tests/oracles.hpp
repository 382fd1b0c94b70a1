#ifndef RESPWAVE_TEST_ORACLES_HPP
#define RESPWAVE_TEST_ORACLES_HPP

// Independent reference implementations used only by tests. These must stay
// naive and self-contained: they are the second route that checks the
// library's own code paths.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <vector>

namespace oracles {

// Direct O(n^2) DFT, one std::cos/std::sin per term (no twiddle tables).
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double angle = 2.0 * M_PI * static_cast<double>(k) * static_cast<double>(j) /
                                 static_cast<double>(n);
            re += x[j] * std::cos(angle);
            im -= x[j] * std::sin(angle);
        }
        out[k] = {re, im};
    }
    return out;
}

inline std::vector<double> naive_dft_magnitude(const std::vector<double>& x) {
    const auto spec = naive_dft(x);
    std::vector<double> mags(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) mags[k] = std::abs(spec[k]);
    return mags;
}

// Dominant non-DC bin frequency (Hz) restricted to (0, f_max], lowest bin on ties.
inline double naive_peak_frequency(const std::vector<double>& x, double fs, double f_max) {
    const auto mags = naive_dft_magnitude(x);
    const double bin_hz = fs / static_cast<double>(x.size());
    std::size_t best = 0;
    double best_mag = 0.0;
    for (std::size_t k = 1; k < mags.size(); ++k) {
        if (k * bin_hz > f_max) break;
        if (mags[k] > best_mag) {
            best_mag = mags[k];
            best = k;
        }
    }
    return static_cast<double>(best) * bin_hz;
}

// Power of x at frequency f via single-bin correlation (length must hold an
// integer number of cycles for exactness).
inline double tone_power(const std::vector<double>& x, double fs, double f) {
    double re = 0.0, im = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double angle = 2.0 * M_PI * f * static_cast<double>(j) / fs;
        re += x[j] * std::cos(angle);
        im -= x[j] * std::sin(angle);
    }
    const double scale = 2.0 / static_cast<double>(x.size());
    return (re * re + im * im) * scale * scale / 2.0;  // mean-square of the tone
}

// Naive dilated "same" cross-correlation for a single in/out channel pair.
inline std::vector<double> direct_conv1d(const std::vector<double>& x,
                                         const std::vector<double>& kernel, double bias,
                                         int dilation) {
    const int n = static_cast<int>(x.size());
    const int k = static_cast<int>(kernel.size());
    const int center = (k - 1) / 2;
    std::vector<double> out(x.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = bias;
        for (int j = 0; j < k; ++j) {
            const int src = i + (j - center) * dilation;
            if (src >= 0 && src < n) acc += kernel[j] * x[src];
        }
        out[i] = acc;
    }
    return out;
}

inline double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double acc = 0.0;
    for (const double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size() - 1);
}

}  // namespace oracles

#endif
