#include "respwave/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>

#include "respwave/errors.hpp"

namespace respwave::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

// cos/sin of 2*pi*m/n for m in [0, n); cos(2*pi*k*j/n) = table[(k*j) % n].
struct TwiddleTable {
    std::vector<double> cos_t;
    std::vector<double> sin_t;
    explicit TwiddleTable(int n) : cos_t(n), sin_t(n) {
        for (int m = 0; m < n; ++m) {
            const double a = 2.0 * kPi * m / n;
            cos_t[m] = std::cos(a);
            sin_t[m] = std::sin(a);
        }
    }
};

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = kPi * x;
    return std::sin(px) / px;
}

// Rational p/q = fs_out/fs_in in lowest terms. Rates must be rational with
// at most 6 decimal places.
std::pair<std::int64_t, std::int64_t> rate_ratio(double fs_in, double fs_out) {
    constexpr double kScale = 1e6;
    const auto to_int = [](double fs) {
        const double scaled = fs * kScale;
        const auto n = static_cast<std::int64_t>(std::llround(scaled));
        if (std::abs(scaled - static_cast<double>(n)) > 1e-3 || n <= 0)
            throw ValidationError("sampling rate is not a usable rational: " + std::to_string(fs));
        return n;
    };
    std::int64_t a = to_int(fs_in);
    std::int64_t b = to_int(fs_out);
    const std::int64_t g = std::gcd(a, b);
    return {b / g, a / g};  // p, q
}

}  // namespace

DftSpectrum dft_real(const std::vector<double>& signal) {
    const int n = static_cast<int>(signal.size());
    if (n == 0) throw ValidationError("dft_real: empty signal");
    const int bins = n / 2 + 1;
    TwiddleTable tw(n);
    DftSpectrum out;
    out.re.assign(bins, 0.0);
    out.im.assign(bins, 0.0);
    for (int k = 0; k < bins; ++k) {
        double re = 0.0, im = 0.0;
        std::int64_t idx = 0;
        for (int j = 0; j < n; ++j) {
            re += signal[j] * tw.cos_t[idx];
            im -= signal[j] * tw.sin_t[idx];
            idx += k;
            if (idx >= n) idx -= n;
        }
        out.re[k] = re;
        out.im[k] = im;
    }
    return out;
}

std::vector<double> dft_real_adjoint(const std::vector<double>& grad_re,
                                     const std::vector<double>& grad_im, int length) {
    if (length <= 0) throw ValidationError("dft_real_adjoint: non-positive length");
    const int bins = length / 2 + 1;
    if (static_cast<int>(grad_re.size()) != bins || static_cast<int>(grad_im.size()) != bins)
        throw ValidationError("dft_real_adjoint: gradient size does not match bin count");
    TwiddleTable tw(length);
    std::vector<double> out(length, 0.0);
    for (int k = 0; k < bins; ++k) {
        const double gr = grad_re[k];
        const double gi = grad_im[k];
        if (gr == 0.0 && gi == 0.0) continue;
        std::int64_t idx = 0;
        for (int j = 0; j < length; ++j) {
            out[j] += gr * tw.cos_t[idx] - gi * tw.sin_t[idx];
            idx += k;
            if (idx >= length) idx -= length;
        }
    }
    return out;
}

std::vector<double> design_lowpass_fir(double fs, double cutoff) {
    if (!(cutoff > 0.0) || !(cutoff < fs / 2.0))
        throw ValidationError("lowpass cutoff must satisfy 0 < cutoff < fs/2");
    // Hamming transition width ~3.3*fs/M. Cutoff centered at 1.4*fc with
    // transition 1.2*fc puts the stopband edge at 2*fc (attenuation ~53 dB
    // there, squared to ~106 dB by the forward-backward pass).
    const double fc_design = 1.4 * cutoff;
    const double transition = 1.2 * cutoff;
    int taps = static_cast<int>(std::ceil(3.3 * fs / transition));
    if (taps % 2 == 0) ++taps;
    if (taps < 5) taps = 5;
    const int center = (taps - 1) / 2;
    const double fc_n = fc_design / fs;
    std::vector<double> h(taps);
    for (int j = 0; j < taps; ++j) {
        const double w = 0.54 - 0.46 * std::cos(2.0 * kPi * j / (taps - 1));
        h[j] = 2.0 * fc_n * sinc(2.0 * fc_n * (j - center)) * w;
    }
    const double sum = std::accumulate(h.begin(), h.end(), 0.0);
    for (double& v : h) v /= sum;
    return h;
}

std::vector<double> lowpass(const std::vector<double>& signal, double fs, double cutoff) {
    const std::vector<double> h = design_lowpass_fir(fs, cutoff);
    const int n = static_cast<int>(signal.size());
    const int m = static_cast<int>(h.size());
    const auto causal = [&](const std::vector<double>& x) {
        std::vector<double> y(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            const int jmax = std::min(m - 1, i);
            for (int j = 0; j <= jmax; ++j) acc += h[j] * x[i - j];
            y[i] = acc;
        }
        return y;
    };
    std::vector<double> y = causal(signal);
    std::reverse(y.begin(), y.end());
    y = causal(y);
    std::reverse(y.begin(), y.end());
    return y;
}

std::vector<double> resample(const std::vector<double>& signal, double fs_in, double fs_out) {
    if (!(fs_out > 0.0) || fs_in < fs_out)
        throw ValidationError("resample supports fs_in >= fs_out > 0 only");
    if (fs_in == fs_out) return signal;

    const auto [p, q] = rate_ratio(fs_in, fs_out);
    if (p > 64) throw ValidationError("resample: upsampling factor too large for rates given");

    const auto n = static_cast<std::int64_t>(signal.size());
    const std::int64_t n_out = n * p / q;
    std::vector<double> out(static_cast<std::size_t>(std::max<std::int64_t>(n_out, 0)));
    if (out.empty()) return out;

    // Anti-alias filter in the upsampled domain (rate fs_in*p): stopband edge
    // at fs_out/2 so nothing folds into the retained band.
    const double fs_up = fs_in * static_cast<double>(p);
    const double fc_design = 0.4 * fs_out;
    const double transition = 0.2 * fs_out;
    int taps = static_cast<int>(std::ceil(3.3 * fs_up / transition));
    if (taps % 2 == 0) ++taps;
    const int center = (taps - 1) / 2;
    const double fc_n = fc_design / fs_up;
    std::vector<double> h(taps);
    for (int j = 0; j < taps; ++j) {
        const double w = 0.54 - 0.46 * std::cos(2.0 * kPi * j / (taps - 1));
        h[j] = 2.0 * fc_n * sinc(2.0 * fc_n * (j - center)) * w;
    }
    // Each decimated output draws from one polyphase leg (taps j with a fixed
    // residue mod p); normalize per leg so DC is preserved exactly.
    for (std::int64_t r = 0; r < p; ++r) {
        double leg_sum = 0.0;
        for (std::int64_t j = r; j < taps; j += p) leg_sum += h[static_cast<std::size_t>(j)];
        for (std::int64_t j = r; j < taps; j += p) h[static_cast<std::size_t>(j)] /= leg_sum;
    }

    // Centered symmetric FIR evaluated only at kept output positions;
    // zero-stuffed inputs are skipped via the j stride of p.
    for (std::int64_t i = 0; i < n_out; ++i) {
        const std::int64_t m_pos = i * q;  // position in the upsampled grid
        double acc = 0.0;
        // tap j touches upsampled index m_pos + j - center; keep multiples of p
        std::int64_t j0 = (center - m_pos) % p;
        if (j0 < 0) j0 += p;
        for (std::int64_t j = j0; j < taps; j += p) {
            const std::int64_t up = m_pos + j - center;
            if (up < 0 || up >= n * p) continue;
            acc += h[static_cast<std::size_t>(j)] * signal[static_cast<std::size_t>(up / p)];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

std::vector<std::vector<double>> segment(const std::vector<double>& signal, double fs,
                                         double window_s) {
    const double exact = fs * window_s;
    const auto win = static_cast<std::int64_t>(std::llround(exact));
    if (win <= 0 || std::abs(exact - static_cast<double>(win)) > 1e-9)
        throw ValidationError("segment: fs * window_s must be a positive integer");
    std::vector<std::vector<double>> out;
    const auto n = static_cast<std::int64_t>(signal.size());
    for (std::int64_t start = 0; start + win <= n; start += win)
        out.emplace_back(signal.begin() + start, signal.begin() + start + win);
    return out;
}

std::pair<std::vector<double>, NormScale> normalize(const std::vector<double>& seg, Range target) {
    if (seg.empty()) throw ValidationError("normalize: empty segment");
    const auto [mn_it, mx_it] = std::minmax_element(seg.begin(), seg.end());
    const double mn = *mn_it, mx = *mx_it;
    NormScale scale;
    scale.offset = mn;
    scale.span = mx - mn;
    scale.constant = (scale.span == 0.0);
    std::vector<double> out(seg.size());
    if (scale.constant) {
        std::fill(out.begin(), out.end(), 0.5 * (target.lo + target.hi));
    } else {
        const double width = target.hi - target.lo;
        for (std::size_t i = 0; i < seg.size(); ++i)
            out[i] = target.lo + (seg[i] - mn) / scale.span * width;
    }
    return {std::move(out), scale};
}

std::vector<double> denormalize(const std::vector<double>& seg, const NormScale& scale,
                                Range target) {
    std::vector<double> out(seg.size());
    if (scale.constant) {
        std::fill(out.begin(), out.end(), scale.offset);
        return out;
    }
    const double width = target.hi - target.lo;
    for (std::size_t i = 0; i < seg.size(); ++i)
        out[i] = scale.offset + (seg[i] - target.lo) / width * scale.span;
    return out;
}

SpectrumMagnitude fft_magnitude(const std::vector<double>& signal, double fs) {
    if (signal.empty()) throw ValidationError("fft_magnitude: empty signal");
    const DftSpectrum spec = dft_real(signal);
    SpectrumMagnitude out;
    out.bins.resize(spec.re.size());
    for (std::size_t k = 0; k < spec.re.size(); ++k)
        out.bins[k] = std::hypot(spec.re[k], spec.im[k]);
    out.bin_hz = fs / static_cast<double>(signal.size());
    return out;
}

std::optional<double> estimate_rr(const std::vector<double>& window, double fs,
                                  double rr_max_hz) {
    if (window.size() < 2) throw ValidationError("estimate_rr: window must have >= 2 samples");
    if (!(fs > 0.0)) throw ValidationError("estimate_rr: fs must be positive");
    const SpectrumMagnitude spec = fft_magnitude(window, fs);
    int best = -1;
    double best_mag = 0.0;
    double total = 0.0;
    for (int k = 0; k < spec.n_bins(); ++k) total += spec.bins[k];
    for (int k = 1; k < spec.n_bins(); ++k) {
        const double f = k * spec.bin_hz;
        if (f > rr_max_hz) break;
        if (spec.bins[k] > best_mag) {  // strict: ties keep the lower bin
            best_mag = spec.bins[k];
            best = k;
        }
    }
    // Floor relative to total spectral mass so rounding noise in a constant
    // or all-zero window does not masquerade as a peak.
    if (best < 0 || best_mag <= 1e-9 * total) return std::nullopt;
    return 60.0 * best * spec.bin_hz;
}

double mae(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || a.size() != b.size())
        throw ValidationError("mae: sequences must be non-empty and of equal length");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

}  // namespace respwave::dsp
