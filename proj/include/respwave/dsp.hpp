#ifndef RESPWAVE_DSP_HPP
#define RESPWAVE_DSP_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace respwave::dsp {

struct Range {
    double lo;
    double hi;
};

inline constexpr Range kPpgRange{0.0, 1.0};
inline constexpr Range kRespRange{-1.0, 1.0};

// Affine de-normalization info: raw = offset + span * (norm - lo) / (hi - lo).
// A constant segment has span 0 and maps to the target midpoint.
struct NormScale {
    double offset = 0.0;
    double span = 0.0;
    bool constant = false;
};

// One aligned 5 s training example (150 samples at 30 Hz by default).
struct SegmentPair {
    std::vector<double> ppg;   // normalized to [0, 1]
    std::vector<double> resp;  // normalized to [-1, 1]
    std::string subject_id;
    int segment_index = 0;
    NormScale ppg_scale;
    NormScale resp_scale;
};

struct SpectrumMagnitude {
    std::vector<double> bins;  // magnitudes of non-negative frequency bins
    double bin_hz = 0.0;       // fs / transform_length
    int n_bins() const { return static_cast<int>(bins.size()); }
};

// One-sided DFT of a real sequence, split into real/imaginary parts.
// bins = floor(n/2) + 1. Unnormalized (bin 0 of a constant c is n*c).
struct DftSpectrum {
    std::vector<double> re;
    std::vector<double> im;
};

DftSpectrum dft_real(const std::vector<double>& signal);

// Adjoint of the one-sided real DFT under the real inner product:
// out[n] = sum_k Re(g_k * exp(+2*pi*i*k*n/len)), g_k = grad_re[k] + i*grad_im[k].
std::vector<double> dft_real_adjoint(const std::vector<double>& grad_re,
                                     const std::vector<double>& grad_im, int length);

// Linear-phase FIR low-pass taps (windowed sinc, Hamming), normalized to
// unit DC gain. Tap count grows with fs/cutoff to keep the stopband edge
// at or below 2*cutoff with >= 40 dB attenuation.
std::vector<double> design_lowpass_fir(double fs, double cutoff);

// Anti-aliased rational resampling; output length floor(len * fs_out / fs_in).
// Passthrough when the rates are equal. Upsampling is rejected.
std::vector<double> resample(const std::vector<double>& signal, double fs_in, double fs_out);

// Zero-phase low-pass: FIR applied forward then backward. DC gain 1.
std::vector<double> lowpass(const std::vector<double>& signal, double fs, double cutoff);

// Consecutive non-overlapping windows of fs*window_s samples; remainder dropped.
std::vector<std::vector<double>> segment(const std::vector<double>& signal, double fs,
                                         double window_s);

std::pair<std::vector<double>, NormScale> normalize(const std::vector<double>& seg, Range target);
std::vector<double> denormalize(const std::vector<double>& seg, const NormScale& scale,
                                Range target);

SpectrumMagnitude fft_magnitude(const std::vector<double>& signal, double fs);

// Dominant-frequency respiratory rate in breaths/min over bins with
// 0 < f <= rr_max_hz; ties break toward the lower frequency. Returns
// nullopt when no bin in the band has nonzero magnitude.
std::optional<double> estimate_rr(const std::vector<double>& window, double fs,
                                  double rr_max_hz = 0.75);

double mae(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace respwave::dsp

#endif
