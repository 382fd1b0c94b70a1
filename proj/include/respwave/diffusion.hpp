#ifndef RESPWAVE_DIFFUSION_HPP
#define RESPWAVE_DIFFUSION_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace respwave::diffusion {

// Discrete noise schedule, 1-indexed by step t in [1, T]; alpha_bar(0) == 1
// is the clean endpoint.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> betas;       // beta_t at index t-1, strictly increasing
    std::vector<double> alphas;      // 1 - beta_t
    std::vector<double> alpha_bars;  // prod_{s<=t} alpha_s, strictly decreasing

    double beta(int t) const { return betas.at(static_cast<std::size_t>(t - 1)); }
    double alpha(int t) const { return alphas.at(static_cast<std::size_t>(t - 1)); }
    double alpha_bar(int t) const {
        return t == 0 ? 1.0 : alpha_bars.at(static_cast<std::size_t>(t - 1));
    }
};

// Linear beta interpolation from beta_start to beta_end over T steps
// (T == 1 uses beta_start).
NoiseSchedule make_schedule(int T, double beta_start, double beta_end);

// sqrt(abar_t) * y0 + sqrt(1 - abar_t) * eps
std::vector<double> forward_diffuse(const std::vector<double>& y0, int t,
                                    const std::vector<double>& eps, const NoiseSchedule& sched);

// Single-step clean-signal estimate: (y_t - sqrt(1 - abar_t) * eps_hat) / sqrt(abar_t)
std::vector<double> estimate_x0(const std::vector<double>& y_t, int t,
                                const std::vector<double>& eps_hat, const NoiseSchedule& sched);

// Ancestral step to t-1 with posterior variance beta_t * (1 - abar_{t-1}) / (1 - abar_t).
// z must be standard normal for t > 1 and the zero vector at t = 1.
std::vector<double> ddpm_step(const std::vector<double>& y_t, int t,
                              const std::vector<double>& eps_hat, const NoiseSchedule& sched,
                              const std::vector<double>& z);

// Deterministic (eta = 0) update from t to t_prev; t_prev = 0 is the clean endpoint.
std::vector<double> ddim_step(const std::vector<double>& y_t, int t, int t_prev,
                              const std::vector<double>& eps_hat, const NoiseSchedule& sched);

enum class Sampler { ddpm, ddim };

Sampler parse_sampler(const std::string& name);
std::string sampler_name(Sampler s);

// Descending DDIM step grid for nfe denoiser calls: floor of the even
// subdivision of [1, T] including both endpoints, deduplicated.
std::vector<int> ddim_step_grid(int T, int nfe);

// Full descending grid [T..1] (DDPM ancestral sampling uses every step).
std::vector<int> full_step_grid(int T);

using Denoiser = std::function<std::vector<double>(const std::vector<double>& y_t, int t,
                                                   const std::vector<double>& x_ppg)>;

// Runs the reverse process from seeded standard-normal y_T over the given
// strictly decreasing steps and returns the final estimate of y0.
// DDPM requires the contiguous grid [steps.front()..1]; DDIM accepts any
// strictly decreasing subsequence ending at 1.
std::vector<double> sample(const Denoiser& denoiser, const std::vector<double>& x_ppg,
                           Sampler sampler, const std::vector<int>& steps, std::uint64_t seed,
                           const NoiseSchedule& sched);

}  // namespace respwave::diffusion

#endif
