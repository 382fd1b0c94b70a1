#include "respwave/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "respwave/errors.hpp"

namespace respwave::diffusion {

namespace {

void check_step(int t, const NoiseSchedule& sched, const char* op) {
    if (t < 1 || t > sched.T)
        throw ValidationError(std::string(op) + ": step " + std::to_string(t) +
                              " out of range [1, " + std::to_string(sched.T) + "]");
}

void check_lengths(std::size_t a, std::size_t b, const char* op) {
    if (a != b) throw ValidationError(std::string(op) + ": sequence length mismatch");
}

}  // namespace

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
    if (T < 1) throw ValidationError("make_schedule: T must be >= 1");
    if (!(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0))
        throw ValidationError("make_schedule: need 0 < beta_start < beta_end < 1");
    NoiseSchedule s;
    s.T = T;
    s.betas.resize(T);
    s.alphas.resize(T);
    s.alpha_bars.resize(T);
    double bar = 1.0;
    for (int i = 0; i < T; ++i) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(i) / (T - 1);
        s.betas[i] = beta_start + (beta_end - beta_start) * frac;
        s.alphas[i] = 1.0 - s.betas[i];
        bar *= s.alphas[i];
        s.alpha_bars[i] = bar;
    }
    return s;
}

std::vector<double> forward_diffuse(const std::vector<double>& y0, int t,
                                    const std::vector<double>& eps, const NoiseSchedule& sched) {
    check_step(t, sched, "forward_diffuse");
    check_lengths(y0.size(), eps.size(), "forward_diffuse");
    const double a = std::sqrt(sched.alpha_bar(t));
    const double b = std::sqrt(1.0 - sched.alpha_bar(t));
    std::vector<double> out(y0.size());
    for (std::size_t i = 0; i < y0.size(); ++i) out[i] = a * y0[i] + b * eps[i];
    return out;
}

std::vector<double> estimate_x0(const std::vector<double>& y_t, int t,
                                const std::vector<double>& eps_hat, const NoiseSchedule& sched) {
    check_step(t, sched, "estimate_x0");
    check_lengths(y_t.size(), eps_hat.size(), "estimate_x0");
    const double a = std::sqrt(sched.alpha_bar(t));
    const double b = std::sqrt(1.0 - sched.alpha_bar(t));
    std::vector<double> out(y_t.size());
    for (std::size_t i = 0; i < y_t.size(); ++i) out[i] = (y_t[i] - b * eps_hat[i]) / a;
    return out;
}

std::vector<double> ddpm_step(const std::vector<double>& y_t, int t,
                              const std::vector<double>& eps_hat, const NoiseSchedule& sched,
                              const std::vector<double>& z) {
    check_step(t, sched, "ddpm_step");
    check_lengths(y_t.size(), eps_hat.size(), "ddpm_step");
    check_lengths(y_t.size(), z.size(), "ddpm_step");
    if (t == 1)
        for (const double v : z)
            if (v != 0.0) throw ValidationError("ddpm_step: z must be zero at t = 1");

    const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha(t));
    const double eps_coef = sched.beta(t) / std::sqrt(1.0 - sched.alpha_bar(t));
    const double sigma =
        t == 1 ? 0.0
               : std::sqrt(sched.beta(t) * (1.0 - sched.alpha_bar(t - 1)) /
                           (1.0 - sched.alpha_bar(t)));
    std::vector<double> out(y_t.size());
    for (std::size_t i = 0; i < y_t.size(); ++i)
        out[i] = inv_sqrt_alpha * (y_t[i] - eps_coef * eps_hat[i]) + sigma * z[i];
    return out;
}

std::vector<double> ddim_step(const std::vector<double>& y_t, int t, int t_prev,
                              const std::vector<double>& eps_hat, const NoiseSchedule& sched) {
    check_step(t, sched, "ddim_step");
    if (t_prev < 0 || t_prev >= t)
        throw ValidationError("ddim_step: need 0 <= t_prev < t");
    check_lengths(y_t.size(), eps_hat.size(), "ddim_step");
    const std::vector<double> x0 = estimate_x0(y_t, t, eps_hat, sched);
    const double a = std::sqrt(sched.alpha_bar(t_prev));
    const double b = std::sqrt(1.0 - sched.alpha_bar(t_prev));
    std::vector<double> out(y_t.size());
    for (std::size_t i = 0; i < y_t.size(); ++i) out[i] = a * x0[i] + b * eps_hat[i];
    return out;
}

Sampler parse_sampler(const std::string& name) {
    if (name == "ddpm") return Sampler::ddpm;
    if (name == "ddim") return Sampler::ddim;
    throw ValidationError("unknown sampler '" + name + "' (expected ddpm or ddim)");
}

std::string sampler_name(Sampler s) { return s == Sampler::ddpm ? "ddpm" : "ddim"; }

std::vector<int> ddim_step_grid(int T, int nfe) {
    if (T < 1 || nfe < 1) throw ValidationError("ddim_step_grid: T and nfe must be >= 1");
    if (nfe > T) throw ValidationError("ddim_step_grid: nfe cannot exceed T");
    std::vector<int> grid;
    if (nfe == 1) {
        grid.push_back(T);
        return grid;
    }
    for (int i = nfe - 1; i >= 0; --i) {
        const double pos = 1.0 + static_cast<double>(i) * (T - 1) / (nfe - 1);
        const int step = static_cast<int>(std::floor(pos));
        if (grid.empty() || grid.back() != step) grid.push_back(step);
    }
    return grid;
}

std::vector<int> full_step_grid(int T) {
    std::vector<int> grid(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) grid[static_cast<std::size_t>(i)] = T - i;
    return grid;
}

std::vector<double> sample(const Denoiser& denoiser, const std::vector<double>& x_ppg,
                           Sampler sampler, const std::vector<int>& steps, std::uint64_t seed,
                           const NoiseSchedule& sched) {
    if (steps.empty()) throw ValidationError("sample: empty step list");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        check_step(steps[i], sched, "sample");
        if (i > 0 && steps[i] >= steps[i - 1])
            throw ValidationError("sample: steps must be strictly decreasing");
    }
    if (sampler == Sampler::ddpm) {
        if (steps.back() != 1) throw ValidationError("sample: ddpm grid must end at step 1");
        for (std::size_t i = 1; i < steps.size(); ++i)
            if (steps[i] != steps[i - 1] - 1)
                throw ValidationError("sample: ddpm requires a contiguous step grid");
    } else if (steps.back() != 1) {
        throw ValidationError("sample: ddim grid must end at step 1");
    }

    const std::size_t L = x_ppg.size();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> y(L);
    for (double& v : y) v = gauss(rng);

    if (sampler == Sampler::ddpm) {
        std::vector<double> z(L, 0.0);
        for (const int t : steps) {
            const std::vector<double> eps_hat = denoiser(y, t, x_ppg);
            if (t > 1)
                for (double& v : z) v = gauss(rng);
            else
                std::fill(z.begin(), z.end(), 0.0);
            y = ddpm_step(y, t, eps_hat, sched, z);
        }
        return y;
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const int t = steps[i];
        const int t_prev = i + 1 < steps.size() ? steps[i + 1] : 0;
        const std::vector<double> eps_hat = denoiser(y, t, x_ppg);
        y = ddim_step(y, t, t_prev, eps_hat, sched);
    }
    return y;
}

}  // namespace respwave::diffusion
