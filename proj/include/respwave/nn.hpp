#ifndef RESPWAVE_NN_HPP
#define RESPWAVE_NN_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace respwave::nn {

// channels x length activation array, row-major by channel.
struct FeatureMap {
    int channels = 0;
    int length = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int c, int l) : channels(c), length(l), data(static_cast<std::size_t>(c) * l, 0.0) {}
    double& at(int c, int i) { return data[static_cast<std::size_t>(c) * length + i]; }
    double at(int c, int i) const { return data[static_cast<std::size_t>(c) * length + i]; }
    double* row(int c) { return data.data() + static_cast<std::size_t>(c) * length; }
    const double* row(int c) const { return data.data() + static_cast<std::size_t>(c) * length; }
};

FeatureMap as_feature_map(const std::vector<double>& x);

struct ModelConfig {
    std::vector<int> fine_kernels{1, 3, 5, 7, 9, 11};
    std::vector<int> coarse_kernels{3, 5, 7, 9, 11};
    int coarse_dilation = 8;
    int branch_channels = 8;
    int hidden = 64;
    int time_embed_dim = 64;
    double lambda_ppg = 1.0;

    int fine_channels() const {
        return static_cast<int>(fine_kernels.size()) * branch_channels;
    }
    int coarse_raw_channels() const {
        return static_cast<int>(coarse_kernels.size()) * branch_channels;
    }
    int feature_dim() const { return 2 * fine_channels(); }  // d = ch(f_ppg) + ch(f_y)
    void validate() const;
};

// Non-owning view of one convolution's coefficients.
// w is out_ch x in_ch x kernel, row-major; cross-correlation with "same"
// zero padding, taps spanning offsets -(k-1)/2 .. +(k-1)/2 times dilation.
struct ConvView {
    int kernel = 1;
    int dilation = 1;
    int in_ch = 1;
    int out_ch = 1;
    const double* w = nullptr;
    const double* b = nullptr;
    std::size_t w_size() const {
        return static_cast<std::size_t>(out_ch) * in_ch * kernel;
    }
};

struct RnnView {
    int d = 0;  // input feature dimension
    int h = 0;  // hidden size
    const double* wdh_fd = nullptr;  // d x h
    const double* whh_fd = nullptr;  // h x h
    const double* b_fd = nullptr;    // h
    const double* wdh_bd = nullptr;
    const double* whh_bd = nullptr;
    const double* b_bd = nullptr;
};

FeatureMap conv1d(const FeatureMap& x, const ConvView& conv);

// Channel-wise concatenation of per-branch convolutions (dilation 1).
FeatureMap fine_encoder(const FeatureMap& x, const std::vector<ConvView>& branches);

// Same with dilated branches (dilation > 1).
FeatureMap coarse_encoder(const FeatureMap& x, const std::vector<ConvView>& branches);

// fine + lambda_ppg * coarse, elementwise.
FeatureMap fuse_ppg(const FeatureMap& fine, const FeatureMap& coarse, double lambda_ppg);

// Vanilla tanh BiRNN over positions; zero initial states. Output is 2h x L:
// rows [0, h) forward states, rows [h, 2h) backward states.
FeatureMap birnn(const FeatureMap& F, const RnnView& p);

// Sinusoidal embedding of an integer timestep (dim must be even).
std::vector<double> sinusoidal_embed(int t, int dim);

// All learnable weights in one flat array with a config-derived layout.
// Tensor order (also the checkpoint serialization order): fine_ppg branches
// (w, b each), coarse_ppg branches, coarse projection, fine_y branches,
// timestep affine (W, b), forward RNN (W_dh, W_hh, b), backward RNN,
// output head (w, b).
class ModelParams {
  public:
    struct Tensor {
        std::string name;
        std::size_t offset = 0;
        std::size_t size = 0;
        int fan_in = 1;
    };

    ModelParams() = default;
    explicit ModelParams(const ModelConfig& config);

    // Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases.
    static ModelParams init(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    const std::vector<Tensor>& tensors() const { return tensors_; }
    std::vector<double>& flat() { return flat_; }
    const std::vector<double>& flat() const { return flat_; }
    std::size_t size() const { return flat_.size(); }

    std::vector<ConvView> fine_ppg() const;
    std::vector<ConvView> coarse_ppg() const;
    ConvView coarse_proj() const;
    std::vector<ConvView> fine_y() const;
    RnnView rnn() const;
    const double* time_w() const;  // d x embed
    const double* time_b() const;  // d
    const double* head_w() const;  // 2h
    double head_b() const;

    // Offset helpers used by the backward pass and tests.
    std::size_t offset(const std::string& tensor_name) const;

  private:
    ModelConfig config_;
    std::vector<Tensor> tensors_;
    std::vector<double> flat_;
};

// Activations retained by predict_noise for the backward pass.
struct ForwardCache {
    std::vector<double> x_ppg;
    std::vector<double> y_t;
    int t = 0;
    std::vector<double> embed;   // sinusoidal embedding of t
    FeatureMap coarse_raw;       // coarse branch concat before projection
    FeatureMap F;                // fused RNN input (after timestep add), d x L
    FeatureMap H;                // BiRNN states, 2h x L
    bool valid = false;
};

// The noise predictor eps_theta(y_t, t, x_ppg). Both inputs must have equal
// length; output has the same length.
std::vector<double> predict_noise(const std::vector<double>& y_t, int t,
                                  const std::vector<double>& x_ppg, const ModelParams& params,
                                  ForwardCache* cache = nullptr);

// Reverse-mode gradients of sum_i d_eps[i] * eps_hat[i] with respect to every
// parameter, accumulated into grad (same layout as params.flat()).
void backward(const std::vector<double>& d_eps, const ForwardCache& cache,
              const ModelParams& params, std::vector<double>& grad);

// Central-difference comparison against an analytic gradient. Checks every
// parameter, or a seeded random subsample of max_params when that is smaller.
// Returns the worst |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
double grad_check(std::vector<double>& params, const std::function<double()>& loss,
                  const std::vector<double>& analytic_grad, double step,
                  std::size_t max_params = 0, std::uint64_t subsample_seed = 1);

}  // namespace respwave::nn

#endif
