#include "respwave/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "respwave/errors.hpp"

namespace respwave::nn {

namespace {

void conv_forward_into(const FeatureMap& x, const ConvView& conv, FeatureMap& out,
                       int out_ch_offset) {
    const int L = x.length;
    const int center = (conv.kernel - 1) / 2;
    for (int o = 0; o < conv.out_ch; ++o) {
        double* dst = out.row(out_ch_offset + o);
        const double bias = conv.b[o];
        for (int i = 0; i < L; ++i) dst[i] = bias;
        for (int c = 0; c < conv.in_ch; ++c) {
            const double* src = x.row(c);
            const double* w = conv.w + (static_cast<std::size_t>(o) * conv.in_ch + c) * conv.kernel;
            for (int j = 0; j < conv.kernel; ++j) {
                const double wj = w[j];
                if (wj == 0.0) continue;
                const int shift = (j - center) * conv.dilation;
                const int lo = std::max(0, -shift);
                const int hi = std::min(L, L - shift);
                for (int i = lo; i < hi; ++i) dst[i] += wj * src[i + shift];
            }
        }
    }
}

// Gradients of a conv given upstream dY rows; optionally accumulates into dX.
void conv_backward(const FeatureMap& x, const ConvView& conv, const FeatureMap& d_out,
                   int out_ch_offset, double* g_w, double* g_b, FeatureMap* d_x) {
    const int L = x.length;
    const int center = (conv.kernel - 1) / 2;
    for (int o = 0; o < conv.out_ch; ++o) {
        const double* dy = d_out.row(out_ch_offset + o);
        double acc_b = 0.0;
        for (int i = 0; i < L; ++i) acc_b += dy[i];
        g_b[o] += acc_b;
        for (int c = 0; c < conv.in_ch; ++c) {
            const double* src = x.row(c);
            double* gw = g_w + (static_cast<std::size_t>(o) * conv.in_ch + c) * conv.kernel;
            for (int j = 0; j < conv.kernel; ++j) {
                const int shift = (j - center) * conv.dilation;
                const int lo = std::max(0, -shift);
                const int hi = std::min(L, L - shift);
                double acc = 0.0;
                for (int i = lo; i < hi; ++i) acc += dy[i] * src[i + shift];
                gw[j] += acc;
            }
            if (d_x) {
                double* dxr = d_x->row(c);
                const double* w =
                    conv.w + (static_cast<std::size_t>(o) * conv.in_ch + c) * conv.kernel;
                for (int j = 0; j < conv.kernel; ++j) {
                    const double wj = w[j];
                    if (wj == 0.0) continue;
                    const int shift = (j - center) * conv.dilation;
                    const int lo = std::max(0, -shift);
                    const int hi = std::min(L, L - shift);
                    for (int i = lo; i < hi; ++i) dxr[i + shift] += wj * dy[i];
                }
            }
        }
    }
}

FeatureMap encoder_concat(const FeatureMap& x, const std::vector<ConvView>& branches) {
    if (branches.empty()) throw ValidationError("encoder: no branches");
    int total = 0;
    for (const auto& b : branches) total += b.out_ch;
    FeatureMap out(total, x.length);
    int offset = 0;
    for (const auto& b : branches) {
        conv_forward_into(x, b, out, offset);
        offset += b.out_ch;
    }
    return out;
}

void check_conv(const FeatureMap& x, const ConvView& conv) {
    if (conv.kernel < 1 || conv.kernel % 2 == 0)
        throw ValidationError("conv1d: kernel size must be odd");
    if (conv.dilation < 1) throw ValidationError("conv1d: dilation must be >= 1");
    if (x.channels != conv.in_ch)
        throw ValidationError("conv1d: input channel count mismatch");
}

}  // namespace

FeatureMap as_feature_map(const std::vector<double>& x) {
    FeatureMap m(1, static_cast<int>(x.size()));
    std::copy(x.begin(), x.end(), m.data.begin());
    return m;
}

void ModelConfig::validate() const {
    if (fine_kernels.empty() || coarse_kernels.empty())
        throw ValidationError("model: encoders need at least one branch");
    for (const int k : fine_kernels)
        if (k < 1 || k % 2 == 0) throw ValidationError("model: fine kernel sizes must be odd");
    for (const int k : coarse_kernels)
        if (k < 1 || k % 2 == 0) throw ValidationError("model: coarse kernel sizes must be odd");
    if (coarse_dilation < 2) throw ValidationError("model: coarse dilation must be > 1");
    if (branch_channels < 1) throw ValidationError("model: branch_channels must be >= 1");
    if (hidden < 1) throw ValidationError("model: hidden size must be >= 1");
    if (time_embed_dim < 2 || time_embed_dim % 2 != 0)
        throw ValidationError("model: time_embed_dim must be even and >= 2");
}

FeatureMap conv1d(const FeatureMap& x, const ConvView& conv) {
    check_conv(x, conv);
    FeatureMap out(conv.out_ch, x.length);
    conv_forward_into(x, conv, out, 0);
    return out;
}

FeatureMap fine_encoder(const FeatureMap& x, const std::vector<ConvView>& branches) {
    for (const auto& b : branches) {
        check_conv(x, b);
        if (b.dilation != 1) throw ValidationError("fine_encoder: branches must have dilation 1");
    }
    return encoder_concat(x, branches);
}

FeatureMap coarse_encoder(const FeatureMap& x, const std::vector<ConvView>& branches) {
    for (const auto& b : branches) {
        check_conv(x, b);
        if (b.dilation < 2) throw ValidationError("coarse_encoder: branches must have dilation > 1");
    }
    return encoder_concat(x, branches);
}

FeatureMap fuse_ppg(const FeatureMap& fine, const FeatureMap& coarse, double lambda_ppg) {
    if (fine.channels != coarse.channels || fine.length != coarse.length)
        throw ValidationError("fuse_ppg: encoder output shapes differ");
    FeatureMap out = fine;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += lambda_ppg * coarse.data[i];
    return out;
}

FeatureMap birnn(const FeatureMap& F, const RnnView& p) {
    if (F.channels != p.d) throw ValidationError("birnn: feature dimension mismatch");
    if (p.h < 1) throw ValidationError("birnn: hidden size must be >= 1");
    const int L = F.length;
    const int h = p.h;
    FeatureMap H(2 * h, L);
    std::vector<double> pre(h);
    std::vector<double> prev(h, 0.0);
    // forward direction
    for (int i = 0; i < L; ++i) {
        for (int u = 0; u < h; ++u) pre[u] = p.b_fd[u];
        for (int c = 0; c < p.d; ++c) {
            const double f = F.at(c, i);
            if (f == 0.0) continue;
            const double* w = p.wdh_fd + static_cast<std::size_t>(c) * h;
            for (int u = 0; u < h; ++u) pre[u] += f * w[u];
        }
        if (i > 0) {
            for (int v = 0; v < h; ++v) {
                const double hv = prev[v];
                if (hv == 0.0) continue;
                const double* w = p.whh_fd + static_cast<std::size_t>(v) * h;
                for (int u = 0; u < h; ++u) pre[u] += hv * w[u];
            }
        }
        for (int u = 0; u < h; ++u) {
            const double s = std::tanh(pre[u]);
            H.at(u, i) = s;
            prev[u] = s;
        }
    }
    // backward direction
    std::fill(prev.begin(), prev.end(), 0.0);
    for (int i = L - 1; i >= 0; --i) {
        for (int u = 0; u < h; ++u) pre[u] = p.b_bd[u];
        for (int c = 0; c < p.d; ++c) {
            const double f = F.at(c, i);
            if (f == 0.0) continue;
            const double* w = p.wdh_bd + static_cast<std::size_t>(c) * h;
            for (int u = 0; u < h; ++u) pre[u] += f * w[u];
        }
        if (i < L - 1) {
            for (int v = 0; v < h; ++v) {
                const double hv = prev[v];
                if (hv == 0.0) continue;
                const double* w = p.whh_bd + static_cast<std::size_t>(v) * h;
                for (int u = 0; u < h; ++u) pre[u] += hv * w[u];
            }
        }
        for (int u = 0; u < h; ++u) {
            const double s = std::tanh(pre[u]);
            H.at(h + u, i) = s;
            prev[u] = s;
        }
    }
    return H;
}

std::vector<double> sinusoidal_embed(int t, int dim) {
    if (dim < 2 || dim % 2 != 0)
        throw ValidationError("sinusoidal_embed: dim must be even and >= 2");
    const int half = dim / 2;
    std::vector<double> e(static_cast<std::size_t>(dim));
    for (int i = 0; i < half; ++i) {
        const double exponent = half == 1 ? 0.0 : static_cast<double>(i) / (half - 1);
        const double freq = std::exp(-std::log(10000.0) * exponent);
        e[static_cast<std::size_t>(2 * i)] = std::sin(t * freq);
        e[static_cast<std::size_t>(2 * i + 1)] = std::cos(t * freq);
    }
    return e;
}

ModelParams::ModelParams(const ModelConfig& config) : config_(config) {
    config_.validate();
    const int bc = config_.branch_channels;
    const int cf = config_.fine_channels();
    const int craw = config_.coarse_raw_channels();
    const int d = config_.feature_dim();
    const int h = config_.hidden;
    const int emb = config_.time_embed_dim;

    std::size_t offset = 0;
    const auto add = [&](const std::string& name, std::size_t size, int fan_in) {
        tensors_.push_back({name, offset, size, fan_in});
        offset += size;
    };
    const auto add_branches = [&](const std::string& prefix, const std::vector<int>& kernels,
                                  int in_ch) {
        for (std::size_t i = 0; i < kernels.size(); ++i) {
            const std::string base = prefix + ".b" + std::to_string(i);
            add(base + ".w", static_cast<std::size_t>(bc) * in_ch * kernels[i],
                in_ch * kernels[i]);
            add(base + ".b", static_cast<std::size_t>(bc), 0);
        }
    };
    add_branches("fine_ppg", config_.fine_kernels, 1);
    add_branches("coarse_ppg", config_.coarse_kernels, 1);
    add("coarse_proj.w", static_cast<std::size_t>(cf) * craw, craw);
    add("coarse_proj.b", static_cast<std::size_t>(cf), 0);
    add_branches("fine_y", config_.fine_kernels, 1);
    add("time.w", static_cast<std::size_t>(d) * emb, emb);
    add("time.b", static_cast<std::size_t>(d), 0);
    add("rnn.fd.wdh", static_cast<std::size_t>(d) * h, d);
    add("rnn.fd.whh", static_cast<std::size_t>(h) * h, h);
    add("rnn.fd.b", static_cast<std::size_t>(h), 0);
    add("rnn.bd.wdh", static_cast<std::size_t>(d) * h, d);
    add("rnn.bd.whh", static_cast<std::size_t>(h) * h, h);
    add("rnn.bd.b", static_cast<std::size_t>(h), 0);
    add("head.w", static_cast<std::size_t>(2) * h, 2 * h);
    add("head.b", 1, 0);
    flat_.assign(offset, 0.0);
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
    ModelParams p(config);
    std::mt19937_64 rng(seed);
    for (const auto& t : p.tensors_) {
        if (t.fan_in == 0) continue;  // biases stay zero
        const double bound = 1.0 / std::sqrt(static_cast<double>(t.fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (std::size_t i = 0; i < t.size; ++i) p.flat_[t.offset + i] = dist(rng);
    }
    return p;
}

std::size_t ModelParams::offset(const std::string& tensor_name) const {
    for (const auto& t : tensors_)
        if (t.name == tensor_name) return t.offset;
    throw ValidationError("unknown parameter tensor '" + tensor_name + "'");
}

namespace {

std::vector<ConvView> branch_views(const ModelParams& p, const std::string& prefix,
                                   const std::vector<int>& kernels, int in_ch, int dilation) {
    std::vector<ConvView> views;
    views.reserve(kernels.size());
    const double* flat = p.flat().data();
    for (std::size_t i = 0; i < kernels.size(); ++i) {
        const std::string base = prefix + ".b" + std::to_string(i);
        ConvView v;
        v.kernel = kernels[i];
        v.dilation = dilation;
        v.in_ch = in_ch;
        v.out_ch = p.config().branch_channels;
        v.w = flat + p.offset(base + ".w");
        v.b = flat + p.offset(base + ".b");
        views.push_back(v);
    }
    return views;
}

}  // namespace

std::vector<ConvView> ModelParams::fine_ppg() const {
    return branch_views(*this, "fine_ppg", config_.fine_kernels, 1, 1);
}

std::vector<ConvView> ModelParams::coarse_ppg() const {
    return branch_views(*this, "coarse_ppg", config_.coarse_kernels, 1, config_.coarse_dilation);
}

ConvView ModelParams::coarse_proj() const {
    ConvView v;
    v.kernel = 1;
    v.dilation = 1;
    v.in_ch = config_.coarse_raw_channels();
    v.out_ch = config_.fine_channels();
    v.w = flat_.data() + offset("coarse_proj.w");
    v.b = flat_.data() + offset("coarse_proj.b");
    return v;
}

std::vector<ConvView> ModelParams::fine_y() const {
    return branch_views(*this, "fine_y", config_.fine_kernels, 1, 1);
}

RnnView ModelParams::rnn() const {
    RnnView v;
    v.d = config_.feature_dim();
    v.h = config_.hidden;
    const double* flat = flat_.data();
    v.wdh_fd = flat + offset("rnn.fd.wdh");
    v.whh_fd = flat + offset("rnn.fd.whh");
    v.b_fd = flat + offset("rnn.fd.b");
    v.wdh_bd = flat + offset("rnn.bd.wdh");
    v.whh_bd = flat + offset("rnn.bd.whh");
    v.b_bd = flat + offset("rnn.bd.b");
    return v;
}

const double* ModelParams::time_w() const { return flat_.data() + offset("time.w"); }
const double* ModelParams::time_b() const { return flat_.data() + offset("time.b"); }
const double* ModelParams::head_w() const { return flat_.data() + offset("head.w"); }
double ModelParams::head_b() const { return flat_[offset("head.b")]; }

std::vector<double> predict_noise(const std::vector<double>& y_t, int t,
                                  const std::vector<double>& x_ppg, const ModelParams& params,
                                  ForwardCache* cache) {
    if (y_t.size() != x_ppg.size())
        throw ValidationError("predict_noise: y_t and x_ppg lengths differ");
    if (y_t.empty()) throw ValidationError("predict_noise: empty input");
    const ModelConfig& cfg = params.config();
    const int L = static_cast<int>(y_t.size());
    const int cf = cfg.fine_channels();
    const int d = cfg.feature_dim();
    const int h = cfg.hidden;

    const FeatureMap x_map = as_feature_map(x_ppg);
    const FeatureMap y_map = as_feature_map(y_t);

    FeatureMap f_fine = fine_encoder(x_map, params.fine_ppg());
    FeatureMap coarse_raw = coarse_encoder(x_map, params.coarse_ppg());
    FeatureMap coarse = conv1d(coarse_raw, params.coarse_proj());
    FeatureMap f_ppg = fuse_ppg(f_fine, coarse, cfg.lambda_ppg);
    FeatureMap f_y = fine_encoder(y_map, params.fine_y());

    FeatureMap F(d, L);
    std::copy(f_ppg.data.begin(), f_ppg.data.end(), F.data.begin());
    std::copy(f_y.data.begin(), f_y.data.end(),
              F.data.begin() + static_cast<std::size_t>(cf) * L);

    const std::vector<double> embed = sinusoidal_embed(t, cfg.time_embed_dim);
    const double* tw = params.time_w();
    const double* tb = params.time_b();
    for (int c = 0; c < d; ++c) {
        double add = tb[c];
        const double* row = tw + static_cast<std::size_t>(c) * cfg.time_embed_dim;
        for (int e = 0; e < cfg.time_embed_dim; ++e) add += row[e] * embed[e];
        double* dst = F.row(c);
        for (int i = 0; i < L; ++i) dst[i] += add;
    }

    FeatureMap H = birnn(F, params.rnn());

    const double* hw = params.head_w();
    const double hb = params.head_b();
    std::vector<double> eps(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i) {
        double acc = hb;
        for (int u = 0; u < 2 * h; ++u) acc += hw[u] * H.at(u, i);
        eps[static_cast<std::size_t>(i)] = acc;
    }

    if (cache) {
        cache->x_ppg = x_ppg;
        cache->y_t = y_t;
        cache->t = t;
        cache->embed = embed;
        cache->coarse_raw = std::move(coarse_raw);
        cache->F = std::move(F);
        cache->H = std::move(H);
        cache->valid = true;
    }
    return eps;
}

void backward(const std::vector<double>& d_eps, const ForwardCache& cache,
              const ModelParams& params, std::vector<double>& grad) {
    if (!cache.valid) throw ValidationError("backward: forward cache missing");
    const ModelConfig& cfg = params.config();
    const int L = cache.F.length;
    if (static_cast<int>(d_eps.size()) != L)
        throw ValidationError("backward: upstream gradient length mismatch");
    if (grad.size() != params.size()) throw ValidationError("backward: gradient buffer size");
    const int cf = cfg.fine_channels();
    const int d = cfg.feature_dim();
    const int h = cfg.hidden;
    const int emb = cfg.time_embed_dim;
    double* g = grad.data();
    const double* flat = params.flat().data();

    // output head
    const double* hw = flat + params.offset("head.w");
    double* g_hw = g + params.offset("head.w");
    double* g_hb = g + params.offset("head.b");
    FeatureMap dH(2 * h, L);
    for (int i = 0; i < L; ++i) {
        const double up = d_eps[static_cast<std::size_t>(i)];
        *g_hb += up;
        for (int u = 0; u < 2 * h; ++u) {
            g_hw[u] += up * cache.H.at(u, i);
            dH.at(u, i) = up * hw[u];
        }
    }

    FeatureMap dF(d, L);
    std::vector<double> carry(static_cast<std::size_t>(h), 0.0);
    std::vector<double> dpre(static_cast<std::size_t>(h));

    // forward-direction BPTT (i descending)
    {
        const double* wdh = flat + params.offset("rnn.fd.wdh");
        const double* whh = flat + params.offset("rnn.fd.whh");
        double* g_wdh = g + params.offset("rnn.fd.wdh");
        double* g_whh = g + params.offset("rnn.fd.whh");
        double* g_b = g + params.offset("rnn.fd.b");
        std::fill(carry.begin(), carry.end(), 0.0);
        for (int i = L - 1; i >= 0; --i) {
            for (int u = 0; u < h; ++u) {
                const double s = cache.H.at(u, i);
                const double dh = dH.at(u, i) + carry[static_cast<std::size_t>(u)];
                dpre[static_cast<std::size_t>(u)] = dh * (1.0 - s * s);
                g_b[u] += dpre[static_cast<std::size_t>(u)];
            }
            for (int c = 0; c < d; ++c) {
                const double f = cache.F.at(c, i);
                const double* w = wdh + static_cast<std::size_t>(c) * h;
                double* gw = g_wdh + static_cast<std::size_t>(c) * h;
                double acc = 0.0;
                for (int u = 0; u < h; ++u) {
                    gw[u] += f * dpre[static_cast<std::size_t>(u)];
                    acc += w[u] * dpre[static_cast<std::size_t>(u)];
                }
                dF.at(c, i) += acc;
            }
            if (i > 0) {
                for (int v = 0; v < h; ++v) {
                    const double hv = cache.H.at(v, i - 1);
                    const double* w = whh + static_cast<std::size_t>(v) * h;
                    double* gw = g_whh + static_cast<std::size_t>(v) * h;
                    double acc = 0.0;
                    for (int u = 0; u < h; ++u) {
                        gw[u] += hv * dpre[static_cast<std::size_t>(u)];
                        acc += w[u] * dpre[static_cast<std::size_t>(u)];
                    }
                    carry[static_cast<std::size_t>(v)] = acc;
                }
            }
        }
    }

    // backward-direction BPTT (i ascending; its recurrence looks at i+1)
    {
        const double* wdh = flat + params.offset("rnn.bd.wdh");
        const double* whh = flat + params.offset("rnn.bd.whh");
        double* g_wdh = g + params.offset("rnn.bd.wdh");
        double* g_whh = g + params.offset("rnn.bd.whh");
        double* g_b = g + params.offset("rnn.bd.b");
        std::fill(carry.begin(), carry.end(), 0.0);
        for (int i = 0; i < L; ++i) {
            for (int u = 0; u < h; ++u) {
                const double s = cache.H.at(h + u, i);
                const double dh = dH.at(h + u, i) + carry[static_cast<std::size_t>(u)];
                dpre[static_cast<std::size_t>(u)] = dh * (1.0 - s * s);
                g_b[u] += dpre[static_cast<std::size_t>(u)];
            }
            for (int c = 0; c < d; ++c) {
                const double f = cache.F.at(c, i);
                const double* w = wdh + static_cast<std::size_t>(c) * h;
                double* gw = g_wdh + static_cast<std::size_t>(c) * h;
                double acc = 0.0;
                for (int u = 0; u < h; ++u) {
                    gw[u] += f * dpre[static_cast<std::size_t>(u)];
                    acc += w[u] * dpre[static_cast<std::size_t>(u)];
                }
                dF.at(c, i) += acc;
            }
            if (i < L - 1) {
                for (int v = 0; v < h; ++v) {
                    const double hv = cache.H.at(h + v, i + 1);
                    const double* w = whh + static_cast<std::size_t>(v) * h;
                    double* gw = g_whh + static_cast<std::size_t>(v) * h;
                    double acc = 0.0;
                    for (int u = 0; u < h; ++u) {
                        gw[u] += hv * dpre[static_cast<std::size_t>(u)];
                        acc += w[u] * dpre[static_cast<std::size_t>(u)];
                    }
                    carry[static_cast<std::size_t>(v)] = acc;
                }
            }
        }
    }

    // timestep affine (broadcast add: channel gradient is the row sum)
    {
        double* g_tw = g + params.offset("time.w");
        double* g_tb = g + params.offset("time.b");
        for (int c = 0; c < d; ++c) {
            const double* row = dF.row(c);
            double sum = 0.0;
            for (int i = 0; i < L; ++i) sum += row[i];
            g_tb[c] += sum;
            double* gw = g_tw + static_cast<std::size_t>(c) * emb;
            for (int e = 0; e < emb; ++e) gw[e] += sum * cache.embed[e];
        }
    }

    const FeatureMap x_map = as_feature_map(cache.x_ppg);
    const FeatureMap y_map = as_feature_map(cache.y_t);

    // fine_y branches consume dF channels [cf, 2cf)
    {
        const auto branches = params.fine_y();
        int offset_ch = cf;
        for (std::size_t i = 0; i < branches.size(); ++i) {
            const std::string base = "fine_y.b" + std::to_string(i);
            conv_backward(y_map, branches[i], dF, offset_ch, g + params.offset(base + ".w"),
                          g + params.offset(base + ".b"), nullptr);
            offset_ch += branches[i].out_ch;
        }
    }

    // f_ppg channels [0, cf): fine branches directly, coarse through the projection
    {
        const auto branches = params.fine_ppg();
        int offset_ch = 0;
        for (std::size_t i = 0; i < branches.size(); ++i) {
            const std::string base = "fine_ppg.b" + std::to_string(i);
            conv_backward(x_map, branches[i], dF, offset_ch, g + params.offset(base + ".w"),
                          g + params.offset(base + ".b"), nullptr);
            offset_ch += branches[i].out_ch;
        }
    }
    {
        FeatureMap d_coarse_out(cf, L);
        for (int c = 0; c < cf; ++c) {
            const double* src = dF.row(c);
            double* dst = d_coarse_out.row(c);
            for (int i = 0; i < L; ++i) dst[i] = cfg.lambda_ppg * src[i];
        }
        FeatureMap d_coarse_raw(cfg.coarse_raw_channels(), L);
        conv_backward(cache.coarse_raw, params.coarse_proj(), d_coarse_out, 0,
                      g + params.offset("coarse_proj.w"), g + params.offset("coarse_proj.b"),
                      &d_coarse_raw);
        const auto branches = params.coarse_ppg();
        int offset_ch = 0;
        for (std::size_t i = 0; i < branches.size(); ++i) {
            const std::string base = "coarse_ppg.b" + std::to_string(i);
            conv_backward(x_map, branches[i], d_coarse_raw, offset_ch,
                          g + params.offset(base + ".w"), g + params.offset(base + ".b"), nullptr);
            offset_ch += branches[i].out_ch;
        }
    }
}

double grad_check(std::vector<double>& params, const std::function<double()>& loss,
                  const std::vector<double>& analytic_grad, double step, std::size_t max_params,
                  std::uint64_t subsample_seed) {
    if (params.size() != analytic_grad.size())
        throw ValidationError("grad_check: gradient size mismatch");
    std::vector<std::size_t> indices(params.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    if (max_params > 0 && max_params < indices.size()) {
        std::mt19937_64 rng(subsample_seed);
        std::shuffle(indices.begin(), indices.end(), rng);
        indices.resize(max_params);
    }
    double worst = 0.0;
    for (const std::size_t i : indices) {
        const double saved = params[i];
        params[i] = saved + step;
        const double up = loss();
        params[i] = saved - step;
        const double down = loss();
        params[i] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double a = analytic_grad[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    }
    return worst;
}

}  // namespace respwave::nn
