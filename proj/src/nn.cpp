#include "doodle/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doodle/errors.hpp"

namespace doodle::nn {

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, bool relu)
    : weights(Tensor({out_channels, in_channels, kernel, kernel})),
      bias(Tensor({out_channels})),
      grad_weights(Tensor({out_channels, in_channels, kernel, kernel})),
      grad_bias(Tensor({out_channels})),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      relu_(relu) {
    if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1)
        throw std::invalid_argument("bad conv dimensions");
}

int Conv2d::out_side(int in_side) const {
    if (in_side < kernel_ || (in_side - kernel_) % stride_ != 0)
        throw std::invalid_argument("conv input side " + std::to_string(in_side) +
                                    " not compatible with kernel " + std::to_string(kernel_) +
                                    " stride " + std::to_string(stride_));
    return (in_side - kernel_) / stride_ + 1;
}

void Conv2d::init_he_uniform(std::mt19937_64& rng) {
    double limit = std::sqrt(6.0 / (in_channels_ * kernel_ * kernel_));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : weights.data) w = dist(rng);
    bias.zero();
}

void Conv2d::forward(const double* in, int in_side, double* out, double* pre) const {
    int os = out_side(in_side);
    std::size_t in_plane = static_cast<std::size_t>(in_side) * in_side;
    std::size_t out_plane = static_cast<std::size_t>(os) * os;
    std::size_t w_per_filter = static_cast<std::size_t>(in_channels_) * kernel_ * kernel_;

    for (int oc = 0; oc < out_channels_; ++oc) {
        const double* w = weights.data.data() + oc * w_per_filter;
        for (int oy = 0; oy < os; ++oy) {
            for (int ox = 0; ox < os; ++ox) {
                double acc = bias.data[oc];
                const double* wp = w;
                for (int ic = 0; ic < in_channels_; ++ic) {
                    const double* plane = in + ic * in_plane + (oy * stride_) * in_side + ox * stride_;
                    for (int ky = 0; ky < kernel_; ++ky) {
                        const double* row = plane + ky * in_side;
                        for (int kx = 0; kx < kernel_; ++kx) acc += wp[kx] * row[kx];
                        wp += kernel_;
                    }
                }
                std::size_t idx = oc * out_plane + oy * os + ox;
                pre[idx] = acc;
                out[idx] = relu_ ? std::max(acc, 0.0) : acc;
            }
        }
    }
}

void Conv2d::backward(const double* in, int in_side, const double* pre, const double* d_out,
                      double* d_in) {
    int os = out_side(in_side);
    std::size_t in_plane = static_cast<std::size_t>(in_side) * in_side;
    std::size_t out_plane = static_cast<std::size_t>(os) * os;
    std::size_t w_per_filter = static_cast<std::size_t>(in_channels_) * kernel_ * kernel_;

    for (int oc = 0; oc < out_channels_; ++oc) {
        const double* w = weights.data.data() + oc * w_per_filter;
        double* gw = grad_weights.data.data() + oc * w_per_filter;
        for (int oy = 0; oy < os; ++oy) {
            for (int ox = 0; ox < os; ++ox) {
                std::size_t idx = oc * out_plane + oy * os + ox;
                double g = d_out[idx];
                if (relu_ && pre[idx] <= 0.0) continue;
                if (g == 0.0) continue;
                grad_bias.data[oc] += g;
                const double* wp = w;
                double* gwp = gw;
                for (int ic = 0; ic < in_channels_; ++ic) {
                    std::size_t base = ic * in_plane + (oy * stride_) * in_side + ox * stride_;
                    const double* plane = in + base;
                    double* dplane = d_in ? d_in + base : nullptr;
                    for (int ky = 0; ky < kernel_; ++ky) {
                        const double* row = plane + ky * in_side;
                        for (int kx = 0; kx < kernel_; ++kx) gwp[kx] += g * row[kx];
                        if (dplane) {
                            double* drow = dplane + ky * in_side;
                            for (int kx = 0; kx < kernel_; ++kx) drow[kx] += g * wp[kx];
                        }
                        wp += kernel_;
                        gwp += kernel_;
                    }
                }
            }
        }
    }
}

Dense::Dense(int in_features, int out_features, bool relu)
    : weights(Tensor({out_features, in_features})),
      bias(Tensor({out_features})),
      grad_weights(Tensor({out_features, in_features})),
      grad_bias(Tensor({out_features})),
      in_features_(in_features),
      out_features_(out_features),
      relu_(relu) {
    if (in_features < 1 || out_features < 1) throw std::invalid_argument("bad dense dimensions");
}

void Dense::init_he_uniform(std::mt19937_64& rng) {
    double limit = std::sqrt(6.0 / in_features_);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : weights.data) w = dist(rng);
    bias.zero();
}

void Dense::forward(const double* in, double* out, double* pre) const {
    for (int o = 0; o < out_features_; ++o) {
        const double* w = weights.data.data() + static_cast<std::size_t>(o) * in_features_;
        double acc = bias.data[o];
        for (int i = 0; i < in_features_; ++i) acc += w[i] * in[i];
        pre[o] = acc;
        out[o] = relu_ ? std::max(acc, 0.0) : acc;
    }
}

void Dense::backward(const double* in, const double* pre, const double* d_out, double* d_in) {
    for (int o = 0; o < out_features_; ++o) {
        double g = d_out[o];
        if (relu_ && pre[o] <= 0.0) continue;
        if (g == 0.0) continue;
        grad_bias.data[o] += g;
        std::size_t off = static_cast<std::size_t>(o) * in_features_;
        double* gw = grad_weights.data.data() + off;
        const double* w = weights.data.data() + off;
        for (int i = 0; i < in_features_; ++i) gw[i] += g * in[i];
        if (d_in)
            for (int i = 0; i < in_features_; ++i) d_in[i] += g * w[i];
    }
}

std::pair<double, std::vector<double>> softmax_cross_entropy(const std::vector<double>& logits,
                                                             int label) {
    if (label < 0 || label >= static_cast<int>(logits.size()))
        throw std::invalid_argument("label out of range");
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    std::vector<double> grad(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        grad[i] = std::exp(logits[i] - mx);
        z += grad[i];
    }
    for (double& g : grad) g /= z;
    double loss = -(logits[label] - mx - std::log(z));
    grad[label] -= 1.0;
    return {loss, std::move(grad)};
}

int argmax(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

double Adam::current_alpha() const {
    if (cfg_.decay_period <= 0) return cfg_.alpha;
    return cfg_.alpha * std::pow(cfg_.decay_factor, double(t_ / cfg_.decay_period));
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("params/grads size mismatch");
    if (m_.empty()) {
        for (Tensor* p : params) {
            m_.emplace_back(Tensor(p->shape));
            v_.emplace_back(Tensor(p->shape));
        }
    }
    double alpha = current_alpha();
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k]->data;
        auto& g = grads[k]->data;
        auto& m = m_[k].data;
        auto& v = v_[k].data;
        if (p.size() != g.size() || p.size() != m.size())
            throw std::invalid_argument("adam: shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            double gi = g[i];
            if (!std::isfinite(gi)) throw TrainingDiverged("non-finite gradient");
            if (cfg_.grad_clip > 0.0) gi = std::clamp(gi, -cfg_.grad_clip, cfg_.grad_clip);
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            p[i] -= alpha * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace doodle::nn
