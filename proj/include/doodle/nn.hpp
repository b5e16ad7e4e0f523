#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace doodle::nn {

struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        data.assign(n, 0.0);
    }
    std::size_t size() const { return data.size(); }
    void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

// 2D cross-correlation, valid padding, optional ReLU. Input/output are channel-major
// contiguous (C, H, W). Output side = (in_side - kernel) / stride + 1; construction
// requires exact divisibility.
class Conv2d {
  public:
    Conv2d(int in_channels, int out_channels, int kernel, int stride, bool relu);

    int out_side(int in_side) const;
    void init_he_uniform(std::mt19937_64& rng);

    // `out` sized out_channels * out_side^2; `pre` (same size) receives pre-activation
    // values needed by backward (may alias nothing; required when relu is on).
    void forward(const double* in, int in_side, double* out, double* pre) const;

    // Accumulates into weight/bias grads; writes d(loss)/d(input) to d_in (may be null).
    void backward(const double* in, int in_side, const double* pre, const double* d_out,
                  double* d_in);

    int in_channels() const { return in_channels_; }
    int out_channels() const { return out_channels_; }
    int kernel() const { return kernel_; }
    bool relu() const { return relu_; }

    Tensor weights, bias;        // [out, in, k, k], [out]
    Tensor grad_weights, grad_bias;

  private:
    int in_channels_, out_channels_, kernel_, stride_;
    bool relu_;
};

// Fully connected layer with optional ReLU.
class Dense {
  public:
    Dense(int in_features, int out_features, bool relu);

    void init_he_uniform(std::mt19937_64& rng);
    void forward(const double* in, double* out, double* pre) const;
    void backward(const double* in, const double* pre, const double* d_out, double* d_in);

    int in_features() const { return in_features_; }
    int out_features() const { return out_features_; }

    Tensor weights, bias;        // [out, in], [out]
    Tensor grad_weights, grad_bias;

  private:
    int in_features_, out_features_;
    bool relu_;
};

// loss = -log softmax(logits)[label]; grad = softmax(logits) - one_hot(label).
// Max-subtracted for stability.
std::pair<double, std::vector<double>> softmax_cross_entropy(const std::vector<double>& logits,
                                                             int label);

int argmax(const std::vector<double>& v);  // ties -> lowest index

struct AdamConfig {
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // alpha is multiplied by decay_factor every decay_period steps; 0 disables.
    std::int64_t decay_period = 50000;
    double decay_factor = 0.5;
    double grad_clip = 0.0;  // 0 = off
};

// Bias-corrected Adam over a fixed list of parameter tensors.
class Adam {
  public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

    // params[i] and grads[i] must keep their shapes across calls.
    // Throws TrainingDiverged on non-finite gradients.
    void step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads);

    double current_alpha() const;
    std::int64_t step_count() const { return t_; }

  private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace doodle::nn
