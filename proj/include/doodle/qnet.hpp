#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "doodle/canvas.hpp"
#include "doodle/env.hpp"
#include "doodle/nn.hpp"

namespace doodle {

struct QNetConfig {
    MediaType media = MediaType::Sketch;
    int side = 84;
    int hidden = 512;
    bool use_local_stream = true;  // ablation: global-only network

    int canvas_channels() const { return media_channels(media); }
    int global_in_channels() const { return 2 * canvas_channels() + 2; }
    int local_in_channels() const { return 2 * canvas_channels(); }
    int action_count() const { return ActionSpec{media}.total(); }
};

// Intermediate activations of one forward pass, needed for backward.
struct ForwardTrace {
    std::vector<std::vector<double>> acts;  // post-activation per stage
    std::vector<std::vector<double>> pres;  // pre-activation per stage
    std::vector<double> features;           // concatenated conv outputs
    std::vector<double> q;
};

// Two-stream convolutional Q-network: three conv layers on the global stream,
// one 11x11 conv on the local patch stream, concatenated into a hidden dense
// layer and a linear output per action.
class QNetwork {
  public:
    QNetwork(QNetConfig cfg, std::uint64_t seed);

    std::vector<double> forward(const Observation& obs) const;
    std::vector<double> forward(const Observation& obs, ForwardTrace& trace) const;

    // Accumulates parameter gradients for d(loss)/d(q) = d_q. forward(obs, trace)
    // must have produced `trace`.
    void backward(const Observation& obs, const ForwardTrace& trace,
                  const std::vector<double>& d_q);

    void zero_grads();
    std::vector<nn::Tensor*> params();
    std::vector<nn::Tensor*> grads();
    std::vector<const nn::Tensor*> params() const;

    const QNetConfig& config() const { return cfg_; }
    int feature_count() const { return feature_count_; }

    // QNetwork is a value type; copying yields an independent deep clone.

  private:
    QNetConfig cfg_;
    std::vector<int> global_sides_;  // input side of each global conv stage; filled
                                     // by make_global_stack, so it precedes the convs
    std::vector<nn::Conv2d> global_convs_;
    nn::Conv2d local_conv_;
    nn::Dense hidden_, out_;
    int feature_count_ = 0;

    void check_obs(const Observation& obs) const;
};

// Self-describing binary checkpoint ("SDQW"): config header plus named tensors,
// bit-exact round trip.
void save_checkpoint(const QNetwork& net, const std::string& path);
QNetwork load_checkpoint(const std::string& path);

}  // namespace doodle
