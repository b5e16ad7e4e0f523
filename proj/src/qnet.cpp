#include "doodle/qnet.hpp"

#include <fstream>
#include <stdexcept>

#include "doodle/binio.hpp"
#include "doodle/errors.hpp"

namespace doodle {

namespace {

// DQN-style stack: 32 8x8/s4, 64 4x4/s2, 64 3x3/s1. On canvases too small for
// the 3x3 stage the last kernel shrinks to 2x2 so the chain stays valid.
std::vector<nn::Conv2d> make_global_stack(const QNetConfig& cfg, std::vector<int>& sides) {
    std::vector<nn::Conv2d> convs;
    convs.emplace_back(cfg.global_in_channels(), 32, 8, 4, true);
    int s1 = convs[0].out_side(cfg.side);
    convs.emplace_back(32, 64, 4, 2, true);
    int s2 = convs[1].out_side(s1);
    convs.emplace_back(64, 64, s2 >= 3 ? 3 : 2, 1, true);
    int s3 = convs[2].out_side(s2);
    if (cfg.side == 84 && (s1 != 20 || s2 != 9 || s3 != 7))
        throw std::logic_error("84x84 conv chain must be 20 -> 9 -> 7");
    sides = {cfg.side, s1, s2, s3};
    return convs;
}

}  // namespace

QNetwork::QNetwork(QNetConfig cfg, std::uint64_t seed)
    : cfg_(cfg),
      global_convs_(make_global_stack(cfg, global_sides_)),
      local_conv_(cfg.local_in_channels(), 128, kPatchSize, 1, true),
      hidden_(1, 1, true),  // placeholder, rebuilt below once feature_count_ is known
      out_(1, 1, false) {
    int s3 = global_sides_.back();
    feature_count_ = s3 * s3 * 64 + (cfg_.use_local_stream ? 128 : 0);
    hidden_ = nn::Dense(feature_count_, cfg_.hidden, true);
    out_ = nn::Dense(cfg_.hidden, cfg_.action_count(), false);

    std::mt19937_64 rng(seed);
    for (auto& conv : global_convs_) conv.init_he_uniform(rng);
    local_conv_.init_he_uniform(rng);
    hidden_.init_he_uniform(rng);
    out_.init_he_uniform(rng);
}

void QNetwork::check_obs(const Observation& obs) const {
    std::size_t want_global = static_cast<std::size_t>(cfg_.global_in_channels()) * cfg_.side * cfg_.side;
    std::size_t want_local =
        static_cast<std::size_t>(cfg_.local_in_channels()) * kPatchSize * kPatchSize;
    if (obs.side != cfg_.side || obs.global.size() != want_global || obs.local.size() != want_local)
        throw std::invalid_argument("observation shape does not match network config");
}

std::vector<double> QNetwork::forward(const Observation& obs) const {
    ForwardTrace trace;
    return forward(obs, trace);
}

std::vector<double> QNetwork::forward(const Observation& obs, ForwardTrace& trace) const {
    check_obs(obs);
    trace.acts.assign(6, {});
    trace.pres.assign(6, {});

    const double* in = obs.global.data();
    for (std::size_t i = 0; i < global_convs_.size(); ++i) {
        int os = global_sides_[i + 1];
        std::size_t n = static_cast<std::size_t>(global_convs_[i].out_channels()) * os * os;
        trace.acts[i].resize(n);
        trace.pres[i].resize(n);
        global_convs_[i].forward(in, global_sides_[i], trace.acts[i].data(), trace.pres[i].data());
        in = trace.acts[i].data();
    }

    trace.features.assign(static_cast<std::size_t>(feature_count_), 0.0);
    std::copy(trace.acts[2].begin(), trace.acts[2].end(), trace.features.begin());

    if (cfg_.use_local_stream) {
        trace.acts[3].resize(128);
        trace.pres[3].resize(128);
        local_conv_.forward(obs.local.data(), kPatchSize, trace.acts[3].data(),
                            trace.pres[3].data());
        std::copy(trace.acts[3].begin(), trace.acts[3].end(),
                  trace.features.begin() + trace.acts[2].size());
    }

    trace.acts[4].resize(static_cast<std::size_t>(cfg_.hidden));
    trace.pres[4].resize(static_cast<std::size_t>(cfg_.hidden));
    hidden_.forward(trace.features.data(), trace.acts[4].data(), trace.pres[4].data());

    trace.q.resize(static_cast<std::size_t>(cfg_.action_count()));
    trace.pres[5].resize(trace.q.size());
    out_.forward(trace.acts[4].data(), trace.q.data(), trace.pres[5].data());
    return trace.q;
}

void QNetwork::backward(const Observation& obs, const ForwardTrace& trace,
                        const std::vector<double>& d_q) {
    check_obs(obs);
    if (d_q.size() != static_cast<std::size_t>(cfg_.action_count()))
        throw std::invalid_argument("d_q size mismatch");

    std::vector<double> d_hidden(static_cast<std::size_t>(cfg_.hidden), 0.0);
    out_.backward(trace.acts[4].data(), trace.pres[5].data(), d_q.data(), d_hidden.data());

    std::vector<double> d_features(trace.features.size(), 0.0);
    hidden_.backward(trace.features.data(), trace.pres[4].data(), d_hidden.data(),
                     d_features.data());

    if (cfg_.use_local_stream) {
        local_conv_.backward(obs.local.data(), kPatchSize, trace.pres[3].data(),
                             d_features.data() + trace.acts[2].size(), nullptr);
    }

    std::vector<double> d_g2(trace.acts[1].size(), 0.0);
    global_convs_[2].backward(trace.acts[1].data(), global_sides_[2], trace.pres[2].data(),
                              d_features.data(), d_g2.data());
    std::vector<double> d_g1(trace.acts[0].size(), 0.0);
    global_convs_[1].backward(trace.acts[0].data(), global_sides_[1], trace.pres[1].data(),
                              d_g2.data(), d_g1.data());
    global_convs_[0].backward(obs.global.data(), global_sides_[0], trace.pres[0].data(),
                              d_g1.data(), nullptr);
}

void QNetwork::zero_grads() {
    for (auto& conv : global_convs_) {
        conv.grad_weights.zero();
        conv.grad_bias.zero();
    }
    local_conv_.grad_weights.zero();
    local_conv_.grad_bias.zero();
    hidden_.grad_weights.zero();
    hidden_.grad_bias.zero();
    out_.grad_weights.zero();
    out_.grad_bias.zero();
}

std::vector<nn::Tensor*> QNetwork::params() {
    std::vector<nn::Tensor*> out;
    for (auto& conv : global_convs_) {
        out.push_back(&conv.weights);
        out.push_back(&conv.bias);
    }
    if (cfg_.use_local_stream) {
        out.push_back(&local_conv_.weights);
        out.push_back(&local_conv_.bias);
    }
    out.push_back(&hidden_.weights);
    out.push_back(&hidden_.bias);
    out.push_back(&out_.weights);
    out.push_back(&out_.bias);
    return out;
}

std::vector<nn::Tensor*> QNetwork::grads() {
    std::vector<nn::Tensor*> out;
    for (auto& conv : global_convs_) {
        out.push_back(&conv.grad_weights);
        out.push_back(&conv.grad_bias);
    }
    if (cfg_.use_local_stream) {
        out.push_back(&local_conv_.grad_weights);
        out.push_back(&local_conv_.grad_bias);
    }
    out.push_back(&hidden_.grad_weights);
    out.push_back(&hidden_.grad_bias);
    out.push_back(&out_.grad_weights);
    out.push_back(&out_.grad_bias);
    return out;
}

std::vector<const nn::Tensor*> QNetwork::params() const {
    auto mutable_params = const_cast<QNetwork*>(this)->params();
    return {mutable_params.begin(), mutable_params.end()};
}

namespace {

constexpr char kWeightsMagic[5] = "SDQW";
constexpr std::uint16_t kWeightsVersion = 1;

std::vector<std::string> tensor_names(const QNetConfig& cfg) {
    std::vector<std::string> names;
    for (int i = 1; i <= 3; ++i) {
        names.push_back("gconv" + std::to_string(i) + ".w");
        names.push_back("gconv" + std::to_string(i) + ".b");
    }
    if (cfg.use_local_stream) {
        names.push_back("local.w");
        names.push_back("local.b");
    }
    names.push_back("hidden.w");
    names.push_back("hidden.b");
    names.push_back("out.w");
    names.push_back("out.b");
    return names;
}

}  // namespace

void save_checkpoint(const QNetwork& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kWeightsMagic, 4);
    binio::write_pod<std::uint16_t>(out, kWeightsVersion);
    const auto& cfg = net.config();
    binio::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(cfg.media));
    binio::write_pod<std::int32_t>(out, cfg.side);
    binio::write_pod<std::int32_t>(out, cfg.hidden);
    binio::write_pod<std::uint8_t>(out, cfg.use_local_stream ? 1 : 0);

    auto tensors = net.params();
    auto names = tensor_names(cfg);
    binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        binio::write_string(out, names[i]);
        binio::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(tensors[i]->shape.size()));
        for (int d : tensors[i]->shape) binio::write_pod<std::int32_t>(out, d);
        binio::write_doubles(out, tensors[i]->data);
    }
    if (!out) throw IoError("write failed: " + path);
}

QNetwork load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    binio::expect_magic(in, kWeightsMagic, "SDQW checkpoint");
    auto version = binio::read_pod<std::uint16_t>(in);
    if (version != kWeightsVersion)
        throw DataFormatError("unsupported checkpoint version " + std::to_string(version));

    QNetConfig cfg;
    cfg.media = static_cast<MediaType>(binio::read_pod<std::uint8_t>(in));
    cfg.side = binio::read_pod<std::int32_t>(in);
    cfg.hidden = binio::read_pod<std::int32_t>(in);
    cfg.use_local_stream = binio::read_pod<std::uint8_t>(in) != 0;

    QNetwork net(cfg, 0);
    auto tensors = net.params();
    auto names = tensor_names(cfg);
    auto count = binio::read_pod<std::uint32_t>(in);
    if (count != tensors.size()) throw DataFormatError("checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        auto name = binio::read_string(in);
        if (name != names[i]) throw DataFormatError("unexpected tensor name " + name);
        auto ndim = binio::read_pod<std::uint8_t>(in);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = binio::read_pod<std::int32_t>(in);
        if (shape != tensors[i]->shape) throw DataFormatError("tensor shape mismatch for " + name);
        auto data = binio::read_doubles(in);
        if (data.size() != tensors[i]->data.size())
            throw DataFormatError("tensor size mismatch for " + name);
        tensors[i]->data = std::move(data);
    }
    return net;
}

}  // namespace doodle
