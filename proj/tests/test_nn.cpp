#include <doctest.h>

#include <cmath>
#include <random>

#include "doodle/errors.hpp"
#include "doodle/nn.hpp"
#include "doodle/qnet.hpp"

using namespace doodle;

namespace {

// Central finite-difference check of d(loss)/d(param) where loss = sum(out * probe).
// rel. tol 1e-4 with 1e-6 absolute floor.
bool grad_close(double analytic, double numeric) {
    double diff = std::abs(analytic - numeric);
    double scale = std::max(std::abs(analytic), std::abs(numeric));
    return diff <= std::max(1e-6, 1e-4 * scale);
}

void fill_random(std::vector<double>& v, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& x : v) x = dist(rng);
}

Observation random_obs(const QNetConfig& cfg, std::mt19937_64& rng) {
    Observation obs;
    obs.side = cfg.side;
    obs.canvas_channels = cfg.canvas_channels();
    obs.global.resize(std::size_t(cfg.global_in_channels()) * cfg.side * cfg.side);
    obs.local.resize(std::size_t(cfg.local_in_channels()) * kPatchSize * kPatchSize);
    fill_random(obs.global, rng, 0.0, 1.0);
    fill_random(obs.local, rng, 0.0, 1.0);
    return obs;
}

}  // namespace

TEST_CASE("conv output geometry follows the filter spec") {
    nn::Conv2d c1(4, 32, 8, 4, true);
    CHECK(c1.out_side(84) == 20);
    nn::Conv2d c2(32, 64, 4, 2, true);
    CHECK(c2.out_side(20) == 9);
    nn::Conv2d c3(64, 64, 3, 1, true);
    CHECK(c3.out_side(9) == 7);
    nn::Conv2d local(2, 128, 11, 1, true);
    CHECK(local.out_side(11) == 1);
    CHECK_THROWS_AS(c1.out_side(85), std::invalid_argument);
}

TEST_CASE("1x1 unit conv is ReLU of the input") {
    nn::Conv2d conv(1, 1, 1, 1, true);
    conv.weights.data[0] = 1.0;
    std::vector<double> in = {-1.0, 0.5, 2.0, -0.25};
    std::vector<double> out(4), pre(4);
    conv.forward(in.data(), 2, out.data(), pre.data());
    CHECK(out == std::vector<double>{0.0, 0.5, 2.0, 0.0});
}

TEST_CASE("conv gradients match central finite differences") {
    std::mt19937_64 rng(101);
    // shapes covering every conv used by the network, at desk scale
    struct Spec { int in_c, out_c, k, s, side; };
    for (Spec spec : {Spec{4, 6, 8, 4, 16}, Spec{3, 5, 4, 2, 8}, Spec{5, 4, 3, 1, 8},
                      Spec{2, 7, 2, 1, 8}, Spec{2, 8, 11, 1, 11}}) {
        nn::Conv2d conv(spec.in_c, spec.out_c, spec.k, spec.s, true);
        conv.init_he_uniform(rng);
        fill_random(conv.bias.data, rng, -0.1, 0.1);
        int os = conv.out_side(spec.side);
        std::size_t out_n = std::size_t(spec.out_c) * os * os;
        std::vector<double> in(std::size_t(spec.in_c) * spec.side * spec.side);
        fill_random(in, rng);
        std::vector<double> probe(out_n);
        fill_random(probe, rng);

        // loss plus the ReLU activation pattern; perturbations that flip a unit
        // across the kink are skipped (loss is non-differentiable there)
        auto eval = [&] {
            std::vector<double> out(out_n), pre(out_n);
            conv.forward(in.data(), spec.side, out.data(), pre.data());
            double l = 0.0;
            std::uint64_t mask = 1469598103934665603ull;
            for (std::size_t i = 0; i < out_n; ++i) {
                l += out[i] * probe[i];
                mask = (mask ^ (pre[i] > 0.0 ? 1u : 0u)) * 1099511628211ull;
            }
            return std::pair{l, mask};
        };

        std::vector<double> out(out_n), pre(out_n);
        conv.forward(in.data(), spec.side, out.data(), pre.data());
        conv.grad_weights.zero();
        conv.grad_bias.zero();
        std::vector<double> d_in(in.size(), 0.0);
        conv.backward(in.data(), spec.side, pre.data(), probe.data(), d_in.data());

        const double h = 1e-3;
        int checked = 0;
        auto check_value = [&](double& value, double analytic) {
            double saved = value;
            value = saved + h;
            auto [up, mask_up] = eval();
            value = saved - h;
            auto [dn, mask_dn] = eval();
            value = saved;
            if (mask_up != mask_dn) return;  // kink crossed, not differentiable here
            ++checked;
            REQUIRE(grad_close(analytic, (up - dn) / (2 * h)));
        };
        auto check_tensor = [&](nn::Tensor& param, const nn::Tensor& grad, std::size_t stride) {
            for (std::size_t i = 0; i < param.size(); i += stride)
                check_value(param.data[i], grad.data[i]);
        };
        check_tensor(conv.weights, conv.grad_weights, std::max<std::size_t>(1, conv.weights.size() / 40));
        check_tensor(conv.bias, conv.grad_bias, 1);
        for (std::size_t i = 0; i < in.size(); i += std::max<std::size_t>(1, in.size() / 25))
            check_value(in[i], d_in[i]);
        CHECK(checked > 20);
    }
}

TEST_CASE("dense gradients match central finite differences") {
    std::mt19937_64 rng(103);
    nn::Dense layer(17, 9, true);
    layer.init_he_uniform(rng);
    fill_random(layer.bias.data, rng, -0.1, 0.1);
    std::vector<double> in(17), probe(9);
    fill_random(in, rng);
    fill_random(probe, rng);

    auto eval = [&] {
        std::vector<double> out(9), pre(9);
        layer.forward(in.data(), out.data(), pre.data());
        double l = 0.0;
        std::uint64_t mask = 0;
        for (int i = 0; i < 9; ++i) {
            l += out[i] * probe[i];
            mask = mask * 2 + (pre[i] > 0.0 ? 1 : 0);
        }
        return std::pair{l, mask};
    };

    std::vector<double> out(9), pre(9);
    layer.forward(in.data(), out.data(), pre.data());
    std::vector<double> d_in(17, 0.0);
    layer.backward(in.data(), pre.data(), probe.data(), d_in.data());

    const double h = 1e-3;
    int checked = 0;
    auto check_value = [&](double& value, double analytic) {
        double saved = value;
        value = saved + h;
        auto [up, mask_up] = eval();
        value = saved - h;
        auto [dn, mask_dn] = eval();
        value = saved;
        if (mask_up != mask_dn) return;
        ++checked;
        REQUIRE(grad_close(analytic, (up - dn) / (2 * h)));
    };
    for (std::size_t i = 0; i < layer.weights.size(); ++i)
        check_value(layer.weights.data[i], layer.grad_weights.data[i]);
    for (std::size_t i = 0; i < in.size(); ++i) check_value(in[i], d_in[i]);
    CHECK(checked > 100);
}

TEST_CASE("dense weight gradient is the outer product for a linear layer") {
    nn::Dense layer(3, 2, false);
    std::vector<double> in = {1.0, -2.0, 0.5};
    std::vector<double> out(2), pre(2);
    layer.forward(in.data(), out.data(), pre.data());
    std::vector<double> d_out = {0.7, -0.3};
    layer.backward(in.data(), pre.data(), d_out.data(), nullptr);
    for (int o = 0; o < 2; ++o)
        for (int i = 0; i < 3; ++i)
            CHECK(layer.grad_weights.data[o * 3 + i] == doctest::Approx(d_out[o] * in[i]));
}

TEST_CASE("softmax cross entropy closed forms") {
    std::vector<double> uniform(242, 1.25);
    auto [loss, grad] = nn::softmax_cross_entropy(uniform, 7);
    CHECK(loss == doctest::Approx(std::log(242.0)).epsilon(1e-12));

    std::vector<double> dominant(242, 0.0);
    dominant[13] = 50.0;
    auto [l2, g2] = nn::softmax_cross_entropy(dominant, 13);
    CHECK(l2 < 1e-20);

    double gsum = 0.0;
    for (double g : grad) gsum += g;
    CHECK(gsum == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(nn::softmax_cross_entropy(uniform, 242), std::invalid_argument);
}

TEST_CASE("adam: zero gradient is a fixed point, first step bounded by alpha") {
    nn::AdamConfig cfg;
    nn::Adam adam(cfg);
    nn::Tensor p({4}), g({4});
    p.data = {1.0, -2.0, 3.0, 0.0};
    auto before = p.data;
    adam.step({&p}, {&g});
    CHECK(p.data == before);

    g.data = {0.5, -0.5, 2.0, 1e-3};
    adam.step({&p}, {&g});
    for (int i = 0; i < 4; ++i)
        CHECK(std::abs(p.data[i] - before[i]) <= cfg.alpha * 1.0001);

    nn::Tensor bad({4});
    bad.data[0] = std::nan("");
    CHECK_THROWS_AS(adam.step({&p}, {&bad}), TrainingDiverged);
}

TEST_CASE("adam determinism: identical runs give identical parameters") {
    auto run = [] {
        std::mt19937_64 rng(7);
        nn::Dense layer(8, 4, true);
        layer.init_he_uniform(rng);
        nn::Adam adam(nn::AdamConfig{});
        std::vector<double> in(8), probe(4);
        fill_random(in, rng);
        fill_random(probe, rng);
        for (int step = 0; step < 25; ++step) {
            std::vector<double> out(4), pre(4);
            layer.forward(in.data(), out.data(), pre.data());
            layer.grad_weights.zero();
            layer.grad_bias.zero();
            layer.backward(in.data(), pre.data(), probe.data(), nullptr);
            adam.step({&layer.weights, &layer.bias}, {&layer.grad_weights, &layer.grad_bias});
        }
        return layer.weights.data;
    };
    CHECK(run() == run());
}

TEST_CASE("qnetwork output width matches the action space") {
    std::mt19937_64 rng(107);
    QNetConfig gray{MediaType::Sketch, 84, 64};
    QNetwork net(gray, 1);
    CHECK(net.forward(random_obs(gray, rng)).size() == 242);

    QNetConfig rgb{MediaType::ColorSketch, 84, 64};
    QNetwork cnet(rgb, 1);
    CHECK(cnet.forward(random_obs(rgb, rng)).size() == 484);
}

TEST_CASE("qnetwork with zero parameters outputs zeros; forward is deterministic") {
    QNetConfig cfg{MediaType::Sketch, 28, 32};
    QNetwork net(cfg, 2);
    std::mt19937_64 rng(109);
    Observation obs = random_obs(cfg, rng);

    auto a = net.forward(obs);
    auto b = net.forward(obs);
    CHECK(a == b);

    for (auto* t : net.params()) t->zero();
    for (double q : net.forward(obs)) CHECK(q == 0.0);
}

TEST_CASE("qnetwork clone is independent and value-equal") {
    QNetConfig cfg{MediaType::Sketch, 28, 32};
    QNetwork net(cfg, 3);
    QNetwork clone = net;
    std::mt19937_64 rng(113);
    Observation obs = random_obs(cfg, rng);
    CHECK(clone.forward(obs) == net.forward(obs));

    net.params()[0]->data[0] += 1.0;
    CHECK(clone.params()[0]->data[0] != net.params()[0]->data[0]);
    QNetwork clone2 = clone;
    CHECK(clone2.forward(obs) == clone.forward(obs));
}

TEST_CASE("qnetwork end-to-end gradients match finite differences (sampled)") {
    QNetConfig cfg{MediaType::Sketch, 28, 16};
    QNetwork net(cfg, 5);
    std::mt19937_64 rng(127);
    Observation obs = random_obs(cfg, rng);
    std::vector<double> probe(std::size_t(cfg.action_count()));
    fill_random(probe, rng);

    auto eval = [&] {
        ForwardTrace t;
        auto q = net.forward(obs, t);
        double l = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) l += q[i] * probe[i];
        std::uint64_t mask = 1469598103934665603ull;
        for (const auto& pre : t.pres)
            for (double p : pre) mask = (mask ^ (p > 0.0 ? 1u : 0u)) * 1099511628211ull;
        return std::pair{l, mask};
    };

    ForwardTrace trace;
    net.forward(obs, trace);
    net.zero_grads();
    net.backward(obs, trace, probe);

    const double h = 1e-3;
    auto params = net.params();
    auto grads = net.grads();
    std::mt19937_64 pick_rng(131);
    int checked = 0;
    for (std::size_t t = 0; t < params.size(); ++t) {
        std::uniform_int_distribution<std::size_t> pick(0, params[t]->size() - 1);
        for (int rep = 0; rep < 4; ++rep) {
            std::size_t i = pick(pick_rng);
            double saved = params[t]->data[i];
            params[t]->data[i] = saved + h;
            auto [up, mask_up] = eval();
            params[t]->data[i] = saved - h;
            auto [dn, mask_dn] = eval();
            params[t]->data[i] = saved;
            if (mask_up != mask_dn) continue;
            ++checked;
            CAPTURE(t);
            CAPTURE(i);
            REQUIRE(grad_close(grads[t]->data[i], (up - dn) / (2 * h)));
        }
    }
    CHECK(checked > 20);
}

TEST_CASE("overfitting one batch drives the loss down") {
    QNetConfig cfg{MediaType::Sketch, 28, 32};
    QNetwork net(cfg, 11);
    std::mt19937_64 rng(137);
    std::vector<Observation> batch;
    std::vector<int> labels;
    for (int i = 0; i < 4; ++i) {
        batch.push_back(random_obs(cfg, rng));
        labels.push_back(i * 37);
    }
    nn::Adam adam(nn::AdamConfig{});
    double first = 0.0, last = 0.0;
    for (int step = 0; step < 100; ++step) {
        net.zero_grads();
        double total = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            ForwardTrace trace;
            auto q = net.forward(batch[i], trace);
            auto [loss, grad] = nn::softmax_cross_entropy(q, labels[i]);
            total += loss / batch.size();
            for (double& g : grad) g /= batch.size();
            net.backward(batch[i], trace, grad);
        }
        adam.step(net.params(), net.grads());
        if (step == 0) first = total;
        last = total;
    }
    CHECK(last < 0.1 * first);
}

TEST_CASE("checkpoint round trip is bit exact") {
    QNetConfig cfg{MediaType::ColorSketch, 28, 32};
    QNetwork net(cfg, 17);
    auto path = std::string("/tmp/doodle_test_ckpt.sdqw");
    save_checkpoint(net, path);
    QNetwork back = load_checkpoint(path);
    auto a = net.params();
    auto b = back.params();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->data == b[i]->data);
    CHECK(back.config().media == cfg.media);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.sdqw"), IoError);
}
