#include "doodle/agent.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "doodle/errors.hpp"

namespace doodle {

int select_action(const std::vector<double>& q_values, const Episode& episode,
                  const ExplorationConfig& exploration, std::int64_t frame,
                  std::mt19937_64& rng) {
    ActionSpec spec = episode.action_spec();
    const int total = spec.total();
    std::uniform_int_distribution<int> uniform(0, total - 1);

    if (exploration.mode == ExplorationMode::NaiveEpsGreedy) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng) < exploration.epsilon_at(frame)) return uniform(rng);
        return nn::argmax(q_values);
    }

    if (!episode.is_stuck()) return nn::argmax(q_values);

    // Random unstick action, excluding moves that land back on the previous
    // position (which would immediately recreate the detected cycle).
    const auto& hist = episode.position_history();
    auto [prev_x, prev_y] = hist[2];
    int side = episode.canvas().side();
    const PenState& pen = episode.pen();
    for (int attempt = 0; attempt < 64; ++attempt) {
        int idx = uniform(rng);
        Action a = decode_action(idx, spec);
        int tx = std::clamp(pen.x + a.dx, 0, side - 1);
        int ty = std::clamp(pen.y + a.dy, 0, side - 1);
        if (tx == prev_x && ty == prev_y) continue;
        return idx;
    }
    return uniform(rng);
}

namespace {

std::vector<double> one_hot_grad(int total, int index, double value) {
    std::vector<double> g(static_cast<std::size_t>(total), 0.0);
    g[static_cast<std::size_t>(index)] = value;
    return g;
}

}  // namespace

std::pair<QNetwork, PretrainMetrics> pretrain(const std::vector<DemoEpisode>& episodes,
                                              const QNetConfig& net_cfg,
                                              const PretrainConfig& cfg) {
    if (episodes.empty()) throw std::invalid_argument("no demo episodes");

    std::vector<DemoSample> samples;
    for (const auto& ep : episodes) {
        auto s = materialize_samples(ep);
        samples.insert(samples.end(), std::make_move_iterator(s.begin()),
                       std::make_move_iterator(s.end()));
    }
    if (samples.empty()) throw std::invalid_argument("demo episodes contain no actions");

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::size_t n_val = static_cast<std::size_t>(cfg.val_fraction * double(samples.size()));
    if (n_val >= samples.size()) n_val = samples.size() - 1;
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
    std::vector<std::size_t> train_idx(order.begin() + n_val, order.end());

    QNetwork net(net_cfg, cfg.seed);
    nn::Adam adam(cfg.adam);
    PretrainMetrics metrics;

    auto obs_of = [](const DemoSample& s) {
        return make_observation(s.current, *s.reference, s.pen.x, s.pen.y, s.last_mode);
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(cfg.batch)) {
            std::size_t end = std::min(train_idx.size(), start + static_cast<std::size_t>(cfg.batch));
            net.zero_grads();
            for (std::size_t k = start; k < end; ++k) {
                const DemoSample& s = samples[train_idx[k]];
                Observation obs = obs_of(s);
                ForwardTrace trace;
                auto q = net.forward(obs, trace);
                auto [loss, grad] = nn::softmax_cross_entropy(q, s.action);
                if (!std::isfinite(loss)) throw TrainingDiverged("pretrain loss is non-finite");
                loss_sum += loss;
                if (nn::argmax(q) == s.action) ++correct;
                double inv = 1.0 / double(end - start);
                for (double& g : grad) g *= inv;
                net.backward(obs, trace, grad);
            }
            adam.step(net.params(), net.grads());
        }
        metrics.train_loss.push_back(loss_sum / double(train_idx.size()));
        metrics.train_accuracy.push_back(double(correct) / double(train_idx.size()));

        std::size_t val_correct = 0;
        for (std::size_t idx : val_idx) {
            const DemoSample& s = samples[idx];
            if (nn::argmax(net.forward(obs_of(s))) == s.action) ++val_correct;
        }
        metrics.val_accuracy.push_back(val_idx.empty() ? 0.0
                                                       : double(val_correct) / double(val_idx.size()));
    }
    return {std::move(net), std::move(metrics)};
}

double ddqn_target(double reward, bool terminal, double gamma,
                   const std::vector<double>& q_next_online,
                   const std::vector<double>& q_next_target) {
    if (terminal) return reward;
    int best = nn::argmax(q_next_online);
    return reward + gamma * q_next_target[static_cast<std::size_t>(best)];
}

DdqnResult ddqn_update(QNetwork& online, const QNetwork& target,
                       const std::vector<Canvas>& references,
                       const std::vector<DdqnBatchItem>& batch, double gamma) {
    if (batch.empty()) throw std::invalid_argument("empty ddqn batch");
    online.zero_grads();
    DdqnResult result;
    result.td_abs.reserve(batch.size());
    double inv_batch = 1.0 / double(batch.size());
    int total = online.config().action_count();

    for (const auto& item : batch) {
        const StoredTransition& t = *item.transition;
        const Canvas& ref = references[t.ref_id];
        Observation obs = make_observation(t.canvas_before, ref, t.pen_x_before, t.pen_y_before,
                                           t.last_mode_before);
        ForwardTrace trace;
        auto q = online.forward(obs, trace);

        double y = t.reward;
        if (!t.terminal) {
            Observation next = make_observation(t.canvas_after, ref, t.pen_x_after,
                                                t.pen_y_after, t.last_mode_after);
            y = ddqn_target(t.reward, false, gamma, online.forward(next), target.forward(next));
        }
        if (!std::isfinite(y)) throw TrainingDiverged("non-finite DDQN target");

        double td = y - q[t.action];
        result.loss += item.weight * td * td * inv_batch;
        result.td_abs.push_back(std::abs(td));
        // d/dq of mean_i w_i (y_i - q_i)^2
        online.backward(obs, trace,
                        one_hot_grad(total, t.action, -2.0 * item.weight * td * inv_batch));
    }
    return result;
}

namespace {

StoredTransition make_transition(std::uint32_t ref_id, const Episode& before_ep,
                                 const Canvas& canvas_before, const PenState& pen_before,
                                 PenMode mode_before, int action, const StepResult& res) {
    StoredTransition t;
    t.ref_id = ref_id;
    t.canvas_before = canvas_before;
    t.pen_x_before = static_cast<std::int16_t>(pen_before.x);
    t.pen_y_before = static_cast<std::int16_t>(pen_before.y);
    t.last_mode_before = mode_before;
    t.action = static_cast<std::uint16_t>(action);
    t.reward = res.reward;
    t.canvas_after = before_ep.canvas();
    t.pen_x_after = static_cast<std::int16_t>(before_ep.pen().x);
    t.pen_y_after = static_cast<std::int16_t>(before_ep.pen().y);
    t.last_mode_after = before_ep.last_mode();
    t.terminal = res.terminal;
    return t;
}

}  // namespace

TrainResult train_rl(QNetwork init, const std::vector<Canvas>& references, const RLConfig& cfg) {
    if (references.empty()) throw std::invalid_argument("no reference images");

    TrainResult result{std::move(init), {}};
    if (cfg.total_frames <= 0) return result;

    QNetwork& online = result.net;
    QNetwork target = online;  // deep clone
    nn::Adam adam(cfg.adam);
    ReplayBuffer<StoredTransition> buffer(cfg.per);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick_ref(0, references.size() - 1);

    std::vector<Canvas> probe_refs(
        references.begin(),
        references.begin() + std::min<std::size_t>(references.size(),
                                                   static_cast<std::size_t>(cfg.eval_refs)));

    std::unique_ptr<Episode> ep;
    std::uint32_t ref_id = 0;
    auto new_episode = [&] {
        ref_id = static_cast<std::uint32_t>(pick_ref(rng));
        ep = std::make_unique<Episode>(references[ref_id], cfg.reward, cfg.max_steps);
    };
    new_episode();

    std::int64_t updates = 0;
    double loss_accum = 0.0;
    std::int64_t loss_count = 0;
    std::int64_t stuck_count = 0;
    Observation obs = ep->observe();

    for (std::int64_t frame = 0; frame < cfg.total_frames; ++frame) {
        auto q = online.forward(obs);
        if (ep->is_stuck()) ++stuck_count;
        int action = select_action(q, *ep, cfg.exploration, frame, rng);

        Canvas canvas_before = ep->canvas();
        PenState pen_before = ep->pen();
        PenMode mode_before = ep->last_mode();
        StepResult res = ep->step(decode_action(action, ep->action_spec()));

        StoredTransition tr =
            make_transition(ref_id, *ep, canvas_before, pen_before, mode_before, action, res);
        if (cfg.reward_clip > 0.0)
            tr.reward = std::clamp(tr.reward, -cfg.reward_clip, cfg.reward_clip);
        buffer.insert(std::move(tr), buffer.max_priority());

        if (frame >= cfg.warmup_frames && buffer.size() >= static_cast<std::size_t>(cfg.batch) &&
            (frame % cfg.update_period == 0)) {
            double beta = cfg.beta_start +
                          (1.0 - cfg.beta_start) * double(frame) / double(cfg.total_frames);
            auto picks = buffer.sample(static_cast<std::size_t>(cfg.batch), beta, rng);
            std::vector<DdqnBatchItem> batch;
            batch.reserve(picks.size());
            for (const auto& p : picks)
                batch.push_back(DdqnBatchItem{&buffer.item(p.index), p.weight, p.index});
            DdqnResult upd = ddqn_update(online, target, references, batch, cfg.gamma);
            if (cfg.freeze_trunk) {
                auto gs = online.grads();
                for (std::size_t t = 0; t + 2 < gs.size(); ++t)
                    std::fill(gs[t]->data.begin(), gs[t]->data.end(), 0.0);
            }
            adam.step(online.params(), online.grads());
            for (std::size_t i = 0; i < batch.size(); ++i)
                buffer.set_priority(batch[i].slot, upd.td_abs[i]);
            loss_accum += upd.loss;
            ++loss_count;
            if (++updates % cfg.target_sync_period == 0) target = online;
        }

        if (res.terminal)
            new_episode(), obs = ep->observe();
        else
            obs = std::move(res.obs);

        if (cfg.eval_period > 0 && (frame + 1) % cfg.eval_period == 0) {
            EvalResult ev = evaluate(online, probe_refs, cfg.max_steps, cfg.reward);
            RewardCurvePoint pt;
            pt.frame = frame + 1;
            pt.mean_reward = ev.mean_accumulated;
            pt.mean_reward_pixel = ev.mean_accumulated_pixel;
            pt.mean_loss = loss_count ? loss_accum / double(loss_count) : 0.0;
            pt.epsilon = cfg.exploration.mode == ExplorationMode::NaiveEpsGreedy
                             ? cfg.exploration.epsilon_at(frame)
                             : 0.0;
            pt.stuck_rate = double(stuck_count) / double(cfg.eval_period);
            result.curve.push_back(pt);
            loss_accum = 0.0;
            loss_count = 0;
            stuck_count = 0;
        }
    }
    return result;
}

RolloutResult rollout(const QNetwork& net, const Canvas& reference, int steps, RewardParams params,
                      std::uint64_t seed) {
    (void)seed;  // Evaluation is purely greedy; unsticking is a training-time device.
    RolloutResult result;
    result.max_reward = max_reward(reference);
    Episode ep(reference, params, steps);
    Observation obs = ep.observe();
    for (int k = 0; k < steps; ++k) {
        const std::vector<double>& q = net.forward(obs);
        int action = int(std::max_element(q.begin(), q.end()) - q.begin());
        StepResult res = ep.step(decode_action(action, ep.action_spec()));
        result.frames.push_back(ep.canvas());
        result.actions.push_back(action);
        result.rewards.push_back(res.reward);
        result.rewards_pixel.push_back(res.reward_pixel);
        result.accumulated += res.reward;
        result.accumulated_pixel += res.reward_pixel;
        if (res.terminal) break;
        obs = std::move(res.obs);
    }
    return result;
}

EvalResult evaluate(const QNetwork& net, const std::vector<Canvas>& references, int steps,
                    RewardParams params) {
    if (references.empty()) throw std::invalid_argument("no reference images");
    EvalResult out;
    for (const Canvas& ref : references) {
        RolloutResult r = rollout(net, ref, steps, params);
        out.mean_accumulated += r.accumulated;
        out.mean_accumulated_pixel += r.accumulated_pixel;
        out.mean_max_reward += r.max_reward;
    }
    double n = double(references.size());
    out.mean_accumulated /= n;
    out.mean_accumulated_pixel /= n;
    out.mean_max_reward /= n;
    return out;
}

}  // namespace doodle
