#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "doodle/data.hpp"
#include "doodle/env.hpp"
#include "doodle/qnet.hpp"
#include "doodle/replay.hpp"

namespace doodle {

enum class ExplorationMode { Rare, NaiveEpsGreedy };

struct ExplorationConfig {
    ExplorationMode mode = ExplorationMode::Rare;
    double eps_start = 1.0;
    double eps_end = 0.1;
    std::int64_t anneal_frames = 50000;

    double epsilon_at(std::int64_t frame) const {
        if (frame >= anneal_frames) return eps_end;
        return eps_start - (eps_start - eps_end) * double(frame) / double(anneal_frames);
    }
};

// Greedy argmax (ties -> lowest index), except: in Rare mode a stuck pen gets a
// uniform random action that does not revisit the previous position; in naive
// eps-greedy mode a random action is taken with probability epsilon(frame).
int select_action(const std::vector<double>& q_values, const Episode& episode,
                  const ExplorationConfig& exploration, std::int64_t frame,
                  std::mt19937_64& rng);

struct PretrainConfig {
    int batch = 128;
    int epochs = 10;
    double val_fraction = 0.1;
    nn::AdamConfig adam;  // alpha 1e-3 with decay, per defaults
    std::uint64_t seed = 1;
};

struct PretrainMetrics {
    std::vector<double> train_loss;  // per epoch
    std::vector<double> train_accuracy;
    std::vector<double> val_accuracy;
};

// Supervised action classification over demo episodes with softmax cross-entropy.
// The returned network initializes the RL stage.
std::pair<QNetwork, PretrainMetrics> pretrain(const std::vector<DemoEpisode>& episodes,
                                              const QNetConfig& net_cfg,
                                              const PretrainConfig& cfg);

// y = r + gamma * Q_target(s', argmax_a Q_online(s', a)); y = r when terminal.
double ddqn_target(double reward, bool terminal, double gamma,
                   const std::vector<double>& q_next_online,
                   const std::vector<double>& q_next_target);

struct DdqnBatchItem {
    const StoredTransition* transition = nullptr;
    double weight = 1.0;     // importance-sampling weight
    std::size_t slot = 0;    // replay slot, for priority updates
};

struct DdqnResult {
    double loss = 0.0;
    std::vector<double> td_abs;  // |TD error| per batch item
};

// Accumulates gradients of mean_i w_i * (y_i - Q(s_i, a_i))^2 into `online`
// (grads are zeroed first); the caller applies the optimizer step.
// `references` resolves StoredTransition::ref_id.
DdqnResult ddqn_update(QNetwork& online, const QNetwork& target,
                       const std::vector<Canvas>& references,
                       const std::vector<DdqnBatchItem>& batch, double gamma);

struct RLConfig {
    std::int64_t total_frames = 600000;
    PerConfig per;                        // capacity 20000, alpha 0.6, eps 0.01
    double gamma = 0.99;
    int batch = 32;
    std::int64_t warmup_frames = 2000;
    int update_period = 1;                // env steps per gradient update
    std::int64_t target_sync_period = 1000;  // updates between target syncs
    double beta_start = 0.4;              // IS exponent annealed to 1.0
    ExplorationConfig exploration;
    nn::AdamConfig adam{.alpha = 1e-3};
    RewardParams reward;
    // Clip rewards to [-reward_clip, reward_clip] before storing them in the
    // replay buffer (0 disables). Evaluation always sees unclipped rewards.
    // Keeps TD targets at a scale the network can track, as in classic DQN.
    double reward_clip = 0.0;
    // Update only the final linear layer during RL, keeping pretrained features
    // intact. Most useful when fine-tuning a supervised initialization with a
    // small frame budget, where full-network TD updates can wreck the policy
    // before the value function has calibrated.
    bool freeze_trunk = false;
    int max_steps = 100;
    std::int64_t eval_period = 10000;     // frames; 0 disables periodic eval
    int eval_refs = 16;
    std::uint64_t seed = 1;
};

struct RewardCurvePoint {
    std::int64_t frame = 0;
    double mean_reward = 0.0;
    double mean_reward_pixel = 0.0;
    double mean_loss = 0.0;
    double epsilon = 0.0;
    double stuck_rate = 0.0;
};

struct TrainResult {
    QNetwork net;
    std::vector<RewardCurvePoint> curve;
};

// Double-DQN with prioritized replay over randomly drawn reference images.
TrainResult train_rl(QNetwork init, const std::vector<Canvas>& references, const RLConfig& cfg);

struct RolloutResult {
    std::vector<Canvas> frames;      // canvas after each step
    std::vector<int> actions;
    std::vector<double> rewards;
    std::vector<double> rewards_pixel;
    double accumulated = 0.0;
    double accumulated_pixel = 0.0;
    double max_reward = 0.0;         // s_0 upper bound
};

// Purely greedy unroll (argmax Q at every step); the seed is accepted for API
// stability but unused, so rollouts are deterministic by construction.
RolloutResult rollout(const QNetwork& net, const Canvas& reference, int steps = 100,
                      RewardParams params = {}, std::uint64_t seed = 0);

struct EvalResult {
    double mean_accumulated = 0.0;
    double mean_accumulated_pixel = 0.0;
    double mean_max_reward = 0.0;
};

EvalResult evaluate(const QNetwork& net, const std::vector<Canvas>& references, int steps = 100,
                    RewardParams params = {});

}  // namespace doodle
