// Command-line driver: demo synthesis, supervised pretraining, DDQN training,
// greedy rollouts, and evaluation over reference doodles.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "doodle/agent.hpp"
#include "doodle/data.hpp"
#include "doodle/errors.hpp"
#include "doodle/qnet.hpp"

namespace fs = std::filesystem;
using namespace doodle;

namespace {

MediaType parse_media(const std::string& s) {
    if (s == "sketch") return MediaType::Sketch;
    if (s == "colorsketch") return MediaType::ColorSketch;
    if (s == "watercolor") return MediaType::Watercolor;
    throw CLI::ValidationError("--media", "expected sketch|colorsketch|watercolor");
}

void echo_config(const CLI::App& app, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream f(out_dir / "config.txt");
    if (!f) throw IoError("cannot write " + (out_dir / "config.txt").string());
    f << app.config_to_str(true, false);
}

std::vector<Canvas> references_from(const std::string& demos_path, int count, int side,
                                    MediaType media, int strokes, std::uint64_t seed) {
    std::vector<Canvas> refs;
    if (!demos_path.empty()) {
        for (const auto& ep : load_demo_dataset(demos_path)) {
            refs.push_back(ep.reference);
            if (count > 0 && static_cast<int>(refs.size()) >= count) break;
        }
    } else {
        std::mt19937_64 rng(seed);
        auto bank = procedural_stroke_bank(side, 200, rng);
        DemoSynthConfig cfg{side, media, strokes};
        for (int i = 0; i < count; ++i)
            refs.push_back(synthesize_demo_episode(bank, cfg, rng).reference);
    }
    if (refs.empty()) throw DataFormatError("no reference images");
    return refs;
}

void write_curve_csv(const std::vector<RewardCurvePoint>& curve, const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << "frame,mean_reward,mean_reward_pixel,mean_loss,epsilon,stuck_rate\n";
    for (const auto& p : curve)
        f << p.frame << ',' << p.mean_reward << ',' << p.mean_reward_pixel << ','
          << p.mean_loss << ',' << p.epsilon << ',' << p.stuck_rate << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"doodle: stroke-level drawing agent trainer"};
    app.require_subcommand(1);
    app.set_config("--config")->configurable(false);

    std::string out_dir = ".";
    std::string media_name = "sketch";
    int side = 84;
    std::uint64_t seed = 1;
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--media", media_name, "sketch|colorsketch|watercolor")
        ->capture_default_str();
    app.add_option("--side", side, "canvas side length")->capture_default_str();
    app.add_option("--seed", seed, "master RNG seed")->capture_default_str();

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "synthesize a demo dataset");
    synth->fallthrough();
    int synth_episodes = 100;
    int synth_strokes = 2;
    std::string quickdraw_path;
    synth->add_option("--episodes", synth_episodes)->capture_default_str();
    synth->add_option("--strokes", synth_strokes)->capture_default_str();
    int synth_max_hop = 0, synth_idle_tail = 0;
    synth->add_option("--max-hop", synth_max_hop,
                      "restrict pen-up hops to compass moves of this length (0 = free placement)")
        ->capture_default_str();
    synth->add_option("--idle-tail", synth_idle_tail,
                      "stationary pen-up actions appended after the last stroke")
        ->capture_default_str();
    synth->add_option("--quickdraw", quickdraw_path,
                      "line-delimited JSON drawings; procedural strokes when absent");

    // ---- pretrain ----
    auto* pre = app.add_subcommand("pretrain", "supervised pretraining on demos");
    pre->fallthrough();
    std::string pre_demos;
    int pre_epochs = 10, pre_batch = 128, hidden = 512;
    double pre_val = 0.1;
    bool no_local = false;
    pre->add_option("--demos", pre_demos, "SDQD demo dataset")->required();
    pre->add_option("--epochs", pre_epochs)->capture_default_str();
    pre->add_option("--batch", pre_batch)->capture_default_str();
    pre->add_option("--hidden", hidden)->capture_default_str();
    pre->add_option("--val-fraction", pre_val)->capture_default_str();
    pre->add_flag("--no-local-stream", no_local, "ablation: global stream only");

    // ---- train ----
    auto* train = app.add_subcommand("train", "DDQN training with prioritized replay");
    train->fallthrough();
    std::string train_init, train_demos;
    std::int64_t frames = 600000, warmup = 2000;
    int train_batch = 32, update_period = 1, max_steps = 100, ref_count = 200,
        train_hidden = 512, train_strokes = 2;
    std::string exploration = "rare";
    bool no_pretrain = false;
    train->add_option("--init", train_init, "initial SDQW checkpoint");
    train->add_flag("--no-pretrain", no_pretrain, "ignore --init and start from scratch");
    train->add_option("--frames", frames)->capture_default_str();
    train->add_option("--warmup", warmup)->capture_default_str();
    train->add_option("--batch", train_batch)->capture_default_str();
    train->add_option("--update-period", update_period)->capture_default_str();
    train->add_option("--max-steps", max_steps)->capture_default_str();
    train->add_option("--hidden", train_hidden)->capture_default_str();
    train->add_option("--exploration", exploration, "rare|naive")->capture_default_str();
    train->add_option("--refs", train_demos, "SDQD dataset providing reference images");
    train->add_option("--ref-count", ref_count)->capture_default_str();
    train->add_option("--ref-strokes", train_strokes)->capture_default_str();
    double train_alpha = 1e-3, train_reward_clip = 0.0;
    bool train_freeze_trunk = false, train_term_on_match = false;
    train->add_option("--alpha", train_alpha, "Adam step size")->capture_default_str();
    train->add_option("--reward-clip", train_reward_clip,
                      "clip training rewards to [-c, c]; 0 disables")
        ->capture_default_str();
    train->add_flag("--freeze-trunk", train_freeze_trunk,
                    "update only the output layer (gentle fine-tuning)");
    train->add_flag("--terminate-on-match", train_term_on_match,
                    "end training episodes once the canvas matches the reference");

    // ---- rollout ----
    auto* roll = app.add_subcommand("rollout", "greedy unroll against one reference");
    roll->fallthrough();
    std::string roll_net, roll_ref;
    int roll_steps = 100;
    roll->add_option("--net", roll_net, "SDQW checkpoint")->required();
    roll->add_option("--ref", roll_ref, "reference PNG; procedural when absent");
    roll->add_option("--steps", roll_steps)->capture_default_str();

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "mean rollout reward over a reference set");
    eval_cmd->fallthrough();
    std::string eval_net, eval_demos;
    int eval_steps = 100, eval_count = 16, eval_strokes = 2;
    eval_cmd->add_option("--net", eval_net, "SDQW checkpoint")->required();
    eval_cmd->add_option("--refs", eval_demos, "SDQD dataset providing reference images");
    eval_cmd->add_option("--ref-count", eval_count)->capture_default_str();
    eval_cmd->add_option("--ref-strokes", eval_strokes)->capture_default_str();
    eval_cmd->add_option("--steps", eval_steps)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        MediaType media = parse_media(media_name);
        fs::path out(out_dir);
        echo_config(app, out);

        if (synth->parsed()) {
            std::mt19937_64 rng(seed);
            std::vector<std::vector<std::pair<int, int>>> bank;
            if (!quickdraw_path.empty()) {
                ParseStats stats;
                auto drawings = parse_quickdraw_file(quickdraw_path, &stats);
                bank = stroke_bank_from_drawings(drawings, side);
                std::cout << "parsed " << stats.parsed << " drawings, skipped "
                          << stats.skipped << "\n";
            } else {
                bank = procedural_stroke_bank(side, 200, rng);
            }
            DemoSynthConfig cfg{side, media, synth_strokes, synth_max_hop, synth_idle_tail};
            std::vector<DemoEpisode> episodes;
            for (int i = 0; i < synth_episodes; ++i)
                episodes.push_back(synthesize_demo_episode(bank, cfg, rng));
            save_demo_dataset(episodes, (out / "demos.sdqd").string());
            std::cout << "wrote " << episodes.size() << " episodes to "
                      << (out / "demos.sdqd").string() << "\n";
        } else if (pre->parsed()) {
            auto episodes = load_demo_dataset(pre_demos);
            QNetConfig net_cfg{media, side, hidden, !no_local};
            PretrainConfig cfg;
            cfg.batch = pre_batch;
            cfg.epochs = pre_epochs;
            cfg.val_fraction = pre_val;
            cfg.seed = seed;
            auto [net, metrics] = pretrain(episodes, net_cfg, cfg);
            save_checkpoint(net, (out / "net.sdqw").string());
            std::ofstream csv(out / "pretrain.csv");
            csv << "epoch,train_loss,train_accuracy,val_accuracy\n";
            for (std::size_t i = 0; i < metrics.train_loss.size(); ++i)
                csv << i << ',' << metrics.train_loss[i] << ','
                    << metrics.train_accuracy[i] << ','
                    << (i < metrics.val_accuracy.size() ? metrics.val_accuracy[i] : 0.0)
                    << '\n';
            std::cout << "final train accuracy " << metrics.train_accuracy.back() << "\n";
        } else if (train->parsed()) {
            QNetConfig net_cfg{media, side, train_hidden};
            QNetwork init = (!train_init.empty() && !no_pretrain)
                                ? load_checkpoint(train_init)
                                : QNetwork(net_cfg, seed);
            auto refs = references_from(train_demos, ref_count, side, media,
                                        train_strokes, seed + 1);
            RLConfig cfg;
            cfg.total_frames = frames;
            cfg.warmup_frames = warmup;
            cfg.batch = train_batch;
            cfg.update_period = update_period;
            cfg.max_steps = max_steps;
            cfg.seed = seed;
            cfg.adam.alpha = train_alpha;
            cfg.reward_clip = train_reward_clip;
            cfg.freeze_trunk = train_freeze_trunk;
            cfg.reward.terminate_on_match = train_term_on_match;
            if (exploration == "naive")
                cfg.exploration.mode = ExplorationMode::NaiveEpsGreedy;
            else if (exploration != "rare")
                throw CLI::ValidationError("--exploration", "expected rare|naive");
            auto result = train_rl(std::move(init), refs, cfg);
            save_checkpoint(result.net, (out / "net.sdqw").string());
            write_curve_csv(result.curve, out / "curve.csv");
            std::cout << "trained " << frames << " frames; checkpoint at "
                      << (out / "net.sdqw").string() << "\n";
        } else if (roll->parsed()) {
            QNetwork net = load_checkpoint(roll_net);
            Canvas ref;
            if (!roll_ref.empty()) {
                ref = load_image(roll_ref, net.config().media);
            } else {
                ref = references_from("", 1, net.config().side, net.config().media, 2,
                                      seed + 1)[0];
            }
            auto result = rollout(net, ref, roll_steps, {}, seed);
            save_image(ref, (out / "reference.png").string());
            save_image(result.frames.back(), (out / "final.png").string());
            std::ofstream jsonl(out / "rollout.jsonl");
            for (std::size_t i = 0; i < result.actions.size(); ++i)
                jsonl << "{\"step\":" << i << ",\"action\":" << result.actions[i]
                      << ",\"reward\":" << result.rewards[i]
                      << ",\"reward_pixel\":" << result.rewards_pixel[i] << "}\n";
            std::cout << "accumulated " << result.accumulated << " (pixel "
                      << result.accumulated_pixel << ", max " << result.max_reward
                      << ")\n";
        } else if (eval_cmd->parsed()) {
            QNetwork net = load_checkpoint(eval_net);
            auto refs = references_from(eval_demos, eval_count, net.config().side,
                                        net.config().media, eval_strokes, seed + 1);
            auto result = evaluate(net, refs, eval_steps);
            std::ofstream json(out / "eval.json");
            char buf[256];
            std::snprintf(buf, sizeof buf,
                          "{\"mean_accumulated\":%.17g,\"mean_accumulated_pixel\":%.17g,"
                          "\"mean_max_reward\":%.17g,\"references\":%zu}",
                          result.mean_accumulated, result.mean_accumulated_pixel,
                          result.mean_max_reward, refs.size());
            json << buf << "\n";
            std::cout << buf << "\n";
        }
    } catch (const DataFormatError& e) {
        std::cerr << "data format error: " << e.what() << "\n";
        return 3;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
