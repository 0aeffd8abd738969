// Command line entry point: dataset generation, training, evaluation and
// sample-grid emission for the top-down view synthesis pipeline.

#include <cstdio>
#include <cstdlib>

#include "CLI11.hpp"

#include "cli/commands.hpp"
#include "core/errors.hpp"

using namespace topdown;

namespace {

std::vector<int> parse_steps(const std::string& csv) {
  std::vector<int> steps;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) steps.push_back(std::stoi(item));
  }
  return steps;
}

std::string default_data_root() {
  const char* env = std::getenv("TOPDOWN_DATA_ROOT");
  return env ? env : "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Top-down view synthesis from first-person observations"};
  app.require_subcommand(1);

  // gen-data ----------------------------------------------------------------
  GenDataArgs gen;
  auto* cmd_gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  cmd_gen->add_option("--out", gen.out, "Dataset root directory")->required();
  cmd_gen->add_option("--seed", gen.seed, "Root seed");
  cmd_gen->add_option("--train-envs", gen.train_envs, "Training environments");
  cmd_gen->add_option("--test-envs", gen.test_envs, "Testing environments");
  cmd_gen->add_option("--episodes-per-env", gen.episodes_per_env, "Episodes per environment");
  cmd_gen->add_option("--episode-len", gen.episode_len, "Steps per episode");
  cmd_gen->add_option("--policy", gen.policy, "Rotation policy: fixed|random");
  cmd_gen->add_option("--room-size", gen.room_size, "Room side length (world units)");
  cmd_gen->add_option("--fov-deg", gen.fov_deg, "Horizontal field of view (degrees)");
  cmd_gen->add_flag("--force", gen.force, "Allow writing into a non-empty directory");

  // train -------------------------------------------------------------------
  TrainConfig train = profile_config("desk");
  std::string train_profile = "desk";
  std::string train_config_file;
  auto* cmd_train = app.add_subcommand("train", "Train the conditional GAN");
  auto* opt_profile = cmd_train->add_option("--profile", train_profile, "paper|desk");
  auto* opt_cfgfile = cmd_train->add_option("--config", train_config_file, "key=value config file");
  auto* o_enc = cmd_train->add_option("--encoder", train.encoder, "baseline|conv3d|conv2d1d|capsule");
  auto* o_batch = cmd_train->add_option("--batch-size", train.batch_size, "Batch size");
  auto* o_seed = cmd_train->add_option("--seed", train.seed, "Root seed");
  auto* o_data = cmd_train->add_option("--data", train.data_root, "Dataset root");
  auto* o_out = cmd_train->add_option("--out", train.out_dir, "Run output directory");
  auto* o_total = cmd_train->add_option("--total-iterations", train.total_iterations,
                                        "Override total iterations (0 = full schedule)");
  auto* o_ips = cmd_train->add_option("--iterations-per-scale", train.schedule.iterations_per_scale,
                                      "Iterations per scale stage");
  auto* o_fade = cmd_train->add_option("--fade-iterations", train.schedule.fade_iterations,
                                       "Fade-in length");
  auto* o_final = cmd_train->add_option("--final-scale", train.schedule.final_scale, "Final scale");
  auto* o_lr = cmd_train->add_option("--lr", train.lr, "Adam learning rate");
  auto* o_lambda = cmd_train->add_option("--lambda-gp", train.lambda_gp, "Gradient penalty weight");
  auto* o_critic = cmd_train->add_option("--critic-steps", train.critic_steps,
                                         "Critic updates per generator update");
  auto* o_ckpt = cmd_train->add_option("--checkpoint-every", train.checkpoint_every,
                                       "Checkpoint cadence (iterations)");
  auto* o_resume = cmd_train->add_option("--resume", train.resume, "Checkpoint dir to resume from");
  auto* o_det = cmd_train->add_flag("--deterministic", train.deterministic,
                                    "Single-stream deterministic mode");

  // eval --------------------------------------------------------------------
  EvalArgs eval;
  eval.data_root = default_data_root();
  auto* cmd_eval = app.add_subcommand("eval", "Evaluate checkpoints (PSNR/SSIM table)");
  cmd_eval->add_option("--checkpoint", eval.checkpoints, "Checkpoint directory (repeatable)");
  auto* e_data = cmd_eval->add_option("--data", eval.data_root, "Dataset root");
  cmd_eval->add_option("--out", eval.out, "Report output directory")->required();
  cmd_eval->add_option("--max-pairs", eval.max_pairs, "Pairs sampled per split");
  cmd_eval->add_option("--eval-seed", eval.eval_seed, "Sampling seed for evaluation");
  cmd_eval->add_option("--seed", eval.seed, "Root seed (manifest only)");
  cmd_eval->add_flag("--oracle", eval.oracle, "Add a ground-truth oracle row");

  // sample ------------------------------------------------------------------
  SampleArgs sample;
  sample.data_root = default_data_root();
  std::string steps_csv = "0";
  auto* cmd_sample = app.add_subcommand("sample", "Emit an observation/target/generated grid");
  cmd_sample->add_option("--checkpoint", sample.checkpoint, "Checkpoint directory")->required();
  auto* s_data = cmd_sample->add_option("--data", sample.data_root, "Dataset root");
  cmd_sample->add_option("--out", sample.out, "Output PNG path")->required();
  cmd_sample->add_option("--split", sample.split, "train|test");
  cmd_sample->add_option("--episode", sample.episode, "Episode index within the split");
  cmd_sample->add_option("--steps", steps_csv, "Comma-separated step indices");
  cmd_sample->add_option("--seed", sample.seed, "Root seed (manifest only)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_gen->parsed()) return run_gen_data(gen);

    if (cmd_train->parsed()) {
      // Precedence: defaults < profile < config file < explicit flags.
      TrainConfig cfg = profile_config(opt_profile->count() ? train_profile : "desk");
      if (opt_cfgfile->count()) {
        for (const auto& [k, v] : read_config_file(train_config_file))
          apply_key_value(&cfg, k, v);
      }
      if (o_enc->count()) cfg.encoder = train.encoder;
      if (o_batch->count()) cfg.batch_size = train.batch_size;
      if (o_seed->count()) cfg.seed = train.seed;
      if (o_data->count()) cfg.data_root = train.data_root;
      if (o_out->count()) cfg.out_dir = train.out_dir;
      if (o_total->count()) cfg.total_iterations = train.total_iterations;
      if (o_ips->count()) cfg.schedule.iterations_per_scale = train.schedule.iterations_per_scale;
      if (o_fade->count()) cfg.schedule.fade_iterations = train.schedule.fade_iterations;
      if (o_final->count()) cfg.schedule.final_scale = train.schedule.final_scale;
      if (o_lr->count()) cfg.lr = train.lr;
      if (o_lambda->count()) cfg.lambda_gp = train.lambda_gp;
      if (o_critic->count()) cfg.critic_steps = train.critic_steps;
      if (o_ckpt->count()) cfg.checkpoint_every = train.checkpoint_every;
      if (o_resume->count()) cfg.resume = train.resume;
      if (o_det->count()) cfg.deterministic = train.deterministic;
      if (cfg.data_root.empty()) cfg.data_root = default_data_root();
      return run_train(cfg);
    }

    if (cmd_eval->parsed()) {
      if (!e_data->count() && eval.data_root.empty())
        throw ConfigError("eval: --data or TOPDOWN_DATA_ROOT required");
      return run_eval(eval);
    }

    if (cmd_sample->parsed()) {
      if (!s_data->count() && sample.data_root.empty())
        throw ConfigError("sample: --data or TOPDOWN_DATA_ROOT required");
      sample.steps = parse_steps(steps_csv);
      return run_sample(sample);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric fault: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
