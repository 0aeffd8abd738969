#include "cli/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "cli/run_manifest.hpp"
#include "io/png_io.hpp"
#include "nn/checkpoint.hpp"
#include "trainer/trainer.hpp"

namespace fs = std::filesystem;

namespace topdown {

namespace {

bool dir_nonempty(const std::string& path) {
  if (!fs::exists(path)) return false;
  return !fs::is_empty(path);
}

}  // namespace

int run_gen_data(const GenDataArgs& args) {
  if (args.out.empty()) throw ConfigError("gen-data: --out is required");
  if (args.train_envs < 1) throw ConfigError("gen-data: --train-envs must be >= 1");
  if (args.test_envs < 0) throw ConfigError("gen-data: --test-envs must be >= 0");
  if (args.episodes_per_env < 1) throw ConfigError("gen-data: --episodes-per-env must be >= 1");
  if (args.episode_len < 1) throw ConfigError("gen-data: --episode-len must be >= 1");
  if (dir_nonempty(args.out) && !args.force)
    throw ConfigError("gen-data: output path is not empty (use --force to overwrite)");

  DatasetConfig cfg;
  cfg.gen.room_size = args.room_size;
  cfg.gen.fov_deg = args.fov_deg;
  cfg.episode_len = args.episode_len;
  if (args.policy == "fixed")
    cfg.policy = RotationPolicy::Kind::kFixedIncrement;
  else if (args.policy == "random")
    cfg.policy = RotationPolicy::Kind::kRandomIncrement;
  else
    throw ConfigError("gen-data: --policy must be fixed or random");
  uint64_t base = args.seed * 1000000ULL;
  cfg.train = SplitSpec{base, args.train_envs, args.episodes_per_env};
  cfg.test = SplitSpec{base + static_cast<uint64_t>(args.train_envs), args.test_envs,
                       args.episodes_per_env};

  RunManifest rm;
  rm.command = "gen-data";
  rm.seed = args.seed;
  rm.started_at = iso8601_utc_now();
  rm.resolved_config["out"] = args.out;
  rm.resolved_config["seed"] = std::to_string(args.seed);
  rm.resolved_config["train_envs"] = std::to_string(args.train_envs);
  rm.resolved_config["test_envs"] = std::to_string(args.test_envs);
  rm.resolved_config["episodes_per_env"] = std::to_string(args.episodes_per_env);
  rm.resolved_config["episode_len"] = std::to_string(args.episode_len);
  rm.resolved_config["policy"] = args.policy;
  rm.resolved_config["room_size"] = std::to_string(args.room_size);
  rm.resolved_config["fov_deg"] = std::to_string(args.fov_deg);
  rm.resolved_config["train_seed_begin"] = std::to_string(cfg.train.env_seed_begin);
  rm.resolved_config["test_seed_begin"] = std::to_string(cfg.test.env_seed_begin);
  write_run_manifest(args.out, rm);

  std::string manifest = write_dataset(cfg, args.out);
  std::printf("%s\n", manifest.c_str());
  return 0;
}

int run_train(const TrainConfig& config) {
  if (config.data_root.empty()) throw ConfigError("train: --data is required");
  if (config.out_dir.empty()) throw ConfigError("train: --out is required");
  config.validate();

  RunManifest rm;
  rm.command = "train";
  rm.seed = config.seed;
  rm.started_at = iso8601_utc_now();
  rm.resolved_config = config_as_map(config);
  rm.dataset_checksum = file_crc32_hex(config.data_root + "/manifest.json");
  write_run_manifest(config.out_dir, rm);

  std::printf("resolved config:\n");
  for (const auto& [k, v] : config_as_map(config)) std::printf("  %s = %s\n", k.c_str(), v.c_str());

  EncoderKind kind = encoder_kind_from_string(config.encoder);
  if (encoder_known_nonlearning(kind))
    std::printf("warning: encoder %s is known-nonlearning; training proceeds for comparison "
                "purposes only\n",
                config.encoder.c_str());

  LoadedDataset dataset = read_dataset(config.data_root);
  Trainer trainer(config, &dataset);
  if (!config.resume.empty()) trainer.resume_from(config.resume);
  trainer.run();
  std::printf("training complete at iteration %lld\n",
              static_cast<long long>(trainer.iteration()));
  return 0;
}

LoadedModel load_model_for_eval(const std::string& checkpoint_dir) {
  CheckpointMeta meta = read_checkpoint_meta(checkpoint_dir);
  LoadedModel model;
  model.encoder_kind = meta.encoder_kind;
  model.encoder = make_encoder(encoder_kind_from_string(meta.encoder_kind), meta.seed);
  model.generator = std::make_unique<Generator>(meta.seed);
  while (model.generator->built_scale() < meta.scale)
    model.generator->grow(model.generator->built_scale() * 2);
  std::vector<Var> params = model.encoder->store().params();
  const auto& gp = model.generator->store().params();
  params.insert(params.end(), gp.begin(), gp.end());
  load_params(checkpoint_dir, params);
  model.state = ScaleState{meta.scale, meta.alpha};
  return model;
}

int run_eval(const EvalArgs& args) {
  if (args.data_root.empty()) throw ConfigError("eval: --data is required");
  if (args.out.empty()) throw ConfigError("eval: --out is required");
  if (args.checkpoints.empty() && !args.oracle)
    throw ConfigError("eval: need at least one --checkpoint (or --oracle)");

  RunManifest rm;
  rm.command = "eval";
  rm.seed = args.seed;
  rm.started_at = iso8601_utc_now();
  rm.resolved_config["data"] = args.data_root;
  rm.resolved_config["out"] = args.out;
  rm.resolved_config["max_pairs"] = std::to_string(args.max_pairs);
  rm.resolved_config["eval_seed"] = std::to_string(args.eval_seed);
  for (size_t i = 0; i < args.checkpoints.size(); ++i)
    rm.resolved_config["checkpoint." + std::to_string(i)] = args.checkpoints[i];
  rm.dataset_checksum = file_crc32_hex(args.data_root + "/manifest.json");
  write_run_manifest(args.out, rm);

  LoadedDataset dataset = read_dataset(args.data_root);
  if (dataset.test.empty()) throw DataError("eval: test split is empty");

  EvalSpec spec;
  spec.max_pairs = args.max_pairs;
  spec.seed = args.eval_seed;
  spec.allow_reduced_scale = true;  // the report carries the scale

  std::vector<MetricReport> reports;
  for (const std::string& ckpt : args.checkpoints) {
    LoadedModel model = load_model_for_eval(ckpt);
    MetricReport r = evaluate_model(*model.encoder, *model.generator, model.state, dataset, spec);
    if (encoder_known_nonlearning(encoder_kind_from_string(model.encoder_kind)))
      r.method += " (known-nonlearning)";
    reports.push_back(std::move(r));
  }
  if (args.oracle) {
    int scale = reports.empty() ? kFullScale : reports.front().scale;
    reports.push_back(evaluate_oracle(dataset, scale, spec));
  }

  std::string table = report_table(reports);
  std::printf("%s", table.c_str());
  write_report_csv(args.out + "/report.csv", reports);
  std::ofstream txt(args.out + "/report.txt");
  if (!txt) throw DataError("cannot write report.txt");
  txt << table;
  return 0;
}

namespace {

Image8 upscale_nearest(const Image8& img, int factor) {
  Image8 out(img.height * factor, img.width * factor);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) {
      const uint8_t* src = img.px(r / factor, c / factor);
      out.set(r, c, Rgb8{src[0], src[1], src[2]});
    }
  return out;
}

void blit(Image8* canvas, const Image8& tile, int r0, int c0) {
  for (int r = 0; r < tile.height; ++r)
    for (int c = 0; c < tile.width; ++c) {
      const uint8_t* src = tile.px(r, c);
      canvas->set(r0 + r, c0 + c, Rgb8{src[0], src[1], src[2]});
    }
}

}  // namespace

int run_sample(const SampleArgs& args) {
  if (args.checkpoint.empty() || args.data_root.empty() || args.out.empty())
    throw ConfigError("sample: --checkpoint, --data and --out are required");
  if (args.steps.empty()) throw ConfigError("sample: --steps is required (e.g. 0,10,39)");

  std::string out_dir = fs::path(args.out).parent_path().string();
  if (out_dir.empty()) out_dir = ".";
  RunManifest rm;
  rm.command = "sample";
  rm.seed = args.seed;
  rm.started_at = iso8601_utc_now();
  rm.resolved_config["checkpoint"] = args.checkpoint;
  rm.resolved_config["data"] = args.data_root;
  rm.resolved_config["out"] = args.out;
  rm.resolved_config["split"] = args.split;
  rm.resolved_config["episode"] = std::to_string(args.episode);
  rm.dataset_checksum = file_crc32_hex(args.data_root + "/manifest.json");
  write_run_manifest(out_dir, rm);

  LoadedDataset dataset = read_dataset(args.data_root);
  const auto& episodes = dataset.split(args.split);
  if (args.episode < 0 || args.episode >= static_cast<int>(episodes.size()))
    throw DataError("sample: episode index out of range");
  const Episode& ep = episodes[static_cast<size_t>(args.episode)].data;
  for (int s : args.steps)
    if (s < 0 || s >= ep.length()) throw DataError("sample: step index out of range");

  LoadedModel model = load_model_for_eval(args.checkpoint);
  DataSource src(&episodes);

  // Row layout: five window frames (t-20, t-15, t-10, t-5, t), the ground
  // truth top-down view, and the generated one.
  const int tile = 64, gap = 2, cols = 7;
  const int rows = static_cast<int>(args.steps.size());
  Image8 canvas(rows * tile + (rows + 1) * gap, cols * tile + (cols + 1) * gap);
  for (auto& v : canvas.pixels) v = 255;

  for (int row = 0; row < rows; ++row) {
    int step = args.steps[static_cast<size_t>(row)];
    ObservationSet set = make_observation_set(ep, step);
    std::vector<TrainPair> pair{{args.episode, step}};
    Var input = model.encoder->wants_volume() ? make_const(src.volumes(pair))
                                              : make_const(src.conditions(pair));
    Tensor gen;
    {
      NoGrad ng;
      Var feats = model.encoder->forward(input);
      Var img = model.generator->generate(feats, model.state);
      gen = img->value.reshaped({3, model.state.scale, model.state.scale});
    }
    Image8 gen_img = chw_to_image(gen);
    if (model.state.scale < tile) gen_img = upscale_nearest(gen_img, tile / model.state.scale);

    int r0 = gap + row * (tile + gap);
    for (int k = 0; k < 5; ++k) {
      const Image8& frame = set.frames[static_cast<size_t>(k * 5)];  // window indices 0,5,10,15,20
      blit(&canvas, frame, r0, gap + k * (tile + gap));
    }
    blit(&canvas, ep.targets[static_cast<size_t>(step)], r0, gap + 5 * (tile + gap));
    blit(&canvas, gen_img, r0, gap + 6 * (tile + gap));
  }
  write_png(args.out, canvas);
  std::printf("%s\n", args.out.c_str());
  return 0;
}

}  // namespace topdown
