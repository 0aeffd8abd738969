#include "trainer/trainer.hpp"

#include <cstdio>
#include <filesystem>

#include "core/blas.hpp"
#include "nn/checkpoint.hpp"

namespace fs = std::filesystem;

namespace topdown {

namespace {

AdamConfig adam_config(const TrainConfig& c) {
  AdamConfig a;
  a.lr = static_cast<float>(c.lr);
  a.beta1 = static_cast<float>(c.beta1);
  a.beta2 = static_cast<float>(c.beta2);
  a.epsilon = static_cast<float>(c.adam_eps);
  return a;
}

}  // namespace

Trainer::Trainer(const TrainConfig& config, const LoadedDataset* dataset)
    : config_(config),
      dataset_(dataset),
      train_src_(&dataset->train),
      adam_g_(adam_config(config)),
      adam_d_(adam_config(config)),
      sampler_rng_(seed_stream(config.seed, "train/sampler")),
      gp_rng_(seed_stream(config.seed, "train/gp")) {
  config_.validate();
  if (train_src_.pair_count() == 0) throw ConfigError("training split is empty");
  if (config_.batch_size > train_src_.pair_count())
    throw ConfigError("batch size exceeds training pair count");
  if (config_.deterministic) set_blas_threads(1);
  enc_ = make_encoder(encoder_kind_from_string(config_.encoder), config_.seed);
  gen_ = std::make_unique<Generator>(config_.seed);
  disc_ = std::make_unique<Discriminator>(config_.seed);
}

ScaleState Trainer::current_state() const {
  return schedule_state(iteration_, config_.schedule);
}

std::vector<Var> Trainer::g_side_params() const {
  std::vector<Var> params = enc_->store().params();
  const auto& gps = gen_->store().params();
  params.insert(params.end(), gps.begin(), gps.end());
  return params;
}

const std::vector<Var>& Trainer::d_side_params() const { return disc_->store().params(); }

void Trainer::maybe_grow(int scale) {
  while (gen_->built_scale() < scale) {
    gen_->grow(gen_->built_scale() * 2);
    disc_->grow(disc_->built_scale() * 2);
  }
}

Var Trainer::encode_batch(const std::vector<TrainPair>& pairs) {
  if (enc_->wants_volume()) return enc_->forward(make_const(train_src_.volumes(pairs)));
  return enc_->forward(make_const(train_src_.conditions(pairs)));
}

LossReport Trainer::critic_update(const Var& real, const Var& fake_detached, const Var& condition,
                                  const ScaleState& st) {
  disc_->store().zero_grads();
  CriticFn critic = [&](const Var& images) { return disc_->discriminate(images, condition, st); };
  std::vector<float> eps(static_cast<size_t>(real->value.dim(0)));
  for (auto& e : eps) e = gp_rng_.next_float();
  Var x_hat = interpolate_pairs(real, fake_detached, eps);
  auto total = total_d_loss(critic, real, fake_detached, x_hat, static_cast<float>(config_.lambda_gp),
                            config_.use_drift, static_cast<float>(config_.drift_epsilon));
  backward(total.loss);
  adam_d_.step(d_side_params());
  return total.report;
}

double Trainer::generator_update(const Var& fake, const Var& condition, const ScaleState& st) {
  for (const Var& p : g_side_params()) zero_grad(p);
  disc_->store().zero_grads();
  Var scores = disc_->discriminate(fake, condition, st);
  Var loss = wgan_g_loss(scores);
  double value = loss->value.item();
  backward(loss);
  adam_g_.step(g_side_params());
  // The generator backward also deposited gradients in the critic; drop them.
  disc_->store().zero_grads();
  return value;
}

LossReport Trainer::step() {
  ScaleState st = current_state();
  maybe_grow(st.scale);

  auto pairs = train_src_.sample_batch(config_.batch_size, sampler_rng_);
  Tensor cond64 = train_src_.conditions(pairs);
  Tensor targets64 = train_src_.targets(pairs);
  Var condition = make_const(cond64);
  Var real = make_const(ops::downsample_avg_to(targets64, st.scale));

  Var feats = encode_batch(pairs);
  Var fake = gen_->generate(feats, st);
  Var fake_detached = detach(fake);

  LossReport report = critic_update(real, fake_detached, condition, st);
  for (int extra = 1; extra < config_.critic_steps; ++extra) {
    auto more = train_src_.sample_batch(config_.batch_size, sampler_rng_);
    Tensor mc = train_src_.conditions(more);
    Var mcond = make_const(mc);
    Var mreal = make_const(ops::downsample_avg_to(train_src_.targets(more), st.scale));
    Var mfake;
    {
      NoGrad ng;
      Var f = enc_->wants_volume() ? enc_->forward(make_const(train_src_.volumes(more)))
                                   : enc_->forward(mcond);
      mfake = gen_->generate(f, st);
    }
    report = critic_update(mreal, mfake, mcond, st);
  }

  report.g_loss = generator_update(fake, condition, st);

  if (!report.all_finite()) {
    std::string diag = config_.out_dir.empty()
                           ? std::string("ckpt_diag")
                           : config_.out_dir + "/ckpt_diag_" + std::to_string(iteration_);
    try {
      write_checkpoint_dir(diag);
    } catch (...) {
    }
    throw NumericError("non-finite loss at iteration " + std::to_string(iteration_) +
                       " (diagnostic checkpoint: " + diag + ")");
  }
  ++iteration_;
  return report;
}

void Trainer::append_log(const LossReport& r, const ScaleState& st) {
  if (!log_.is_open()) return;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld,%d,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                static_cast<long long>(iteration_ - 1), st.scale, st.alpha, r.d_loss, r.g_loss,
                r.gradient_penalty_term, r.wasserstein_estimate);
  log_ << buf;
  log_.flush();
}

void Trainer::write_checkpoint_dir(const std::string& dir) const {
  CheckpointMeta meta;
  meta.iteration = iteration_;
  ScaleState last = iteration_ > 0 ? schedule_state(iteration_ - 1, config_.schedule)
                                   : schedule_state(0, config_.schedule);
  meta.scale = last.scale;
  meta.alpha = last.alpha;
  meta.encoder_kind = config_.encoder;
  meta.seed = config_.seed;
  meta.rng_streams["sampler"] = rng_to_string(sampler_rng_);
  meta.rng_streams["gp"] = rng_to_string(gp_rng_);
  for (const auto& [k, v] : config_as_map(config_)) meta.extra["config." + k] = v;
  write_checkpoint(dir, meta, g_side_params(), d_side_params(),
                   const_cast<Adam*>(&adam_g_), const_cast<Adam*>(&adam_d_));
}

void Trainer::resume_from(const std::string& dir) {
  CheckpointMeta meta = read_checkpoint_meta(dir);
  if (meta.encoder_kind != config_.encoder)
    throw ConfigError("checkpoint encoder " + meta.encoder_kind + " does not match config " +
                      config_.encoder);
  maybe_grow(meta.scale);
  load_params(dir, g_side_params());
  load_params(dir, d_side_params());
  load_adam(dir, "opt_g", adam_g_, g_side_params());
  load_adam(dir, "opt_d", adam_d_, d_side_params());
  sampler_rng_ = rng_from_string(meta.rng_streams.at("sampler"));
  gp_rng_ = rng_from_string(meta.rng_streams.at("gp"));
  iteration_ = meta.iteration;
}

void Trainer::run() {
  const int64_t total = config_.effective_total_iterations();
  const int64_t cadence = config_.effective_checkpoint_every();
  if (!config_.out_dir.empty()) {
    fs::create_directories(config_.out_dir);
    std::string log_path = config_.out_dir + "/train_log.csv";
    bool fresh = !fs::exists(log_path) || fs::file_size(log_path) == 0;
    log_.open(log_path, std::ios::app);
    if (!log_) throw DataError("cannot open training log: " + log_path);
    if (fresh) log_ << "iteration,scale,alpha,d_loss,g_loss,gp,wdist\n";
  }

  while (iteration_ < total) {
    ScaleState st = current_state();
    try {
      LossReport report = step();
      append_log(report, st);
    } catch (const DataError&) {
      if (!config_.out_dir.empty()) {
        try {
          write_checkpoint_dir(config_.out_dir + "/ckpt_fault_" + std::to_string(iteration_));
        } catch (...) {
        }
      }
      throw;
    }
    // A checkpoint lands at every cadence multiple, at the end, and at every
    // scale boundary (just before the next iteration grows the networks).
    bool at_cadence = iteration_ % cadence == 0;
    bool at_boundary = iteration_ < total &&
                       schedule_state(iteration_, config_.schedule).scale !=
                           schedule_state(iteration_ - 1, config_.schedule).scale;
    if (!config_.out_dir.empty() && (at_cadence || at_boundary || iteration_ == total)) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_%07lld", static_cast<long long>(iteration_));
      write_checkpoint_dir(config_.out_dir + "/" + name);
    }
  }
}

}  // namespace topdown
