#include "metrics/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace topdown {

namespace {

Tensor clamp01(const Tensor& t) {
  Tensor out = t.clone();
  float* p = out.data();
  for (int64_t i = 0; i < out.size(); ++i) p[i] = std::clamp(p[i], 0.0f, 1.0f);
  return out;
}

Tensor target_at_scale(const DataSource& src, const TrainPair& pair, int scale) {
  Tensor t64 = src.targets({pair});  // (1,3,64,64)
  Tensor at = ops::downsample_avg_to(t64, scale);
  return at.reshaped({3, scale, scale});
}

std::vector<TrainPair> eval_pairs(const DataSource& src, const EvalSpec& spec) {
  std::vector<TrainPair> pairs;
  if (src.pair_count() <= spec.max_pairs) {
    for (int64_t i = 0; i < src.pair_count(); ++i) pairs.push_back(src.pair_at(i));
  } else {
    Rng rng = seed_stream(spec.seed, "eval/sampling");
    pairs = src.sample_batch(static_cast<int>(spec.max_pairs), rng);
  }
  return pairs;
}

}  // namespace

SplitStats evaluate_split(const std::vector<LoadedEpisode>& episodes, int scale,
                          const EvalSpec& spec, const GenerateFn& generate) {
  if (episodes.empty()) throw DataError("evaluation split is empty");
  DataSource src(&episodes);
  auto pairs = eval_pairs(src, spec);

  RunningStat psnr_stat, ssim_stat;
  int64_t inf_count = 0;
  SsimParams sp;
  for (size_t at = 0; at < pairs.size(); at += static_cast<size_t>(spec.batch)) {
    size_t end = std::min(pairs.size(), at + static_cast<size_t>(spec.batch));
    std::vector<TrainPair> chunk(pairs.begin() + static_cast<int64_t>(at),
                                 pairs.begin() + static_cast<int64_t>(end));
    std::vector<Tensor> generated = generate(src, chunk);
    check_shape(generated.size() == chunk.size(), "evaluate: generator count mismatch");
    for (size_t i = 0; i < chunk.size(); ++i) {
      Tensor gen = clamp01(generated[i]);
      Tensor ref = target_at_scale(src, chunk[i], scale);
      double p = psnr(gen, ref, 1.0);
      if (psnr_is_infinite(p))
        ++inf_count;
      else
        psnr_stat.add(p);
      ssim_stat.add(ssim(gen, ref, sp));
    }
  }
  SplitStats stats;
  stats.psnr_mean = psnr_stat.mean();
  stats.psnr_std = psnr_stat.stddev();
  stats.psnr_inf_count = inf_count;
  stats.ssim_mean = ssim_stat.mean();
  stats.ssim_std = ssim_stat.stddev();
  stats.count = static_cast<int64_t>(pairs.size());
  return stats;
}

MetricReport evaluate_model(Encoder& encoder, const Generator& generator, const ScaleState& state,
                            const LoadedDataset& dataset, const EvalSpec& spec) {
  validate_scale_state(state);
  if (state.scale != kFullScale && !spec.allow_reduced_scale)
    throw ConfigError("model is at scale " + std::to_string(state.scale) +
                      ", not 64 (pass allow_reduced_scale to evaluate anyway)");
  GenerateFn gen_fn = [&](const DataSource& src, const std::vector<TrainPair>& chunk) {
    NoGrad ng;
    Var input = encoder.wants_volume() ? make_const(src.volumes(chunk))
                                       : make_const(src.conditions(chunk));
    Var feats = encoder.forward(input);
    Var images = generator.generate(feats, state);
    std::vector<Tensor> out;
    const Shape& s = images->value.shape();
    int64_t stride = s[1] * s[2] * s[3];
    for (int64_t i = 0; i < s[0]; ++i) {
      Tensor img({3, s[2], s[3]});
      std::copy(images->value.data() + i * stride, images->value.data() + (i + 1) * stride,
                img.data());
      out.push_back(std::move(img));
    }
    return out;
  };
  MetricReport report;
  report.method = encoder_kind_to_string(encoder.kind());
  report.scale = state.scale;
  report.train = evaluate_split(dataset.train, state.scale, spec, gen_fn);
  report.test = evaluate_split(dataset.test, state.scale, spec, gen_fn);
  return report;
}

MetricReport evaluate_oracle(const LoadedDataset& dataset, int scale, const EvalSpec& spec) {
  GenerateFn oracle = [scale](const DataSource& src, const std::vector<TrainPair>& chunk) {
    std::vector<Tensor> out;
    for (const auto& pair : chunk) out.push_back(target_at_scale(src, pair, scale));
    return out;
  };
  MetricReport report;
  report.method = "oracle";
  report.scale = scale;
  report.train = evaluate_split(dataset.train, scale, spec, oracle);
  report.test = evaluate_split(dataset.test, scale, spec, oracle);
  return report;
}

std::string format_mean_std(double mean, double std, int precision) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.*f \xC2\xB1 %.*f", precision, mean, precision, std);
  return buf;
}

std::string report_table(const std::vector<MetricReport>& reports) {
  std::ostringstream os;
  os << "Method                          | Avg PSNR (train) | Avg PSNR (test)  | "
        "Avg SSIM (train)  | Avg SSIM (test)\n";
  os << "--------------------------------+------------------+------------------+"
        "-------------------+------------------\n";
  for (const auto& r : reports) {
    char line[512];
    std::string method = r.method;
    if (r.scale != kFullScale) method += " @" + std::to_string(r.scale);
    std::snprintf(line, sizeof(line), "%-31s | %-16s | %-16s | %-17s | %s\n", method.c_str(),
                  format_mean_std(r.train.psnr_mean, r.train.psnr_std, 1).c_str(),
                  format_mean_std(r.test.psnr_mean, r.test.psnr_std, 1).c_str(),
                  format_mean_std(r.train.ssim_mean, r.train.ssim_std, 4).c_str(),
                  format_mean_std(r.test.ssim_mean, r.test.ssim_std, 4).c_str());
    os << line;
  }
  return os.str();
}

void write_report_csv(const std::string& path, const std::vector<MetricReport>& reports) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report: " + path);
  out << "method,scale,psnr_train_mean,psnr_train_std,psnr_train_inf,ssim_train_mean,"
         "ssim_train_std,count_train,psnr_test_mean,psnr_test_std,psnr_test_inf,"
         "ssim_test_mean,ssim_test_std,count_test\n";
  for (const auto& r : reports) {
    char line[512];
    std::snprintf(line, sizeof(line),
                  "%s,%d,%.9g,%.9g,%lld,%.9g,%.9g,%lld,%.9g,%.9g,%lld,%.9g,%.9g,%lld\n",
                  r.method.c_str(), r.scale, r.train.psnr_mean, r.train.psnr_std,
                  static_cast<long long>(r.train.psnr_inf_count), r.train.ssim_mean,
                  r.train.ssim_std, static_cast<long long>(r.train.count), r.test.psnr_mean,
                  r.test.psnr_std, static_cast<long long>(r.test.psnr_inf_count),
                  r.test.ssim_mean, r.test.ssim_std, static_cast<long long>(r.test.count));
    out << line;
  }
}

}  // namespace topdown
