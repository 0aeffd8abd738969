#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gan/generator.hpp"
#include "metrics/metrics.hpp"
#include "trainer/data_source.hpp"

namespace topdown {

struct SplitStats {
  double psnr_mean = 0.0;
  double psnr_std = 0.0;
  int64_t psnr_inf_count = 0;  // identical pairs, excluded from the mean
  double ssim_mean = 0.0;
  double ssim_std = 0.0;
  int64_t count = 0;
};

struct MetricReport {
  std::string method;
  int scale = 64;
  SplitStats train;
  SplitStats test;
};

struct EvalSpec {
  int64_t max_pairs = 512;
  uint64_t seed = 2024;
  int batch = 8;
  bool allow_reduced_scale = false;  // evaluate below 64 (desk profiles)
};

// Produces one generated (3,s,s) tensor per requested pair.
using GenerateFn =
    std::function<std::vector<Tensor>(const DataSource&, const std::vector<TrainPair>&)>;

// Core protocol: sample up to max_pairs (episode, step) pairs uniformly with
// the eval seed, compare generated images against targets downsampled to the
// scale, aggregate mean +- std (PSNR infinities excluded and counted).
SplitStats evaluate_split(const std::vector<LoadedEpisode>& episodes, int scale,
                          const EvalSpec& spec, const GenerateFn& generate);

// Encoder + generator evaluation over both splits.
MetricReport evaluate_model(Encoder& encoder, const Generator& generator, const ScaleState& state,
                            const LoadedDataset& dataset, const EvalSpec& spec);

// Debug path: the "generator" returns the ground-truth target (SSIM 1 row).
MetricReport evaluate_oracle(const LoadedDataset& dataset, int scale, const EvalSpec& spec);

std::string format_mean_std(double mean, double std, int precision);
std::string report_table(const std::vector<MetricReport>& reports);
void write_report_csv(const std::string& path, const std::vector<MetricReport>& reports);

}  // namespace topdown
