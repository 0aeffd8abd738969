#include "trainer/data_source.hpp"

#include <cstring>
#include <unordered_map>

#include "core/errors.hpp"
#include "obsmodel/observation.hpp"

namespace topdown {

DataSource::DataSource(const std::vector<LoadedEpisode>* episodes) : episodes_(episodes) {
  offsets_.reserve(episodes_->size() + 1);
  offsets_.push_back(0);
  for (const auto& ep : *episodes_) {
    pair_count_ += ep.data.length();
    offsets_.push_back(pair_count_);
  }
}

TrainPair DataSource::pair_at(int64_t flat_index) const {
  check_shape(flat_index >= 0 && flat_index < pair_count_, "pair index out of range");
  size_t lo = 0, hi = offsets_.size() - 1;
  while (lo + 1 < hi) {
    size_t mid = (lo + hi) / 2;
    if (offsets_[mid] <= flat_index)
      lo = mid;
    else
      hi = mid;
  }
  return TrainPair{static_cast<int>(lo), static_cast<int>(flat_index - offsets_[lo])};
}

std::vector<TrainPair> DataSource::sample_batch(int n, Rng& rng) const {
  if (pair_count_ == 0) throw ConfigError("empty dataset split");
  if (n > pair_count_)
    throw ConfigError("batch size " + std::to_string(n) + " exceeds pair count " +
                      std::to_string(pair_count_));
  // Partial Fisher-Yates over a sparse index map: distinct pairs per batch.
  std::vector<TrainPair> out;
  out.reserve(static_cast<size_t>(n));
  std::unordered_map<int64_t, int64_t> swapped;
  auto value_at = [&](int64_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  for (int k = 0; k < n; ++k) {
    int64_t j = rng.uniform_int(k, pair_count_ - 1);
    int64_t vj = value_at(j);
    swapped[j] = value_at(k);
    out.push_back(pair_at(vj));
  }
  return out;
}

Tensor DataSource::conditions(const std::vector<TrainPair>& pairs) const {
  const int64_t n = static_cast<int64_t>(pairs.size());
  Tensor out({n, kStackedChannels, 64, 64});
  const int64_t stride = kStackedChannels * 64 * 64;
  for (int64_t i = 0; i < n; ++i) {
    const auto& pr = pairs[static_cast<size_t>(i)];
    ObservationSet set =
        make_observation_set((*episodes_)[static_cast<size_t>(pr.episode)].data, pr.step);
    Tensor stacked = stack_channels(set);
    std::memcpy(out.data() + i * stride, stacked.data(),
                static_cast<size_t>(stride) * sizeof(float));
  }
  return out;
}

Tensor DataSource::volumes(const std::vector<TrainPair>& pairs) const {
  const int64_t n = static_cast<int64_t>(pairs.size());
  Tensor out({n, 3, kWindow, 64, 64});
  const int64_t stride = 3 * kWindow * 64 * 64;
  for (int64_t i = 0; i < n; ++i) {
    const auto& pr = pairs[static_cast<size_t>(i)];
    ObservationSet set =
        make_observation_set((*episodes_)[static_cast<size_t>(pr.episode)].data, pr.step);
    Tensor vol = to_volume(set);
    std::memcpy(out.data() + i * stride, vol.data(), static_cast<size_t>(stride) * sizeof(float));
  }
  return out;
}

Tensor DataSource::targets(const std::vector<TrainPair>& pairs) const {
  const int64_t n = static_cast<int64_t>(pairs.size());
  Tensor out({n, 3, 64, 64});
  const int64_t stride = 3 * 64 * 64;
  for (int64_t i = 0; i < n; ++i) {
    const auto& pr = pairs[static_cast<size_t>(i)];
    const Image8& img =
        (*episodes_)[static_cast<size_t>(pr.episode)].data.targets[static_cast<size_t>(pr.step)];
    image_to_chw_into(img, out.data() + i * stride);
  }
  return out;
}

}  // namespace topdown
