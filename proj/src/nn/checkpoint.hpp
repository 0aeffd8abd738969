#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/autograd.hpp"
#include "nn/adam.hpp"

namespace topdown {

// Checkpoint directory layout:
//   params/<name>.bin            one tensor file per named parameter
//   opt_g/<name>.m.bin, .v.bin   Adam moments for the generator+encoder side
//   opt_d/<name>.m.bin, .v.bin   Adam moments for the discriminator side
//   state.json                   iteration, scale, alpha, rng streams,
//                                per-parameter Adam step counts, file refs
//
// Tensor file: "TDTN" magic, u32 version, u32 name length, name bytes,
// u32 ndim, u64 dims, then float32 data. Little-endian throughout.

void save_tensor_file(const std::string& path, const std::string& name, const Tensor& t);
Tensor load_tensor_file(const std::string& path, std::string* name_out = nullptr);

struct CheckpointMeta {
  int64_t iteration = 0;
  int scale = 4;
  double alpha = 1.0;
  std::string encoder_kind;
  uint64_t seed = 0;
  std::map<std::string, std::string> rng_streams;
  std::map<std::string, std::string> extra;  // free-form (config echo etc.)
};

void write_checkpoint(const std::string& dir, const CheckpointMeta& meta,
                      const std::vector<Var>& g_params, const std::vector<Var>& d_params,
                      Adam* opt_g, Adam* opt_d);

CheckpointMeta read_checkpoint_meta(const std::string& dir);

// Copies stored tensors into the given (already constructed) parameters,
// matching by name; missing or shape-mismatched parameters are errors.
void load_params(const std::string& dir, const std::vector<Var>& params);

// Restores Adam moments for the given side ("opt_g" or "opt_d").
void load_adam(const std::string& dir, const std::string& side, Adam& opt,
               const std::vector<Var>& params);

}  // namespace topdown
