#include "nn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "core/errors.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace topdown {

namespace {

constexpr char kMagic[4] = {'T', 'D', 'T', 'N'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
uint64_t read_u64(std::istream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void save_side(const std::string& dir, const std::string& side, Adam& opt,
               const std::vector<Var>& params, json* adam_json) {
  fs::create_directories(dir + "/" + side);
  for (const Var& p : params) {
    auto it = opt.states().find(p->name);
    if (it == opt.states().end()) continue;
    save_tensor_file(dir + "/" + side + "/" + p->name + ".m.bin", p->name, it->second.m);
    save_tensor_file(dir + "/" + side + "/" + p->name + ".v.bin", p->name, it->second.v);
    (*adam_json)[p->name] = {
        {"m", side + "/" + p->name + ".m.bin"},
        {"v", side + "/" + p->name + ".v.bin"},
        {"t", it->second.t},
    };
  }
}

}  // namespace

void save_tensor_file(const std::string& path, const std::string& name, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write tensor file: " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(out, static_cast<uint32_t>(t.ndim()));
  for (int i = 0; i < t.ndim(); ++i) write_u64(out, static_cast<uint64_t>(t.dim(i)));
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!out) throw DataError("tensor write failed: " + path);
}

Tensor load_tensor_file(const std::string& path, std::string* name_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read tensor file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("bad tensor file magic: " + path);
  uint32_t version = read_u32(in);
  if (version != kVersion) throw DataError("unsupported tensor file version: " + path);
  uint32_t name_len = read_u32(in);
  std::string name(name_len, '\0');
  in.read(name.data(), name_len);
  uint32_t ndim = read_u32(in);
  Shape shape(ndim);
  for (uint32_t i = 0; i < ndim; ++i) shape[i] = static_cast<int64_t>(read_u64(in));
  Tensor t(shape);
  in.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!in) throw DataError("tensor file truncated: " + path);
  if (name_out) *name_out = name;
  return t;
}

void write_checkpoint(const std::string& dir, const CheckpointMeta& meta,
                      const std::vector<Var>& g_params, const std::vector<Var>& d_params,
                      Adam* opt_g, Adam* opt_d) {
  fs::create_directories(dir + "/params");
  json param_names = json::array();
  for (const auto& list : {g_params, d_params}) {
    for (const Var& p : list) {
      check_shape(!p->name.empty(), "checkpoint: unnamed parameter");
      save_tensor_file(dir + "/params/" + p->name + ".bin", p->name, p->value);
      param_names.push_back(p->name);
    }
  }
  json adam_g = json::object(), adam_d = json::object();
  if (opt_g) save_side(dir, "opt_g", *opt_g, g_params, &adam_g);
  if (opt_d) save_side(dir, "opt_d", *opt_d, d_params, &adam_d);

  json rng = json::object();
  for (const auto& [k, v] : meta.rng_streams) rng[k] = v;
  json extra = json::object();
  for (const auto& [k, v] : meta.extra) extra[k] = v;

  json state = {
      {"format_version", 1},
      {"iteration", meta.iteration},
      {"scale", meta.scale},
      {"alpha", meta.alpha},
      {"encoder", meta.encoder_kind},
      {"seed", meta.seed},
      {"params", param_names},
      {"adam_g", adam_g},
      {"adam_d", adam_d},
      {"rng", rng},
      {"extra", extra},
  };
  std::string tmp = dir + "/state.json.tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot write " + tmp);
    out << state.dump(2) << "\n";
  }
  fs::rename(tmp, dir + "/state.json");
}

CheckpointMeta read_checkpoint_meta(const std::string& dir) {
  std::ifstream in(dir + "/state.json");
  if (!in) throw DataError("missing checkpoint state: " + dir + "/state.json");
  json state;
  try {
    in >> state;
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt checkpoint state.json: ") + e.what());
  }
  if (state.value("format_version", 0) != 1)
    throw DataError("unsupported checkpoint format in " + dir);
  CheckpointMeta meta;
  meta.iteration = state.at("iteration").get<int64_t>();
  meta.scale = state.at("scale").get<int>();
  meta.alpha = state.at("alpha").get<double>();
  meta.encoder_kind = state.at("encoder").get<std::string>();
  meta.seed = state.at("seed").get<uint64_t>();
  for (auto& [k, v] : state.at("rng").items()) meta.rng_streams[k] = v.get<std::string>();
  for (auto& [k, v] : state.at("extra").items()) meta.extra[k] = v.get<std::string>();
  return meta;
}

void load_params(const std::string& dir, const std::vector<Var>& params) {
  for (const Var& p : params) {
    std::string path = dir + "/params/" + p->name + ".bin";
    std::string stored_name;
    Tensor t = load_tensor_file(path, &stored_name);
    if (stored_name != p->name)
      throw DataError("tensor name mismatch in " + path + ": " + stored_name);
    check_shape(t.shape() == p->value.shape(), "checkpoint shape mismatch for " + p->name);
    std::memcpy(p->value.data(), t.data(), static_cast<size_t>(t.size()) * sizeof(float));
  }
}

void load_adam(const std::string& dir, const std::string& side, Adam& opt,
               const std::vector<Var>& params) {
  std::ifstream in(dir + "/state.json");
  if (!in) throw DataError("missing checkpoint state: " + dir);
  json state;
  in >> state;
  const json& adam = state.at(side == "opt_g" ? "adam_g" : "adam_d");
  for (const Var& p : params) {
    auto it = adam.find(p->name);
    if (it == adam.end()) continue;  // parameter never updated before save
    Adam::State st;
    st.m = load_tensor_file(dir + "/" + (*it).at("m").get<std::string>());
    st.v = load_tensor_file(dir + "/" + (*it).at("v").get<std::string>());
    st.t = (*it).at("t").get<int64_t>();
    check_shape(st.m.shape() == p->value.shape(), "adam state shape mismatch for " + p->name);
    opt.states()[p->name] = std::move(st);
  }
}

}  // namespace topdown
