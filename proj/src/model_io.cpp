// tinyasr/model_io.cpp
//
// Copyright 2026 The tinyasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tinyasr/model_io.h"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace tinyasr {

namespace {

constexpr char kMagic[4] = {'P', 'F', 'L', 'W'};
constexpr uint32_t kVersion = 1;

[[noreturn]] void Fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("model: " + path + ": " + what);
}

void WriteU32(std::ofstream& out, uint32_t v) {
  // The format is little-endian; so is every platform this builds on.
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

uint32_t ReadU32(std::ifstream& in, const std::string& path) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) Fail(path, "truncated tensor data");
  return v;
}

std::string FloatToText(float v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
  return buf;
}

}  // namespace

void SaveTensors(const std::string& path,
                 const std::map<std::string, Tensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(path, "cannot open for writing");
  out.write(kMagic, 4);
  WriteU32(out, kVersion);
  WriteU32(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    WriteU32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    WriteU32(out, static_cast<uint32_t>(t.rank()));
    for (int i = 0; i < t.rank(); ++i)
      WriteU32(out, static_cast<uint32_t>(t.dim(i)));
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.numel() * sizeof(float)));
  }
  if (!out) Fail(path, "write failed");
}

std::map<std::string, Tensor> LoadTensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(path, "cannot open");
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) Fail(path, "not a model file");
  const uint32_t version = ReadU32(in, path);
  if (version != kVersion)
    Fail(path, "unsupported version " + std::to_string(version));
  const uint32_t count = ReadU32(in, path);

  std::map<std::string, Tensor> tensors;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = ReadU32(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) Fail(path, "truncated tensor data");
    const uint32_t rank = ReadU32(in, path);
    std::vector<int> dims;
    for (uint32_t d = 0; d < rank; ++d)
      dims.push_back(static_cast<int>(ReadU32(in, path)));
    Tensor t(dims);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
    if (!in) Fail(path, "truncated tensor data");
    tensors[name] = std::move(t);
  }
  return tensors;
}

void SaveConfigFile(const std::string& path,
                    const std::map<std::string, std::string>& kv) {
  std::ofstream out(path);
  if (!out) Fail(path, "cannot open for writing");
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
  if (!out) Fail(path, "write failed");
}

std::map<std::string, std::string> LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(path, "cannot open");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) Fail(path, "malformed line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

namespace {

class ConfigReader {
 public:
  ConfigReader(std::map<std::string, std::string> kv, std::string path)
      : kv_(std::move(kv)), path_(std::move(path)) {}

  int GetInt(const std::string& key) const { return std::stoi(Raw(key)); }
  float GetFloat(const std::string& key) const { return std::stof(Raw(key)); }

 private:
  const std::string& Raw(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) Fail(path_, "missing config key " + key);
    return it->second;
  }

  std::map<std::string, std::string> kv_;
  std::string path_;
};

std::map<std::string, std::string> BundleConfigKv(const ModelBundle& b) {
  std::map<std::string, std::string> kv;
  auto put_i = [&](const std::string& k, int v) { kv[k] = std::to_string(v); };
  auto put_f = [&](const std::string& k, float v) { kv[k] = FloatToText(v); };

  const AsrConfig& a = b.asr.cfg;
  put_i("asr.vocab", a.vocab);
  put_i("asr.d_model", a.d_model);
  put_i("asr.n_enc_layers", a.n_enc_layers);
  put_i("asr.n_dec_layers", a.n_dec_layers);
  put_i("asr.n_heads", a.n_heads);
  put_i("asr.d_ffn", a.d_ffn);
  put_i("asr.feat_dim", a.feat_dim);
  put_i("asr.lfr_m", a.lfr_m);
  put_i("asr.lfr_n", a.lfr_n);
  put_i("asr.pred_width", a.pred_width);
  put_i("asr.upsample_rate", a.upsample_rate);
  put_i("asr.ts_hidden", a.ts_hidden);
  put_f("asr.cif_threshold", a.cif_threshold);
  put_f("asr.silence_frac", a.silence_frac);
  put_f("asr.label_smoothing", a.label_smoothing);
  put_f("asr.gamma_quantity", a.gamma_quantity);
  put_f("asr.lambda_glance", a.lambda_glance);
  put_i("asr.frame_shift_ms", a.frame_shift_ms);

  const VadNetConfig& v = b.vad.cfg;
  put_i("vad.feat_dim", v.feat_dim);
  put_i("vad.hidden", v.hidden);
  put_i("vad.l_taps", v.l_taps);
  put_i("vad.r_taps", v.r_taps);
  put_i("vad.n_units", v.n_units);

  const PunctConfig& p = b.punct.cfg;
  put_i("punct.vocab", p.vocab);
  put_i("punct.d_model", p.d_model);
  put_i("punct.n_layers", p.n_layers);
  put_i("punct.n_heads", p.n_heads);
  put_i("punct.d_ffn", p.d_ffn);
  put_i("punct.l_future", p.l_future);
  put_i("punct.force_after", p.force_after);
  put_i("punct.max_history", p.max_history);
  return kv;
}

}  // namespace

void SaveBundle(const ModelBundle& bundle, const std::string& dir) {
  SaveTensors(dir + "/asr.pflw", bundle.asr.params);
  SaveTensors(dir + "/vad.pflw", bundle.vad.params);
  SaveTensors(dir + "/punct.pflw", bundle.punct.params);
  SaveConfigFile(dir + "/config.txt", BundleConfigKv(bundle));
}

ModelBundle LoadBundle(const std::string& dir) {
  const std::string cfg_path = dir + "/config.txt";
  const ConfigReader cfg(LoadConfigFile(cfg_path), cfg_path);

  ModelBundle b;
  AsrConfig& a = b.asr.cfg;
  a.vocab = cfg.GetInt("asr.vocab");
  a.d_model = cfg.GetInt("asr.d_model");
  a.n_enc_layers = cfg.GetInt("asr.n_enc_layers");
  a.n_dec_layers = cfg.GetInt("asr.n_dec_layers");
  a.n_heads = cfg.GetInt("asr.n_heads");
  a.d_ffn = cfg.GetInt("asr.d_ffn");
  a.feat_dim = cfg.GetInt("asr.feat_dim");
  a.lfr_m = cfg.GetInt("asr.lfr_m");
  a.lfr_n = cfg.GetInt("asr.lfr_n");
  a.pred_width = cfg.GetInt("asr.pred_width");
  a.upsample_rate = cfg.GetInt("asr.upsample_rate");
  a.ts_hidden = cfg.GetInt("asr.ts_hidden");
  a.cif_threshold = cfg.GetFloat("asr.cif_threshold");
  a.silence_frac = cfg.GetFloat("asr.silence_frac");
  a.label_smoothing = cfg.GetFloat("asr.label_smoothing");
  a.gamma_quantity = cfg.GetFloat("asr.gamma_quantity");
  a.lambda_glance = cfg.GetFloat("asr.lambda_glance");
  a.frame_shift_ms = cfg.GetInt("asr.frame_shift_ms");

  VadNetConfig& v = b.vad.cfg;
  v.feat_dim = cfg.GetInt("vad.feat_dim");
  v.hidden = cfg.GetInt("vad.hidden");
  v.l_taps = cfg.GetInt("vad.l_taps");
  v.r_taps = cfg.GetInt("vad.r_taps");
  v.n_units = cfg.GetInt("vad.n_units");

  PunctConfig& p = b.punct.cfg;
  p.vocab = cfg.GetInt("punct.vocab");
  p.d_model = cfg.GetInt("punct.d_model");
  p.n_layers = cfg.GetInt("punct.n_layers");
  p.n_heads = cfg.GetInt("punct.n_heads");
  p.d_ffn = cfg.GetInt("punct.d_ffn");
  p.l_future = cfg.GetInt("punct.l_future");
  p.force_after = cfg.GetInt("punct.force_after");
  p.max_history = cfg.GetInt("punct.max_history");

  b.asr.params = LoadTensors(dir + "/asr.pflw");
  b.vad.params = LoadTensors(dir + "/vad.pflw");
  b.punct.params = LoadTensors(dir + "/punct.pflw");
  return b;
}

}  // namespace tinyasr
