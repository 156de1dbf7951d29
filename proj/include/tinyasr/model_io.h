// tinyasr/model_io.h
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

#ifndef TINYASR_MODEL_IO_H_
#define TINYASR_MODEL_IO_H_

// Model persistence. Weight files are a flat binary format:
//   magic "PFLW", u32 version (= 1), u32 tensor count, then per tensor
//   u32 name length, UTF-8 name, u32 rank, u32 dims..., raw
//   little-endian f32 data.
// Configs are plain-text key=value files. A bundle directory holds
// asr.pflw, vad.pflw, punct.pflw and config.txt.

#include <map>
#include <string>

#include "tinyasr/paraformer.h"
#include "tinyasr/punct.h"
#include "tinyasr/tensor.h"
#include "tinyasr/vad.h"

namespace tinyasr {

struct ModelBundle {
  AsrModel asr;
  VadModel vad;
  PunctModel punct;
};

// Round-trip bit-exact. Load fails with "not a model file" on a bad
// magic, a version error on an unknown version, and "truncated tensor
// data" on short files; nothing partial is returned.
void SaveTensors(const std::string& path,
                 const std::map<std::string, Tensor>& tensors);
std::map<std::string, Tensor> LoadTensors(const std::string& path);

void SaveConfigFile(const std::string& path,
                    const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> LoadConfigFile(const std::string& path);

void SaveBundle(const ModelBundle& bundle, const std::string& dir);
ModelBundle LoadBundle(const std::string& dir);

}  // namespace tinyasr

#endif  // TINYASR_MODEL_IO_H_
