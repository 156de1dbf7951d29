// tinyasr/train.h
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

#ifndef TINYASR_TRAIN_H_
#define TINYASR_TRAIN_H_

// Toy training: synthetic utterances (features rendered from token
// templates), per-utterance Adam steps on the tape-built recognizer
// graph (two-pass glancing decode, quantity loss, boundary supervision
// for the timestamp track, sampled hotwords for the biasing layer), plus
// small supervised tasks for the VAD scorer and the punctuation model.
//
// Everything is seeded; with a fixed seed two runs produce bit-identical
// weights on the same platform.

#include <cstdint>
#include <string>
#include <vector>

#include "tinyasr/contextual.h"
#include "tinyasr/features.h"
#include "tinyasr/model_io.h"
#include "tinyasr/pipeline.h"
#include "tinyasr/punct.h"
#include "tinyasr/tensor.h"

namespace tinyasr {

struct ToyRecord {
  std::vector<int> tokens;
  uint64_t seed = 0;  // drives feature synthesis for this utterance
};

std::vector<ToyRecord> MakeToyDataset(int n, int len_lo, int len_hi,
                                      int vocab, uint64_t seed);

// JSON-lines, one {"tokens":[...],"seed":N} per record.
void SaveDatasetJsonl(const std::string& path,
                      const std::vector<ToyRecord>& records);
std::vector<ToyRecord> LoadDatasetJsonl(const std::string& path);

struct TrainConfig {
  int epochs = 10;
  float lr = 2e-3f;
  float lr_decay = 0.95f;  // multiplicative, per epoch
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float adam_eps = 1e-8f;
  float ts_loss_weight = 1.0f;     // boundary BCE on the timestamp track
  float alpha_loss_weight = 0.5f;  // boundary BCE on the CIF predictor
  uint64_t seed = 1;
  int vad_epochs = 2;
  int vad_max_records = 400;
  int punct_epochs = 3;
  int punct_sequences = 1200;
  SynthConfig synth;                  // feature synthesis
  HotwordSampleConfig hotword_sampling;
  bool verbose = false;               // per-epoch log lines to stderr
};

struct TrainLogEntry {
  int epoch = 0;
  double loss = 0.0;    // mean total loss over the epoch
  double ter = 0.0;     // greedy token error rate on the training data
  double aas_ms = 0.0;  // mean boundary shift where token counts match
};

struct TrainResult {
  ModelBundle bundle;
  std::vector<TrainLogEntry> log;
};

// Trains all three models. Throws on divergence (non-finite loss) after
// dumping parameter norms to stderr.
TrainResult TrainToy(const std::vector<ToyRecord>& records,
                     const AsrConfig& asr_cfg, const VadNetConfig& vad_cfg,
                     const PunctConfig& punct_cfg, const TrainConfig& cfg);

struct AsrEval {
  double ter = 0.0;
  double aas_ms = 0.0;
  int n_aas = 0;  // utterances where predicted/reference counts matched
};

// Greedy inference (free-running CIF) against the references.
AsrEval EvaluateAsr(const AsrModel& m, const std::vector<ToyRecord>& records,
                    const SynthConfig& synth, LinearExec& exec,
                    const HotwordList& hotwords = {});

// --- toy labeling rules -----------------------------------------------

// The punctuation model is trained on rule-generated labels so that the
// task is exactly learnable within the l_future look-ahead:
//   next token kPeriodTrigger   -> PERIOD
//   next token kQuestionTrigger -> QUESTION
//   next token kEnumTrigger     -> ENUM_COMMA
//   token after next kCommaTrigger -> COMMA
// and kFillerToken itself is tagged REMOVE.
constexpr int kPeriodTrigger = 1;
constexpr int kQuestionTrigger = 2;
constexpr int kCommaTrigger = 3;
constexpr int kEnumTrigger = 4;
constexpr int kFillerToken = 5;

PunctClass RulePunctLabel(const std::vector<int>& tokens, size_t i);
DisfluencyTag RuleDisfLabel(int token);

}  // namespace tinyasr

#endif  // TINYASR_TRAIN_H_
