// tinyasr/punct.h
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

#ifndef TINYASR_PUNCT_H_
#define TINYASR_PUNCT_H_

// Controllable-latency text post-processing: a transformer encoder with a
// restricted look-ahead predicts per-token punctuation plus a binary
// disfluency tag, and a streaming wrapper freezes (commits) a prefix of
// the pending tokens with bounded delay, discarding over-long history at
// committed sentence boundaries.
//
// Look-ahead budgeting: only the first encoder layer attends l_future
// tokens ahead; the remaining layers are causal. Stacking banded layers
// would multiply the effective look-ahead and break the freezing rule,
// so the whole stack sees exactly l_future tokens of future context.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tinyasr/tensor.h"

namespace tinyasr {

enum class PunctClass : int {
  kNone = 0,
  kComma = 1,
  kPeriod = 2,
  kQuestion = 3,
  kEnumComma = 4,  // Chinese enumeration comma
};
constexpr int kNumPunctClasses = 5;

inline bool IsSentenceEnd(PunctClass c) {
  return c == PunctClass::kPeriod || c == PunctClass::kQuestion;
}

enum class DisfluencyTag : int { kKeep = 0, kRemove = 1 };

struct PunctConfig {
  int vocab = 32;
  int d_model = 32;
  int n_layers = 2;
  int n_heads = 4;
  int d_ffn = 128;
  int l_future = 3;     // committed tokens never see beyond this horizon
  int force_after = 40; // forced commit once this many tokens are pending
  int max_history = 100;
};

struct PunctModel {
  PunctConfig cfg;
  std::map<std::string, Tensor> params;

  static PunctModel Init(const PunctConfig& cfg, Rng& rng);
  const Tensor& P(const std::string& name) const;
};

// tokens (N >= 1) -> (punct logits [N x 5], disfluency logits [N x 2]).
// Token i's logits depend only on tokens 0 .. i + l_future.
std::pair<Tensor, Tensor> PredictClasses(const PunctModel& m,
                                         const std::vector<int>& tokens);

// Index up to which `classes` (the pending, uncommitted decode) may be
// committed: 1 + index of the last sentence-ending class among positions
// whose look-ahead is complete (i + l_future < len). If there is none and
// len > force_after, returns len - l_future (forced commit); otherwise 0.
int FreezePoint(const std::vector<PunctClass>& classes, int l_future,
                int force_after);

struct CommittedToken {
  int token = 0;
  PunctClass punct = PunctClass::kNone;
  DisfluencyTag tag = DisfluencyTag::kKeep;
};

// Streaming decoder state; one instance per stream, not shareable across
// threads. Model weights are immutable and may be shared. Committed
// outputs are final: later pushes never contradict them.
class PunctStream {
 public:
  explicit PunctStream(const PunctModel* model) : model_(model) {}

  // Appends tokens, re-decodes the pending window with history context,
  // and returns the newly committed tokens (possibly none).
  std::vector<CommittedToken> Push(const std::vector<int>& tokens);

  // Commits everything still pending (end of stream).
  std::vector<CommittedToken> Finalize();

  int pending_size() const {
    return static_cast<int>(history_.size()) - committed_len_;
  }
  int history_size() const { return static_cast<int>(history_.size()); }

 private:
  std::vector<CommittedToken> Decode(bool flush_all);
  void DiscardHistory();

  const PunctModel* model_;
  std::vector<int> history_;                // committed prefix + pending tail
  std::vector<CommittedToken> annotated_;   // classes of the committed prefix
  int committed_len_ = 0;
};

// "", ",", ".", "?", and the enumeration comma.
std::string PunctSymbol(PunctClass c);

struct RenderItem {
  std::string token;
  PunctClass punct = PunctClass::kNone;
  DisfluencyTag tag = DisfluencyTag::kKeep;
};

// Space-joined kept tokens, punctuation symbols appended after their
// token; REMOVE-tagged tokens are deleted together with their marks.
std::string RenderText(const std::vector<RenderItem>& items);

struct Prf {
  double precision = 0.0;  // percent
  double recall = 0.0;
  double f1 = 0.0;
};

struct PunctMetrics {
  Prf overall;  // micro-averaged over non-NONE slots
  std::array<Prf, kNumPunctClasses> per_class;  // index 0 (NONE) unused
};

// Per-slot precision/recall/F1; sequences must have equal length.
PunctMetrics ComputePunctMetrics(const std::vector<PunctClass>& pred,
                                 const std::vector<PunctClass>& ref);

}  // namespace tinyasr

#endif  // TINYASR_PUNCT_H_
