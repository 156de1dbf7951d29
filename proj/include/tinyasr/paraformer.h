// tinyasr/paraformer.h
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

#ifndef TINYASR_PARAFORMER_H_
#define TINYASR_PARAFORMER_H_

// Non-autoregressive recognizer: transformer encoder, integrate-and-fire
// predictor, a single bidirectional decoder pass over the acoustic token
// embeddings, a contextual-biasing layer, and an upsampled weight track
// for token timestamps.
//
// All dense projections in the inference path go through a LinearExec so
// a quantized runtime can substitute INT8 arithmetic per layer. LSTM gate
// projections (timestamp track, hotword embedder) deliberately stay in
// float; they are a negligible share of the compute.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tinyasr/cif.h"
#include "tinyasr/features.h"
#include "tinyasr/tensor.h"

namespace tinyasr {

struct AsrConfig {
  int vocab = 32;
  int d_model = 64;
  int n_enc_layers = 2;
  int n_dec_layers = 1;
  int n_heads = 4;
  int d_ffn = 256;
  int feat_dim = 80;
  int lfr_m = 1;
  int lfr_n = 1;
  int pred_width = 3;      // predictor conv width
  int upsample_rate = 2;   // timestamp track upsampling
  int ts_hidden = 32;      // timestamp LSTM width
  float cif_threshold = 1.0f;
  float silence_frac = 0.08f;  // silence cut at this fraction of max alpha2
  float label_smoothing = 0.1f;
  float gamma_quantity = 1.0f;
  float lambda_glance = 0.5f;
  int frame_shift_ms = 10;  // after LFR
};

// Pluggable executor for dense layers: x[N x in] * w[out x in]^T + b.
// `name` identifies the layer so mixed-precision plans can be applied
// per layer.
class LinearExec {
 public:
  virtual ~LinearExec() = default;
  virtual Tensor Apply(const std::string& name, const Tensor& x,
                       const Tensor& w, const Tensor& b) = 0;
};

// Plain f32 execution.
class FloatExec : public LinearExec {
 public:
  Tensor Apply(const std::string& name, const Tensor& x, const Tensor& w,
               const Tensor& b) override;
};

// Weights are a flat name -> tensor map so the trainer, the persistence
// layer, and the quantizer all see the same parameter inventory.
struct AsrModel {
  AsrConfig cfg;
  std::map<std::string, Tensor> params;

  static AsrModel Init(const AsrConfig& cfg, Rng& rng);
  const Tensor& P(const std::string& name) const;

  // Names of every layer routed through LinearExec, in forward order.
  std::vector<std::string> LinearLayerNames() const;
};

struct TokenSpan {
  int token_id = 0;  // kSilenceId marks silence
  int start_ms = 0;
  int end_ms = 0;
};

struct TimestampOutput {
  Tensor alphas2;
  std::vector<TokenSpan> spans;
  int upsample_rate = 1;
};

struct LossParts {
  double ce_first = 0.0;
  double ce_second = 0.0;
  double quantity = 0.0;
  double total = 0.0;
};

// --- inference-path operations -------------------------------------------

// features [T x feat_dim*lfr_m] -> hidden [T x d_model].
Tensor Encode(const AsrModel& m, const Tensor& features, LinearExec& exec);

// hidden [T x d_model] -> per-frame weights in (0,1), length T.
Tensor PredictAlphas(const AsrModel& m, const Tensor& hidden,
                     LinearExec& exec);

// alpha * n / sum(alpha); sum(alpha) == 0 is an error.
Tensor ScaleAlphas(const Tensor& alphas, float n);

// One bidirectional decoder pass: token embeddings [N x d_model], encoder
// memory, hotword embeddings [(k+1) x d_model] (row 0 = no-bias) ->
// vocabulary logits [N x vocab].
Tensor DecodeNar(const AsrModel& m, const Tensor& embeddings,
                 const Tensor& encoder_hidden, const Tensor& hotword_emb,
                 LinearExec& exec);

// Per-row argmax, ties to the lowest id.
std::vector<int> GreedyDecode(const Tensor& logits);

// encoder hidden [T x d_model] -> alpha2, length T * upsample_rate.
Tensor UpsampleAlphas(const AsrModel& m, const Tensor& hidden,
                      LinearExec& exec);

// Scales alpha2 to sum to n_tokens, fires, converts inter-fire intervals
// to spans, and trims low-weight span edges into silence. Spans partition
// [0, len(alphas2) * frame_shift_ms). `silence_threshold` is absolute
// (callers typically pass silence_frac * max(alpha2)).
TimestampOutput TimestampsFromAlphas(const Tensor& alphas2, int n_tokens,
                                     int frame_shift_ms,
                                     float silence_threshold);

// Mean absolute boundary shift in ms between predicted spans (silence
// dropped) and a reference alignment; token counts must match.
double Aas(const std::vector<TokenSpan>& predicted, const Alignment& reference,
           int ref_frame_shift_ms);

// --- training-side pure operations ---------------------------------------

// Replaces ceil(lambda * hamming(first, target)) positions of `acoustic`
// (sampled uniformly without replacement from all N positions) with rows
// of embed_table at the target ids. `replaced`, if given, receives the
// 0/1 replacement mask.
Tensor GlancingSample(const Tensor& acoustic, const std::vector<int>& first,
                      const std::vector<int>& target,
                      const Tensor& embed_table, float lambda, Rng& rng,
                      std::vector<uint8_t>* replaced = nullptr);

// total = ce_first + ce_second + gamma * |sum(alphas) - N|.
LossParts ParaformerLoss(const Tensor& first_logits,
                         const Tensor& second_logits, const Tensor& alphas,
                         const std::vector<int>& targets, float gamma = 1.0f,
                         float smoothing = 0.0f);

}  // namespace tinyasr

#endif  // TINYASR_PARAFORMER_H_
