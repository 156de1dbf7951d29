// tinyasr/contextual.h
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

#ifndef TINYASR_CONTEXTUAL_H_
#define TINYASR_CONTEXTUAL_H_

// Hotword biasing: a recurrent hotword embedder plus an attention layer
// spliced into the last decoder block. Row 0 of every hotword list is a
// reserved no-bias entry (all-zero embedding), so the unbiased inference
// path is just the k=0 case of the biased one.

#include <string>
#include <vector>

#include "tinyasr/paraformer.h"
#include "tinyasr/tensor.h"

namespace tinyasr {

// words[i] is a token-id sequence; the implicit no-bias entry is NOT
// stored here (it is added by EmbedHotwords as row 0).
using HotwordList = std::vector<std::vector<int>>;

// (k+1) x d_model: row 0 zero, row i+1 = last LSTM hidden state over the
// embedding sequence of words[i].
Tensor EmbedHotwords(const AsrModel& m, const HotwordList& words);

// E_c  = attention(E_s' Wc^Q, E_h Wc^K, E_h Wc^V)
// E_s''= attention(E_s' Ws^Q, H Ws^K,  H Ws^V)
// out  = combiner([E_s''; E_c])   (width-1 conv, i.e. per-position linear)
Tensor ContextualLayer(const AsrModel& m, const Tensor& es_prime,
                       const Tensor& encoder_hidden, const Tensor& hotword_emb,
                       LinearExec& exec);

struct HotwordSampleConfig {
  float p_none = 0.3f;  // probability of an empty (no-bias only) list
  int k_max = 3;
  int l_min = 2;
  int l_max = 4;
  // Distractor n-grams teach the bias attention to ignore hotwords that
  // are not in the utterance (at inference most of the list is not).
  // Tokens are drawn uniformly from [0, distract_vocab), standing in for
  // n-grams sampled from other utterances in a batch.
  int k_distract = 0;
  int distract_vocab = 0;  // required > 0 when k_distract > 0
};

// Draws contiguous n-grams from the target transcript, plus k_distract
// random n-grams (see above).
HotwordList SampleTrainingHotwords(const std::vector<int>& target, Rng& rng,
                                   const HotwordSampleConfig& cfg = {});

struct EntityMetrics {
  double recall = 0.0;     // percent
  double precision = 0.0;  // percent
  double f1 = 0.0;         // percent
};

// An entity (token-id sequence) present in a ref counts as recalled when
// it occurs as a contiguous subsequence of the paired hyp; precision is
// over all entity occurrences emitted in hyps.
EntityMetrics ComputeEntityMetrics(
    const std::vector<std::vector<int>>& hyps,
    const std::vector<std::vector<int>>& refs,
    const std::vector<std::vector<int>>& entities);

// One hotword per line, tokens as space-separated integer ids; blank
// lines ignored.
HotwordList LoadHotwordFile(const std::string& path);

}  // namespace tinyasr

#endif  // TINYASR_CONTEXTUAL_H_
