// tinyasr/contextual.cpp
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

#include "tinyasr/contextual.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tinyasr/kernels.h"
#include "tinyasr/simd.h"

namespace tinyasr {

using namespace kernels;  // NOLINT

Tensor EmbedHotwords(const AsrModel& m, const HotwordList& words) {
  const int d = m.cfg.d_model;
  const Tensor& table = m.P("dec.embed");
  const LstmParams lstm{m.P("hw.lstm.wx"), m.P("hw.lstm.wh"),
                        m.P("hw.lstm.b")};
  Tensor out({static_cast<int>(words.size()) + 1, d});  // row 0: no-bias
  for (size_t w = 0; w < words.size(); ++w) {
    Check(!words[w].empty(), "hotwords: empty word");
    Tensor xs({static_cast<int>(words[w].size()), d});
    for (size_t i = 0; i < words[w].size(); ++i) {
      const int id = words[w][i];
      Check(id >= 0 && id < table.dim(0), "hotwords: token id out of range");
      for (int c = 0; c < d; ++c) xs.at(static_cast<int>(i), c) = table.at(id, c);
    }
    const Tensor hs = lstm_seq(xs, lstm);
    for (int c = 0; c < d; ++c)
      out.at(static_cast<int>(w) + 1, c) = hs.at(hs.dim(0) - 1, c);
  }
  return out;
}

namespace {

// Multi-head attention where the q/k/v projections are exec-routed named
// layers and heads are concatenated without an output projection.
Tensor BiasAttention(const AsrModel& m, const std::string& qn,
                     const std::string& kn, const std::string& vn,
                     const Tensor& q_in, const Tensor& kv_in, LinearExec& exec) {
  const Tensor none({0});
  const Tensor q = exec.Apply(qn, q_in, m.P(qn), none);
  const Tensor k = exec.Apply(kn, kv_in, m.P(kn), none);
  const Tensor v = exec.Apply(vn, kv_in, m.P(vn), none);
  const int d = q.dim(1), nq = q.dim(0), nk = k.dim(0);
  const int heads = m.cfg.n_heads, dh = d / heads;
  const float inv = 1.0f / std::sqrt(static_cast<float>(dh));

  Tensor out({nq, d});
  Tensor qh({nq, dh}), kh({nk, dh}), vh({nk, dh}), scores({nq, nk});
  for (int h = 0; h < heads; ++h) {
    for (int r = 0; r < nq; ++r)
      for (int c = 0; c < dh; ++c) qh.at(r, c) = q.at(r, h * dh + c) * inv;
    for (int r = 0; r < nk; ++r)
      for (int c = 0; c < dh; ++c) {
        kh.at(r, c) = k.at(r, h * dh + c);
        vh.at(r, c) = v.at(r, h * dh + c);
      }
    simd::matmul_nt_f32(qh.data(), kh.data(), scores.data(), nq, nk, dh);
    const Tensor probs = softmax(scores);
    Tensor ctx({nq, dh});
    simd::matmul_nn_f32(probs.data(), vh.data(), ctx.data(), nq, dh, nk);
    for (int r = 0; r < nq; ++r)
      for (int c = 0; c < dh; ++c) out.at(r, h * dh + c) = ctx.at(r, c);
  }
  return out;
}

}  // namespace

Tensor ContextualLayer(const AsrModel& m, const Tensor& es_prime,
                       const Tensor& encoder_hidden, const Tensor& hotword_emb,
                       LinearExec& exec) {
  Check(es_prime.dim(1) == m.cfg.d_model &&
            encoder_hidden.dim(1) == m.cfg.d_model &&
            hotword_emb.dim(1) == m.cfg.d_model,
        "contextual: dim mismatch");
  Check(hotword_emb.dim(0) >= 1, "contextual: missing no-bias row");
  const Tensor ec = BiasAttention(m, "ctx.wcq", "ctx.wck", "ctx.wcv",
                                  es_prime, hotword_emb, exec);
  const Tensor es2 = BiasAttention(m, "ctx.wsq", "ctx.wsk", "ctx.wsv",
                                   es_prime, encoder_hidden, exec);
  const int n = es_prime.dim(0), d = m.cfg.d_model;
  Tensor cat({n, 2 * d});
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < d; ++c) cat.at(r, c) = es2.at(r, c);
    for (int c = 0; c < d; ++c) cat.at(r, d + c) = ec.at(r, c);
  }
  return exec.Apply("ctx.comb", cat, m.P("ctx.comb.w"), m.P("ctx.comb.b"));
}

HotwordList SampleTrainingHotwords(const std::vector<int>& target, Rng& rng,
                                   const HotwordSampleConfig& cfg) {
  Check(!target.empty(), "hotword sampling: empty target");
  HotwordList out;
  if (rng.uniform() < cfg.p_none) return out;
  const int k = 1 + rng.uniform_int(cfg.k_max);
  for (int i = 0; i < k; ++i) {
    const int l_max = std::min(cfg.l_max, static_cast<int>(target.size()));
    const int l_min = std::min(cfg.l_min, l_max);
    const int len = l_min + rng.uniform_int(l_max - l_min + 1);
    const int start = rng.uniform_int(static_cast<int>(target.size()) - len + 1);
    out.emplace_back(target.begin() + start, target.begin() + start + len);
  }
  if (cfg.k_distract > 0) {
    Check(cfg.distract_vocab > 0,
          "hotword sampling: distract_vocab required with k_distract");
    for (int i = 0; i < cfg.k_distract; ++i) {
      const int len = cfg.l_min + rng.uniform_int(cfg.l_max - cfg.l_min + 1);
      std::vector<int> w(static_cast<size_t>(len));
      for (int& t : w) t = rng.uniform_int(cfg.distract_vocab);
      out.push_back(std::move(w));
    }
  }
  return out;
}

namespace {

bool ContainsSubsequence(const std::vector<int>& seq,
                         const std::vector<int>& pat) {
  if (pat.empty() || pat.size() > seq.size()) return false;
  for (size_t i = 0; i + pat.size() <= seq.size(); ++i) {
    bool hit = true;
    for (size_t j = 0; j < pat.size() && hit; ++j) hit = seq[i + j] == pat[j];
    if (hit) return true;
  }
  return false;
}

}  // namespace

EntityMetrics ComputeEntityMetrics(
    const std::vector<std::vector<int>>& hyps,
    const std::vector<std::vector<int>>& refs,
    const std::vector<std::vector<int>>& entities) {
  Check(hyps.size() == refs.size(), "entity metrics: list size mismatch");
  int64_t relevant = 0, recalled = 0, emitted = 0, correct = 0;
  for (size_t i = 0; i < hyps.size(); ++i) {
    for (const std::vector<int>& e : entities) {
      const bool in_ref = ContainsSubsequence(refs[i], e);
      const bool in_hyp = ContainsSubsequence(hyps[i], e);
      if (in_ref) {
        ++relevant;
        if (in_hyp) ++recalled;
      }
      if (in_hyp) {
        ++emitted;
        if (in_ref) ++correct;
      }
    }
  }
  EntityMetrics mtr;
  mtr.recall = relevant ? 100.0 * recalled / relevant : 0.0;
  mtr.precision = emitted ? 100.0 * correct / emitted : 0.0;
  mtr.f1 = (mtr.recall + mtr.precision) > 0.0
               ? 2.0 * mtr.precision * mtr.recall /
                     (mtr.precision + mtr.recall)
               : 0.0;
  return mtr;
}

HotwordList LoadHotwordFile(const std::string& path) {
  std::ifstream in(path);
  Check(static_cast<bool>(in), "hotwords: cannot open " + path);
  HotwordList out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::vector<int> ids;
    int id;
    while (ss >> id) ids.push_back(id);
    if (!ids.empty()) out.push_back(std::move(ids));
  }
  return out;
}

}  // namespace tinyasr
