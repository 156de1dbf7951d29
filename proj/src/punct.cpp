// tinyasr/punct.cpp
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

#include "tinyasr/punct.h"

#include <algorithm>
#include <cmath>

#include "tinyasr/kernels.h"

namespace tinyasr {

using namespace kernels;  // NOLINT

PunctModel PunctModel::Init(const PunctConfig& cfg, Rng& rng) {
  PunctModel m;
  m.cfg = cfg;
  const int d = cfg.d_model, f = cfg.d_ffn;
  auto mat = [&](const std::string& name, std::vector<int> shape,
                 float std_dev) {
    Tensor w(shape);
    for (int64_t i = 0; i < w.numel(); ++i)
      w[i] = std_dev * static_cast<float>(rng.normal());
    m.params[name] = std::move(w);
  };
  auto proj = [&](const std::string& name, std::vector<int> shape) {
    mat(name, shape, 1.0f / std::sqrt(static_cast<float>(shape.back())));
  };
  auto zeros = [&](const std::string& name, std::vector<int> shape) {
    m.params[name] = Tensor(std::move(shape));
  };
  auto ln = [&](const std::string& name) {
    m.params[name + ".g"] = Tensor({d});
    m.params[name + ".g"].fill(1.0f);
    zeros(name + ".b", {d});
  };

  mat("punct.embed", {cfg.vocab, d}, 1.0f);
  for (int i = 0; i < cfg.n_layers; ++i) {
    const std::string p = "punct" + std::to_string(i);
    ln(p + ".ln1");
    proj(p + ".att.wq", {d, d});
    proj(p + ".att.wk", {d, d});
    proj(p + ".att.wv", {d, d});
    proj(p + ".att.wo", {d, d});
    ln(p + ".ln2");
    proj(p + ".ffn.w1", {f, d});
    zeros(p + ".ffn.b1", {f});
    proj(p + ".ffn.w2", {d, f});
    zeros(p + ".ffn.b2", {d});
  }
  ln("punct.ln_out");
  proj("punct.head.w", {kNumPunctClasses, d});
  zeros("punct.head.b", {kNumPunctClasses});
  proj("punct.disf.w", {2, d});
  zeros("punct.disf.b", {2});
  return m;
}

const Tensor& PunctModel::P(const std::string& name) const {
  auto it = params.find(name);
  Check(it != params.end(), "punct: unknown parameter " + name);
  return it->second;
}

namespace {

// Multi-head self-attention where position i may attend to j <= i + ahead.
Tensor BandedAttention(const PunctModel& m, const std::string& p,
                       const Tensor& x, int ahead) {
  const int n = x.dim(0), d = x.dim(1);
  const int heads = m.cfg.n_heads, dh = d / heads;
  const Tensor none({0});
  const Tensor q = linear(x, m.P(p + ".wq"), none);
  const Tensor k = linear(x, m.P(p + ".wk"), none);
  const Tensor v = linear(x, m.P(p + ".wv"), none);
  const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(dh));
  Tensor ctx({n, d});
  for (int h = 0; h < heads; ++h) {
    const int c0 = h * dh;
    for (int i = 0; i < n; ++i) {
      const int hi = std::min(n - 1, i + ahead);
      // Softmax over the visible band, accumulated in float64.
      double max_s = -1e30;
      std::vector<double> scores(static_cast<size_t>(hi) + 1);
      for (int j = 0; j <= hi; ++j) {
        double s = 0.0;
        for (int c = 0; c < dh; ++c)
          s += static_cast<double>(q.at(i, c0 + c)) * k.at(j, c0 + c);
        scores[static_cast<size_t>(j)] = s * inv_sqrt;
        max_s = std::max(max_s, scores[static_cast<size_t>(j)]);
      }
      double denom = 0.0;
      for (int j = 0; j <= hi; ++j) {
        scores[static_cast<size_t>(j)] =
            std::exp(scores[static_cast<size_t>(j)] - max_s);
        denom += scores[static_cast<size_t>(j)];
      }
      for (int c = 0; c < dh; ++c) {
        double acc = 0.0;
        for (int j = 0; j <= hi; ++j)
          acc += scores[static_cast<size_t>(j)] * v.at(j, c0 + c);
        ctx.at(i, c0 + c) = static_cast<float>(acc / denom);
      }
    }
  }
  return linear(ctx, m.P(p + ".wo"), none);
}

Tensor LnP(const PunctModel& m, const std::string& name, const Tensor& x) {
  return layer_norm(x, m.P(name + ".g"), m.P(name + ".b"));
}

}  // namespace

std::pair<Tensor, Tensor> PredictClasses(const PunctModel& m,
                                         const std::vector<int>& tokens) {
  const int n = static_cast<int>(tokens.size());
  Check(n >= 1, "punct: empty input");
  const int d = m.cfg.d_model;
  const Tensor& table = m.P("punct.embed");
  Tensor x({n, d});
  for (int i = 0; i < n; ++i) {
    Check(tokens[i] >= 0 && tokens[i] < m.cfg.vocab,
          "punct: token id out of range");
    for (int c = 0; c < d; ++c) x.at(i, c) = table.at(tokens[i], c);
  }
  x = add(x, positional_encoding(n, d));

  for (int l = 0; l < m.cfg.n_layers; ++l) {
    const std::string p = "punct" + std::to_string(l);
    const int ahead = (l == 0) ? m.cfg.l_future : 0;
    x = add(x, BandedAttention(m, p + ".att", LnP(m, p + ".ln1", x), ahead));
    const Tensor h = LnP(m, p + ".ln2", x);
    const Tensor ff = linear(relu(linear(h, m.P(p + ".ffn.w1"),
                                         m.P(p + ".ffn.b1"))),
                             m.P(p + ".ffn.w2"), m.P(p + ".ffn.b2"));
    x = add(x, ff);
  }
  x = LnP(m, "punct.ln_out", x);
  return {linear(x, m.P("punct.head.w"), m.P("punct.head.b")),
          linear(x, m.P("punct.disf.w"), m.P("punct.disf.b"))};
}

int FreezePoint(const std::vector<PunctClass>& classes, int l_future,
                int force_after) {
  const int n = static_cast<int>(classes.size());
  int freeze = 0;
  for (int i = 0; i + l_future < n; ++i)
    if (IsSentenceEnd(classes[i])) freeze = i + 1;
  if (freeze == 0 && n > force_after) freeze = std::max(0, n - l_future);
  return freeze;
}

std::vector<CommittedToken> PunctStream::Push(const std::vector<int>& tokens) {
  history_.insert(history_.end(), tokens.begin(), tokens.end());
  if (pending_size() == 0) return {};
  std::vector<CommittedToken> out = Decode(/*flush_all=*/false);
  DiscardHistory();
  return out;
}

std::vector<CommittedToken> PunctStream::Finalize() {
  if (pending_size() == 0) return {};
  std::vector<CommittedToken> out = Decode(/*flush_all=*/true);
  DiscardHistory();
  return out;
}

std::vector<CommittedToken> PunctStream::Decode(bool flush_all) {
  std::vector<CommittedToken> out;
  // The freezing rules may cascade (committing a sentence end can expose a
  // forced commit), so apply them until a fixed point; this also bounds
  // the commit latency by force_after for arbitrarily large pushes.
  while (pending_size() > 0) {
    const auto [punct_logits, disf_logits] = PredictClasses(*model_, history_);
    const std::vector<int> punct_ids = argmax_rows(punct_logits);
    const std::vector<int> disf_ids = argmax_rows(disf_logits);
    std::vector<PunctClass> pending;
    for (int i = committed_len_; i < history_size(); ++i)
      pending.push_back(static_cast<PunctClass>(punct_ids[i]));

    int freeze = flush_all ? static_cast<int>(pending.size())
                           : FreezePoint(pending, model_->cfg.l_future,
                                         model_->cfg.force_after);
    if (freeze <= 0) break;
    for (int i = 0; i < freeze; ++i) {
      const int pos = committed_len_ + i;
      CommittedToken c;
      c.token = history_[static_cast<size_t>(pos)];
      c.punct = static_cast<PunctClass>(punct_ids[pos]);
      c.tag = static_cast<DisfluencyTag>(disf_ids[pos]);
      out.push_back(c);
      annotated_.push_back(c);
    }
    committed_len_ += freeze;
    if (flush_all) break;
  }
  return out;
}

void PunctStream::DiscardHistory() {
  if (history_size() <= model_->cfg.max_history) return;
  // Prefer dropping everything up to (and including) the last committed
  // sentence-ending mark; fall back to the oldest max_history/2 tokens.
  // Uncommitted tokens are never dropped.
  int drop = 0;
  for (int i = 0; i < committed_len_; ++i)
    if (IsSentenceEnd(annotated_[static_cast<size_t>(i)].punct)) drop = i + 1;
  if (drop == 0) drop = std::min(committed_len_, model_->cfg.max_history / 2);
  if (drop == 0) return;
  history_.erase(history_.begin(), history_.begin() + drop);
  annotated_.erase(annotated_.begin(), annotated_.begin() + drop);
  committed_len_ -= drop;
}

std::string PunctSymbol(PunctClass c) {
  switch (c) {
    case PunctClass::kNone: return "";
    case PunctClass::kComma: return ",";
    case PunctClass::kPeriod: return ".";
    case PunctClass::kQuestion: return "?";
    case PunctClass::kEnumComma: return "\xE3\x80\x81";  // U+3001
  }
  return "";
}

std::string RenderText(const std::vector<RenderItem>& items) {
  std::string out;
  for (const RenderItem& it : items) {
    if (it.tag == DisfluencyTag::kRemove) continue;
    if (!out.empty()) out += ' ';
    out += it.token;
    out += PunctSymbol(it.punct);
  }
  return out;
}

PunctMetrics ComputePunctMetrics(const std::vector<PunctClass>& pred,
                                 const std::vector<PunctClass>& ref) {
  Check(pred.size() == ref.size(), "punct metrics: length mismatch");
  std::array<int64_t, kNumPunctClasses> n_pred{}, n_ref{}, n_hit{};
  for (size_t i = 0; i < pred.size(); ++i) {
    const int p = static_cast<int>(pred[i]), r = static_cast<int>(ref[i]);
    if (p != 0) ++n_pred[static_cast<size_t>(p)];
    if (r != 0) ++n_ref[static_cast<size_t>(r)];
    if (p != 0 && p == r) ++n_hit[static_cast<size_t>(p)];
  }
  auto prf = [](int64_t hit, int64_t np, int64_t nr) {
    Prf s;
    s.precision = np > 0 ? 100.0 * static_cast<double>(hit) / np : 0.0;
    s.recall = nr > 0 ? 100.0 * static_cast<double>(hit) / nr : 0.0;
    s.f1 = (s.precision + s.recall) > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
  };
  PunctMetrics out;
  int64_t hit = 0, np = 0, nr = 0;
  for (int c = 1; c < kNumPunctClasses; ++c) {
    out.per_class[static_cast<size_t>(c)] =
        prf(n_hit[static_cast<size_t>(c)], n_pred[static_cast<size_t>(c)],
            n_ref[static_cast<size_t>(c)]);
    hit += n_hit[static_cast<size_t>(c)];
    np += n_pred[static_cast<size_t>(c)];
    nr += n_ref[static_cast<size_t>(c)];
  }
  out.overall = prf(hit, np, nr);
  return out;
}

}  // namespace tinyasr
