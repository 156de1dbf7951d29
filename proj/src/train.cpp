// tinyasr/train.cpp
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

#include "tinyasr/train.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <utility>

#include "json.hpp"
#include "tinyasr/cif.h"
#include "tinyasr/kernels.h"
#include "tinyasr/tape.h"
#include "tinyasr/vad.h"

namespace tinyasr {

namespace {

using Params = std::map<std::string, Tensor>;

// Binds model parameters to tape leaves on demand so that every use of a
// parameter in one graph shares a single leaf (gradients accumulate
// across reuse, e.g. the decoder running twice for glancing).
struct TapeCtx {
  explicit TapeCtx(Params* p) : params(p) {}

  Tape t;
  Params* params;
  std::map<std::string, int> ids;

  int P(const std::string& name) {
    auto it = ids.find(name);
    if (it != ids.end()) return it->second;
    auto pit = params->find(name);
    Check(pit != params->end(), "train: unknown parameter " + name);
    const int id = t.leaf(pit->second);
    ids.emplace(name, id);
    return id;
  }
};

class Adam {
 public:
  Adam(float lr, float beta1, float beta2, float eps)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void set_lr(float lr) { lr_ = lr; }

  // One update over every leaf the graph touched. Gradients that were
  // never produced (empty tensors) are skipped.
  void Step(TapeCtx& c) {
    ++t_;
    const double bc1 = 1.0 - std::pow(static_cast<double>(beta1_), t_);
    const double bc2 = 1.0 - std::pow(static_cast<double>(beta2_), t_);
    for (const auto& [name, id] : c.ids) {
      const Tensor& g = c.t.grad(id);
      if (g.numel() == 0) continue;
      Tensor& p = c.params->at(name);
      Slot& s = slots_[name];
      if (s.m.numel() == 0) {
        s.m = p;
        s.m.fill(0.0f);
        s.v = s.m;
      }
      for (int64_t i = 0; i < p.numel(); ++i) {
        const double gi = g[i];
        s.m[i] = beta1_ * s.m[i] + (1.0f - beta1_) * static_cast<float>(gi);
        s.v[i] =
            beta2_ * s.v[i] + (1.0f - beta2_) * static_cast<float>(gi * gi);
        const double mhat = s.m[i] / bc1;
        const double vhat = s.v[i] / bc2;
        p[i] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

 private:
  struct Slot {
    Tensor m, v;
  };
  float lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::map<std::string, Slot> slots_;
};

[[noreturn]] void DumpAndThrow(const char* stage, const Params& params) {
  std::fprintf(stderr, "train: non-finite loss in %s stage; param norms:\n",
               stage);
  for (const auto& [name, p] : params) {
    double sq = 0.0;
    for (int64_t i = 0; i < p.numel(); ++i)
      sq += static_cast<double>(p[i]) * p[i];
    std::fprintf(stderr, "  %-16s %.6g\n", name.c_str(), std::sqrt(sq));
  }
  throw std::runtime_error("train: loss diverged (non-finite)");
}

// --- shared tape building blocks ----------------------------------------

int TapeLn(TapeCtx& c, const std::string& prefix, int x) {
  return c.t.layer_norm(x, c.P(prefix + ".g"), c.P(prefix + ".b"));
}

int TapeFfn(TapeCtx& c, const std::string& prefix, int x) {
  Tape& t = c.t;
  const int h = t.relu(t.linear(x, c.P(prefix + ".w1"), c.P(prefix + ".b1")));
  return t.linear(h, c.P(prefix + ".w2"), c.P(prefix + ".b2"));
}

// Multi-head attention with explicit projection names so the same code
// serves encoder/decoder self-attention (wo present) and the bias
// attention pieces (no wo). `mask`, when given, is added to the raw
// scores of every head (-1e9 marks invisible positions).
int TapeMha(TapeCtx& c, const std::string& wq, const std::string& wk,
            const std::string& wv, const std::string& wo, int q_in, int kv_in,
            int n_heads, const Tensor* mask) {
  Tape& t = c.t;
  const int d = t.val(q_in).dim(1);
  Check(d % n_heads == 0, "train: heads must divide dim");
  const int dh = d / n_heads;
  const float inv = 1.0f / std::sqrt(static_cast<float>(dh));
  const int q = t.linear(q_in, c.P(wq));
  const int k = t.linear(kv_in, c.P(wk));
  const int v = t.linear(kv_in, c.P(wv));
  int out = -1;
  for (int h = 0; h < n_heads; ++h) {
    const int qh = t.slice_cols(q, h * dh, dh);
    const int kh = t.slice_cols(k, h * dh, dh);
    const int vh = t.slice_cols(v, h * dh, dh);
    int scores = t.scale(t.matmul(qh, t.transpose(kh)), inv);
    if (mask != nullptr) scores = t.add_const(scores, *mask);
    const int ctx = t.matmul(t.softmax_rows(scores), vh);
    out = (h == 0) ? ctx : t.concat_cols(out, ctx);
  }
  if (!wo.empty()) out = t.linear(out, c.P(wo));
  return out;
}

int TapeAttention(TapeCtx& c, const std::string& prefix, int q_in, int kv_in,
                  int n_heads, const Tensor* mask = nullptr) {
  return TapeMha(c, prefix + ".wq", prefix + ".wk", prefix + ".wv",
                 prefix + ".wo", q_in, kv_in, n_heads, mask);
}

// Unrolled LSTM; returns one [1 x hidden] node per timestep. Gate layout
// matches kernels::lstm_step: i, f, g, o stacked along the output dim.
std::vector<int> TapeLstm(TapeCtx& c, const std::string& prefix, int xs,
                          int hidden) {
  Tape& t = c.t;
  const int n = t.val(xs).dim(0);
  const int wx = c.P(prefix + ".wx");
  const int wh = c.P(prefix + ".wh");
  const int b = c.P(prefix + ".b");
  int h = t.constant(Tensor({1, hidden}));
  int cc = t.constant(Tensor({1, hidden}));
  std::vector<int> hs;
  hs.reserve(n);
  for (int s = 0; s < n; ++s) {
    const int xt = t.gather_rows(xs, {s});
    const int gates = t.add(t.linear(xt, wx, b), t.linear(h, wh));
    const int ig = t.sigmoid(t.slice_cols(gates, 0, hidden));
    const int fg = t.sigmoid(t.slice_cols(gates, hidden, hidden));
    const int gg = t.tanh_(t.slice_cols(gates, 2 * hidden, hidden));
    const int og = t.sigmoid(t.slice_cols(gates, 3 * hidden, hidden));
    cc = t.add(t.mul(fg, cc), t.mul(ig, gg));
    h = t.mul(og, t.tanh_(cc));
    hs.push_back(h);
  }
  return hs;
}

// --- recognizer graph -----------------------------------------------------

int TapeEncoder(TapeCtx& c, const AsrConfig& cfg, const Tensor& feats) {
  Tape& t = c.t;
  int x = t.linear(t.constant(feats), c.P("in_proj.w"), c.P("in_proj.b"));
  x = t.add_const(
      x, kernels::positional_encoding(t.val(x).dim(0), t.val(x).dim(1)));
  for (int i = 0; i < cfg.n_enc_layers; ++i) {
    const std::string p = "enc" + std::to_string(i);
    const int n1 = TapeLn(c, p + ".ln1", x);
    x = t.add(x, TapeAttention(c, p + ".att", n1, n1, cfg.n_heads));
    x = t.add(x, TapeFfn(c, p + ".ffn", TapeLn(c, p + ".ln2", x)));
  }
  return TapeLn(c, "enc.ln_out", x);
}

int TapeHotwordEmb(TapeCtx& c, const AsrConfig& cfg, const HotwordList& words) {
  Tape& t = c.t;
  std::vector<int> rows;
  rows.push_back(t.constant(Tensor({1, cfg.d_model})));  // no-bias row
  for (const auto& w : words) {
    Check(!w.empty(), "train: empty hotword");
    const int xs = t.gather_rows(c.P("dec.embed"), w);
    rows.push_back(TapeLstm(c, "hw.lstm", xs, cfg.d_model).back());
  }
  return rows.size() == 1 ? rows[0] : t.concat_rows(rows);
}

int TapeDecoder(TapeCtx& c, const AsrConfig& cfg, int emb, int enc,
                int hw_emb) {
  Tape& t = c.t;
  int x = t.add_const(
      emb, kernels::positional_encoding(t.val(emb).dim(0), cfg.d_model));
  for (int i = 0; i < cfg.n_dec_layers; ++i) {
    const std::string p = "dec" + std::to_string(i);
    const int n1 = TapeLn(c, p + ".ln1", x);
    x = t.add(x, TapeAttention(c, p + ".att", n1, n1, cfg.n_heads));
    x = t.add(x, TapeFfn(c, p + ".ffn", TapeLn(c, p + ".ln2", x)));
  }
  const int es = x;
  const int ec = TapeMha(c, "ctx.wcq", "ctx.wck", "ctx.wcv", "", es, hw_emb,
                         cfg.n_heads, nullptr);
  const int es2 = TapeMha(c, "ctx.wsq", "ctx.wsk", "ctx.wsv", "", es, enc,
                          cfg.n_heads, nullptr);
  const int o = t.linear(t.concat_cols(es2, ec), c.P("ctx.comb.w"),
                         c.P("ctx.comb.b"));
  const int y = TapeLn(c, "dec.ln_out", t.add(es, o));
  return t.linear(y, c.P("out.w"), c.P("out.b"));
}

double AsrTrainStep(AsrModel& m, const ToyRecord& rec, uint64_t synth_seed,
                    const TokenBank& bank, const TrainConfig& cfg, Rng& rng,
                    Adam& opt) {
  Rng synth_rng(synth_seed);
  SynthResult sr = SynthGenerate(rec.tokens, synth_rng, cfg.synth, bank);
  FeatureFrames ff = std::move(sr.feats);
  if (m.cfg.lfr_m > 1 || m.cfg.lfr_n > 1)
    ff = LfrStack(ff, m.cfg.lfr_m, m.cfg.lfr_n);
  const int n = static_cast<int>(rec.tokens.size());
  Check(n >= 1, "train: empty token sequence");

  TapeCtx c(&m.params);
  Tape& t = c.t;
  const int enc = TapeEncoder(c, m.cfg, ff.frames);

  // Predictor; the quantity loss sees the raw (unscaled) alphas while
  // CIF integrates the teacher-forced scaled ones.
  const int conv = t.relu(t.conv1d_time(enc, c.P("pred.conv.w"),
                                        c.P("pred.conv.b"), m.cfg.pred_width));
  const int alpha_logits =
      t.linear(conv, c.P("pred.out.w"), c.P("pred.out.b"));
  const int alphas = t.sigmoid(alpha_logits);
  const int scaled = t.scale_to_sum(alphas, static_cast<float>(n));
  const int emb1 = t.cif_embed(enc, scaled, m.cfg.cif_threshold, n);

  const HotwordList words =
      SampleTrainingHotwords(rec.tokens, rng, cfg.hotword_sampling);
  const int hw = TapeHotwordEmb(c, m.cfg, words);

  const int logits1 = TapeDecoder(c, m.cfg, emb1, enc, hw);
  const std::vector<int> first = GreedyDecode(t.val(logits1));

  // Glancing: swap in ceil(lambda * hamming) target embeddings, sampled
  // uniformly without replacement over all positions.
  int hamming = 0;
  for (int i = 0; i < n; ++i)
    if (first[i] != rec.tokens[i]) ++hamming;
  const int n_rep = static_cast<int>(
      std::ceil(static_cast<double>(m.cfg.lambda_glance) * hamming));
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = 0; i < n - 1; ++i) {
    const int j = i + rng.uniform_int(n - i);
    std::swap(order[i], order[j]);
  }
  std::vector<uint8_t> use_y(n, 0);
  for (int i = 0; i < n_rep && i < n; ++i) use_y[order[i]] = 1;
  const int tgt_emb = t.gather_rows(c.P("dec.embed"), rec.tokens);
  const int emb2 = t.replace_rows(emb1, tgt_emb, use_y);
  const int logits2 = TapeDecoder(c, m.cfg, emb2, enc, hw);

  const int ce1 = t.ce_loss(logits1, rec.tokens, m.cfg.label_smoothing);
  const int ce2 = t.ce_loss(logits2, rec.tokens, m.cfg.label_smoothing);
  const int qty = t.abs_minus(t.sum_all(alphas), static_cast<float>(n));

  // Timestamp track: soft BCE spreading each token's unit of alpha2 mass
  // uniformly over its frames. After the n-token rescale every token
  // still integrates to exactly one threshold (fires land on token
  // ends), but no within-token frame falls under the silence cut, so
  // span edges are not trimmed away.
  const int up = t.relu(t.tconv1d_time(enc, c.P("ts.tconv.w"),
                                       c.P("ts.tconv.b"), m.cfg.upsample_rate));
  const int hcat = t.concat_rows(TapeLstm(c, "ts.lstm", up, m.cfg.ts_hidden));
  const int ts_logits = t.linear(hcat, c.P("ts.out.w"), c.P("ts.out.b"));
  const int t2 = t.val(up).dim(0);
  std::vector<float> mass(t2, 0.0f);
  for (const AlignSpan& s : sr.align) {
    if (s.token_id == kSilenceId) continue;
    const int lo = s.start_frame * m.cfg.upsample_rate;
    const int hi = std::min(s.end_frame * m.cfg.upsample_rate, t2);
    if (hi <= lo) continue;
    const float w = 1.0f / static_cast<float>(hi - lo);
    for (int f = lo; f < hi; ++f) mass[f] = w;
  }
  const int ts = t.bce_logits(ts_logits, mass);

  // The same boundary supervision on the predictor keeps the token count
  // honest on unseen durations: alpha ~ 1 exactly at each token's last
  // frame makes sum(alpha) track N without relying on the quantity loss
  // alone.
  const int tf = t.val(enc).dim(0);
  std::vector<float> frame_boundary(tf, 0.0f);
  for (const AlignSpan& s : sr.align) {
    if (s.token_id == kSilenceId) continue;
    int idx = s.end_frame - 1;
    if (idx < 0) idx = 0;
    if (idx >= tf) idx = tf - 1;
    frame_boundary[idx] = 1.0f;
  }
  const int ab = t.bce_logits(alpha_logits, frame_boundary);

  const int total = t.weighted_sum(
      {ce1, ce2, qty, ts, ab},
      {1.0f, 1.0f, m.cfg.gamma_quantity, cfg.ts_loss_weight,
       cfg.alpha_loss_weight});
  const double loss = t.val(total)[0];
  if (!std::isfinite(loss)) DumpAndThrow("asr", m.params);
  t.backward(total);
  opt.Step(c);
  return loss;
}

// --- VAD graph -------------------------------------------------------------

// Replicates ScoreFrames with the taps trainable: shifted copies of the
// hidden sequence are gathered through an appended zero row (standing in
// for out-of-range frames) and multiplied by the tap row broadcast over
// time via a ones-column matmul.
double VadTrainStep(VadModel& vm, const Tensor& feats,
                    const std::vector<int>& labels, Adam& opt) {
  const int n = feats.dim(0);
  if (n == 0) return 0.0;
  const int hd = vm.cfg.hidden;
  TapeCtx c(&vm.params);
  Tape& t = c.t;
  const int h =
      t.relu(t.linear(t.constant(feats), c.P("vad.in.w"), c.P("vad.in.b")));
  const int hext = t.concat_rows({h, t.constant(Tensor({1, hd}))});
  Tensor ones({n, 1});
  ones.fill(1.0f);
  const int ones_id = t.constant(ones);
  const int taps = c.P("vad.mem.w");
  int mem = h;  // identity skip
  const int n_taps = vm.cfg.l_taps + vm.cfg.r_taps + 1;
  for (int k = 0; k < n_taps; ++k) {
    std::vector<int> src(n);
    for (int f = 0; f < n; ++f) {
      const int s = f + k - vm.cfg.l_taps;
      src[f] = (s < 0 || s >= n) ? n : s;  // row n is the zero row
    }
    const int shifted = t.gather_rows(hext, src);
    const int tap_mat = t.matmul(ones_id, t.gather_rows(taps, {k}));
    mem = t.add(mem, t.mul(shifted, tap_mat));
  }
  const int logits =
      t.linear(t.relu(mem), c.P("vad.out.w"), c.P("vad.out.b"));
  const int loss = t.ce_loss(logits, labels, 0.0f);
  const double v = t.val(loss)[0];
  if (!std::isfinite(v)) DumpAndThrow("vad", vm.params);
  t.backward(loss);
  opt.Step(c);
  return v;
}

// --- punctuation graph -------------------------------------------------

Tensor BandMask(int n, int ahead) {
  Tensor m({n, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      m.at(i, j) = (j <= i + ahead) ? 0.0f : -1e9f;
  return m;
}

double PunctTrainStep(PunctModel& pm, const std::vector<int>& tokens,
                      Adam& opt) {
  const int n = static_cast<int>(tokens.size());
  const PunctConfig& cfg = pm.cfg;
  TapeCtx c(&pm.params);
  Tape& t = c.t;
  int x = t.add_const(t.gather_rows(c.P("punct.embed"), tokens),
                      kernels::positional_encoding(n, cfg.d_model));
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "punct" + std::to_string(l);
    // Same budgeting as inference: only layer 0 sees the look-ahead.
    const Tensor mask = BandMask(n, l == 0 ? cfg.l_future : 0);
    const int n1 = TapeLn(c, p + ".ln1", x);
    x = t.add(x, TapeAttention(c, p + ".att", n1, n1, cfg.n_heads, &mask));
    x = t.add(x, TapeFfn(c, p + ".ffn", TapeLn(c, p + ".ln2", x)));
  }
  const int y = TapeLn(c, "punct.ln_out", x);

  std::vector<int> punct_labels(n), disf_labels(n);
  for (int i = 0; i < n; ++i) {
    punct_labels[i] = static_cast<int>(RulePunctLabel(tokens, i));
    disf_labels[i] = static_cast<int>(RuleDisfLabel(tokens[i]));
  }
  const int lp =
      t.ce_loss(t.linear(y, c.P("punct.head.w"), c.P("punct.head.b")),
                punct_labels, 0.0f);
  const int ld =
      t.ce_loss(t.linear(y, c.P("punct.disf.w"), c.P("punct.disf.b")),
                disf_labels, 0.0f);
  const int loss = t.weighted_sum({lp, ld}, {1.0f, 1.0f});
  const double v = t.val(loss)[0];
  if (!std::isfinite(v)) DumpAndThrow("punct", pm.params);
  t.backward(loss);
  opt.Step(c);
  return v;
}

// Trigger tokens are boosted so each label class appears often enough to
// learn from short training runs.
std::vector<int> SamplePunctTokens(Rng& rng, int vocab) {
  Check(vocab > kFillerToken + 1, "train: punct vocab too small");
  const int n = 8 + rng.uniform_int(13);
  std::vector<int> tokens(n);
  for (int i = 0; i < n; ++i) {
    if (rng.uniform() < 0.35)
      tokens[i] = 1 + rng.uniform_int(kFillerToken);
    else
      tokens[i] = kFillerToken + 1 +
                  rng.uniform_int(vocab - kFillerToken - 1);
  }
  return tokens;
}

}  // namespace

// --- dataset ---------------------------------------------------------------

std::vector<ToyRecord> MakeToyDataset(int n, int len_lo, int len_hi, int vocab,
                                      uint64_t seed) {
  Check(n >= 0 && len_lo >= 1 && len_hi >= len_lo && vocab >= 1,
        "make_toy_dataset: bad arguments");
  Rng rng(seed);
  std::vector<ToyRecord> out(n);
  for (auto& r : out) {
    const int len = len_lo + rng.uniform_int(len_hi - len_lo + 1);
    r.tokens.resize(len);
    int prev = -1;
    for (int& tok : r.tokens) {
      // No immediate repeats: two adjacent renderings of the same token
      // template have no acoustic boundary between them, which makes the
      // token count of the utterance genuinely ambiguous.
      do {
        tok = rng.uniform_int(vocab);
      } while (vocab > 1 && tok == prev);
      prev = tok;
    }
    r.seed = rng.next_u64();
  }
  return out;
}

void SaveDatasetJsonl(const std::string& path,
                      const std::vector<ToyRecord>& records) {
  std::ofstream f(path, std::ios::binary);
  Check(f.good(), "dataset: cannot open " + path + " for writing");
  for (const auto& r : records) {
    nlohmann::json j;
    j["tokens"] = r.tokens;
    j["seed"] = r.seed;
    f << j.dump() << "\n";
  }
  Check(f.good(), "dataset: write failed for " + path);
}

std::vector<ToyRecord> LoadDatasetJsonl(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  Check(f.good(), "dataset: cannot open " + path);
  std::vector<ToyRecord> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    ToyRecord r;
    r.tokens = j.at("tokens").get<std::vector<int>>();
    r.seed = j.at("seed").get<uint64_t>();
    out.push_back(std::move(r));
  }
  return out;
}

// --- labeling rules --------------------------------------------------------

PunctClass RulePunctLabel(const std::vector<int>& tokens, size_t i) {
  if (i + 1 < tokens.size()) {
    if (tokens[i + 1] == kPeriodTrigger) return PunctClass::kPeriod;
    if (tokens[i + 1] == kQuestionTrigger) return PunctClass::kQuestion;
    if (tokens[i + 1] == kEnumTrigger) return PunctClass::kEnumComma;
  }
  if (i + 2 < tokens.size() && tokens[i + 2] == kCommaTrigger)
    return PunctClass::kComma;
  return PunctClass::kNone;
}

DisfluencyTag RuleDisfLabel(int token) {
  return token == kFillerToken ? DisfluencyTag::kRemove
                               : DisfluencyTag::kKeep;
}

// --- evaluation ------------------------------------------------------------

AsrEval EvaluateAsr(const AsrModel& m, const std::vector<ToyRecord>& records,
                    const SynthConfig& synth, LinearExec& exec,
                    const HotwordList& hotwords) {
  Check(!records.empty(), "evaluate: no records");
  const TokenBank bank = MakeTokenBank(synth);
  const Tensor hw_emb = EmbedHotwords(m, hotwords);
  AsrEval ev;
  double ter_sum = 0.0, aas_sum = 0.0;
  for (const auto& rec : records) {
    Rng synth_rng(rec.seed);
    const SynthResult sr = SynthGenerate(rec.tokens, synth_rng, synth, bank);
    FeatureFrames ff = sr.feats;
    if (m.cfg.lfr_m > 1 || m.cfg.lfr_n > 1)
      ff = LfrStack(ff, m.cfg.lfr_m, m.cfg.lfr_n);

    std::vector<int> hyp;
    int ref_spans = 0;
    for (const AlignSpan& s : sr.align)
      if (s.token_id != kSilenceId) ++ref_spans;
    if (ff.frames.dim(0) > 0) {
      const Tensor enc = Encode(m, ff.frames, exec);
      const Tensor alphas = PredictAlphas(m, enc, exec);
      const cif::Result cr =
          cif::integrate(enc, alphas, m.cfg.cif_threshold, 0);
      if (cr.n_tokens > 0) {
        hyp = GreedyDecode(DecodeNar(m, cr.embeddings, enc, hw_emb, exec));
        const Tensor a2 = UpsampleAlphas(m, enc, exec);
        float amax = 0.0f;
        for (int64_t i = 0; i < a2.numel(); ++i) amax = std::max(amax, a2[i]);
        Check(ff.frame_shift_ms % m.cfg.upsample_rate == 0,
              "evaluate: upsample rate must divide frame shift");
        const TimestampOutput ts = TimestampsFromAlphas(
            a2, cr.n_tokens, ff.frame_shift_ms / m.cfg.upsample_rate,
            m.cfg.silence_frac * amax);
        int pred_spans = 0;
        for (const TokenSpan& s : ts.spans)
          if (s.token_id != kSilenceId) ++pred_spans;
        if (pred_spans == ref_spans && ref_spans > 0) {
          aas_sum += Aas(ts.spans, sr.align, sr.feats.frame_shift_ms);
          ++ev.n_aas;
        }
      }
    }
    ter_sum += ComputeCer(rec.tokens, hyp);
  }
  ev.ter = ter_sum / static_cast<double>(records.size());
  ev.aas_ms = ev.n_aas > 0 ? aas_sum / ev.n_aas : 0.0;
  return ev;
}

// --- training --------------------------------------------------------------

TrainResult TrainToy(const std::vector<ToyRecord>& records,
                     const AsrConfig& asr_cfg, const VadNetConfig& vad_cfg,
                     const PunctConfig& punct_cfg, const TrainConfig& cfg) {
  Check(!records.empty(), "train: no records");
  Check(vad_cfg.feat_dim == asr_cfg.feat_dim,
        "train: vad/asr feature dims must match");
  Check(punct_cfg.vocab >= asr_cfg.vocab,
        "train: punct vocab must cover asr vocab");
  for (const auto& r : records) {
    Check(!r.tokens.empty(), "train: empty record");
    for (int tok : r.tokens)
      Check(tok >= 0 && tok < asr_cfg.vocab, "train: token id out of range");
  }

  Rng init_rng(cfg.seed);
  TrainResult res;
  res.bundle.asr = AsrModel::Init(asr_cfg, init_rng);
  res.bundle.vad = VadModel::Init(vad_cfg, init_rng);
  res.bundle.punct = PunctModel::Init(punct_cfg, init_rng);
  const TokenBank bank = MakeTokenBank(cfg.synth);
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  // Recognizer.
  Adam opt_asr(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  std::vector<int> order(records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt_asr.set_lr(cfg.lr * std::pow(cfg.lr_decay, epoch));
    for (size_t i = 0; i + 1 < order.size(); ++i) {
      const size_t j = i + rng.uniform_int(static_cast<int>(order.size() - i));
      std::swap(order[i], order[j]);
    }
    double loss_sum = 0.0;
    // Fresh synthesis seeds every epoch: the token sequences are the
    // dataset, the rendering is augmentation. Epoch 0 uses the stored
    // seeds so the written-down records are literally trained on.
    for (int idx : order) {
      const uint64_t synth_seed =
          epoch == 0 ? records[idx].seed
                     : records[idx].seed ^ (0x2545f4914f6cdd1dULL * epoch);
      loss_sum += AsrTrainStep(res.bundle.asr, records[idx], synth_seed, bank,
                               cfg, rng, opt_asr);
    }
    FloatExec fexec;
    const AsrEval ev = EvaluateAsr(res.bundle.asr, records, cfg.synth, fexec);
    TrainLogEntry e;
    e.epoch = epoch;
    e.loss = loss_sum / static_cast<double>(records.size());
    e.ter = ev.ter;
    e.aas_ms = ev.aas_ms;
    res.log.push_back(e);
    if (cfg.verbose)
      std::fprintf(stderr,
                   "epoch %d  loss %.4f  ter %.4f  aas %.1f ms (%d)\n",
                   epoch, e.loss, e.ter, e.aas_ms, ev.n_aas);
  }

  // Predictor bias calibration. The CE / boundary-BCE balance leaves a
  // small systematic offset in sum(alpha) that turns into off-by-one
  // token counts at inference. Solving for the scalar pred.out.b that
  // zeroes the mean signed drift over the training data removes it;
  // nothing else moves, so classification is untouched.
  {
    FloatExec fexec;
    AsrModel& m = res.bundle.asr;
    const size_t n_cal = std::min<size_t>(records.size(), 100);
    std::vector<Tensor> bases;  // pre-bias predictor activations, [T x 1]
    std::vector<int> counts;
    for (size_t i = 0; i < n_cal; ++i) {
      // Renderings the optimizer has never seen, so the measured drift is
      // the generalization drift and not the (near-zero) training one.
      Rng synth_rng(records[i].seed ^ 0xca11b8a7e5eed5ULL);
      const SynthResult sr =
          SynthGenerate(records[i].tokens, synth_rng, cfg.synth, bank);
      FeatureFrames ff = sr.feats;
      if (asr_cfg.lfr_m > 1 || asr_cfg.lfr_n > 1)
        ff = LfrStack(ff, asr_cfg.lfr_m, asr_cfg.lfr_n);
      const Tensor enc = Encode(m, ff.frames, fexec);
      const Tensor conv = kernels::relu(
          kernels::conv1d_time(enc, m.P("pred.conv.w"), m.P("pred.conv.b"),
                               asr_cfg.pred_width));
      bases.push_back(
          kernels::linear(conv, m.P("pred.out.w"), m.P("pred.out.b")));
      counts.push_back(static_cast<int>(records[i].tokens.size()));
    }
    auto drift = [&](float db) {
      double s = 0.0;
      for (size_t i = 0; i < bases.size(); ++i) {
        double sum = 0.0;
        for (int64_t j = 0; j < bases[i].numel(); ++j)
          sum += 1.0 / (1.0 + std::exp(-static_cast<double>(bases[i][j] + db)));
        s += sum - counts[i];
      }
      return s / static_cast<double>(bases.size());
    };
    float lo = -0.5f, hi = 0.5f;
    for (int i = 0; i < 8 && drift(lo) > 0.0; ++i) lo *= 2.0f;
    for (int i = 0; i < 8 && drift(hi) < 0.0; ++i) hi *= 2.0f;
    if (drift(lo) <= 0.0 && drift(hi) >= 0.0) {
      for (int i = 0; i < 40; ++i) {
        const float mid = 0.5f * (lo + hi);
        (drift(mid) < 0.0 ? lo : hi) = mid;
      }
      m.params.at("pred.out.b")[0] += 0.5f * (lo + hi);
      if (cfg.verbose)
        std::fprintf(stderr, "predictor bias calibration: %+0.4f\n",
                     0.5f * (lo + hi));
    }
  }

  // VAD scorer: trained on the same utterances re-synthesized with
  // forced silence gaps so both classes actually occur.
  SynthConfig vad_synth = cfg.synth;
  vad_synth.silence_prob = std::max(vad_synth.silence_prob, 0.5f);
  Adam opt_vad(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  for (int epoch = 0; epoch < cfg.vad_epochs; ++epoch) {
    double loss_sum = 0.0;
    int n_used = 0;
    for (const auto& rec : records) {
      if (n_used >= cfg.vad_max_records) break;
      Rng synth_rng(rec.seed ^ 0xdecafbadULL);
      const SynthResult sr =
          SynthGenerate(rec.tokens, synth_rng, vad_synth, bank);
      std::vector<int> labels(sr.feats.frames.dim(0), 0);
      for (const AlignSpan& s : sr.align) {
        if (s.token_id == kSilenceId) continue;
        for (int f = s.start_frame; f < s.end_frame; ++f) labels[f] = 1;
      }
      loss_sum +=
          VadTrainStep(res.bundle.vad, sr.feats.frames, labels, opt_vad);
      ++n_used;
    }
    if (cfg.verbose && n_used > 0)
      std::fprintf(stderr, "vad epoch %d  loss %.4f\n", epoch,
                   loss_sum / n_used);
  }

  // Punctuation model, on rule-labeled synthetic token streams.
  Adam opt_punct(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  for (int epoch = 0; epoch < cfg.punct_epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int s = 0; s < cfg.punct_sequences; ++s)
      loss_sum += PunctTrainStep(
          res.bundle.punct, SamplePunctTokens(rng, punct_cfg.vocab),
          opt_punct);
    if (cfg.verbose && cfg.punct_sequences > 0)
      std::fprintf(stderr, "punct epoch %d  loss %.4f\n", epoch,
                   loss_sum / cfg.punct_sequences);
  }

  return res;
}

}  // namespace tinyasr
