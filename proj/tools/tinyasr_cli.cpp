// tinyasr_cli.cpp
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
//
// Command-line front end: toy training, transcription, VAD, streaming
// punctuation, mixed-precision planning, and RTF benchmarking.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tinyasr/contextual.h"
#include "tinyasr/features.h"
#include "tinyasr/model_io.h"
#include "tinyasr/pipeline.h"
#include "tinyasr/punct.h"
#include "tinyasr/quant.h"
#include "tinyasr/train.h"
#include "tinyasr/vad.h"
#include "tinyasr/wav.h"

namespace fs = std::filesystem;
using namespace tinyasr;  // NOLINT

namespace {

Tensor FbankFor(const WavData& wav, int n_mels) {
  FbankConfig fb;
  fb.n_mels = n_mels;
  return Fbank(wav.samples, wav.sample_rate, fb).frames;
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  Check(f.good(), "cannot open " + path + " for writing");
  f << text;
  Check(f.good(), "write failed for " + path);
}

// Minimal glob over the final path component: '*' matches any run, '?'
// one character. Directories in the prefix are taken literally.
bool MatchGlob(const std::string& pat, const std::string& name) {
  size_t p = 0, n = 0, star = std::string::npos, mark = 0;
  while (n < name.size()) {
    if (p < pat.size() && (pat[p] == '?' || pat[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pat.size() && pat[p] == '*') {
      star = p++;
      mark = n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++mark;
    } else {
      return false;
    }
  }
  while (p < pat.size() && pat[p] == '*') ++p;
  return p == pat.size();
}

std::vector<std::string> ExpandGlob(const std::string& pattern) {
  const fs::path pat(pattern);
  const fs::path dir =
      pat.has_parent_path() ? pat.parent_path() : fs::path(".");
  const std::string leaf = pat.filename().string();
  std::vector<std::string> out;
  if (leaf.find('*') == std::string::npos &&
      leaf.find('?') == std::string::npos) {
    out.push_back(pattern);
    return out;
  }
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && MatchGlob(leaf, e.path().filename().string()))
      out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> ReadTokenFile(const std::string& path) {
  std::ifstream f(path);
  Check(f.good(), "cannot open " + path);
  std::vector<int> tokens;
  int tok;
  while (f >> tok) tokens.push_back(tok);
  return tokens;
}

std::string RenderCommits(const std::vector<CommittedToken>& commits) {
  std::vector<RenderItem> items;
  items.reserve(commits.size());
  for (const auto& c : commits)
    items.push_back({std::to_string(c.token), c.punct, c.tag});
  return RenderText(items);
}

const char* PrecisionName(LayerPrecision p) {
  return p == LayerPrecision::kInt8 ? "int8" : "f32";
}

int g_status = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tinyasr: toy Paraformer speech pipeline"};
  app.require_subcommand(1);

  // --- gen-data -----------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "generate a toy token dataset");
  std::string gen_out;
  int gen_n = 64, gen_lo = 3, gen_hi = 8, gen_vocab = 32;
  uint64_t gen_seed = 1;
  gen->add_option("--out", gen_out, "output .jsonl path")->required();
  gen->add_option("--n", gen_n, "number of utterances");
  gen->add_option("--len-lo", gen_lo, "min tokens per utterance");
  gen->add_option("--len-hi", gen_hi, "max tokens per utterance");
  gen->add_option("--vocab", gen_vocab, "vocabulary size");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->callback([&] {
    SaveDatasetJsonl(gen_out,
                     MakeToyDataset(gen_n, gen_lo, gen_hi, gen_vocab, gen_seed));
    std::printf("wrote %d records to %s\n", gen_n, gen_out.c_str());
  });

  // --- synth-wav ----------------------------------------------------------
  auto* synth = app.add_subcommand(
      "synth-wav", "render a dataset record (or token list) as a WAV file");
  std::string sy_data, sy_out, sy_tokens;
  int sy_index = 0;
  uint64_t sy_seed = 0;
  synth->add_option("--data", sy_data, "dataset .jsonl");
  synth->add_option("--index", sy_index, "record index within --data");
  synth->add_option("--tokens", sy_tokens,
                    "space-separated token ids (alternative to --data)");
  synth->add_option("--seed", sy_seed, "synthesis seed for --tokens");
  synth->add_option("--out", sy_out, "output .wav path")->required();
  synth->callback([&] {
    ToyRecord rec;
    if (!sy_data.empty()) {
      const auto recs = LoadDatasetJsonl(sy_data);
      Check(sy_index >= 0 && sy_index < static_cast<int>(recs.size()),
            "synth-wav: record index out of range");
      rec = recs[sy_index];
    } else {
      std::istringstream ss(sy_tokens);
      int tok;
      while (ss >> tok) rec.tokens.push_back(tok);
      rec.seed = sy_seed;
      Check(!rec.tokens.empty(), "synth-wav: need --data or --tokens");
    }
    SynthConfig synth_cfg;
    const TokenBank bank = MakeTokenBank(synth_cfg);
    Rng rng(rec.seed);
    const SynthResult sr = SynthGenerate(rec.tokens, rng, synth_cfg, bank);
    const auto pcm = RenderAudio(sr.align, sr.lambdas, synth_cfg, bank);
    WriteWav(sy_out, pcm, synth_cfg.sample_rate);
    std::printf("wrote %zu samples to %s\n", pcm.size(), sy_out.c_str());
  });

  // --- train-toy ----------------------------------------------------------
  auto* train = app.add_subcommand("train-toy", "train a toy model bundle");
  std::string tr_data, tr_out;
  uint64_t tr_seed = 1;
  TrainConfig tr_cfg;
  AsrConfig tr_asr;
  train->add_option("--data", tr_data, "training dataset .jsonl")->required();
  train->add_option("--out", tr_out, "output model directory")->required();
  train->add_option("--seed", tr_seed, "training seed");
  train->add_option("--epochs", tr_cfg.epochs, "recognizer epochs");
  train->add_option("--lr", tr_cfg.lr, "learning rate");
  train->add_option("--vocab", tr_asr.vocab, "vocabulary size");
  train->add_option("--d-model", tr_asr.d_model, "model width");
  train->add_flag("--verbose", tr_cfg.verbose, "per-epoch log to stderr");
  train->callback([&] {
    const auto recs = LoadDatasetJsonl(tr_data);
    tr_cfg.seed = tr_seed;
    tr_cfg.synth.vocab = tr_asr.vocab;
    VadNetConfig vad_cfg;
    vad_cfg.feat_dim = tr_asr.feat_dim;
    PunctConfig punct_cfg;
    punct_cfg.vocab = std::max(punct_cfg.vocab, tr_asr.vocab);
    const TrainResult res =
        TrainToy(recs, tr_asr, vad_cfg, punct_cfg, tr_cfg);
    fs::create_directories(tr_out);
    SaveBundle(res.bundle, tr_out);
    const TrainLogEntry& last = res.log.back();
    std::printf("trained %zu records, %d epochs: loss %.4f ter %.4f\n",
                recs.size(), tr_cfg.epochs, last.loss, last.ter);
    std::printf("saved bundle to %s\n", tr_out.c_str());
  });

  // --- transcribe -----------------------------------------------------------
  auto* tx = app.add_subcommand("transcribe", "transcribe a WAV file");
  std::string tx_model, tx_wav, tx_hot, tx_prec = "f32", tx_out;
  double tx_sqnr = 30.0;
  tx->add_option("--model", tx_model, "model bundle directory")->required();
  tx->add_option("--wav", tx_wav, "input .wav")->required();
  tx->add_option("--hotwords", tx_hot, "hotword file (token ids per line)");
  tx->add_option("--precision", tx_prec, "f32 | int8 | amp");
  tx->add_option("--sqnr-db", tx_sqnr, "AMP SQNR threshold (dB)");
  tx->add_option("--out", tx_out, "output transcript .json")->required();
  tx->callback([&] {
    const ModelBundle bundle = LoadBundle(tx_model);
    const WavData wav = ReadWav(tx_wav);
    const HotwordList hotwords =
        tx_hot.empty() ? HotwordList{} : LoadHotwordFile(tx_hot);
    const Tensor calib = FbankFor(wav, bundle.asr.cfg.feat_dim);
    const auto exec =
        MakeExec(bundle.asr, ParsePrecision(tx_prec), calib, tx_sqnr);
    const Transcript t = RunPipeline(wav.samples, wav.sample_rate, bundle,
                                     hotwords, VadConfig{}, *exec);
    WriteFile(tx_out, TranscriptToJson(t) + "\n");
    std::printf("wrote %zu segment(s) to %s\n", t.segments.size(),
                tx_out.c_str());
  });

  // --- vad ----------------------------------------------------------------
  auto* vad = app.add_subcommand("vad", "segment a WAV file");
  std::string vd_model, vd_wav;
  vad->add_option("--model", vd_model, "model bundle directory")->required();
  vad->add_option("--wav", vd_wav, "input .wav")->required();
  vad->callback([&] {
    const ModelBundle bundle = LoadBundle(vd_model);
    const WavData wav = ReadWav(vd_wav);
    const Tensor feats = FbankFor(wav, bundle.vad.cfg.feat_dim);
    const Tensor probs = ScoreFrames(bundle.vad, feats);
    for (const Segment& s : SegmentProbs(probs, VadConfig{})) {
      nlohmann::json j;
      j["start_ms"] = s.start_ms;
      j["end_ms"] = s.end_ms;
      j["score"] = s.mean_score;
      std::printf("%s\n", j.dump().c_str());
    }
  });

  // --- punctuate ------------------------------------------------------------
  auto* pu = app.add_subcommand("punctuate",
                                "punctuate a token stream (ids from a file)");
  std::string pu_model, pu_input;
  bool pu_streaming = false;
  uint64_t pu_seed = 1;
  pu->add_option("--model", pu_model, "model bundle directory")->required();
  pu->add_option("--input", pu_input, "token id file")->required();
  pu->add_flag("--streaming", pu_streaming,
               "replay the input in random-sized chunks");
  pu->add_option("--seed", pu_seed, "chunking seed for --streaming");
  pu->callback([&] {
    const ModelBundle bundle = LoadBundle(pu_model);
    const std::vector<int> tokens = ReadTokenFile(pu_input);
    PunctStream stream(&bundle.punct);
    std::vector<CommittedToken> all;
    if (pu_streaming) {
      Rng rng(pu_seed);
      size_t pos = 0;
      while (pos < tokens.size()) {
        const size_t take = std::min<size_t>(1 + rng.uniform_int(7),
                                             tokens.size() - pos);
        const std::vector<int> chunk(tokens.begin() + pos,
                                     tokens.begin() + pos + take);
        pos += take;
        const auto committed = stream.Push(chunk);
        if (!committed.empty())
          std::printf("partial: %s\n", RenderCommits(committed).c_str());
        all.insert(all.end(), committed.begin(), committed.end());
      }
    } else {
      const auto committed = stream.Push(tokens);
      all.insert(all.end(), committed.begin(), committed.end());
    }
    const auto tail = stream.Finalize();
    all.insert(all.end(), tail.begin(), tail.end());
    std::printf("%s\n", RenderCommits(all).c_str());
  });

  // --- quantize -------------------------------------------------------------
  auto* qz = app.add_subcommand(
      "quantize", "calibrate a mixed-precision plan for a model");
  std::string qz_model, qz_wav, qz_report;
  double qz_sqnr = 30.0;
  qz->add_option("--model", qz_model, "model bundle directory")->required();
  qz->add_option("--wav", qz_wav, "calibration .wav")->required();
  qz->add_option("--sqnr-db", qz_sqnr, "SQNR threshold (dB)");
  qz->add_option("--report", qz_report, "plan .json output");
  qz->callback([&] {
    const ModelBundle bundle = LoadBundle(qz_model);
    const WavData wav = ReadWav(qz_wav);
    const Tensor calib = FbankFor(wav, bundle.asr.cfg.feat_dim);
    const AmpPlan plan = CalibrateAmp(bundle.asr, calib, qz_sqnr);
    int n_int8 = 0;
    nlohmann::json layers;
    for (const auto& [name, layer] : plan.layers) {
      if (layer.decision == LayerPrecision::kInt8) ++n_int8;
      layers[name] = {{"precision", PrecisionName(layer.decision)},
                      {"sqnr_db", layer.sqnr_db}};
      std::printf("%-16s %-5s %8.2f dB\n", name.c_str(),
                  PrecisionName(layer.decision), layer.sqnr_db);
    }
    std::printf("%d / %zu layers int8 at %.1f dB threshold\n", n_int8,
                plan.layers.size(), qz_sqnr);
    if (!qz_report.empty()) {
      nlohmann::json j;
      j["sqnr_threshold_db"] = qz_sqnr;
      j["layers"] = layers;
      WriteFile(qz_report, j.dump(2) + "\n");
    }
  });

  // --- bench ----------------------------------------------------------------
  auto* be = app.add_subcommand("bench", "pipeline RTF benchmark");
  std::string be_model, be_glob, be_prec = "f32", be_report;
  double be_sqnr = 30.0;
  be->add_option("--model", be_model, "model bundle directory")->required();
  be->add_option("--wavs", be_glob, "wav files (glob)")->required();
  be->add_option("--precision", be_prec, "f32 | int8 | amp");
  be->add_option("--sqnr-db", be_sqnr, "AMP SQNR threshold (dB)");
  be->add_option("--report", be_report, "report .json output")->required();
  be->callback([&] {
    const ModelBundle bundle = LoadBundle(be_model);
    const std::vector<std::string> paths = ExpandGlob(be_glob);
    Check(!paths.empty(), "bench: no files match " + be_glob);
    const BenchReport r = BenchRtf(bundle, paths, ParsePrecision(be_prec),
                                   be_sqnr, VadConfig{});
    nlohmann::json j;
    j["precision"] = be_prec;
    j["files"] = paths;
    j["audio_seconds"] = r.audio_seconds;
    j["wall_seconds"] = r.wall_seconds;
    j["rtf"] = r.rtf;
    j["stage_seconds"] = r.stage_seconds;
    WriteFile(be_report, j.dump(2) + "\n");
    std::printf("%zu file(s), %.2f s audio, %.3f s wall, rtf %.4f (%s)\n",
                paths.size(), r.audio_seconds, r.wall_seconds, r.rtf,
                be_prec.c_str());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return g_status;
}
