// tinyasr/quant.cpp
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

#include "tinyasr/quant.h"

#include <algorithm>
#include <cmath>

#include "tinyasr/simd.h"

namespace tinyasr {

namespace {

int8_t QuantizeOne(float v, float inv_scale) {
  // Round half away from zero without a libm call; this sits on the hot
  // path of every quantized matmul (activations are re-quantized per row).
  const float t = v * inv_scale;
  const int q = static_cast<int>(t + (t >= 0.0f ? 0.5f : -0.5f));
  return static_cast<int8_t>(std::clamp(q, -127, 127));
}

// Quantize one f32 row into int8 with a symmetric max-abs scale.
float QuantizeRow(const float* src, int8_t* dst, int n) {
  float max_abs = 0.0f;
  bool bad = false;
  for (int i = 0; i < n; ++i) {
    // fabs(v) <= FLT_MAX is false for NaN and +/-inf; branch-free so the
    // compiler can vectorize the scan.
    const float a = std::fabs(src[i]);
    bad |= !(a <= std::numeric_limits<float>::max());
    max_abs = std::max(max_abs, a);
  }
  Check(!bad, "quantize: non-finite value");
  const float scale = max_abs > 0.0f ? max_abs / 127.0f : 1.0f;
  const float inv = 1.0f / scale;
  for (int i = 0; i < n; ++i) dst[i] = QuantizeOne(src[i], inv);
  return scale;
}

}  // namespace

QuantTensor QuantizeInt8(const Tensor& w) {
  Check(w.rank() == 2, "quantize: rank-2 weights expected");
  QuantTensor q;
  q.rows = w.dim(0);
  q.cols = w.dim(1);
  q.qdata.resize(static_cast<size_t>(q.rows) * q.cols);
  q.scales.resize(static_cast<size_t>(q.rows));
  for (int r = 0; r < q.rows; ++r)
    q.scales[static_cast<size_t>(r)] =
        QuantizeRow(w.data() + static_cast<size_t>(r) * q.cols,
                    q.qdata.data() + static_cast<size_t>(r) * q.cols, q.cols);
  return q;
}

Tensor Dequantize(const QuantTensor& qw) {
  Tensor w({qw.rows, qw.cols});
  for (int r = 0; r < qw.rows; ++r)
    for (int c = 0; c < qw.cols; ++c)
      w.at(r, c) = qw.scales[static_cast<size_t>(r)] *
                   qw.qdata[static_cast<size_t>(r) * qw.cols + c];
  return w;
}

Tensor QMatmul(const Tensor& x, const QuantTensor& qw) {
  Check(x.rank() == 2 && x.dim(1) == qw.cols, "qmatmul: shape mismatch");
  const int n = x.dim(0), k = qw.cols, out = qw.rows;
  Tensor y({n, out});
  if (n == 0) return y;

  // Overflow: |a*b| <= 127*127 = 16129 per term, so the int32 accumulator
  // is exact for k up to 2^31 / 16129 ~ 133k input features -- far above
  // anything this model uses.
  std::vector<int8_t> qx(static_cast<size_t>(n) * k);
  std::vector<float> sx(static_cast<size_t>(n));
  for (int r = 0; r < n; ++r)
    sx[static_cast<size_t>(r)] =
        QuantizeRow(x.data() + static_cast<size_t>(r) * k,
                    qx.data() + static_cast<size_t>(r) * k, k);

  std::vector<int32_t> acc(static_cast<size_t>(n) * out);
  simd::gemm_s8_nt(qx.data(), qw.qdata.data(), acc.data(), n, out, k);

  for (int r = 0; r < n; ++r)
    for (int c = 0; c < out; ++c)
      y.at(r, c) = static_cast<float>(acc[static_cast<size_t>(r) * out + c]) *
                   sx[static_cast<size_t>(r)] * qw.scales[static_cast<size_t>(c)];
  return y;
}

AmpPlan AllInt8Plan(const AsrModel& m) {
  AmpPlan plan;
  for (const std::string& name : m.LinearLayerNames())
    plan.layers[name] = {LayerPrecision::kInt8, 0.0};
  return plan;
}

AmpPlan AllFloatPlan(const AsrModel& m) {
  AmpPlan plan;
  for (const std::string& name : m.LinearLayerNames())
    plan.layers[name] = {LayerPrecision::kFloat32,
                         std::numeric_limits<double>::infinity()};
  return plan;
}

namespace {

// Executes in float while accumulating, per layer, the signal and
// quantization-noise energies needed for SQNR.
class CalibrationExec : public LinearExec {
 public:
  Tensor Apply(const std::string& name, const Tensor& x, const Tensor& w,
               const Tensor& b) override {
    const Tensor y_f = float_.Apply(name, x, w, b);
    Tensor y_q = QMatmul(x, QuantizeInt8(w));
    if (b.numel() != 0)
      for (int r = 0; r < y_q.dim(0); ++r)
        for (int c = 0; c < y_q.dim(1); ++c) y_q.at(r, c) += b[c];
    Stats& s = stats_[name];
    for (int64_t i = 0; i < y_f.numel(); ++i) {
      const double v = y_f[i], e = static_cast<double>(y_f[i]) - y_q[i];
      s.signal += v * v;
      s.noise += e * e;
    }
    return y_f;
  }

  struct Stats {
    double signal = 0.0;
    double noise = 0.0;
  };
  const std::map<std::string, Stats>& stats() const { return stats_; }

 private:
  FloatExec float_;
  std::map<std::string, Stats> stats_;
};

}  // namespace

AmpPlan AmpSelect(const AsrModel& m,
                  const std::function<void(LinearExec&)>& forward,
                  double sqnr_threshold_db) {
  CalibrationExec calib;
  forward(calib);
  AmpPlan plan;
  for (const std::string& name : m.LinearLayerNames()) {
    auto it = calib.stats().find(name);
    Check(it != calib.stats().end(),
          "amp: calibration pass did not exercise layer " + name);
    const double sqnr =
        it->second.noise > 0.0
            ? 10.0 * std::log10(it->second.signal / it->second.noise)
            : std::numeric_limits<double>::infinity();
    plan.layers[name] = {sqnr >= sqnr_threshold_db ? LayerPrecision::kInt8
                                                   : LayerPrecision::kFloat32,
                         sqnr};
  }
  return plan;
}

QuantExec::QuantExec(const AsrModel& m, const AmpPlan& plan) {
  for (const auto& [name, layer] : plan.layers) {
    if (layer.decision != LayerPrecision::kInt8) continue;
    // Projection layers are named after their weight tensor; layers with a
    // bias use the layer name plus a ".w" suffix.
    const bool direct = m.params.count(name) != 0;
    qweights_[name] = QuantizeInt8(direct ? m.P(name) : m.P(name + ".w"));
  }
}

Tensor QuantExec::Apply(const std::string& name, const Tensor& x,
                        const Tensor& w, const Tensor& b) {
  auto it = qweights_.find(name);
  if (it == qweights_.end()) return fallback_.Apply(name, x, w, b);
  Tensor y = QMatmul(x, it->second);
  if (b.numel() != 0)
    for (int r = 0; r < y.dim(0); ++r)
      for (int c = 0; c < y.dim(1); ++c) y.at(r, c) += b[c];
  return y;
}

}  // namespace tinyasr
