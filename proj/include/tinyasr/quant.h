// tinyasr/quant.h
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

#ifndef TINYASR_QUANT_H_
#define TINYASR_QUANT_H_

// Quantized inference: symmetric per-output-channel INT8 weights, dynamic
// per-row activation quantization, and SQNR-based automatic mixed
// precision (AMP) selection of which linear layers run in INT8.

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "tinyasr/paraformer.h"
#include "tinyasr/tensor.h"

namespace tinyasr {

struct QuantTensor {
  int rows = 0;                // output channels
  int cols = 0;                // input features
  std::vector<int8_t> qdata;   // row-major [rows x cols], |q| <= 127
  std::vector<float> scales;   // per output channel, positive
};

// Per-output-channel scale = max|row| / 127 (1.0 for an all-zero row);
// q = round(w / scale), half away from zero, clamped to [-127, 127].
// Dequantized error is at most scale/2 per element.
QuantTensor QuantizeInt8(const Tensor& w);

Tensor Dequantize(const QuantTensor& qw);

// x [n x in] times qw^T -> [n x rows]. Activations are quantized per row
// with the same symmetric scheme, products accumulate in int32, and the
// result is dequantized with the scale product.
Tensor QMatmul(const Tensor& x, const QuantTensor& qw);

enum class LayerPrecision { kInt8, kFloat32 };

struct AmpLayer {
  LayerPrecision decision = LayerPrecision::kFloat32;
  double sqnr_db = 0.0;
};

// Covers every linear layer of the model exactly once.
struct AmpPlan {
  std::map<std::string, AmpLayer> layers;
};

// All layers INT8 / all layers FLOAT32, with no calibration (sqnr_db is
// +inf for float entries, 0 for int8 entries).
AmpPlan AllInt8Plan(const AsrModel& m);
AmpPlan AllFloatPlan(const AsrModel& m);

// Runs `forward` once with a calibrating executor (float results, so the
// calibration pass is exact), accumulating per-layer SQNR =
// 10*log10(sum||y_f||^2 / sum||y_f - y_q||^2) over all calls; a layer
// goes INT8 iff its SQNR >= sqnr_threshold_db. `forward` must exercise
// every linear layer of the model at least once.
AmpPlan AmpSelect(const AsrModel& m,
                  const std::function<void(LinearExec&)>& forward,
                  double sqnr_threshold_db = 30.0);

// Executor applying an AmpPlan: INT8 layers use pre-quantized weights and
// QMatmul, FLOAT32 layers fall back to plain float execution.
class QuantExec : public LinearExec {
 public:
  QuantExec(const AsrModel& m, const AmpPlan& plan);

  Tensor Apply(const std::string& name, const Tensor& x, const Tensor& w,
               const Tensor& b) override;

  int n_int8() const { return static_cast<int>(qweights_.size()); }

 private:
  std::map<std::string, QuantTensor> qweights_;
  FloatExec fallback_;
};

struct BenchReport {
  double audio_seconds = 0.0;
  double wall_seconds = 0.0;
  double rtf = 0.0;  // wall_seconds / audio_seconds
  std::map<std::string, double> stage_seconds;
};

}  // namespace tinyasr

#endif  // TINYASR_QUANT_H_
