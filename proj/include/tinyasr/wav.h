// tinyasr/wav.h
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

#ifndef TINYASR_WAV_H_
#define TINYASR_WAV_H_

// Minimal RIFF/WAVE I/O. Only PCM 16-bit mono little-endian is accepted;
// anything else is rejected with a descriptive error rather than being
// resampled or converted behind the caller's back.

#include <cstdint>
#include <string>
#include <vector>

namespace tinyasr {

struct WavData {
  std::vector<int16_t> samples;
  int sample_rate = 0;
};

// Throws std::runtime_error on missing files, malformed headers, or
// unsupported encodings (compressed, multi-channel, non-16-bit).
WavData ReadWav(const std::string& path);

// Writes a canonical 44-byte-header PCM 16-bit mono file.
void WriteWav(const std::string& path, const std::vector<int16_t>& samples,
              int sample_rate);

}  // namespace tinyasr

#endif  // TINYASR_WAV_H_
