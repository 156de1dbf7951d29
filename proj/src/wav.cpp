// tinyasr/wav.cpp
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

#include "tinyasr/wav.h"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tinyasr {

namespace {

uint32_t ReadU32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t ReadU16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

void PutU16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
}

[[noreturn]] void Fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("wav: " + path + ": " + what);
}

}  // namespace

WavData ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(path, "cannot open file");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    Fail(path, "not a RIFF/WAVE file");

  WavData wav;
  bool have_fmt = false, have_data = false;
  uint16_t channels = 0, bits = 0, format = 0;
  size_t pos = 12;
  // Chunk walk: tolerate extra chunks (LIST, fact, ...) in any order.
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const uint32_t size = ReadU32(bytes.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + size > bytes.size()) Fail(path, "truncated chunk");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) Fail(path, "fmt chunk too small");
      format = ReadU16(bytes.data() + body);
      channels = ReadU16(bytes.data() + body + 2);
      wav.sample_rate = static_cast<int>(ReadU32(bytes.data() + body + 4));
      bits = ReadU16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) Fail(path, "data chunk before fmt chunk");
      if (format != 1) Fail(path, "unsupported encoding (PCM only)");
      if (channels != 1) Fail(path, "unsupported channel count (mono only)");
      if (bits != 16) Fail(path, "unsupported sample width (16-bit only)");
      wav.samples.resize(size / 2);
      for (size_t i = 0; i < wav.samples.size(); ++i) {
        const uint8_t lo = bytes[body + 2 * i], hi = bytes[body + 2 * i + 1];
        wav.samples[i] =
            static_cast<int16_t>(static_cast<uint16_t>(lo | (hi << 8)));
      }
      have_data = true;
    }
    pos = body + size + (size & 1);  // chunks are word-aligned
  }
  if (!have_fmt) Fail(path, "missing fmt chunk");
  if (!have_data) Fail(path, "missing data chunk");
  if (wav.sample_rate <= 0) Fail(path, "invalid sample rate");
  return wav;
}

void WriteWav(const std::string& path, const std::vector<int16_t>& samples,
              int sample_rate) {
  if (sample_rate <= 0) Fail(path, "invalid sample rate");
  const uint32_t data_size = static_cast<uint32_t>(samples.size() * 2);
  std::vector<uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  PutU32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  PutU32(out, 16);
  PutU16(out, 1);  // PCM
  PutU16(out, 1);  // mono
  PutU32(out, static_cast<uint32_t>(sample_rate));
  PutU32(out, static_cast<uint32_t>(sample_rate) * 2);  // byte rate
  PutU16(out, 2);                                       // block align
  PutU16(out, 16);                                      // bits
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  PutU32(out, data_size);
  for (int16_t s : samples) PutU16(out, static_cast<uint16_t>(s));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) Fail(path, "cannot open file for writing");
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) Fail(path, "write failed");
}

}  // namespace tinyasr
