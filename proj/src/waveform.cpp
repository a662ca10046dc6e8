// derevb/waveform.cpp

// Copyright 2026  The derevb authors
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

#include "derevb/waveform.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "derevb/errors.hpp"

namespace derevb {

void Waveform::validate() const {
  if (sample_rate_hz <= 0)
    throw InvalidInput("waveform: sample_rate_hz must be positive");
  for (double s : samples)
    if (!std::isfinite(s))
      throw InvalidInput("waveform: non-finite sample");
}

double energy(const Waveform& w) {
  double e = 0.0;
  for (double s : w.samples) e += s * s;
  return e;
}

namespace {

constexpr uint16_t kFmtPcm = 1;
constexpr uint16_t kFmtIeeeFloat = 3;

template <typename T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw InvalidInput("wav: truncated file");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("wav: cannot open '" + path + "'");

  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0)
    throw InvalidInput("wav: '" + path + "' is not a RIFF file");
  read_le<uint32_t>(in);  // riff size
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0)
    throw InvalidInput("wav: '" + path + "' is not a WAVE file");

  uint16_t fmt_code = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  std::vector<char> data;

  while (in.peek() != EOF) {
    in.read(tag, 4);
    if (!in) break;
    uint32_t chunk_size = read_le<uint32_t>(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      fmt_code = read_le<uint16_t>(in);
      channels = read_le<uint16_t>(in);
      rate = read_le<uint32_t>(in);
      read_le<uint32_t>(in);  // byte rate
      read_le<uint16_t>(in);  // block align
      bits = read_le<uint16_t>(in);
      if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data.resize(chunk_size);
      in.read(data.data(), chunk_size);
      if (!in) throw InvalidInput("wav: truncated data chunk in '" + path + "'");
    } else {
      in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  if (!have_fmt) throw InvalidInput("wav: missing fmt chunk in '" + path + "'");
  if (channels != 1)
    throw InvalidInput("wav: '" + path + "' has " + std::to_string(channels) +
                       " channels; only mono input is supported");

  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  if (fmt_code == kFmtPcm && bits == 16) {
    const std::size_t n = data.size() / 2;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      int16_t v = static_cast<int16_t>(
          static_cast<uint16_t>(static_cast<unsigned char>(data[2 * i])) |
          (static_cast<uint16_t>(static_cast<unsigned char>(data[2 * i + 1]))
           << 8));
      w.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (fmt_code == kFmtIeeeFloat && bits == 32) {
    const std::size_t n = data.size() / 4;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      uint32_t u = 0;
      for (int b = 0; b < 4; ++b)
        u |= static_cast<uint32_t>(static_cast<unsigned char>(data[4 * i + b]))
             << (8 * b);
      float f;
      std::memcpy(&f, &u, 4);
      w.samples[i] = static_cast<double>(f);
    }
  } else {
    throw InvalidInput("wav: '" + path + "' uses unsupported format (code " +
                       std::to_string(fmt_code) + ", " + std::to_string(bits) +
                       " bits); expected 16-bit PCM or 32-bit float");
  }
  w.validate();
  return w;
}

void write_wav(const std::string& path, const Waveform& w, WavFormat format) {
  w.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("wav: cannot write '" + path + "'");

  const uint16_t bits = format == WavFormat::kPcm16 ? 16 : 32;
  const uint16_t code = format == WavFormat::kPcm16 ? kFmtPcm : kFmtIeeeFloat;
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  const uint32_t data_bytes = n * bits / 8;
  const bool fact = code == kFmtIeeeFloat;
  const uint32_t riff_size = 4 + (8 + 16) + (fact ? 8 + 4 : 0) + 8 + data_bytes;

  out.write("RIFF", 4);
  write_le<uint32_t>(out, riff_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_le<uint32_t>(out, 16);
  write_le<uint16_t>(out, code);
  write_le<uint16_t>(out, 1);  // mono
  write_le<uint32_t>(out, static_cast<uint32_t>(w.sample_rate_hz));
  write_le<uint32_t>(out,
                     static_cast<uint32_t>(w.sample_rate_hz) * bits / 8);
  write_le<uint16_t>(out, bits / 8);
  write_le<uint16_t>(out, bits);
  if (fact) {
    out.write("fact", 4);
    write_le<uint32_t>(out, 4);
    write_le<uint32_t>(out, n);
  }
  out.write("data", 4);
  write_le<uint32_t>(out, data_bytes);

  if (format == WavFormat::kPcm16) {
    for (double s : w.samples) {
      double c = s < -1.0 ? -1.0 : (s > 1.0 ? 1.0 : s);
      auto v = static_cast<int16_t>(std::lrint(c * 32767.0));
      write_le<uint16_t>(out, static_cast<uint16_t>(v));
    }
  } else {
    for (double s : w.samples) {
      float f = static_cast<float>(s);
      uint32_t u;
      std::memcpy(&u, &f, 4);
      write_le<uint32_t>(out, u);
    }
  }
  if (!out) throw InvalidInput("wav: write failed for '" + path + "'");
}

}  // namespace derevb
