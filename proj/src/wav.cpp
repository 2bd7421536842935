// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ctfsep/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace ctfsep {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                              static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b.data(), 4);
}

void put16(std::ostream& out, std::uint16_t v) {
  const std::array<char, 2> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF)};
  out.write(b.data(), 2);
}

void read_exact(std::istream& in, unsigned char* dst, std::size_t n, const char* what) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw FormatError(std::string("wav: truncated ") + what);
  }
}

}  // namespace

MultichannelSignal read_wav(std::istream& in) {
  std::array<unsigned char, 12> riff{};
  read_exact(in, riff.data(), riff.size(), "RIFF header");
  if (std::memcmp(riff.data(), "RIFF", 4) != 0 || std::memcmp(riff.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("wav: not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::vector<unsigned char> data;
  bool have_data = false;

  while (!have_data) {
    std::array<unsigned char, 8> head{};
    in.read(reinterpret_cast<char*>(head.data()), 8);
    if (in.gcount() != 8) break;
    const std::uint32_t size = le32(head.data() + 4);
    if (std::memcmp(head.data(), "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("wav: fmt chunk too short");
      std::vector<unsigned char> fmt(size);
      read_exact(in, fmt.data(), size, "fmt chunk");
      format = le16(fmt.data());
      channels = le16(fmt.data() + 2);
      rate = le32(fmt.data() + 4);
      bits = le16(fmt.data() + 14);
      if (format == kFormatExtensible) {
        if (size < 26) throw FormatError("wav: extensible fmt chunk too short");
        format = le16(fmt.data() + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(head.data(), "data", 4) == 0) {
      if (!have_fmt) throw FormatError("wav: data chunk before fmt chunk");
      data.resize(size);
      read_exact(in, data.data(), size, "data chunk");
      have_data = true;
    } else {
      in.ignore(size);
    }
    if (size % 2 == 1 && !have_data) in.ignore(1);
  }

  if (!have_fmt) throw FormatError("wav: missing fmt chunk");
  if (!have_data) throw FormatError("wav: missing data chunk");
  if (channels == 0) throw FormatError("wav: zero channels");
  if (rate == 0) throw FormatError("wav: zero sample rate");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw FormatError("wav: only 16-bit PCM and 32-bit float are supported");
  }

  const std::size_t width = bits / 8;
  const std::size_t frames = data.size() / (width * channels);
  MatrixXd samples(channels, static_cast<Index>(frames));
  const unsigned char* p = data.data();
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::uint16_t c = 0; c < channels; ++c, p += width) {
      if (pcm16) {
        samples(c, static_cast<Index>(t)) = static_cast<std::int16_t>(le16(p)) / 32768.0;
      } else {
        samples(c, static_cast<Index>(t)) = std::bit_cast<float>(le32(p));
      }
    }
  }
  return MultichannelSignal(std::move(samples), static_cast<int>(rate));
}

MultichannelSignal load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return read_wav(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_wav(const MultichannelSignal& signal, std::ostream& out, WavFormat format) {
  const auto channels = static_cast<std::uint16_t>(signal.channels());
  const std::uint16_t bits = format == WavFormat::pcm16 ? 16 : 32;
  const std::uint32_t width = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(signal.length() * channels * width);
  const auto rate = static_cast<std::uint32_t>(signal.sample_rate());

  out.write("RIFF", 4);
  put32(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put32(out, 16);
  put16(out, format == WavFormat::pcm16 ? kFormatPcm : kFormatFloat);
  put16(out, channels);
  put32(out, rate);
  put32(out, rate * channels * width);
  put16(out, static_cast<std::uint16_t>(channels * width));
  put16(out, bits);
  out.write("data", 4);
  put32(out, data_size);
  for (Index t = 0; t < signal.length(); ++t) {
    for (Index c = 0; c < signal.channels(); ++c) {
      const double v = signal.samples()(c, t);
      if (format == WavFormat::pcm16) {
        const double q = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      } else {
        put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      }
    }
  }
}

void save_wav(const MultichannelSignal& signal, const std::string& path, WavFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  write_wav(signal, out, format);
  if (!out) throw FormatError("write failed: " + path);
}

}  // namespace ctfsep
