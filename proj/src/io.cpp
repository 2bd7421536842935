// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ctfsep/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ctfsep/wav.hpp"

namespace ctfsep {

namespace {

constexpr char kRirMagic[4] = {'C', 'T', 'F', 'R'};

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(b.data(), 8);
}

std::uint64_t get_le(std::istream& in, int bytes, const char* what) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), bytes);
  if (in.gcount() != bytes) throw FormatError(std::string("rir tensor: truncated ") + what);
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_rir_tensor(const RirTensor& rirs, std::ostream& out) {
  out.write(kRirMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(rirs.mics()));
  put_u32(out, static_cast<std::uint32_t>(rirs.sources()));
  put_u32(out, static_cast<std::uint32_t>(rirs.length()));
  for (Index i = 0; i < rirs.mics(); ++i) {
    for (Index j = 0; j < rirs.sources(); ++j) {
      for (Index n = 0; n < rirs.length(); ++n) put_f64(out, rirs.filter(i, j)(n));
    }
  }
}

RirTensor read_rir_tensor(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kRirMagic, 4) != 0) {
    throw FormatError("rir tensor: bad magic (expected CTFR)");
  }
  const auto mics = static_cast<Index>(get_le(in, 4, "header"));
  const auto sources = static_cast<Index>(get_le(in, 4, "header"));
  const auto length = static_cast<Index>(get_le(in, 4, "header"));
  if (mics < 1 || sources < 1 || length < 1) throw FormatError("rir tensor: empty dimension");
  RirTensor rirs(mics, sources, length);
  for (Index i = 0; i < mics; ++i) {
    for (Index j = 0; j < sources; ++j) {
      for (Index n = 0; n < length; ++n) {
        rirs.filter(i, j)(n) = std::bit_cast<double>(get_le(in, 8, "data"));
      }
    }
  }
  return rirs;
}

void save_rir_tensor(const RirTensor& rirs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  write_rir_tensor(rirs, out);
}

RirTensor load_rir_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return read_rir_tensor(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

RirTensor load_rir_wavs(const std::vector<std::string>& paths) {
  require(!paths.empty(), "load_rir_wavs: no files");
  std::vector<MultichannelSignal> per_source;
  for (const auto& p : paths) per_source.push_back(load_wav(p));
  const Index mics = per_source.front().channels();
  const Index length = per_source.front().length();
  RirTensor rirs(mics, static_cast<Index>(paths.size()), length);
  for (std::size_t j = 0; j < per_source.size(); ++j) {
    const auto& s = per_source[j];
    if (s.channels() != mics || s.length() != length) {
      throw FormatError(paths[j] + ": RIR WAVs must share channel count and length");
    }
    for (Index i = 0; i < mics; ++i) rirs.filter(i, static_cast<Index>(j)) = s.channel(i);
  }
  return rirs;
}

void write_noise_psd(const MatrixXd& psd, std::ostream& out) {
  out << "# noise PSD, rows = frequency bins, columns = mics\n";
  char buf[32];
  for (Index k = 0; k < psd.rows(); ++k) {
    for (Index i = 0; i < psd.cols(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", psd(k, i));
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
}

MatrixXd read_noise_psd(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      if (b == std::string::npos) throw FormatError("noise PSD: empty cell");
      double v = 0.0;
      const char* first = cell.data() + b;
      const char* last = cell.data() + e + 1;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last || !(v >= 0.0)) {
        throw FormatError("noise PSD: bad value '" + cell + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("noise PSD: rows have different column counts");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("noise PSD: no data");
  MatrixXd psd(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index k = 0; k < psd.rows(); ++k) {
    for (Index i = 0; i < psd.cols(); ++i) psd(k, i) = rows[k][i];
  }
  return psd;
}

void save_noise_psd(const MatrixXd& psd, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  write_noise_psd(psd, out);
}

MatrixXd load_noise_psd(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return read_noise_psd(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace ctfsep
