// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ctfsep/ctf.hpp"
#include "ctfsep/types.hpp"

namespace ctfsep {

/// RIR tensor file: "CTFR", then uint32 I, J, L, then I*J*L float64 values
/// with n fastest, then j, then i. Everything little-endian.
void write_rir_tensor(const RirTensor& rirs, std::ostream& out);
RirTensor read_rir_tensor(std::istream& in);
void save_rir_tensor(const RirTensor& rirs, const std::string& path);
RirTensor load_rir_tensor(const std::string& path);

/// One multichannel WAV per source, channel i holding a^{i,j}.
RirTensor load_rir_wavs(const std::vector<std::string>& paths);

/// Noise PSD CSV: one row per frequency bin, one column per mic. Lines that
/// start with '#' are ignored.
void write_noise_psd(const MatrixXd& psd, std::ostream& out);
MatrixXd read_noise_psd(std::istream& in);
void save_noise_psd(const MatrixXd& psd, const std::string& path);
MatrixXd load_noise_psd(const std::string& path);

}  // namespace ctfsep
