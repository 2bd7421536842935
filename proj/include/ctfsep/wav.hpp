// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <iosfwd>
#include <string>

#include "ctfsep/signal.hpp"

namespace ctfsep {

enum class WavFormat { pcm16, float32 };

/// Reads a RIFF WAVE file (16-bit PCM or 32-bit IEEE float, any channel
/// count). PCM samples are scaled to [-1, 1). Throws FormatError.
MultichannelSignal load_wav(const std::string& path);
MultichannelSignal read_wav(std::istream& in);

/// PCM output is clipped to the 16-bit range.
void save_wav(const MultichannelSignal& signal, const std::string& path,
              WavFormat format = WavFormat::float32);
void write_wav(const MultichannelSignal& signal, std::ostream& out,
               WavFormat format = WavFormat::float32);

}  // namespace ctfsep
