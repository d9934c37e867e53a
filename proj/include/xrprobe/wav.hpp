#pragma once

#include <filesystem>

#include "xrprobe/audio_beacon.hpp"

namespace xrprobe {

// RIFF/WAVE, PCM format 1, mono, 16-bit little-endian.
void write_wav(const std::filesystem::path& path, const PcmBuffer& pcm);

// Throws IoError on anything other than mono 16-bit PCM.
PcmBuffer read_wav(const std::filesystem::path& path);

}  // namespace xrprobe
