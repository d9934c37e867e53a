#pragma once

#include <filesystem>

#include "xrprobe/video_beacon.hpp"

namespace xrprobe {

// Binary PGM (P5), maxval 255.
void write_pgm(const std::filesystem::path& path, const PixelBuffer& frame);

// Throws IoError when the file is missing or not a P5/255 image.
PixelBuffer read_pgm(const std::filesystem::path& path);

}  // namespace xrprobe
