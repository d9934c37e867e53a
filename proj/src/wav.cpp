#include "xrprobe/wav.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <string>

#include "xrprobe/error.hpp"

namespace xrprobe {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8 & 0xFF),
                           static_cast<char>(v >> 16 & 0xFF), static_cast<char>(v >> 24 & 0xFF)};
  out.write(b.data(), 4);
}

void put_u16(std::ostream& out, std::uint16_t v) {
  std::array<char, 2> b = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8 & 0xFF)};
  out.write(b.data(), 2);
}

std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | p[1] << 8 | p[2] << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

}  // namespace

void write_wav(const std::filesystem::path& path, const PcmBuffer& pcm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const auto data_bytes = static_cast<std::uint32_t>(pcm.samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(pcm.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(pcm.sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out.write("data", 4);
  put_u32(out, data_bytes);
  for (Eigen::Index i = 0; i < pcm.samples.size(); ++i) {
    put_u16(out, static_cast<std::uint16_t>(pcm.samples(i)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

PcmBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();
  if (size < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw IoError(path.string() + ": not a RIFF/WAVE file");
  }

  PcmBuffer pcm;
  bool have_format = false;
  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const unsigned char* chunk = p + pos;
    const std::uint32_t length = get_u32(chunk + 4);
    if (pos + 8 + length > size) throw IoError(path.string() + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (length < 16) throw IoError(path.string() + ": short fmt chunk");
      const std::uint16_t format = get_u16(chunk + 8);
      const std::uint16_t channels = get_u16(chunk + 10);
      const std::uint16_t bits = get_u16(chunk + 22);
      if (format != 1 || channels != 1 || bits != 16) {
        throw IoError(path.string() + ": only mono 16-bit PCM is supported");
      }
      pcm.sample_rate = static_cast<int>(get_u32(chunk + 12));
      have_format = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_format) throw IoError(path.string() + ": data before fmt");
      pcm.samples.resize(length / 2);
      for (std::uint32_t i = 0; i < length / 2; ++i) {
        pcm.samples(i) = static_cast<std::int16_t>(get_u16(chunk + 8 + 2 * i));
      }
      return pcm;
    }
    pos += 8 + length + (length & 1);
  }
  throw IoError(path.string() + ": no data chunk");
}

}  // namespace xrprobe
