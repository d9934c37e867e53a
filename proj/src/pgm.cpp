#include "xrprobe/pgm.hpp"

#include <cctype>
#include <fstream>
#include <string>

#include "xrprobe/error.hpp"

namespace xrprobe {
namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const PixelBuffer& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << frame.cols() << ' ' << frame.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.data()), frame.size());
  if (!out) throw IoError("failed writing " + path.string());
}

PixelBuffer read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (header_token(in) != "P5") throw IoError(path.string() + ": not a P5 PGM");
  long width = 0, height = 0, maxval = 0;
  try {
    width = std::stol(header_token(in));
    height = std::stol(header_token(in));
    maxval = std::stol(header_token(in));
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed PGM header");
  }
  if (width <= 0 || height <= 0 || maxval != 255) {
    throw IoError(path.string() + ": unsupported PGM geometry or maxval");
  }
  PixelBuffer frame(height, width);
  in.read(reinterpret_cast<char*>(frame.data()), frame.size());
  if (in.gcount() != frame.size()) {
    throw IoError(path.string() + ": truncated pixel data");
  }
  return frame;
}

}  // namespace xrprobe
