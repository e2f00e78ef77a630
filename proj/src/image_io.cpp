#include "image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace kin::render {

namespace {

void write_p5(const unsigned char* data, int width, int height,
              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("pgm: cannot open '" + path + "' for writing");
  }
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(width) * height);
  if (!out) {
    throw std::runtime_error("pgm: write failed for '" + path + "'");
  }
}

} // namespace

void write_pgm_depth(const Image& img, double near, double far,
                     const std::string& path) {
  std::vector<unsigned char> bytes(img.pixels.size());
  const double scale = 255.0 / (far - near);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double v = std::lround((img.pixels[i] - near) * scale);
    bytes[i] = static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
  }
  write_p5(bytes.data(), img.width, img.height, path);
}

void write_pgm_gray(const Image& img, const std::string& path) {
  std::vector<unsigned char> bytes(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double v = std::lround(img.pixels[i] * 255.0);
    bytes[i] = static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
  }
  write_p5(bytes.data(), img.width, img.height, path);
}

void write_pgm_bytes(const std::vector<unsigned char>& bytes, int width,
                     int height, const std::string& path) {
  if (bytes.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("pgm: byte count does not match dimensions");
  }
  write_p5(bytes.data(), width, height, path);
}

} // namespace kin::render
