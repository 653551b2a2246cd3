#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "potkit/errors.hpp"

namespace potkit {

// 8-bit grayscale raster (PGM P5).
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(std::size_t row, std::size_t col) const {
    return pixels[row * width + col];
  }
};

// 8-bit RGB raster (PPM P6), interleaved.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 3 bytes per pixel

  const std::uint8_t* at(std::size_t row, std::size_t col) const {
    return pixels.data() + 3 * (row * width + col);
  }
  std::uint8_t* at(std::size_t row, std::size_t col) {
    return pixels.data() + 3 * (row * width + col);
  }
};

GrayImage read_pgm(const std::string& path);
GrayImage read_pgm(std::istream& in);
void write_pgm(const GrayImage& image, const std::string& path);
void write_pgm(const GrayImage& image, std::ostream& out);

RgbImage read_ppm(const std::string& path);
RgbImage read_ppm(std::istream& in);
void write_ppm(const RgbImage& image, const std::string& path);
void write_ppm(const RgbImage& image, std::ostream& out);

}  // namespace potkit
