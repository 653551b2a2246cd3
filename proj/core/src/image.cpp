#include "potkit/image.hpp"

#include <fstream>
#include <limits>

namespace potkit {

namespace {

// Netpbm header token scanner: skips whitespace and '#' comments.
std::size_t next_header_value(std::istream& in, const char* what) {
  for (;;) {
    const int ch = in.peek();
    if (ch == '#') {
      in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
      continue;
    }
    if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
      in.get();
      continue;
    }
    break;
  }
  long long value = -1;
  if (!(in >> value) || value < 0) {
    throw IoError(std::string("netpbm: bad header field: ") + what);
  }
  return static_cast<std::size_t>(value);
}

void read_magic(std::istream& in, char expected) {
  char p = 0, d = 0;
  in.get(p);
  in.get(d);
  if (!in || p != 'P' || d != expected) {
    throw IoError(std::string("netpbm: expected magic P") + expected);
  }
}

void read_raster(std::istream& in, std::vector<std::uint8_t>& out, std::size_t count) {
  // Exactly one whitespace byte separates the header from the raster.
  const int sep = in.get();
  if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n') {
    throw IoError("netpbm: missing raster separator");
  }
  out.resize(count);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    throw IoError("netpbm: truncated raster");
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

}  // namespace

GrayImage read_pgm(std::istream& in) {
  read_magic(in, '5');
  GrayImage img;
  img.width = next_header_value(in, "width");
  img.height = next_header_value(in, "height");
  const std::size_t maxval = next_header_value(in, "maxval");
  if (img.width == 0 || img.height == 0) throw IoError("pgm: empty image");
  if (maxval == 0 || maxval > 255) throw IoError("pgm: only 8-bit rasters supported");
  read_raster(in, img.pixels, img.width * img.height);
  return img;
}

GrayImage read_pgm(const std::string& path) {
  auto in = open_input(path);
  return read_pgm(in);
}

void write_pgm(const GrayImage& image, std::ostream& out) {
  if (image.pixels.size() != image.width * image.height) {
    throw ShapeError("write_pgm: pixel buffer does not match dimensions");
  }
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("write_pgm: write failed");
}

void write_pgm(const GrayImage& image, const std::string& path) {
  auto out = open_output(path);
  write_pgm(image, out);
}

RgbImage read_ppm(std::istream& in) {
  read_magic(in, '6');
  RgbImage img;
  img.width = next_header_value(in, "width");
  img.height = next_header_value(in, "height");
  const std::size_t maxval = next_header_value(in, "maxval");
  if (img.width == 0 || img.height == 0) throw IoError("ppm: empty image");
  if (maxval == 0 || maxval > 255) throw IoError("ppm: only 8-bit rasters supported");
  read_raster(in, img.pixels, 3 * img.width * img.height);
  return img;
}

RgbImage read_ppm(const std::string& path) {
  auto in = open_input(path);
  return read_ppm(in);
}

void write_ppm(const RgbImage& image, std::ostream& out) {
  if (image.pixels.size() != 3 * image.width * image.height) {
    throw ShapeError("write_ppm: pixel buffer does not match dimensions");
  }
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("write_ppm: write failed");
}

void write_ppm(const RgbImage& image, const std::string& path) {
  auto out = open_output(path);
  write_ppm(image, out);
}

}  // namespace potkit
