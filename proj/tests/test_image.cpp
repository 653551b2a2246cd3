#include <doctest.h>

#include <sstream>

#include "potkit/image.hpp"
#include "potkit/rng.hpp"

using namespace potkit;

TEST_CASE("pgm round-trips byte-exactly") {
  Rng rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    GrayImage img;
    img.width = 1 + rng.next_u64() % 40;
    img.height = 1 + rng.next_u64() % 40;
    img.pixels.resize(img.width * img.height);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.next_u64() & 0xFF);
    std::stringstream ss;
    write_pgm(img, ss);
    auto back = read_pgm(ss);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.pixels == img.pixels);
  }
}

TEST_CASE("ppm round-trips byte-exactly") {
  Rng rng(5);
  RgbImage img;
  img.width = 13;
  img.height = 7;
  img.pixels.resize(3 * img.width * img.height);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.next_u64() & 0xFF);
  std::stringstream ss;
  write_ppm(img, ss);
  auto back = read_ppm(ss);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("netpbm headers accept comments and whitespace") {
  std::stringstream ss;
  ss << "P5\n# a comment\n  2 # widths\n\t3\n255\n";
  ss.write("abcdef", 6);
  auto img = read_pgm(ss);
  CHECK(img.width == 2);
  CHECK(img.height == 3);
  CHECK(img.pixels[0] == 'a');
  CHECK(img.pixels[5] == 'f');
}

TEST_CASE("netpbm readers reject malformed input") {
  {
    std::stringstream ss("P6\n2 2\n255\nxxxxxxxxxxxx");
    CHECK_THROWS_AS(read_pgm(ss), IoError);  // wrong magic for pgm
  }
  {
    std::stringstream ss("P5\n2 2\n65535\n");
    CHECK_THROWS_AS(read_pgm(ss), IoError);  // 16-bit unsupported
  }
  {
    std::stringstream ss("P5\n2 2\n255\nab");  // truncated raster
    CHECK_THROWS_AS(read_pgm(ss), IoError);
  }
  {
    std::stringstream ss("P5\n0 2\n255\n");
    CHECK_THROWS_AS(read_pgm(ss), IoError);  // empty dimensions
  }
  CHECK_THROWS_AS(read_pgm("/nonexistent/path.pgm"), IoError);
}
