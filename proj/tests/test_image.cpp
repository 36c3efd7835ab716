#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "rcpc/image.hpp"

using namespace rcpc;

TEST_CASE("grid covers exact and partial tilings") {
  const auto exact = build_grid(1, 32, 32, 16, 16);
  CHECK(exact.blocks_x == 2);
  CHECK(exact.blocks_y == 2);
  CHECK(exact.block_pixels(1, 1) == 256);

  const auto partial = build_grid(1, 40, 40, 16, 16);
  CHECK(partial.blocks_x == 3);
  CHECK(partial.blocks_y == 3);
  CHECK(partial.block_width(2) == 8);
  CHECK(partial.slice_rows(2) == 8);
  CHECK(partial.block_pixels(2, 2) == 64);

  const auto single = build_grid(1, 16, 16, 16, 16);
  CHECK(single.blocks_x == 1);
  CHECK(single.blocks_y == 1);

  CHECK_THROWS_AS(build_grid(0, 16, 16, 16, 16), std::invalid_argument);
}

TEST_CASE("grid assigns every pixel to exactly one block") {
  const auto grid = build_grid(3, 37, 41, 16, 16);
  std::size_t total = 0;
  for (int sy = 0; sy < grid.blocks_y; ++sy) {
    for (int bx = 0; bx < grid.blocks_x; ++bx) {
      total += static_cast<std::size_t>(grid.block_pixels(bx, sy));
    }
  }
  CHECK(total == static_cast<std::size_t>(37) * 41); // one band
}

TEST_CASE("bil index arithmetic is a bijection") {
  ImageCube cube(5, 7, 11, 12);
  std::vector<bool> seen(cube.pixel_count(), false);
  for (int z = 0; z < cube.bands; ++z) {
    for (int y = 0; y < cube.lines; ++y) {
      for (int x = 0; x < cube.columns; ++x) {
        const std::size_t i = cube.index(z, y, x);
        REQUIRE(i < seen.size());
        REQUIRE(!seen[i]);
        seen[i] = true;
      }
    }
  }
}

TEST_CASE("quality report basics") {
  ImageCube a(1, 1, 2, 8);
  ImageCube b(1, 1, 2, 8);
  a.samples = {3, 4};
  b.samples = {3, 2};
  const auto q = quality(a, b, 16);
  CHECK(q.mad == 2);
  CHECK(q.rate_bpp == doctest::Approx(8.0));
  CHECK(q.snr_db == doctest::Approx(10.0 * std::log10(25.0 / 4.0)));
  CHECK(!q.lossless);
  CHECK(q.per_band_mad == std::vector<int>{2});

  const auto perfect = quality(a, a, 16);
  CHECK(perfect.lossless);
  CHECK(perfect.mad == 0);

  ImageCube zero(1, 1, 2, 8);
  ImageCube off(1, 1, 2, 8);
  off.samples = {1, 0};
  const auto degenerate = quality(zero, off, 16);
  CHECK(degenerate.snr_db == -std::numeric_limits<double>::infinity());

  ImageCube wrong(1, 2, 2, 8);
  CHECK_THROWS_AS(quality(a, wrong, 1), std::invalid_argument);
}

TEST_CASE("quality mad is symmetric in its arguments") {
  ImageCube a(2, 3, 3, 8);
  ImageCube b(2, 3, 3, 8);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    a.samples[i] = static_cast<std::uint16_t>((i * 37) % 200);
    b.samples[i] = static_cast<std::uint16_t>((i * 53 + 11) % 200);
  }
  CHECK(quality(a, b, 1).mad == quality(b, a, 1).mad);
}

TEST_CASE("synthetic cube determinism and degenerate settings") {
  const auto c1 = generate_synthetic_cube(42, 3, 8, 8, 12, 0.5, 0.5, 20.0);
  const auto c2 = generate_synthetic_cube(42, 3, 8, 8, 12, 0.5, 0.5, 20.0);
  CHECK(c1.samples == c2.samples);

  const auto c3 = generate_synthetic_cube(43, 3, 8, 8, 12, 0.5, 0.5, 20.0);
  CHECK(c1.samples != c3.samples);

  const auto flat = generate_synthetic_cube(7, 2, 4, 4, 10, 0.0, 0.0, 0.0);
  for (const auto s : flat.samples) {
    CHECK(s == 512);
  }

  for (const auto s : c1.samples) {
    CHECK(s < (1 << 12));
  }

  CHECK_THROWS_AS(generate_synthetic_cube(1, 2, 4, 4, 12, 1.0, 0.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("raw round trip with bil and bsq sidecars") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "rcpc_image_test";
  fs::create_directories(dir);
  const auto raw = (dir / "cube.raw").string();
  const auto hdr = (dir / "cube.txt").string();

  const auto cube = generate_synthetic_cube(9, 3, 5, 7, 12, 0.3, 0.6, 40.0);
  save_raw_cube(cube, raw, hdr);
  const auto loaded = load_raw_cube(raw, hdr);
  CHECK(loaded.samples == cube.samples);
  CHECK(loaded.bit_depth == 12);

  // BSQ variant: write samples band-sequential and flip the sidecar.
  std::vector<std::uint8_t> bytes;
  for (int z = 0; z < cube.bands; ++z) {
    for (int y = 0; y < cube.lines; ++y) {
      for (int x = 0; x < cube.columns; ++x) {
        const std::uint16_t v = cube.at(z, y, x);
        bytes.push_back(static_cast<std::uint8_t>(v & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>(v >> 8));
      }
    }
  }
  const auto bsq_raw = (dir / "cube_bsq.raw").string();
  {
    std::FILE *f = std::fopen(bsq_raw.c_str(), "wb");
    REQUIRE(f != nullptr);
    std::fwrite(bytes.data(), 1, bytes.size(), f);
    std::fclose(f);
  }
  RawHeader rh;
  rh.bands = cube.bands;
  rh.lines = cube.lines;
  rh.columns = cube.columns;
  rh.bit_depth = cube.bit_depth;
  rh.interleave = Interleave::BSQ;
  const auto bsq_hdr = (dir / "cube_bsq.txt").string();
  write_raw_header(rh, bsq_hdr);
  const auto from_bsq = load_raw_cube(bsq_raw, bsq_hdr);
  CHECK(from_bsq.samples == cube.samples);

  // A header claiming more data than the file holds must fail cleanly.
  RawHeader big = rh;
  big.lines = cube.lines + 1;
  const auto big_hdr = (dir / "cube_big.txt").string();
  write_raw_header(big, big_hdr);
  CHECK_THROWS_AS(load_raw_cube(bsq_raw, big_hdr), std::runtime_error);
  fs::remove_all(dir);
}
