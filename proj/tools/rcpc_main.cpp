#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rcpc/codec.hpp"
#include "rcpc/config.hpp"
#include "rcpc/image.hpp"

namespace {

std::vector<std::uint8_t> read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string &path, const std::vector<std::uint8_t> &bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void parse_block(const std::string &text, rcpc::CodecConfig &cfg) {
  const auto x = text.find('x');
  if (x == std::string::npos) {
    throw CLI::ValidationError("--block expects WxH, e.g. 16x16");
  }
  cfg.block_w = std::stoi(text.substr(0, x));
  cfg.block_h = std::stoi(text.substr(x + 1));
}

struct Dims {
  int bands = 0;
  int lines = 0;
  int columns = 0;
};

Dims parse_dims(const std::string &text) {
  Dims d;
  char sep1 = 0;
  char sep2 = 0;
  std::istringstream ss(text);
  if (!(ss >> d.bands >> sep1 >> d.lines >> sep2 >> d.columns) || sep1 != 'x' ||
      sep2 != 'x') {
    throw CLI::ValidationError("--dims expects ZxYxX, e.g. 16x256x256");
  }
  return d;
}

std::vector<double> parse_targets(const std::string &text) {
  std::vector<double> targets;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    targets.push_back(std::stod(item));
  }
  if (targets.empty()) {
    throw CLI::ValidationError("--targets expects a comma-separated list");
  }
  return targets;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"rcpc - rate-controlled predictive codec for multiband imagery"};
  app.require_subcommand(1);

  // encode
  auto *enc = app.add_subcommand("encode", "compress a raw cube");
  std::string in_path, hdr_path, out_path, mode_name = "lossless", block_text;
  int q = 1, clip = 0, pred_bands = 3, est_lines = 2;
  double target = 0.0, tau = 5.0;
  enc->add_option("--in", in_path, "input raw cube")->required();
  enc->add_option("--hdr", hdr_path, "input sidecar header")->required();
  enc->add_option("--out", out_path, "output compressed file")->required();
  enc->add_option("--mode", mode_name, "lossless|nl|rate-a|rate-b")->required();
  enc->add_option("--q", q, "near-lossless step (odd)");
  enc->add_option("--target", target, "target rate in bpp (rate modes)");
  enc->add_option("--clip", clip, "max quantization step (hybrid mode)");
  enc->add_option("--block", block_text, "block size WxH (default 16x16)");
  enc->add_option("--bands-pred", pred_bands, "prediction bands P");
  enc->add_option("--est-lines", est_lines, "estimation lines per slice");
  enc->add_option("--tau", tau, "feedback time constant in slices");

  // decode
  auto *dec = app.add_subcommand("decode", "decompress to a raw cube");
  std::string dec_in, dec_out, dec_hdr;
  dec->add_option("--in", dec_in, "compressed file")->required();
  dec->add_option("--out", dec_out, "output raw cube")->required();
  dec->add_option("--hdr", dec_hdr, "write a sidecar header here");

  // stats
  auto *st = app.add_subcommand("stats", "rate-distortion sweep (modes A and B)");
  std::string st_in, st_hdr, st_targets, st_csv, st_block;
  int st_pred = 3, st_est = 2;
  double st_tau = 5.0;
  st->add_option("--in", st_in, "input raw cube")->required();
  st->add_option("--hdr", st_hdr, "input sidecar header")->required();
  st->add_option("--targets", st_targets, "comma-separated bpp targets")->required();
  st->add_option("--csv", st_csv, "output CSV path")->required();
  st->add_option("--block", st_block, "block size WxH");
  st->add_option("--bands-pred", st_pred, "prediction bands P");
  st->add_option("--est-lines", st_est, "estimation lines per slice");
  st->add_option("--tau", st_tau, "feedback time constant");

  // synth
  auto *sy = app.add_subcommand("synth", "generate a synthetic test cube");
  std::string sy_dims, sy_out, sy_hdr;
  std::uint64_t sy_seed = 1;
  int sy_depth = 12;
  double sy_spec = 0.9, sy_spat = 0.9, sy_sigma = 64.0;
  sy->add_option("--seed", sy_seed, "RNG seed")->required();
  sy->add_option("--dims", sy_dims, "ZxYxX dimensions")->required();
  sy->add_option("--out", sy_out, "output raw cube")->required();
  sy->add_option("--hdr", sy_hdr, "output sidecar header (default <out>.txt)");
  sy->add_option("--bit-depth", sy_depth, "bits per sample");
  sy->add_option("--spectral-corr", sy_spec, "inter-band correlation [0,1)");
  sy->add_option("--spatial-corr", sy_spat, "spatial correlation [0,1)");
  sy->add_option("--sigma", sy_sigma, "driving noise standard deviation");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*enc) {
      rcpc::CodecConfig cfg;
      if (mode_name == "lossless") {
        cfg.mode = rcpc::Mode::Lossless;
      } else if (mode_name == "nl") {
        cfg.mode = rcpc::Mode::NearLossless;
        cfg.q_global = q;
      } else if (mode_name == "rate-a") {
        cfg.mode = rcpc::Mode::RateA;
      } else if (mode_name == "rate-b") {
        cfg.mode = rcpc::Mode::RateB;
      } else {
        throw std::runtime_error("unknown mode: " + mode_name);
      }
      cfg.target_bpp = target;
      cfg.clip = clip;
      cfg.pred_bands = pred_bands;
      cfg.est_lines = est_lines;
      cfg.tau = tau;
      if (!block_text.empty()) {
        parse_block(block_text, cfg);
      }
      const auto cube = rcpc::load_raw_cube(in_path, hdr_path);
      const auto result = rcpc::encode(cube, cfg);
      write_file(out_path, result.bytes);
      std::cout << "rate " << result.report.rate_bpp << " bpp, mad "
                << result.report.mad;
      if (result.report.lossless) {
        std::cout << ", lossless";
      } else {
        std::cout << ", snr " << result.report.snr_db << " dB";
      }
      if (result.target_missed) {
        std::cout << " (target not reachable under clip)";
      }
      std::cout << "\n";
    } else if (*dec) {
      const auto bytes = read_file(dec_in);
      const auto cube = rcpc::decode(bytes);
      rcpc::save_raw_cube(cube, dec_out, dec_hdr);
      std::cout << "decoded " << cube.bands << "x" << cube.lines << "x" << cube.columns
                << " (" << cube.bit_depth << "-bit)\n";
    } else if (*st) {
      rcpc::CodecConfig cfg;
      cfg.pred_bands = st_pred;
      cfg.est_lines = st_est;
      cfg.tau = st_tau;
      if (!st_block.empty()) {
        parse_block(st_block, cfg);
      }
      const auto cube = rcpc::load_raw_cube(st_in, st_hdr);
      const auto targets = parse_targets(st_targets);
      const auto rows = rcpc::encode_with_stats(cube, cfg, targets);
      std::ofstream csv(st_csv);
      if (!csv) {
        throw std::runtime_error("cannot write " + st_csv);
      }
      rcpc::write_stats_csv(csv, rows);
      std::cout << "wrote " << rows.size() << " rows to " << st_csv << "\n";
    } else if (*sy) {
      const Dims d = parse_dims(sy_dims);
      const auto cube = rcpc::generate_synthetic_cube(sy_seed, d.bands, d.lines,
                                                      d.columns, sy_depth, sy_spec,
                                                      sy_spat, sy_sigma);
      rcpc::save_raw_cube(cube, sy_out, sy_hdr.empty() ? sy_out + ".txt" : sy_hdr);
      std::cout << "wrote " << sy_out << "\n";
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
