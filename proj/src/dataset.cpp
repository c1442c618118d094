// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrdiff/dataset.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "hdrdiff/tensor_io.hpp"

namespace fs = std::filesystem;

namespace hdrdiff {

namespace {

constexpr std::array<double, 3> kSynthEv{-2.0, 0.0, 2.0};
constexpr int kMaxBrightShapes = 1000;

float quantize8(double v) { return static_cast<float>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0); }

struct Painter {
  Tensor<float>& img;
  std::mt19937_64& rng;

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

  std::array<double, 3> tint(double radiance) {
    return {radiance * uniform(0.7, 1.0), radiance * uniform(0.7, 1.0), radiance * uniform(0.7, 1.0)};
  }

  void shape(const std::array<double, 3>& color) {
    const int n = img.height;
    const double cy = uniform(0, n), cx = uniform(0, img.width);
    if (uniform(0, 1) < 0.5) {
      const double hy = uniform(n / 16.0, n / 4.0), hx = uniform(n / 16.0, n / 4.0);
      fill([&](double y, double x) { return std::abs(y - cy) <= hy && std::abs(x - cx) <= hx; }, color);
    } else {
      const double r = uniform(n / 16.0, n / 5.0);
      fill([&](double y, double x) { return (y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r; }, color);
    }
  }

  template <typename Inside>
  void fill(Inside inside, const std::array<double, 3>& color) {
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        if (inside(y + 0.5, x + 0.5))
          for (int c = 0; c < 3; ++c) img(y, x, c) = static_cast<float>(color[c]);
  }
};

double saturated_fraction(const Tensor<float>& ldr) {
  return static_cast<double>((ldr.data.array() >= 1.0f).rowwise().all().count()) / ldr.pixels();
}

std::array<double, 3> read_evs(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw LoadError(path.string() + ": cannot open exposure file");
  std::vector<double> ev;
  std::string line;
  while (std::getline(f, line)) {
    // Accept a typographic minus as well as '-'.
    for (std::size_t p; (p = line.find("\xE2\x88\x92")) != std::string::npos;) line.replace(p, 3, "-");
    std::istringstream ls(line);
    double v;
    if (ls >> v) {
      ev.push_back(v);
    } else if (line.find_first_not_of(" \t\r") != std::string::npos) {
      throw LoadError(path.string() + ": malformed EV line '" + line + "'");
    }
  }
  if (ev.size() != 3) throw LoadError(path.string() + ": expected 3 EV values, found " + std::to_string(ev.size()));
  return {ev[0], ev[1], ev[2]};
}

Tensor<float> read_frame(const fs::path& path) {
  const Tensor<float> t = path.extension() == ".png" ? read_png(path) : read_image_tensor<float>(path);
  if (t.channels() != 3) throw LoadError(path.string() + ": expected 3 channels, found " + std::to_string(t.channels()));
  return t;
}

}  // namespace

Tensor<float> render_ldr(const Tensor<float>& gt, double ev, double gamma) {
  const double gain = std::exp2(ev);
  const double inv_g = 1.0 / gamma;
  Tensor<float> out(gt.height, gt.width, gt.channels());
  out.data = gt.data.unaryExpr([&](float v) {
    return quantize8(std::pow(std::clamp(static_cast<double>(v) * gain, 0.0, 1.0), inv_g));
  });
  return out;
}

Tensor<float> translate(const Tensor<float>& in, int dy, int dx) {
  Tensor<float> out(in.height, in.width, in.channels());
  for (int y = 0; y < in.height; ++y) {
    const int sy = std::clamp(y - dy, 0, in.height - 1);
    for (int x = 0; x < in.width; ++x) {
      const int sx = std::clamp(x - dx, 0, in.width - 1);
      out.data.row(Eigen::Index(y) * in.width + x) = in.data.row(Eigen::Index(sy) * in.width + sx);
    }
  }
  return out;
}

std::array<double, 3> exposures_from_ev(const std::array<double, 3>& ev) {
  return {std::exp2(ev[0] - ev[1]), 1.0, std::exp2(ev[2] - ev[1])};
}

SampleRecord synth_scene(std::uint64_t seed, const SynthOptions& o) {
  if (o.size < 8) throw InvalidArgument("synth_scene: size must be >= 8");
  if (o.motion_px < 0) throw InvalidArgument("synth_scene: motion_px must be >= 0");
  if (!(o.sat_frac >= 0.0 && o.sat_frac < 1.0)) throw InvalidArgument("synth_scene: sat_frac must be in [0, 1)");
  if (!(o.gamma > 0.0)) throw InvalidArgument("synth_scene: gamma must be positive");

  std::mt19937_64 rng(seed);
  Tensor<float> gt(o.size, o.size, 3);
  Painter paint{gt, rng};

  // Background: smooth exponential ramp along a random direction.
  const double base = std::pow(10.0, paint.uniform(-2.5, -1.0));
  const double theta = paint.uniform(0.0, 2.0 * M_PI);
  const double slope = paint.uniform(0.5, 3.0);
  const std::array<double, 3> bg = paint.tint(base);
  for (int y = 0; y < o.size; ++y)
    for (int x = 0; x < o.size; ++x) {
      const double u = ((x + 0.5) / o.size - 0.5) * std::cos(theta) + ((y + 0.5) / o.size - 0.5) * std::sin(theta);
      for (int c = 0; c < 3; ++c) gt(y, x, c) = static_cast<float>(bg[c] * std::exp2(slope * u));
    }

  const int shapes = std::uniform_int_distribution<int>(6, 12)(rng);
  for (int i = 0; i < shapes; ++i) paint.shape(paint.tint(std::pow(10.0, paint.uniform(-3.0, -0.3))));
  gt.data = gt.data.cwiseMax(0.0f).cwiseMin(1.0f);

  std::uniform_int_distribution<int> shift(-o.motion_px, o.motion_px);
  const int dy0 = shift(rng), dx0 = shift(rng), dy2 = shift(rng), dx2 = shift(rng);

  SampleRecord rec;
  rec.scene_id = "synth_" + std::to_string(seed);
  rec.ldr.gamma = o.gamma;
  rec.ldr.exposures = exposures_from_ev(kSynthEv);
  for (int added = 0;; ++added) {
    rec.ldr.ldrs[2] = render_ldr(translate(gt, dy2, dx2), kSynthEv[2], o.gamma);
    if (saturated_fraction(rec.ldr.ldrs[2]) >= o.sat_frac) break;
    if (added == kMaxBrightShapes) throw Error("synth_scene: could not reach the requested saturated fraction");
    // Radiance >= 0.4 * 0.7 > 0.25 keeps every channel saturated at EV +2.
    paint.shape(paint.tint(paint.uniform(0.4, 1.0)));
  }
  rec.ldr.ldrs[0] = render_ldr(translate(gt, dy0, dx0), kSynthEv[0], o.gamma);
  rec.ldr.ldrs[1] = render_ldr(gt, kSynthEv[1], o.gamma);
  rec.gt_hdr = std::move(gt);
  return rec;
}

std::vector<fs::path> list_scenes(const fs::path& root) {
  if (!fs::is_directory(root)) throw LoadError(root.string() + ": not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

SampleRecord load_dataset_sample(const fs::path& dir, double gamma) {
  if (!fs::is_directory(dir)) throw LoadError(dir.string() + ": not a directory");
  std::vector<fs::path> frames;
  for (const auto& e : fs::directory_iterator(dir)) {
    const fs::path& p = e.path();
    const std::string stem = p.filename().string();
    if (e.is_regular_file() && stem.rfind("ldr", 0) == 0 && (p.extension() == ".png" || p.extension() == ".hdrf"))
      frames.push_back(p);
  }
  std::sort(frames.begin(), frames.end());
  if (frames.size() != 3)
    throw LoadError(dir.string() + ": expected 3 LDR frames (ldr*.png or ldr*.hdrf), found " +
                    std::to_string(frames.size()));

  SampleRecord rec;
  rec.scene_id = dir.filename().string();
  rec.ldr.gamma = gamma;
  rec.ldr.exposures = exposures_from_ev(read_evs(dir / "exposures.txt"));
  for (int i = 0; i < 3; ++i) {
    rec.ldr.ldrs[i] = read_frame(frames[i]);
    if (!rec.ldr.ldrs[i].same_shape(rec.ldr.ldrs[0]))
      throw LoadError(frames[i].string() + ": dimensions " + shape_string(rec.ldr.ldrs[i]) + " differ from " +
                      shape_string(rec.ldr.ldrs[0]));
  }
  try {
    validate(rec.ldr);
  } catch (const Error& e) {
    throw LoadError(dir.string() + ": " + e.what());
  }
  if (const fs::path gt = dir / "gt.hdrf"; fs::exists(gt)) {
    Tensor<float> h = read_image_tensor<float>(gt);
    if (!h.same_shape(rec.ldr.ldrs[0]))
      throw LoadError(gt.string() + ": dimensions " + shape_string(h) + " differ from the LDR frames");
    rec.gt_hdr = std::move(h);
  }
  return rec;
}

void save_dataset_sample(const fs::path& dir, const SampleRecord& record) {
  fs::create_directories(dir);
  for (int i = 0; i < 3; ++i) write_png(dir / ("ldr_" + std::to_string(i) + ".png"), record.ldr.ldrs[i]);
  std::ofstream f(dir / "exposures.txt");
  for (double e : record.ldr.exposures) f << std::log2(e) << "\n";
  if (!f) throw Error((dir / "exposures.txt").string() + ": write failed");
  if (record.gt_hdr) write_image_tensor(dir / "gt.hdrf", *record.gt_hdr, "hdr");
}

Tensor<float> read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw LoadError(path.string() + ": " + image.message);
  if (PNG_IMAGE_SAMPLE_COMPONENT_SIZE(image.format) != 1) {
    png_image_free(&image);
    throw LoadError(path.string() + ": only 8-bit PNG is supported");
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr))
    throw LoadError(path.string() + ": " + image.message);
  Tensor<float> out(static_cast<int>(image.height), static_cast<int>(image.width), 3);
  for (Eigen::Index p = 0; p < out.pixels(); ++p)
    for (int c = 0; c < 3; ++c) out.data(p, c) = buf[static_cast<std::size_t>(p) * 3 + c] / 255.0f;
  return out;
}

void write_png(const fs::path& path, const Tensor<float>& img) {
  if (img.channels() != 3) throw ShapeMismatch("write_png: expected 3 channels, got " + shape_string(img));
  std::vector<png_byte> buf(static_cast<std::size_t>(img.size()));
  for (Eigen::Index p = 0; p < img.pixels(); ++p)
    for (int c = 0; c < 3; ++c)
      buf[static_cast<std::size_t>(p) * 3 + c] =
          static_cast<png_byte>(std::lround(std::clamp(img.data(p, c), 0.0f, 1.0f) * 255.0f));
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr))
    throw Error(path.string() + ": " + image.message);
}

}  // namespace hdrdiff
