// Copyright 2026 The dmpcs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dmpcs/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dmpcs/errors.hpp"
#include "dmpcs/rng.hpp"

#ifndef DMPCS_VERSION
#define DMPCS_VERSION "0.0.0"
#endif

namespace dmpcs::io {

using nlohmann::json;

std::string version() { return DMPCS_VERSION; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return os.str();
}

void atomic_write(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

namespace {

// Little-endian primitives, independent of the host byte order.
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string what) : b_(bytes), what_(std::move(what)) {}
  void need(std::size_t n, const char* field) const {
    if (pos_ + n > b_.size())
      throw IoError(what_ + ": truncated " + field + " (expected " + std::to_string(pos_ + n) +
                    " bytes, got " + std::to_string(b_.size()) + ")");
  }
  std::uint64_t uint(int width, const char* field) {
    need(std::size_t(width), field);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t(std::uint8_t(b_[pos_ + i])) << (8 * i);
    pos_ += std::size_t(width);
    return v;
  }
  double f64(const char* field) {
    const std::uint64_t bits = uint(8, field);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(std::size_t n, const char* field) {
    need(n, field);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  const std::string& b_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace

// ---------------------------------------------------------------------------
// PNM

Tensor decode_pnm(const std::string& bytes, const std::string& what) {
  if (bytes.size() < 2 || bytes[0] != 'P')
    throw IoError(what + ": not a PNM file (bad magic)");
  const char kind = bytes[1];
  if (kind != '5' && kind != '6')
    throw IoError(what + ": unsupported PNM format 'P" + std::string(1, kind) +
                  "' (binary P5 grayscale or P6 colour only)");
  std::size_t pos = 2;
  auto next_int = [&](const char* field) -> std::size_t {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos || pos - start > 9)
      throw IoError(what + ": malformed PNM header (" + field + ")");
    return std::stoul(bytes.substr(start, pos - start));
  };
  const std::size_t width = next_int("width");
  const std::size_t height = next_int("height");
  const std::size_t maxval = next_int("maxval");
  if (width == 0 || height == 0) throw IoError(what + ": empty image");
  if (maxval == 0 || maxval > 65535) throw IoError(what + ": maxval must lie in 1..65535");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw IoError(what + ": malformed PNM header (missing separator)");
  ++pos;
  const std::size_t sample = maxval > 255 ? 2 : 1;
  const std::size_t channels = kind == '6' ? 3 : 1;
  const std::size_t expected = width * height * channels * sample;
  if (bytes.size() - pos < expected)
    throw IoError(what + ": truncated payload (expected " + std::to_string(expected) +
                  " bytes, got " + std::to_string(bytes.size() - pos) + ")");
  auto at = [&](std::size_t i) -> double {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos + i * sample);
    const unsigned v = sample == 2 ? (unsigned(p[0]) << 8) | p[1] : p[0];
    return double(v) / double(maxval);
  };
  Tensor img({1, height, width});
  for (std::size_t i = 0; i < width * height; ++i) {
    if (channels == 1) {
      img[i] = at(i);
    } else {
      img[i] = 0.299 * at(3 * i) + 0.587 * at(3 * i + 1) + 0.114 * at(3 * i + 2);
    }
  }
  return img;
}

Tensor load_pgm(const fs::path& path) { return decode_pnm(read_file(path), path.string()); }

std::string encode_pgm(const Tensor& image) {
  std::size_t h = 0, w = 0;
  if (image.rank() == 2) {
    h = image.dim(0);
    w = image.dim(1);
  } else {
    require(image.rank() == 3 && image.dim(0) == 1,
            "save_pgm needs a single-channel image, got " + shape_string(image.shape()));
    h = image.dim(1);
    w = image.dim(2);
  }
  require(h > 0 && w > 0, "save_pgm: empty image");
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + h * w);
  for (double v : image.data()) {
    require(std::isfinite(v), "save_pgm: image contains non-finite values");
    const double q = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
    out.push_back(char(static_cast<unsigned char>(q)));
  }
  return out;
}

void save_pgm(const Tensor& image, const fs::path& path) { atomic_write(path, encode_pgm(image)); }

// ---------------------------------------------------------------------------
// DTN1

std::string encode_tensor(const Tensor& t) {
  std::string out = "DTN1";
  put_u32(out, std::uint32_t(t.rank()));
  for (std::size_t d : t.shape()) {
    require(d <= 0xffffffffULL, "tensor dimension too large for DTN1");
    put_u32(out, std::uint32_t(d));
  }
  for (double v : t.data()) put_f64(out, v);
  return out;
}

Tensor decode_tensor(const std::string& bytes, const std::string& what) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "DTN1") != 0) throw IoError(what + ": bad magic (expected DTN1)");
  Reader r(bytes, what);
  r.str(4, "magic");
  const std::size_t rank = r.uint(4, "rank");
  if (rank > 16) throw IoError(what + ": implausible rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) d = r.uint(4, "dims");
  const std::size_t n = shape_size(shape);
  const std::size_t expected = r.pos() + 8 * n;
  if (bytes.size() != expected)
    throw IoError(what + ": payload length mismatch (expected " + std::to_string(expected) +
                  " bytes, got " + std::to_string(bytes.size()) + ")");
  std::vector<double> data(n);
  for (auto& v : data) v = r.f64("payload");
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const Tensor& t, const fs::path& path) { atomic_write(path, encode_tensor(t)); }
Tensor load_tensor(const fs::path& path) { return decode_tensor(read_file(path), path.string()); }

// ---------------------------------------------------------------------------
// Checkpoints

std::string encode_checkpoint(const Checkpoint& ckpt) {
  json meta = ckpt.metadata;
  meta["format_version"] = kCheckpointVersion;
  const std::string text = meta.dump();
  std::string out;
  put_u32(out, std::uint32_t(text.size()));
  out += text;
  put_u32(out, std::uint32_t(ckpt.params.size()));
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.params) {
    put_u32(out, std::uint32_t(name.size()));
    out += name;
    put_u32(out, std::uint32_t(t.rank()));
    for (std::size_t d : t.shape()) put_u32(out, std::uint32_t(d));
    out.push_back(char(8));
    put_u64(out, offset);
    offset += 8 * t.size();
  }
  for (const auto& [name, t] : ckpt.params)
    for (double v : t.data()) put_f64(out, v);
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes, "checkpoint");
  const std::size_t json_len = r.uint(4, "metadata length");
  Checkpoint ckpt;
  try {
    ckpt.metadata = json::parse(r.str(json_len, "metadata"));
  } catch (const json::parse_error& e) {
    throw IoError(std::string("checkpoint: metadata is not valid JSON: ") + e.what());
  }
  const int version = ckpt.metadata.value("format_version", -1);
  if (version != kCheckpointVersion)
    throw IoError("checkpoint: format version " + std::to_string(version) + " is not supported (expected " +
                  std::to_string(kCheckpointVersion) + ")");
  struct Entry {
    std::string name;
    Shape shape;
    std::uint64_t offset;
    int width;
  };
  std::vector<Entry> entries(r.uint(4, "parameter count"));
  for (auto& e : entries) {
    e.name = r.str(r.uint(4, "name length"), "name");
    e.shape.resize(r.uint(4, "rank"));
    for (auto& d : e.shape) d = r.uint(4, "dims");
    e.width = int(r.uint(1, "storage width"));
    if (e.width != 4 && e.width != 8)
      throw IoError("checkpoint: parameter '" + e.name + "' has storage width " +
                    std::to_string(e.width));
    e.offset = r.uint(8, "offset");
  }
  const std::size_t base = r.pos();
  const std::size_t payload = r.remaining();
  std::uint64_t used = 0;
  for (const auto& e : entries) {
    const std::uint64_t len = std::uint64_t(e.width) * shape_size(e.shape);
    if (e.offset + len > payload)
      throw IoError("checkpoint: parameter '" + e.name + "' extends past the payload");
    std::vector<double> data(shape_size(e.shape));
    for (std::size_t i = 0; i < data.size(); ++i) {
      const char* p = bytes.data() + base + e.offset + i * std::size_t(e.width);
      if (e.width == 8) {
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= std::uint64_t(std::uint8_t(p[k])) << (8 * k);
        std::memcpy(&data[i], &bits, 8);
      } else {
        std::uint32_t bits = 0;
        for (int k = 0; k < 4; ++k) bits |= std::uint32_t(std::uint8_t(p[k])) << (8 * k);
        float f;
        std::memcpy(&f, &bits, 4);
        data[i] = f;
      }
    }
    if (!ckpt.params.emplace(e.name, Tensor(e.shape, std::move(data))).second)
      throw IoError("checkpoint: duplicate parameter '" + e.name + "'");
    used += len;
  }
  if (used != payload)
    throw IoError("checkpoint: payload holds " + std::to_string(payload) + " bytes but the table declares " +
                  std::to_string(used));
  return ckpt;
}

json config_to_json(const unfolded::UnfoldedConfig& c) {
  return json{{"block", c.block},
              {"channels", c.channels},
              {"res_units", c.res_units},
              {"start", c.start},
              {"stride", c.stride},
              {"reverse_width", c.reverse_width},
              {"reverse_depth", c.reverse_depth},
              {"time_embedding", c.time_embedding},
              {"tail_channels", c.tail_channels},
              {"freeze_diffusion", c.freeze_diffusion},
              {"train_phi", c.train_phi},
              {"stochastic", c.stochastic}};
}

unfolded::UnfoldedConfig config_from_json(const json& j) {
  unfolded::UnfoldedConfig c;
  try {
    c.block = j.at("block");
    c.channels = j.at("channels");
    c.res_units = j.at("res_units");
    c.start = j.at("start");
    c.stride = j.at("stride");
    c.reverse_width = j.at("reverse_width");
    c.reverse_depth = j.at("reverse_depth");
    c.time_embedding = j.at("time_embedding");
    c.tail_channels = j.at("tail_channels");
    c.freeze_diffusion = j.at("freeze_diffusion");
    c.train_phi = j.at("train_phi");
    c.stochastic = j.at("stochastic");
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: bad model config: ") + e.what());
  }
  return c;
}

Checkpoint model_checkpoint(const unfolded::UnfoldedModel& model, const json& run) {
  Checkpoint ckpt;
  const auto& alphas = model.schedule.alphas();
  ckpt.metadata["config"] = config_to_json(model.config);
  ckpt.metadata["schedule"] = {{"alphas", std::vector<double>(alphas.begin() + 1, alphas.end())},
                               {"beta_start", model.schedule.beta_start()},
                               {"beta_end", model.schedule.beta_end()}};
  ckpt.metadata["seed"] = model.seed;
  ckpt.metadata["frozen"] = std::vector<std::string>(model.frozen.begin(), model.frozen.end());
  ckpt.metadata["run"] = run.is_null() ? json::object() : run;
  ckpt.params = model.params;
  return ckpt;
}

void load_parameters_into(unfolded::UnfoldedModel& model, const unfolded::ParameterSet& params) {
  for (const auto& [name, t] : model.params) {
    auto it = params.find(name);
    if (it == params.end()) throw ValidationError("checkpoint lacks parameter '" + name + "'");
    if (it->second.shape() != t.shape())
      throw ValidationError("parameter '" + name + "' has shape " + shape_string(it->second.shape()) +
                            " in the checkpoint but " + shape_string(t.shape()) + " in the model");
  }
  for (const auto& [name, t] : params)
    if (!model.params.count(name)) throw ValidationError("checkpoint parameter '" + name + "' is unknown to the model");
  model.params = params;
}

unfolded::UnfoldedModel model_from_checkpoint(const Checkpoint& ckpt) {
  const auto& meta = ckpt.metadata;
  if (!meta.contains("config") || !meta.contains("schedule"))
    throw IoError("checkpoint: metadata lacks the model config or schedule");
  const unfolded::UnfoldedConfig cfg = config_from_json(meta.at("config"));
  const auto& sj = meta.at("schedule");
  const std::vector<double> alphas = sj.at("alphas").get<std::vector<double>>();
  diffusion::DiffusionSchedule schedule;
  const double bs = sj.value("beta_start", 0.0), be = sj.value("beta_end", 0.0);
  if (bs > 0.0 || be > 0.0) {
    schedule = diffusion::build_schedule(alphas.size(), bs, be);
    const auto& got = schedule.alphas();
    if (!std::equal(alphas.begin(), alphas.end(), got.begin() + 1))
      schedule = diffusion::DiffusionSchedule(alphas);
  } else {
    schedule = diffusion::DiffusionSchedule(alphas);
  }
  auto phi = ckpt.params.find("phi");
  if (phi == ckpt.params.end()) throw IoError("checkpoint lacks the sensing matrix 'phi'");
  const std::uint64_t seed = meta.value("seed", std::uint64_t(0));
  unfolded::UnfoldedModel model =
      unfolded::build_model(cfg, schedule, sensing::SensingOperator(phi->second, seed, cfg.train_phi), seed);
  load_parameters_into(model, ckpt.params);
  model.frozen.clear();
  for (const auto& name : meta.value("frozen", std::vector<std::string>{})) model.frozen.insert(name);
  return model;
}

void save_checkpoint(const unfolded::UnfoldedModel& model, const fs::path& path, const json& run) {
  atomic_write(path, encode_checkpoint(model_checkpoint(model, run)));
}

unfolded::UnfoldedModel load_checkpoint(const fs::path& path, json* metadata) {
  const Checkpoint ckpt = decode_checkpoint(read_file(path));
  if (metadata) *metadata = ckpt.metadata;
  return model_from_checkpoint(ckpt);
}

// ---------------------------------------------------------------------------
// Datasets

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

}  // namespace

DatasetHandle open_dataset(const fs::path& root, std::size_t crop, bool flip, double val_fraction,
                           std::uint64_t seed) {
  require(crop >= 1, "crop size must be positive");
  require(val_fraction >= 0.0 && val_fraction < 1.0, "val_fraction must lie in [0,1)");
  if (!fs::is_directory(root)) throw IoError("dataset root '" + root.string() + "' is not a directory");
  DatasetHandle d;
  d.root = root;
  d.crop = crop;
  d.flip = flip;
  d.seed = seed;
  for (const auto& entry : fs::directory_iterator(root)) {
    const auto ext = entry.path().extension().string();
    if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".pnm"))
      d.items.push_back(entry.path());
  }
  std::sort(d.items.begin(), d.items.end());
  if (d.items.empty()) throw ValidationError("dataset '" + root.string() + "' holds no PGM/PPM images");
  for (const auto& p : d.items) {
    Tensor img = load_pgm(p);
    if (img.dim(1) < crop || img.dim(2) < crop)
      throw ValidationError("image '" + p.string() + "' is smaller than the crop size " + std::to_string(crop));
    d.images.push_back(std::move(img));
  }
  std::vector<std::size_t> order(d.items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix(seed, 0x5b1177));
  shuffle(order, rng);
  std::size_t n_val = std::size_t(std::llround(val_fraction * double(order.size())));
  if (n_val >= order.size()) n_val = order.size() - 1;
  d.validation.assign(order.begin(), order.begin() + std::ptrdiff_t(n_val));
  d.train.assign(order.begin() + std::ptrdiff_t(n_val), order.end());
  std::sort(d.validation.begin(), d.validation.end());
  std::sort(d.train.begin(), d.train.end());
  return d;
}

std::vector<Tensor> DatasetHandle::epoch_patches(std::size_t epoch) const {
  require(!train.empty(), "dataset has no training items");
  Rng rng(mix(seed, epoch));
  std::vector<std::size_t> order = train;
  shuffle(order, rng);
  std::vector<Tensor> out;
  out.reserve(order.size());
  for (std::size_t idx : order) {
    const Tensor& img = images[idx];
    const std::size_t h = img.dim(1), w = img.dim(2);
    const std::size_t y0 = rng.index(h - crop + 1), x0 = rng.index(w - crop + 1);
    const bool mirror = flip && rng.uniform() < flip_probability;
    Tensor patch({1, crop, crop});
    for (std::size_t i = 0; i < crop; ++i)
      for (std::size_t j = 0; j < crop; ++j)
        patch[i * crop + j] = img[(y0 + i) * w + x0 + (mirror ? crop - 1 - j : j)];
    out.push_back(std::move(patch));
  }
  return out;
}

std::vector<Tensor> DatasetHandle::validation_images() const {
  std::vector<Tensor> out;
  for (std::size_t i : validation) out.push_back(images[i]);
  return out;
}

std::vector<Tensor> DatasetHandle::training_images() const {
  std::vector<Tensor> out;
  for (std::size_t i : train) out.push_back(images[i]);
  return out;
}

Tensor synthetic_image(std::size_t height, std::size_t width, std::uint64_t seed) {
  require(height > 0 && width > 0, "synthetic image needs positive dims");
  Rng rng(seed);
  const double h = double(height), w = double(width);
  const double base = 0.25 + 0.3 * rng.uniform();
  const double gx = 0.4 * (rng.uniform() - 0.5), gy = 0.4 * (rng.uniform() - 0.5);
  std::vector<double> img(height * width);
  for (std::size_t i = 0; i < height; ++i)
    for (std::size_t j = 0; j < width; ++j)
      img[i * width + j] = base + gx * (double(j) / w - 0.5) + gy * (double(i) / h - 0.5);

  const std::size_t shapes = 2 + rng.index(3);
  for (std::size_t s = 0; s < shapes; ++s) {
    const bool ellipse = rng.uniform() < 0.6;
    const double cx = w * rng.uniform(), cy = h * rng.uniform();
    const double rx = w * (0.1 + 0.25 * rng.uniform()), ry = h * (0.1 + 0.25 * rng.uniform());
    const double angle = std::numbers::pi * rng.uniform();
    const double level = 0.8 * (rng.uniform() - 0.5);
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (std::size_t i = 0; i < height; ++i) {
      for (std::size_t j = 0; j < width; ++j) {
        const double dx = double(j) - cx, dy = double(i) - cy;
        const double u = (ca * dx + sa * dy) / rx, v = (-sa * dx + ca * dy) / ry;
        const bool inside = ellipse ? u * u + v * v <= 1.0 : std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
        if (inside) img[i * width + j] += level;
      }
    }
  }

  // texture patch
  const double fx = 0.08 + 0.2 * rng.uniform(), fy = 0.08 + 0.2 * rng.uniform();
  const double amp = 0.05 + 0.1 * rng.uniform();
  const std::size_t ph = std::max<std::size_t>(1, height / 3 + rng.index(height / 3 + 1));
  const std::size_t pw = std::max<std::size_t>(1, width / 3 + rng.index(width / 3 + 1));
  const std::size_t py = rng.index(height - std::min(ph, height) + 1);
  const std::size_t px = rng.index(width - std::min(pw, width) + 1);
  for (std::size_t i = py; i < std::min(height, py + ph); ++i)
    for (std::size_t j = px; j < std::min(width, px + pw); ++j)
      img[i * width + j] += amp * std::sin(2.0 * std::numbers::pi * (fx * double(j) + fy * double(i)));

  for (double& v : img) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  return Tensor({1, height, width}, std::move(img));
}

std::vector<fs::path> generate_corpus(const fs::path& dir, std::size_t count, std::size_t height,
                                      std::size_t width, std::uint64_t seed) {
  require(count >= 1, "corpus size must be positive");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError("cannot create corpus directory '" + dir.string() + "'");
  std::vector<fs::path> out;
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%04zu.pgm", i);
    const fs::path p = dir / name;
    save_pgm(synthetic_image(height, width, mix(seed, i)), p);
    out.push_back(p);
  }
  return out;
}

fs::path write_manifest(const fs::path& output, const std::string& command, const json& config,
                        std::uint64_t seed) {
  fs::path path = output;
  path += ".manifest.json";
  const json m{{"command", command}, {"config", config}, {"seed", seed}, {"version", version()}};
  atomic_write(path, m.dump(2) + "\n");
  return path;
}

}  // namespace dmpcs::io
