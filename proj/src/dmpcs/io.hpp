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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dmpcs/tensor.hpp"
#include "dmpcs/unfolded.hpp"

namespace dmpcs::io {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path);
/// Writes to a sibling temp file, then renames it over `path`.
void atomic_write(const fs::path& path, const std::string& bytes);

// Images: P5 grayscale (maxval up to 65535) and P6 colour reduced to luma.
Tensor decode_pnm(const std::string& bytes, const std::string& what = "image");
Tensor load_pgm(const fs::path& path);
std::string encode_pgm(const Tensor& image);
void save_pgm(const Tensor& image, const fs::path& path);

// "DTN1" | rank u32 LE | dims u32 LE | f64 LE payload.
std::string encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::string& bytes, const std::string& what = "tensor");
void save_tensor(const Tensor& t, const fs::path& path);
Tensor load_tensor(const fs::path& path);

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json metadata;  // config echo, schedule, seed, history
  unfolded::ParameterSet params;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

nlohmann::json config_to_json(const unfolded::UnfoldedConfig& cfg);
unfolded::UnfoldedConfig config_from_json(const nlohmann::json& j);

/// Model state plus caller metadata (kept under "run").
Checkpoint model_checkpoint(const unfolded::UnfoldedModel& model, const nlohmann::json& run = {});
unfolded::UnfoldedModel model_from_checkpoint(const Checkpoint& ckpt);
/// Copies the checkpoint's tensors into `model`; the first parameter that is
/// missing or shaped differently is named in the error.
void load_parameters_into(unfolded::UnfoldedModel& model, const unfolded::ParameterSet& params);

void save_checkpoint(const unfolded::UnfoldedModel& model, const fs::path& path,
                     const nlohmann::json& run = {});
unfolded::UnfoldedModel load_checkpoint(const fs::path& path, nlohmann::json* metadata = nullptr);

struct DatasetHandle {
  fs::path root;
  std::vector<fs::path> items;  // sorted
  std::vector<Tensor> images;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::size_t crop = 32;
  bool flip = true;
  double flip_probability = 0.5;
  std::uint64_t seed = 0;

  /// Random crops (and flips) of the training items, reshuffled per epoch.
  std::vector<Tensor> epoch_patches(std::size_t epoch) const;
  std::vector<Tensor> validation_images() const;
  std::vector<Tensor> training_images() const;
};

DatasetHandle open_dataset(const fs::path& root, std::size_t crop, bool flip, double val_fraction,
                           std::uint64_t seed);

/// Piecewise-smooth phantom with a texture patch, values in [0,1], 8-bit quantised.
Tensor synthetic_image(std::size_t height, std::size_t width, std::uint64_t seed);
std::vector<fs::path> generate_corpus(const fs::path& dir, std::size_t count, std::size_t height,
                                      std::size_t width, std::uint64_t seed);

std::string version();

/// Writes `<output>.manifest.json` with the config echo, seed and version.
fs::path write_manifest(const fs::path& output, const std::string& command,
                        const nlohmann::json& config, std::uint64_t seed);

}  // namespace dmpcs::io
