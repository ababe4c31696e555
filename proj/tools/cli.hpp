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


// Command-line front end. Links only against the dmpcs C interface.
#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dmpcs_cli {

enum ExitCode { kOk = 0, kValidation = 1, kRuntime = 2 };

/// Thrown for anything the user can fix: bad flags, unknown keys, bad values.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class KeyType { integer, number, boolean, string };

struct KeySpec {
  std::string name;
  KeyType type;
  nlohmann::json fallback;
  std::string help;
};

/// The published configuration schema; every command shares it.
const std::vector<KeySpec>& schema();
const KeySpec* find_key(const std::string& name);

/// Command-specific defaults that differ from the schema fallback.
nlohmann::json defaults_for(const std::string& command);

/// Converts `text` to the key's type, throwing UsageError naming the key.
nlohmann::json parse_value(const KeySpec& key, const std::string& text);
/// Checks a JSON value against the key's type (config files).
nlohmann::json check_value(const KeySpec& key, const nlohmann::json& value);

/// defaults < config file < --set overrides < dedicated flags.
nlohmann::json resolve_config(const std::string& command, const std::string& config_path,
                              const std::vector<std::string>& sets,
                              const std::map<std::string, std::string>& flags);

/// Reflect-pads an H x W image (row-major) so both sides are multiples of `block`.
std::vector<double> reflect_pad(const std::vector<double>& image, std::size_t height,
                                std::size_t width, std::size_t block, std::size_t* padded_h,
                                std::size_t* padded_w);
/// Top-left `height` x `width` window of a padded image.
std::vector<double> crop(const std::vector<double>& image, std::size_t padded_w,
                         std::size_t height, std::size_t width);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dmpcs_cli
