#pragma once

#include "sgain/models.hpp"

#include <filesystem>
#include <string>

namespace sgain {

/// Model configuration error; the message carries the file, line and key.
class ModelParseError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// Reads a TOML model file (format in docs/model_format.md).
ModelSpec parse_model(const std::filesystem::path& path);
ModelSpec parse_model_string(const std::string& text, const std::string& source_name = "<string>");

/// TOML text that parse_model_string() maps back to an equal ModelSpec.
std::string serialize_model(const ModelSpec& model);

}  // namespace sgain
