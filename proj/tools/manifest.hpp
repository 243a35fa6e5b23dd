#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

namespace zenosos::cli {

inline constexpr const char* kVersion = "0.1.0";

std::string fnv1a_hex(std::string_view data);
/// Hash of the file bytes; throws std::runtime_error when unreadable.
std::string file_hash(const std::string& path);

struct RunManifest {
  std::string command;
  std::string input;
  std::string input_hash;
  nlohmann::json config;
  std::string version = kVersion;
  std::string started;
  double wall_seconds = 0.0;
  nlohmann::json outcome;

  /// Stable over reruns with identical inputs and flags.
  std::string id() const;
  nlohmann::json to_json() const;
};

std::string utc_timestamp();

/// `<out>.manifest.json`
std::string manifest_path_for(const std::string& out);

void write_text(const std::string& path, const std::string& text);

}  // namespace zenosos::cli
