#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cdrgeo/ingest.hpp"
#include "cdrgeo/synth.hpp"

namespace cdrgeo::cli {

/// Flat key = value run configuration. Every key has a documented default;
/// file values override defaults and flags override the file. Relative paths
/// resolve against the directory of the file that set them (the working
/// directory for flags).
class RunConfig {
 public:
  struct Key {
    std::string_view name;
    std::string_view fallback;
    std::string_view help;
  };
  static std::span<const Key> keys();

  RunConfig();

  /// Reads `key = value` lines; `#` starts a comment.
  void load_file(const std::filesystem::path& file);
  void set(std::string_view key, std::string value,
           std::filesystem::path base = std::filesystem::current_path());
  /// `key=value` form used by --set.
  void set_assignment(std::string_view assignment);

  const std::string& get(std::string_view key) const;
  bool has_value(std::string_view key) const { return !get(key).empty(); }
  double get_double(std::string_view key) const;
  long get_int(std::string_view key) const;
  std::vector<std::string> get_list(std::string_view key) const;
  /// Resolved path; throws InputError when the key is empty.
  std::filesystem::path path(std::string_view key) const;

  StudyConfig study() const;
  synth::WorldConfig world() const;

  /// Effective values, sorted by key.
  std::map<std::string, std::string> snapshot() const;

 private:
  struct Entry {
    std::string value;
    std::filesystem::path base;
  };
  std::map<std::string, Entry, std::less<>> entries_;
};

}  // namespace cdrgeo::cli
