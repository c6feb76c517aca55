#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cdrgeo::cli {

std::string sha256_file(const std::filesystem::path& file);

/// Output files are written into a private staging directory and moved into
/// place only by commit(), followed by the manifest. A run that throws
/// before commit() leaves nothing behind in the output directory.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir);
  ~OutputDir();
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  /// Opens a new staged file. Names must be unique within a run.
  std::ofstream open(const std::string& name);
  bool has(std::string_view name) const;
  const std::filesystem::path& dir() const { return dir_; }

  /// Moves staged files into place and writes manifest.json (with an
  /// `outputs` list of name, bytes and sha256) atomically.
  void commit(nlohmann::ordered_json manifest);

 private:
  std::filesystem::path dir_;
  std::filesystem::path staging_;
  std::vector<std::string> files_;
  bool committed_ = false;
};

/// Minimal CSV writer; fields are escaped when needed.
class CsvWriter {
 public:
  CsvWriter(std::ofstream out, std::initializer_list<std::string_view> header);

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((put(fields, first)), ...);
    out_ << '\n';
  }

 private:
  void put(std::string_view field, bool& first);
  std::ofstream out_;
};

class StageTimer;

/// Wall-clock seconds per named stage, in execution order.
class Timings {
 public:
  void add(std::string stage, double seconds) { stages_.emplace_back(std::move(stage), seconds); }
  nlohmann::ordered_json to_json() const;

 private:
  std::vector<std::pair<std::string, double>> stages_;
};

class StageTimer {
 public:
  StageTimer(Timings& timings, std::string stage);
  ~StageTimer();

 private:
  Timings& timings_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace cdrgeo::cli
