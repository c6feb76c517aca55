#include "output.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <memory>

#include <openssl/evp.h>
#include <unistd.h>

#include "cdrgeo/error.hpp"
#include "cdrgeo/text.hpp"

namespace cdrgeo::cli {
namespace fs = std::filesystem;

std::string sha256_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open " + file.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw InvariantError("sha256 initialisation failed");
  std::vector<char> buffer(1 << 20);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

OutputDir::OutputDir(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw InputError("cannot create output directory " + dir_.string() + ": " + ec.message());
  staging_ = dir_ / (".staging-" + std::to_string(::getpid()));
  fs::remove_all(staging_, ec);
  fs::create_directory(staging_, ec);
  if (ec) throw InputError("cannot create staging directory in " + dir_.string() + ": " + ec.message());
}

OutputDir::~OutputDir() {
  std::error_code ec;
  fs::remove_all(staging_, ec);
}

std::ofstream OutputDir::open(const std::string& name) {
  if (has(name)) throw InvariantError("output written twice: " + name);
  files_.push_back(name);
  std::ofstream out(staging_ / name, std::ios::binary);
  if (!out) throw InputError("cannot write " + (staging_ / name).string());
  return out;
}

bool OutputDir::has(std::string_view name) const {
  return std::find(files_.begin(), files_.end(), name) != files_.end();
}

void OutputDir::commit(nlohmann::ordered_json manifest) {
  if (committed_) throw InvariantError("output directory committed twice");
  std::vector<std::string> sorted = files_;
  std::sort(sorted.begin(), sorted.end());
  auto outputs = nlohmann::ordered_json::array();
  for (const std::string& name : sorted) {
    const fs::path staged = staging_ / name;
    outputs.push_back({{"file", name}, {"bytes", fs::file_size(staged)}, {"sha256", sha256_file(staged)}});
  }
  manifest["outputs"] = std::move(outputs);
  for (const std::string& name : sorted) fs::rename(staging_ / name, dir_ / name);

  const fs::path tmp = staging_ / "manifest.json";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << manifest.dump(2) << '\n';
    if (!out) throw InputError("cannot write manifest in " + dir_.string());
  }
  fs::rename(tmp, dir_ / "manifest.json");
  committed_ = true;
}

CsvWriter::CsvWriter(std::ofstream out, std::initializer_list<std::string_view> header) : out_(std::move(out)) {
  bool first = true;
  for (std::string_view h : header) put(h, first);
  out_ << '\n';
}

void CsvWriter::put(std::string_view field, bool& first) {
  if (!first) out_ << ',';
  first = false;
  out_ << csv_escape(field);
}

nlohmann::ordered_json Timings::to_json() const {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& [stage, s] : stages_)
    out[stage] = out.contains(stage) ? out[stage].get<double>() + s : s;
  return out;
}

StageTimer::StageTimer(Timings& timings, std::string stage)
    : timings_(timings), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}

StageTimer::~StageTimer() {
  const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
  timings_.add(std::move(stage_), d.count());
}

}  // namespace cdrgeo::cli
