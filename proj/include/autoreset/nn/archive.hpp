#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "autoreset/nn/mlp.hpp"

namespace autoreset::nn {

/// Thrown when an archive on disk is malformed, truncated or inconsistent.
class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// FNV-1a over the little-endian byte image of the values.
std::uint64_t digest(std::span<const double> values);

/// Collects named 64-bit arrays plus text metadata and writes them as
///   <dir>/manifest.txt  (plain text: metadata, specs, array offsets, digests)
///   <dir>/arrays.bin    (concatenated little-endian float64 arrays)
class ArchiveWriter {
 public:
  void add_meta(const std::string& key, const std::string& value);
  void add_array(const std::string& name, std::span<const double> values);
  void add_params(const std::string& name, const MlpParams& params);
  void add_adam(const std::string& name, const AdamState& state);

  void write(const std::filesystem::path& dir) const;

 private:
  struct Entry {
    std::string name;
    std::size_t offset;
    std::size_t count;
    std::uint64_t digest;
  };
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::pair<std::string, std::string>> specs_;
  std::vector<Entry> entries_;
  std::vector<double> data_;
};

class ArchiveReader {
 public:
  /// Parses and validates the manifest against arrays.bin; throws ArchiveError.
  static ArchiveReader open(const std::filesystem::path& dir);

  bool has_meta(const std::string& key) const { return meta_.count(key) != 0; }
  const std::string& meta(const std::string& key) const;
  const std::map<std::string, std::string>& all_meta() const { return meta_; }

  bool has_array(const std::string& name) const { return arrays_.count(name) != 0; }
  const std::vector<double>& array(const std::string& name) const;
  std::vector<double> array(const std::string& name, std::size_t expected_count) const;

  MlpParams params(const std::string& name) const;
  AdamState adam(const std::string& name, const MlpParams& shape_of) const;

 private:
  std::map<std::string, std::string> meta_;
  std::map<std::string, std::string> specs_;
  std::map<std::string, std::vector<double>> arrays_;
};

}  // namespace autoreset::nn
