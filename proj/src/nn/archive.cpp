#include "autoreset/nn/archive.hpp"

#include <bit>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace autoreset::nn {

namespace {

constexpr const char* kMagic = "autoreset-archive 1";

void put_le(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

void check_token(const std::string& token, const char* what) {
  if (token.empty() || token.find_first_of(" \t\r\n") != std::string::npos) {
    throw std::invalid_argument(std::string("archive: invalid ") + what + " '" + token + "'");
  }
}

template <typename M>
void append_values(std::vector<double>& out, const M& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m(i, j));
  }
}

template <typename M>
std::size_t read_values(const std::vector<double>& in, std::size_t pos, M& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = in[pos++];
  }
  return pos;
}

std::vector<double> flatten_layers(const std::vector<DenseLayer>& layers) {
  std::vector<double> out;
  for (const auto& layer : layers) {
    append_values(out, layer.weight);
    append_values(out, layer.bias);
  }
  return out;
}

}  // namespace

std::uint64_t digest(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xFFu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void ArchiveWriter::add_meta(const std::string& key, const std::string& value) {
  check_token(key, "meta key");
  if (value.find_first_of("\r\n") != std::string::npos) {
    throw std::invalid_argument("archive: meta value for '" + key + "' spans lines");
  }
  meta_.emplace_back(key, value);
}

void ArchiveWriter::add_array(const std::string& name, std::span<const double> values) {
  check_token(name, "array name");
  entries_.push_back({name, data_.size() * 8, values.size(), digest(values)});
  data_.insert(data_.end(), values.begin(), values.end());
}

void ArchiveWriter::add_params(const std::string& name, const MlpParams& params) {
  check_token(name, "params name");
  specs_.emplace_back(name, params.spec().describe());
  const auto flat = flatten_layers(params.layers());
  add_array(name, flat);
}

void ArchiveWriter::add_adam(const std::string& name, const AdamState& state) {
  add_array(name + ".m", flatten_layers(state.first_moment));
  add_array(name + ".v", flatten_layers(state.second_moment));
  add_meta(name + ".step", std::to_string(state.step_count));
}

void ArchiveWriter::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::string bytes;
  bytes.reserve(data_.size() * 8);
  for (double v : data_) put_le(bytes, v);
  {
    std::ofstream bin(dir / "arrays.bin", std::ios::binary | std::ios::trunc);
    bin.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!bin) throw ArchiveError("archive: failed writing " + (dir / "arrays.bin").string());
  }
  std::ofstream man(dir / "manifest.txt", std::ios::trunc);
  man << kMagic << '\n';
  for (const auto& [k, v] : meta_) man << "meta " << k << ' ' << v << '\n';
  for (const auto& [k, v] : specs_) man << "spec " << k << ' ' << v << '\n';
  for (const auto& e : entries_) {
    man << "array " << e.name << ' ' << e.offset << ' ' << e.count << ' ' << std::hex << std::setw(16)
        << std::setfill('0') << e.digest << std::dec << '\n';
  }
  man << "end " << bytes.size() << '\n';
  if (!man) throw ArchiveError("archive: failed writing " + (dir / "manifest.txt").string());
}

ArchiveReader ArchiveReader::open(const std::filesystem::path& dir) {
  std::ifstream man(dir / "manifest.txt");
  if (!man) throw ArchiveError("archive: cannot open " + (dir / "manifest.txt").string());
  std::ifstream bin(dir / "arrays.bin", std::ios::binary);
  if (!bin) throw ArchiveError("archive: cannot open " + (dir / "arrays.bin").string());
  const std::string bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

  ArchiveReader reader;
  std::string line;
  if (!std::getline(man, line) || line != kMagic) throw ArchiveError("archive: bad manifest header");
  bool ended = false;
  while (std::getline(man, line)) {
    if (line.empty()) continue;
    if (ended) throw ArchiveError("archive: content after end marker");
    std::istringstream is(line);
    std::string kind, name;
    is >> kind;
    if (kind == "end") {
      std::size_t total = 0;
      if (!(is >> total)) throw ArchiveError("archive: malformed end marker");
      if (total != bytes.size()) {
        throw ArchiveError("archive: arrays.bin holds " + std::to_string(bytes.size()) + " bytes, manifest expects " +
                           std::to_string(total));
      }
      ended = true;
      continue;
    }
    if (!(is >> name)) throw ArchiveError("archive: malformed line '" + line + "'");
    if (kind == "meta" || kind == "spec") {
      std::string rest;
      std::getline(is, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      (kind == "meta" ? reader.meta_ : reader.specs_)[name] = rest;
    } else if (kind == "array") {
      std::size_t offset = 0, count = 0;
      std::string hex;
      if (!(is >> offset >> count >> hex)) throw ArchiveError("archive: malformed array entry '" + name + "'");
      if (offset % 8 != 0 || offset + count * 8 > bytes.size()) {
        throw ArchiveError("archive: array '" + name + "' lies outside arrays.bin");
      }
      std::vector<double> values(count);
      const auto* base = reinterpret_cast<const unsigned char*>(bytes.data()) + offset;
      for (std::size_t i = 0; i < count; ++i) values[i] = get_le(base + 8 * i);
      if (std::stoull(hex, nullptr, 16) != digest(values)) {
        throw ArchiveError("archive: digest mismatch for array '" + name + "'");
      }
      reader.arrays_[name] = std::move(values);
    } else {
      throw ArchiveError("archive: unknown manifest entry '" + kind + "'");
    }
  }
  if (!ended) throw ArchiveError("archive: manifest truncated (no end marker)");
  return reader;
}

const std::string& ArchiveReader::meta(const std::string& key) const {
  auto it = meta_.find(key);
  if (it == meta_.end()) throw ArchiveError("archive: missing meta '" + key + "'");
  return it->second;
}

const std::vector<double>& ArchiveReader::array(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw ArchiveError("archive: missing array '" + name + "'");
  return it->second;
}

std::vector<double> ArchiveReader::array(const std::string& name, std::size_t expected_count) const {
  const auto& values = array(name);
  if (values.size() != expected_count) {
    throw ArchiveError("archive: array '" + name + "' has " + std::to_string(values.size()) + " values, expected " +
                       std::to_string(expected_count));
  }
  return values;
}

MlpParams ArchiveReader::params(const std::string& name) const {
  auto it = specs_.find(name);
  if (it == specs_.end()) throw ArchiveError("archive: missing spec for '" + name + "'");
  MlpSpec spec;
  try {
    spec = MlpSpec::parse(it->second);
  } catch (const std::exception& e) {
    throw ArchiveError("archive: bad spec for '" + name + "': " + e.what());
  }
  MlpParams shape = MlpParams::zeros(spec);
  const auto values = array(name, shape.parameter_count());
  std::vector<DenseLayer> layers = shape.layers();
  std::size_t pos = 0;
  for (auto& layer : layers) {
    pos = read_values(values, pos, layer.weight);
    pos = read_values(values, pos, layer.bias);
  }
  return MlpParams(spec, std::move(layers));
}

AdamState ArchiveReader::adam(const std::string& name, const MlpParams& shape_of) const {
  AdamState state = AdamState::for_params(shape_of);
  const auto m = array(name + ".m", shape_of.parameter_count());
  const auto v = array(name + ".v", shape_of.parameter_count());
  std::size_t pm = 0, pv = 0;
  for (std::size_t i = 0; i < state.first_moment.size(); ++i) {
    pm = read_values(m, pm, state.first_moment[i].weight);
    pm = read_values(m, pm, state.first_moment[i].bias);
    pv = read_values(v, pv, state.second_moment[i].weight);
    pv = read_values(v, pv, state.second_moment[i].bias);
  }
  state.step_count = std::stoll(meta(name + ".step"));
  return state;
}

}  // namespace autoreset::nn
