#include "autoreset/harness/config_file.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <utility>

namespace autoreset::harness {

using train::RunConfig;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void type_error(const std::string& key, const std::string& value, const std::string& expected) {
  throw ConfigError("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) type_error(key, v, "a number");
    return d;
  } catch (const std::logic_error&) {
    type_error(key, v, "a number");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) type_error(key, v, "an integer");
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) type_error(key, v, "a non-negative integer");
  return out;
}

int parse_small_int(const std::string& key, const std::string& v) {
  const auto x = parse_int(key, v);
  if (x < -1'000'000'000 || x > 1'000'000'000) throw ConfigError("config key '" + key + "': value out of range");
  return static_cast<int>(x);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  type_error(key, v, "true or false");
}

// Shortest %g form that parses back to the same double.
std::string fmt(double d) {
  char buf[40];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, d);
    if (std::strtod(buf, nullptr) == d) break;
  }
  return buf;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field number_field(std::string key, T RunConfig::*member) {
  Field f;
  f.key = key;
  f.set = [key, member](RunConfig& c, const std::string& v) {
    if constexpr (std::is_same_v<T, double>) {
      c.*member = parse_double(key, v);
    } else if constexpr (std::is_same_v<T, int>) {
      c.*member = parse_small_int(key, v);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      c.*member = parse_uint(key, v);
    } else {
      c.*member = parse_int(key, v);
    }
  };
  f.get = [member](const RunConfig& c) {
    if constexpr (std::is_same_v<T, double>) {
      return fmt(c.*member);
    } else {
      return std::to_string(c.*member);
    }
  };
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    t.push_back({"env", [](RunConfig& c, const std::string& v) { c.env = v; },
                 [](const RunConfig& c) { return c.env; }});
    t.push_back({"task", [](RunConfig& c, const std::string& v) { c.task = v; },
                 [](const RunConfig& c) { return c.task; }});
    t.push_back({"baseline",
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.baseline = train::baseline_from_string(v);
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(std::string("config key '") + e.what());
                   }
                 },
                 [](const RunConfig& c) { return train::to_string(c.baseline); }});
    t.push_back(number_field("total_steps", &RunConfig::total_steps));
    t.push_back(number_field("seed", &RunConfig::seed));
    t.push_back({"p_thresh",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "auto") {
                     c.p_thresh.reset();
                   } else {
                     c.p_thresh = parse_double("p_thresh", v);
                   }
                 },
                 [](const RunConfig& c) { return fmt(c.resolved_p_thresh()); }});
    t.push_back(number_field("gamma", &RunConfig::gamma));
    t.push_back(number_field("n_step", &RunConfig::n_step));
    t.push_back(number_field("ensemble_size", &RunConfig::ensemble_size));
    t.push_back(number_field("prior_scale", &RunConfig::prior_scale));
    t.push_back(number_field("tau", &RunConfig::tau));
    t.push_back(number_field("actor_lr", &RunConfig::actor_lr));
    t.push_back(number_field("critic_lr", &RunConfig::critic_lr));
    t.push_back(number_field("classifier_lr", &RunConfig::classifier_lr));
    t.push_back({"hidden_dims",
                 [](RunConfig& c, const std::string& v) {
                   std::vector<int> dims;
                   std::stringstream ss(v);
                   std::string item;
                   while (std::getline(ss, item, ',')) dims.push_back(parse_small_int("hidden_dims", trim(item)));
                   if (dims.empty()) type_error("hidden_dims", v, "a comma separated list of integers");
                   c.hidden_dims = dims;
                 },
                 [](const RunConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.hidden_dims.size(); ++i) {
                     if (i) out += ",";
                     out += std::to_string(c.hidden_dims[i]);
                   }
                   return out;
                 }});
    t.push_back(number_field("buffer_capacity", &RunConfig::buffer_capacity));
    t.push_back(number_field("initial_capacity", &RunConfig::initial_capacity));
    t.push_back(number_field("batch_size", &RunConfig::batch_size));
    t.push_back(number_field("example_batch", &RunConfig::example_batch));
    t.push_back(number_field("segment_batch", &RunConfig::segment_batch));
    t.push_back(number_field("noise_sigma", &RunConfig::noise_sigma));
    t.push_back(number_field("warmup_steps", &RunConfig::warmup_steps));
    t.push_back(number_field("eval_interval", &RunConfig::eval_interval));
    t.push_back(number_field("checkpoint_interval", &RunConfig::checkpoint_interval));
    t.push_back({"q_thresh",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "auto") {
                     c.q_thresh.reset();
                   } else {
                     c.q_thresh = parse_double("q_thresh", v);
                   }
                 },
                 [](const RunConfig& c) { return fmt(c.resolved_q_thresh()); }});
    t.push_back({"reset_actor_objective",
                 [](RunConfig& c, const std::string& v) { c.reset_actor_objective = v; },
                 [](const RunConfig& c) { return c.reset_actor_objective; }});
    t.push_back(number_field("lnt_ensemble_size", &RunConfig::lnt_ensemble_size));
    t.push_back({"trigger_enabled",
                 [](RunConfig& c, const std::string& v) { c.trigger_enabled = parse_bool("trigger_enabled", v); },
                 [](const RunConfig& c) { return std::string(c.trigger_enabled ? "true" : "false"); }});
    t.push_back({"eval_trigger",
                 [](RunConfig& c, const std::string& v) { c.eval_trigger = parse_bool("eval_trigger", v); },
                 [](const RunConfig& c) { return std::string(c.eval_trigger ? "true" : "false"); }});
    return t;
  }();
  return table;
}

const Field& find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void assign(RunConfig& config, const std::string& key, const std::string& value) {
  if (value.empty()) throw ConfigError("config key '" + key + "': missing value");
  find_field(key).set(config, value);
}

void check(const RunConfig& config) {
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::pair<std::string, std::string> split_assignment(const std::string& line, const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
  auto key = trim(line.substr(0, eq));
  if (key.empty()) throw ConfigError(where + ": missing key");
  return {key, trim(line.substr(eq + 1))};
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return keys;
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const auto line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto [key, value] = split_assignment(line, "line " + std::to_string(line_no));
    if (!seen.insert(key).second) throw ConfigError("config key '" + key + "' given twice");
    assign(config, key, value);
  }
  check(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto [key, value] = split_assignment(assignment, "override");
  RunConfig next = config;
  assign(next, key, value);
  check(next);
  config = std::move(next);
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(config));
  return out;
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& [k, v] : config_entries(config)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace autoreset::harness
