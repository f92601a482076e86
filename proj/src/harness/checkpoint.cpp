#include "autoreset/harness/checkpoint.hpp"

#include <string>

#include "autoreset/harness/config_file.hpp"

namespace autoreset::harness {

void save_checkpoint(const train::Trainer& trainer, std::int64_t metrics_rows, const std::filesystem::path& dir) {
  nn::ArchiveWriter out;
  for (const auto& [key, value] : config_entries(trainer.config())) out.add_meta("config." + key, value);
  out.add_meta("checkpoint.seed", std::to_string(trainer.config().seed));
  out.add_meta("checkpoint.global_step", std::to_string(trainer.global_step()));
  out.add_meta("checkpoint.metrics_rows", std::to_string(metrics_rows));
  trainer.save(out);

  // Write beside the target and swap, so an interrupted save leaves the
  // previous checkpoint intact.
  auto staging = dir;
  staging += ".partial";
  std::filesystem::remove_all(staging);
  out.write(staging);
  std::filesystem::remove_all(dir);
  std::filesystem::rename(staging, dir);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto in = nn::ArchiveReader::open(dir);
  std::string text;
  for (const auto& key : config_keys()) {
    const auto meta_key = "config." + key;
    if (!in.has_meta(meta_key)) throw nn::ArchiveError("checkpoint: manifest lacks " + meta_key);
    text += key + " = " + in.meta(meta_key) + "\n";
  }
  train::RunConfig config;
  try {
    config = parse_config(text);
  } catch (const ConfigError& e) {
    throw nn::ArchiveError(std::string("checkpoint: bad config echo: ") + e.what());
  }

  LoadedCheckpoint loaded;
  loaded.trainer = std::make_unique<train::Trainer>(config);
  loaded.trainer->load(in);
  loaded.metrics_rows = std::stoll(in.meta("checkpoint.metrics_rows"));
  if (std::to_string(loaded.trainer->global_step()) != in.meta("checkpoint.global_step")) {
    throw nn::ArchiveError("checkpoint: global_step mismatch");
  }
  return loaded;
}

}  // namespace autoreset::harness
