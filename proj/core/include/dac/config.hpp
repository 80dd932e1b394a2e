#pragma once

#include <string>

#include "dac/curriculum.hpp"
#include "dac/trainer.hpp"

namespace dac {

// Everything a run needs, round-trippable through config.json. Absent fields
// keep their defaults; unknown fields are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  EnvConfig env;
  TrainConfig train;
  CurriculumConfig curriculum;
  DenoiserConfig denoiser;
  QNetworkConfig critic;
};

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json_text(const std::string& text);
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);

}  // namespace dac
