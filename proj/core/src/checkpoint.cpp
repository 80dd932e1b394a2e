#include "dac/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace dac {

using nlohmann::json;

namespace {

json params_to_json(std::vector<ParamView> params) {
  json out = json::object();
  for (const ParamView& p : params) {
    out[p.name] = std::vector<double>(p.value, p.value + p.size);
  }
  return out;
}

void params_from_json(const json& j, std::vector<ParamView> params,
                      const std::string& what) {
  for (ParamView& p : params) {
    if (!j.contains(p.name)) {
      throw std::runtime_error("checkpoint: missing parameter " + what + "." + p.name);
    }
    const auto& arr = j.at(p.name);
    if (arr.size() != p.size) {
      throw std::runtime_error("checkpoint: size mismatch for " + what + "." + p.name);
    }
    for (std::size_t i = 0; i < p.size; ++i) p.value[i] = arr[i].get<double>();
  }
}

json optimizer_to_json(AdamOptimizer& opt) {
  return json{{"step", opt.step_count()},
              {"m", opt.first_moments()},
              {"v", opt.second_moments()}};
}

void optimizer_from_json(const json& j, AdamOptimizer& opt) {
  opt.set_step_count(j.at("step").get<long>());
  opt.first_moments() = j.at("m").get<Vec>();
  opt.second_moments() = j.at("v").get<Vec>();
}

}  // namespace

void save_checkpoint(const std::string& path, Trainer& trainer,
                     const CheckpointMeta& meta) {
  json j;
  j["version"] = kCheckpointVersion;
  j["denoiser_arch"] = trainer.denoiser.architecture_id();
  j["critic_arch"] = trainer.critics.q1.architecture_id();
  j["meta"] = {{"stage", meta.stage},
               {"episodes_run", meta.episodes_run},
               {"seed", meta.seed}};
  j["denoiser"] = params_to_json(trainer.denoiser.params());
  j["q1"] = params_to_json(trainer.critics.q1.params());
  j["q2"] = params_to_json(trainer.critics.q2.params());
  j["q1_target"] = params_to_json(trainer.critics.q1_target.params());
  j["q2_target"] = params_to_json(trainer.critics.q2_target.params());
  j["policy_opt"] = optimizer_to_json(trainer.policy_opt);
  j["critic_opt"] = optimizer_to_json(trainer.critic_opt);

  std::ofstream os(path);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.precision(17);
  os << j.dump();
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

CheckpointMeta load_checkpoint(const std::string& path, Trainer& trainer) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  json j;
  is >> j;

  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version in " + path);
  }
  if (j.at("denoiser_arch").get<std::string>() != trainer.denoiser.architecture_id()) {
    throw std::runtime_error("checkpoint: denoiser architecture mismatch in " + path);
  }
  if (j.at("critic_arch").get<std::string>() != trainer.critics.q1.architecture_id()) {
    throw std::runtime_error("checkpoint: critic architecture mismatch in " + path);
  }

  params_from_json(j.at("denoiser"), trainer.denoiser.params(), "denoiser");
  params_from_json(j.at("q1"), trainer.critics.q1.params(), "q1");
  params_from_json(j.at("q2"), trainer.critics.q2.params(), "q2");
  params_from_json(j.at("q1_target"), trainer.critics.q1_target.params(), "q1_target");
  params_from_json(j.at("q2_target"), trainer.critics.q2_target.params(), "q2_target");
  if (j.contains("policy_opt")) optimizer_from_json(j.at("policy_opt"), trainer.policy_opt);
  if (j.contains("critic_opt")) optimizer_from_json(j.at("critic_opt"), trainer.critic_opt);

  CheckpointMeta meta;
  const json& m = j.at("meta");
  meta.stage = m.at("stage").get<int>();
  meta.episodes_run = m.at("episodes_run").get<int>();
  meta.seed = m.at("seed").get<std::uint64_t>();
  return meta;
}

}  // namespace dac
