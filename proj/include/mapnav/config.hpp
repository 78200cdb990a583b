#ifndef MAPNAV_CONFIG_HPP_
#define MAPNAV_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "mapnav/network.hpp"
#include "mapnav/ppo.hpp"
#include "mapnav/reward.hpp"
#include "mapnav/scenarios.hpp"
#include "mapnav/trainer.hpp"
#include "mapnav/world_state.hpp"

namespace mapnav {

struct SaliencySettings {
  int stride = 5;
  int blur_radius = 5;
};

/// Everything one run needs. The network's sensor and map dimensions are not
/// stored separately: they always follow `world`.
struct RunConfig {
  WorldConfig world;
  RewardParams reward;
  NetConfig net;
  PpoConfig ppo;
  ScenarioSpec scenario;
  TrainSettings train;
  SaliencySettings saliency;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir = "out";

  /// net with the dimensions copied from world.
  NetConfig resolved_net() const;
  void validate() const;
};

// Every parser rejects unknown keys and wrong types with a ConfigError that
// names the offending field path.

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);
void save_json(const nlohmann::json& j, const std::filesystem::path& path);

ScenarioSpec scenario_from_json(const nlohmann::json& j, const std::string& where = "scenario");
nlohmann::json to_json(const ScenarioSpec& spec);
ScenarioSpec load_scenario(const std::filesystem::path& path);

WorldConfig world_config_from_json(const nlohmann::json& j, const std::string& where = "world");
nlohmann::json to_json(const WorldConfig& config);
NetConfig net_config_from_json(const nlohmann::json& j, const std::string& where = "net");
nlohmann::json to_json(const NetConfig& config);
PpoConfig ppo_config_from_json(const nlohmann::json& j, const std::string& where = "ppo");
nlohmann::json to_json(const PpoConfig& config);
RewardParams reward_from_json(const nlohmann::json& j, const std::string& where = "reward");
nlohmann::json to_json(const RewardParams& params);

/// Generated scene: starts, goals, headings and obstacle polygons.
nlohmann::json world_state_to_json(const WorldState& state);

}  // namespace mapnav

#endif  // MAPNAV_CONFIG_HPP_
