#include "mapnav/config.hpp"

#include <fstream>
#include <set>

#include "mapnav/errors.hpp"

namespace mapnav {

using nlohmann::json;

namespace {

// Reads fields of one JSON object and rejects anything left unread.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError("'" + where_ + "' must be an object");
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void num(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError("field '" + path(key) + "' must be a number");
    out = v.get<double>();
  }

  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError("field '" + path(key) + "' must be an integer");
    out = v.get<int>();
  }

  void u64(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
      throw ConfigError("field '" + path(key) + "' must be a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void str(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError("field '" + path(key) + "' must be a string");
    out = v.get<std::string>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) throw ConfigError("unknown key '" + path(it.key()) + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_pair(Fields& f, const std::string& key, double& a, double& b) {
  if (!f.has(key)) return;
  const json& v = f.raw(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError("field '" + f.path(key) + "' must be a pair of numbers");
  a = v[0].get<double>();
  b = v[1].get<double>();
}

void read_pair(Fields& f, const std::string& key, int& a, int& b) {
  if (!f.has(key)) return;
  const json& v = f.raw(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    throw ConfigError("field '" + f.path(key) + "' must be a pair of integers");
  a = v[0].get<int>();
  b = v[1].get<int>();
}

}  // namespace

// ---------------------------------------------------------------- world / reward

WorldConfig world_config_from_json(const json& j, const std::string& where) {
  WorldConfig c;
  Fields f(j, where);
  f.num("robot_radius_m", c.robot_radius_m);
  read_pair(f, "global_extent_m", c.global_extent_m.height, c.global_extent_m.width);
  read_pair(f, "map_cells", c.map_cells.rows, c.map_cells.cols);
  read_pair(f, "local_extent_m", c.local_extent_m.height, c.local_extent_m.width);
  f.num("dt_s", c.dt_s);
  f.num("v_max_mps", c.v_max_mps);
  f.integer("scan_beams", c.scan_beams);
  f.num("scan_fov_rad", c.scan_fov_rad);
  f.num("scan_range_m", c.scan_range_m);
  f.integer("scan_frames", c.scan_frames);
  f.num("time_limit_s", c.time_limit_s);
  f.finish();
  c.validate();
  return c;
}

json to_json(const WorldConfig& c) {
  return {{"robot_radius_m", c.robot_radius_m},
          {"global_extent_m", {c.global_extent_m.height, c.global_extent_m.width}},
          {"map_cells", {c.map_cells.rows, c.map_cells.cols}},
          {"local_extent_m", {c.local_extent_m.height, c.local_extent_m.width}},
          {"dt_s", c.dt_s},
          {"v_max_mps", c.v_max_mps},
          {"scan_beams", c.scan_beams},
          {"scan_fov_rad", c.scan_fov_rad},
          {"scan_range_m", c.scan_range_m},
          {"scan_frames", c.scan_frames},
          {"time_limit_s", c.time_limit_s}};
}

RewardParams reward_from_json(const json& j, const std::string& where) {
  RewardParams r;
  Fields f(j, where);
  f.num("r_arrival", r.r_arrival);
  f.num("r_approaching", r.r_approaching);
  f.num("r_collision", r.r_collision);
  f.num("r_smooth", r.r_smooth);
  f.num("arrival_dist_m", r.arrival_dist_m);
  f.num("omega_threshold", r.omega_threshold);
  f.finish();
  r.validate();
  return r;
}

json to_json(const RewardParams& r) {
  return {{"r_arrival", r.r_arrival},           {"r_approaching", r.r_approaching},
          {"r_collision", r.r_collision},       {"r_smooth", r.r_smooth},
          {"arrival_dist_m", r.arrival_dist_m}, {"omega_threshold", r.omega_threshold}};
}

// ---------------------------------------------------------------- net / ppo

NetConfig net_config_from_json(const json& j, const std::string& where) {
  NetConfig c;
  Fields f(j, where);
  std::string mode = to_string(c.map_input);
  f.str("map_input", mode);
  c.map_input = parse_map_input(mode);
  f.integer("scan_filters", c.scan_filters);
  f.integer("scan_kernel1", c.scan_kernel1);
  f.integer("scan_kernel2", c.scan_kernel2);
  f.integer("scan_stride", c.scan_stride);
  f.integer("scan_fc", c.scan_fc);
  if (f.has("map_filters")) {
    const json& v = f.raw("map_filters");
    if (!v.is_array() || v.size() != 3) throw ConfigError("field '" + f.path("map_filters") + "' must hold 3 integers");
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number_integer()) throw ConfigError("field '" + f.path("map_filters") + "' must hold 3 integers");
      c.map_filters[i] = v[i].get<int>();
    }
  }
  f.integer("map_kernel", c.map_kernel);
  f.integer("pool_kernel", c.pool_kernel);
  f.integer("pool_stride", c.pool_stride);
  f.integer("map_fc1", c.map_fc1);
  f.integer("map_fc2", c.map_fc2);
  f.integer("trunk1", c.trunk1);
  f.integer("trunk2", c.trunk2);
  f.num("log_std_init", c.log_std_init);
  f.finish();
  return c;
}

json to_json(const NetConfig& c) {
  return {{"map_input", to_string(c.map_input)},
          {"scan_filters", c.scan_filters},
          {"scan_kernel1", c.scan_kernel1},
          {"scan_kernel2", c.scan_kernel2},
          {"scan_stride", c.scan_stride},
          {"scan_fc", c.scan_fc},
          {"map_filters", c.map_filters},
          {"map_kernel", c.map_kernel},
          {"pool_kernel", c.pool_kernel},
          {"pool_stride", c.pool_stride},
          {"map_fc1", c.map_fc1},
          {"map_fc2", c.map_fc2},
          {"trunk1", c.trunk1},
          {"trunk2", c.trunk2},
          {"log_std_init", c.log_std_init}};
}

PpoConfig ppo_config_from_json(const json& j, const std::string& where) {
  PpoConfig c;
  Fields f(j, where);
  f.num("clip_eps", c.clip_eps);
  f.num("gamma", c.gamma);
  f.num("lambda", c.lambda);
  f.integer("epochs_per_update", c.epochs_per_update);
  f.integer("minibatch_size", c.minibatch_size);
  f.num("learning_rate", c.learning_rate);
  f.num("value_coef", c.value_coef);
  f.num("entropy_coef", c.entropy_coef);
  f.num("max_grad_norm", c.max_grad_norm);
  f.integer("stage0_iters", c.stage0_iters);
  f.integer("stage1_iters", c.stage1_iters);
  f.integer("stage2_iters", c.stage2_iters);
  f.integer("agents_per_env", c.agents_per_env);
  f.integer("envs_per_iter", c.envs_per_iter);
  f.finish();
  c.validate();
  return c;
}

json to_json(const PpoConfig& c) {
  return {{"clip_eps", c.clip_eps},
          {"gamma", c.gamma},
          {"lambda", c.lambda},
          {"epochs_per_update", c.epochs_per_update},
          {"minibatch_size", c.minibatch_size},
          {"learning_rate", c.learning_rate},
          {"value_coef", c.value_coef},
          {"entropy_coef", c.entropy_coef},
          {"max_grad_norm", c.max_grad_norm},
          {"stage0_iters", c.stage0_iters},
          {"stage1_iters", c.stage1_iters},
          {"stage2_iters", c.stage2_iters},
          {"agents_per_env", c.agents_per_env},
          {"envs_per_iter", c.envs_per_iter}};
}

// ---------------------------------------------------------------- scenarios

ScenarioSpec scenario_from_json(const json& j, const std::string& where) {
  Fields f(j, where);
  std::string kind;
  f.str("kind", kind);
  ScenarioSpec spec;
  if (kind == "circle_crossing") {
    CircleCrossing k;
    f.integer("n", k.n);
    f.num("radius_m", k.radius_m);
    spec.kind = k;
  } else if (kind == "narrow_corridor") {
    NarrowCorridor k;
    f.integer("n", k.n);
    f.num("corridor_width_m", k.corridor_width_m);
    f.num("corridor_length_m", k.corridor_length_m);
    spec.kind = k;
  } else if (kind == "room_with_obstacles") {
    RoomWithObstacles k;
    f.integer("n", k.n);
    f.integer("obstacle_count", k.obstacle_count);
    f.num("room_size_m", k.room_size_m);
    spec.kind = k;
  } else if (kind == "random_starts_goals") {
    RandomStartsGoals k;
    f.integer("n", k.n);
    f.integer("obstacle_count", k.obstacle_count);
    f.num("extent_m", k.extent_m);
    spec.kind = k;
  } else if (kind == "room_evacuation") {
    RoomEvacuation k;
    f.integer("n", k.n);
    f.num("door_width_m", k.door_width_m);
    f.num("room_size_m", k.room_size_m);
    spec.kind = k;
  } else if (kind == "free_random") {
    FreeRandom k;
    f.integer("n", k.n);
    f.num("extent_m", k.extent_m);
    f.num("goal_distance_m", k.goal_distance_m);
    spec.kind = k;
  } else {
    throw ConfigError("field '" + f.path("kind") + "' must be one of circle_crossing, narrow_corridor, "
                      "room_with_obstacles, random_starts_goals, room_evacuation, free_random; got '" + kind + "'");
  }
  f.u64("seed", spec.seed);
  f.num("clearance_m", spec.clearance_m);
  f.finish();
  if (agent_count(spec.kind) < 1) throw ConfigError("field '" + f.path("n") + "' must be >= 1");
  return spec;
}

json to_json(const ScenarioSpec& spec) {
  json j = {{"kind", kind_name(spec.kind)}, {"seed", spec.seed}, {"clearance_m", spec.clearance_m}};
  struct Visitor {
    json& j;
    void operator()(const CircleCrossing& k) const {
      j["n"] = k.n;
      j["radius_m"] = k.radius_m;
    }
    void operator()(const NarrowCorridor& k) const {
      j["n"] = k.n;
      j["corridor_width_m"] = k.corridor_width_m;
      j["corridor_length_m"] = k.corridor_length_m;
    }
    void operator()(const RoomWithObstacles& k) const {
      j["n"] = k.n;
      j["obstacle_count"] = k.obstacle_count;
      j["room_size_m"] = k.room_size_m;
    }
    void operator()(const RandomStartsGoals& k) const {
      j["n"] = k.n;
      j["obstacle_count"] = k.obstacle_count;
      j["extent_m"] = k.extent_m;
    }
    void operator()(const RoomEvacuation& k) const {
      j["n"] = k.n;
      j["door_width_m"] = k.door_width_m;
      j["room_size_m"] = k.room_size_m;
    }
    void operator()(const FreeRandom& k) const {
      j["n"] = k.n;
      j["extent_m"] = k.extent_m;
      j["goal_distance_m"] = k.goal_distance_m;
    }
  };
  std::visit(Visitor{j}, spec.kind);
  return j;
}

namespace {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  // Accept either a bare scenario object or a run config carrying one.
  if (j.is_object() && j.contains("scenario") && !j.contains("kind")) return run_config_from_json(j).scenario;
  return scenario_from_json(j);
}

// ---------------------------------------------------------------- run config

NetConfig RunConfig::resolved_net() const {
  NetConfig n = net;
  n.scan_frames = world.scan_frames;
  n.scan_beams = world.scan_beams;
  n.map_cells = world.map_cells;
  return n;
}

void RunConfig::validate() const {
  world.validate();
  reward.validate();
  resolved_net().validate();
  ppo.validate();
  if (threads < 1) throw ConfigError("field 'threads' must be >= 1");
  if (saliency.stride < 1) throw ConfigError("field 'saliency.stride' must be >= 1");
  if (saliency.blur_radius < 1) throw ConfigError("field 'saliency.blur_radius' must be >= 1");
  if (train.checkpoint_every < 0) throw ConfigError("field 'train.checkpoint_every' must be >= 0");
  if (train.challenge_scenes.empty()) throw ConfigError("field 'train.challenge_scenes' must not be empty");
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Fields f(j, "config");
  if (f.has("world")) c.world = world_config_from_json(f.raw("world"), "world");
  if (f.has("reward")) c.reward = reward_from_json(f.raw("reward"), "reward");
  if (f.has("net")) c.net = net_config_from_json(f.raw("net"), "net");
  if (f.has("ppo")) c.ppo = ppo_config_from_json(f.raw("ppo"), "ppo");
  if (f.has("scenario")) c.scenario = scenario_from_json(f.raw("scenario"), "scenario");
  if (f.has("train")) {
    Fields t(f.raw("train"), "train");
    if (t.has("free_scene")) c.train.free_scene = scenario_from_json(t.raw("free_scene"), "train.free_scene");
    if (t.has("challenge_scenes")) {
      const json& arr = t.raw("challenge_scenes");
      if (!arr.is_array()) throw ConfigError("field 'train.challenge_scenes' must be an array");
      c.train.challenge_scenes.clear();
      for (std::size_t i = 0; i < arr.size(); ++i)
        c.train.challenge_scenes.push_back(
            scenario_from_json(arr[i], "train.challenge_scenes[" + std::to_string(i) + "]"));
    }
    t.integer("checkpoint_every", c.train.checkpoint_every);
    t.finish();
  }
  if (f.has("saliency")) {
    Fields s(f.raw("saliency"), "saliency");
    s.integer("stride", c.saliency.stride);
    s.integer("blur_radius", c.saliency.blur_radius);
    s.finish();
  }
  f.u64("seed", c.seed);
  f.integer("threads", c.threads);
  f.str("out_dir", c.out_dir);
  f.finish();
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json challenge = json::array();
  for (const ScenarioSpec& s : c.train.challenge_scenes) challenge.push_back(to_json(s));
  return {{"world", to_json(c.world)},
          {"reward", to_json(c.reward)},
          {"net", to_json(c.net)},
          {"ppo", to_json(c.ppo)},
          {"scenario", to_json(c.scenario)},
          {"train",
           {{"free_scene", to_json(c.train.free_scene)},
            {"challenge_scenes", challenge},
            {"checkpoint_every", c.train.checkpoint_every}}},
          {"saliency", {{"stride", c.saliency.stride}, {"blur_radius", c.saliency.blur_radius}}},
          {"seed", c.seed},
          {"threads", c.threads},
          {"out_dir", c.out_dir}};
}

RunConfig load_run_config(const std::filesystem::path& path) { return run_config_from_json(read_json_file(path)); }

void save_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

json world_state_to_json(const WorldState& state) {
  json agents = json::array();
  for (const AgentState& a : state.agents)
    agents.push_back({{"start", {a.position.x, a.position.y}},
                      {"goal", {a.goal.x, a.goal.y}},
                      {"heading_rad", a.heading_rad}});
  json obstacles = json::array();
  for (const Obstacle& o : state.obstacles) {
    json verts = json::array();
    for (const Vec2& v : o.shape.vertices()) verts.push_back({v.x, v.y});
    obstacles.push_back({{"vertices", verts}});
  }
  return {{"world", to_json(state.config)}, {"agents", agents}, {"obstacles", obstacles}};
}

}  // namespace mapnav
