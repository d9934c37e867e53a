#include "xrprobe/scenario.hpp"

#include <fstream>
#include <map>
#include <set>

#include "xrprobe/error.hpp"

namespace xrprobe {

namespace {

using nlohmann::json;

std::string join_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path.empty() ? "<root>" : path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  require_object(j, path);
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw SchemaError(join_path(path, key), "unknown key");
  }
}

double get_number(const json& j, const std::string& key, const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) throw SchemaError(join_path(path, key), "expected a number");
  return v.get<double>();
}

std::int64_t get_integer(const json& j, const std::string& key, const std::string& path,
                         std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw SchemaError(join_path(path, key), "expected an integer");
  return v.get<std::int64_t>();
}

bool get_bool(const json& j, const std::string& key, const std::string& path, bool fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_boolean()) throw SchemaError(join_path(path, key), "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& j, const std::string& key, const std::string& path) {
  const json& v = j.at(key);
  if (!v.is_string()) throw SchemaError(join_path(path, key), "expected a string");
  return v.get<std::string>();
}

NetworkProfile parse_profile(const std::string& name, const json& j, const std::string& path) {
  reject_unknown(j, path, {"base_one_way_ms", "jitter", "outage", "loss_prob"});
  NetworkProfile p;
  p.name = name;
  p.base_one_way_ms = get_number(j, "base_one_way_ms", path, 0.0);
  p.loss_prob = get_number(j, "loss_prob", path, 0.0);
  if (j.contains("jitter")) {
    const std::string jp = join_path(path, "jitter");
    const json& jj = j.at("jitter");
    reject_unknown(jj, jp, {"kind", "sigma_ms", "mu", "sigma"});
    const std::string kind = jj.contains("kind") ? get_string(jj, "kind", jp) : "gaussian";
    if (kind == "gaussian") {
      p.jitter.kind = JitterKind::kGaussian;
    } else if (kind == "lognormal") {
      p.jitter.kind = JitterKind::kLognormal;
    } else {
      throw SchemaError(jp + ".kind", "expected gaussian or lognormal");
    }
    p.jitter.sigma_ms = get_number(jj, "sigma_ms", jp, 0.0);
    p.jitter.mu = get_number(jj, "mu", jp, 0.0);
    p.jitter.sigma = get_number(jj, "sigma", jp, 0.0);
  }
  if (j.contains("outage") && !j.at("outage").is_null()) {
    const std::string op = join_path(path, "outage");
    const json& oj = j.at("outage");
    reject_unknown(oj, op, {"enter_prob", "min_ms", "max_ms", "scope", "hit_prob", "affects_audio"});
    OutageModel o;
    o.enter_prob = get_number(oj, "enter_prob", op, 0.0);
    o.min_ms = get_number(oj, "min_ms", op, 0.0);
    o.max_ms = get_number(oj, "max_ms", op, o.min_ms);
    const std::string scope = oj.contains("scope") ? get_string(oj, "scope", op) : "link";
    if (scope == "link") {
      o.scope = OutageScope::kLink;
    } else if (scope == "cell") {
      o.scope = OutageScope::kCell;
    } else {
      throw SchemaError(op + ".scope", "expected link or cell");
    }
    o.hit_prob = get_number(oj, "hit_prob", op, 1.0);
    o.affects_audio = get_bool(oj, "affects_audio", op, false);
    p.outage = o;
  }
  return p;
}

}  // namespace

SessionScenario parse_scenario(const json& j) {
  reject_unknown(j, "", {"duration_s", "start_ts", "fps", "beacon_interval_ms", "joins_s",
                         "profiles", "custom_profiles", "clocks", "pipeline", "audio",
                         "quality", "seed"});
  SessionScenario sc;
  sc.duration_s = get_number(j, "duration_s", "", sc.duration_s);
  sc.start_ts = Timestamp{get_integer(j, "start_ts", "", sc.start_ts.ms)};
  if (sc.start_ts.ms < 0) throw SchemaError("start_ts", "must be >= 0");
  sc.fps = static_cast<int>(get_integer(j, "fps", "", sc.fps));
  sc.beacon_interval_ms = static_cast<int>(get_integer(j, "beacon_interval_ms", "", 10));
  if (j.contains("seed")) {
    const auto& seed = j.at("seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
      throw SchemaError("seed", "expected a non-negative integer");
    }
    sc.seed = j.at("seed").get<std::uint64_t>();
  }

  std::vector<double> joins = {60.0, 120.0, 180.0, 240.0};
  if (j.contains("joins_s")) {
    const json& jj = j.at("joins_s");
    if (!jj.is_array()) throw SchemaError("joins_s", "expected an array of seconds");
    joins.clear();
    for (const auto& v : jj) {
      if (!v.is_number()) throw SchemaError("joins_s", "expected an array of seconds");
      joins.push_back(v.get<double>());
    }
  }
  for (std::size_t i = 0; i < joins.size(); ++i) {
    if (!(joins[i] > 0.0) || (i > 0 && !(joins[i] > joins[i - 1]))) {
      throw SchemaError("joins_s", "join times strictly increasing");
    }
  }
  if (!joins.empty() && joins.back() >= sc.duration_s) {
    throw SchemaError("joins_s", "join times must fall before duration_s");
  }

  std::map<std::string, NetworkProfile> custom;
  if (j.contains("custom_profiles")) {
    const json& cj = j.at("custom_profiles");
    require_object(cj, "custom_profiles");
    for (const auto& [name, body] : cj.items()) {
      if (builtin_profile(name)) {
        throw SchemaError("custom_profiles." + name, "shadows a built-in profile");
      }
      custom.emplace(name, parse_profile(name, body, "custom_profiles." + name));
    }
  }
  auto lookup = [&](const std::string& name) {
    if (auto p = builtin_profile(name)) return *p;
    auto it = custom.find(name);
    if (it == custom.end()) throw SchemaError("profiles", "unknown profile '" + name + "'");
    return it->second;
  };

  const std::size_t n_nodes = joins.size() + 1;
  if (!j.contains("profiles")) throw SchemaError("profiles", "required");
  std::vector<std::string> profile_names;
  const json& pj = j.at("profiles");
  if (pj.is_string()) {
    profile_names.assign(n_nodes, pj.get<std::string>());
  } else if (pj.is_array()) {
    for (const auto& v : pj) {
      if (!v.is_string()) throw SchemaError("profiles", "expected profile names");
      profile_names.push_back(v.get<std::string>());
    }
    if (profile_names.size() != n_nodes) {
      throw SchemaError("profiles", "expected one profile per node (" + std::to_string(n_nodes) + ")");
    }
  } else {
    throw SchemaError("profiles", "expected a name or an array of names");
  }

  std::vector<double> drift(n_nodes, 0.0);
  std::vector<double> offset(n_nodes, 0.0);
  auto per_node = [n_nodes](const json& cj, const char* key, std::vector<double>& values) {
    if (!cj.contains(key)) return;
    const std::string field = std::string("clocks.") + key;
    const json& v = cj.at(key);
    if (v.is_number()) {
      values.assign(n_nodes, v.get<double>());
    } else if (v.is_array() && v.size() == n_nodes) {
      for (std::size_t i = 0; i < n_nodes; ++i) {
        if (!v[i].is_number()) throw SchemaError(field, "expected numbers");
        values[i] = v[i].get<double>();
      }
    } else {
      throw SchemaError(field, "expected a number or one value per node");
    }
  };
  if (j.contains("clocks")) {
    const json& cj = j.at("clocks");
    reject_unknown(cj, "clocks", {"ntp_sigma_ms", "sync_interval_s", "drift_ppm", "offset_ms"});
    sc.clocks.ntp_sigma_ms = get_number(cj, "ntp_sigma_ms", "clocks", sc.clocks.ntp_sigma_ms);
    sc.clocks.sync_interval_s = get_number(cj, "sync_interval_s", "clocks", sc.clocks.sync_interval_s);
    per_node(cj, "drift_ppm", drift);
    per_node(cj, "offset_ms", offset);
  }

  for (std::size_t i = 0; i < n_nodes; ++i) {
    NodeSpec node;
    node.id = i == 0 ? "presenter" : "v" + std::to_string(i);
    node.join_s = i == 0 ? 0.0 : joins[i - 1];
    node.profile = lookup(profile_names[i]);
    node.drift_ppm = drift[i];
    node.offset_ms = offset[i];
    sc.nodes.push_back(std::move(node));
  }

  if (j.contains("pipeline")) {
    const json& pj2 = j.at("pipeline");
    reject_unknown(pj2, "pipeline", {"encode_ms", "render_ms", "decode_ms", "audio_buffer_ms",
                                     "jitter_buffer", "catchup_ms_per_s"});
    auto& p = sc.pipeline;
    p.encode_ms = get_number(pj2, "encode_ms", "pipeline", p.encode_ms);
    p.render_ms = get_number(pj2, "render_ms", "pipeline", p.render_ms);
    p.decode_ms = get_number(pj2, "decode_ms", "pipeline", p.decode_ms);
    p.audio_buffer_ms = get_number(pj2, "audio_buffer_ms", "pipeline", p.audio_buffer_ms);
    p.jitter_buffer = get_bool(pj2, "jitter_buffer", "pipeline", p.jitter_buffer);
    p.catchup_ms_per_s = get_number(pj2, "catchup_ms_per_s", "pipeline", p.catchup_ms_per_s);
  }

  sc.audio.epoch_ts = sc.start_ts;
  if (j.contains("audio")) {
    const json& aj = j.at("audio");
    reject_unknown(aj, "audio", {"f0_hz", "delta_hz", "tones", "pulse_period_ms",
                                 "pulse_duration_ms", "ramp_ms", "epoch_ts"});
    auto& a = sc.audio;
    a.f0_hz = get_number(aj, "f0_hz", "audio", a.f0_hz);
    a.delta_hz = get_number(aj, "delta_hz", "audio", a.delta_hz);
    a.tone_count = static_cast<int>(get_integer(aj, "tones", "audio", a.tone_count));
    a.pulse_period_ms = static_cast<int>(get_integer(aj, "pulse_period_ms", "audio", a.pulse_period_ms));
    a.pulse_duration_ms =
        static_cast<int>(get_integer(aj, "pulse_duration_ms", "audio", a.pulse_duration_ms));
    a.ramp_ms = static_cast<int>(get_integer(aj, "ramp_ms", "audio", a.ramp_ms));
    a.epoch_ts = Timestamp{get_integer(aj, "epoch_ts", "audio", a.epoch_ts.ms)};
    if (a.pulse_period_ms < 1) throw SchemaError("audio.pulse_period_ms", "must be >= 1");
  }

  if (j.contains("quality")) {
    const json& qj = j.at("quality");
    reject_unknown(qj, "quality", {"enabled", "levels", "initial", "step_down_threshold_ms",
                                   "step_up_threshold_ms", "dwell_s", "window_s"});
    auto& q = sc.quality;
    q.enabled = get_bool(qj, "enabled", "quality", false);
    q.levels = {{"low", -10.0, -20.0}, {"med", 0.0, 0.0}, {"high", 10.0, 20.0}};
    if (qj.contains("levels")) {
      const json& lj = qj.at("levels");
      if (!lj.is_array()) throw SchemaError("quality.levels", "expected an array");
      q.levels.clear();
      for (const auto& level : lj) {
        reject_unknown(level, "quality.levels", {"name", "encode_delta_ms", "network_delta_ms"});
        if (!level.contains("name")) throw SchemaError("quality.levels.name", "required");
        q.levels.push_back({get_string(level, "name", "quality.levels"),
                            get_number(level, "encode_delta_ms", "quality.levels", 0.0),
                            get_number(level, "network_delta_ms", "quality.levels", 0.0)});
      }
    }
    q.initial_level = q.levels.empty() ? 0 : q.levels.size() - 1;
    if (qj.contains("initial")) {
      const std::string initial = get_string(qj, "initial", "quality");
      auto it = std::find_if(q.levels.begin(), q.levels.end(),
                             [&](const QualityLevel& l) { return l.name == initial; });
      if (it == q.levels.end()) throw SchemaError("quality.initial", "not one of the levels");
      q.initial_level = static_cast<std::size_t>(it - q.levels.begin());
    }
    q.policy.levels.clear();
    for (const auto& level : q.levels) q.policy.levels.push_back(level.name);
    q.policy.step_down_threshold_ms =
        get_number(qj, "step_down_threshold_ms", "quality", q.policy.step_down_threshold_ms);
    q.policy.step_up_threshold_ms =
        get_number(qj, "step_up_threshold_ms", "quality", q.policy.step_up_threshold_ms);
    q.policy.dwell_s = get_number(qj, "dwell_s", "quality", q.policy.dwell_s);
    q.window_s = get_number(qj, "window_s", "quality", q.window_s);
  }

  sc.validate();
  return sc;
}

SessionScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read scenario " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return parse_scenario(j);
}

namespace {

nlohmann::ordered_json profile_to_json(const NetworkProfile& p) {
  nlohmann::ordered_json j;
  j["base_one_way_ms"] = p.base_one_way_ms;
  nlohmann::ordered_json jit;
  if (p.jitter.kind == JitterKind::kGaussian) {
    jit["kind"] = "gaussian";
    jit["sigma_ms"] = p.jitter.sigma_ms;
  } else {
    jit["kind"] = "lognormal";
    jit["mu"] = p.jitter.mu;
    jit["sigma"] = p.jitter.sigma;
  }
  j["jitter"] = jit;
  if (p.outage) {
    const auto& o = *p.outage;
    j["outage"] = {{"enter_prob", o.enter_prob},
                   {"min_ms", o.min_ms},
                   {"max_ms", o.max_ms},
                   {"scope", o.scope == OutageScope::kCell ? "cell" : "link"},
                   {"hit_prob", o.hit_prob},
                   {"affects_audio", o.affects_audio}};
  }
  j["loss_prob"] = p.loss_prob;
  return j;
}

}  // namespace

nlohmann::ordered_json scenario_to_json(const SessionScenario& sc) {
  nlohmann::ordered_json j;
  j["duration_s"] = sc.duration_s;
  j["start_ts"] = sc.start_ts.ms;
  j["fps"] = sc.fps;
  j["beacon_interval_ms"] = sc.beacon_interval_ms;
  nlohmann::ordered_json joins = nlohmann::ordered_json::array();
  nlohmann::ordered_json profiles = nlohmann::ordered_json::array();
  nlohmann::ordered_json drift = nlohmann::ordered_json::array();
  nlohmann::ordered_json offset = nlohmann::ordered_json::array();
  nlohmann::ordered_json custom = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < sc.nodes.size(); ++i) {
    const auto& node = sc.nodes[i];
    if (i > 0) joins.push_back(node.join_s);
    profiles.push_back(node.profile.name);
    drift.push_back(node.drift_ppm);
    offset.push_back(node.offset_ms);
    if (!builtin_profile(node.profile.name)) custom[node.profile.name] = profile_to_json(node.profile);
  }
  j["joins_s"] = joins;
  j["profiles"] = profiles;
  if (!custom.empty()) j["custom_profiles"] = custom;
  j["clocks"] = {{"ntp_sigma_ms", sc.clocks.ntp_sigma_ms},
                 {"sync_interval_s", sc.clocks.sync_interval_s},
                 {"drift_ppm", drift},
                 {"offset_ms", offset}};
  const auto& p = sc.pipeline;
  j["pipeline"] = {{"encode_ms", p.encode_ms},
                   {"render_ms", p.render_ms},
                   {"decode_ms", p.decode_ms},
                   {"audio_buffer_ms", p.audio_buffer_ms},
                   {"jitter_buffer", p.jitter_buffer},
                   {"catchup_ms_per_s", p.catchup_ms_per_s}};
  const auto& a = sc.audio;
  j["audio"] = {{"f0_hz", a.f0_hz},
                {"delta_hz", a.delta_hz},
                {"tones", a.tone_count},
                {"pulse_period_ms", a.pulse_period_ms},
                {"pulse_duration_ms", a.pulse_duration_ms},
                {"ramp_ms", a.ramp_ms},
                {"epoch_ts", a.epoch_ts.ms}};
  if (sc.quality.enabled) {
    const auto& q = sc.quality;
    nlohmann::ordered_json levels = nlohmann::ordered_json::array();
    for (const auto& l : q.levels) {
      levels.push_back({{"name", l.name},
                        {"encode_delta_ms", l.encode_delta_ms},
                        {"network_delta_ms", l.network_delta_ms}});
    }
    j["quality"] = {{"enabled", true},
                    {"levels", levels},
                    {"initial", q.levels[q.initial_level].name},
                    {"step_down_threshold_ms", q.policy.step_down_threshold_ms},
                    {"step_up_threshold_ms", q.policy.step_up_threshold_ms},
                    {"dwell_s", q.policy.dwell_s},
                    {"window_s", q.window_s}};
  }
  j["seed"] = sc.seed;
  return j;
}

}  // namespace xrprobe
