#include "miab/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "miab/errors.hpp"

namespace miab {

std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::OnlyMacros: return "only_macros";
    case ScenarioKind::MacrosPicos: return "macros_picos";
    case ScenarioKind::MIab: return "miab";
  }
  return "?";
}

ScenarioKind scenario_kind_from_string(std::string_view s) {
  if (s == "only_macros") return ScenarioKind::OnlyMacros;
  if (s == "macros_picos") return ScenarioKind::MacrosPicos;
  if (s == "miab") return ScenarioKind::MIab;
  throw ValidationError("scenario_kind", "unknown scenario '" + std::string(s) + "'");
}

int ScenarioConfig::num_passengers() const {
  return static_cast<int>(std::lround(passenger_fraction * total_ues));
}

int ScenarioConfig::passengers_per_bus() const {
  return num_buses > 0 ? num_passengers() / num_buses : 0;
}

void validate(const ScenarioConfig& c) {
  if (c.duration_slots < 10) throw ValidationError("duration_slots", "must cover at least one 10-slot frame");
  if (c.total_ues < 0) throw ValidationError("total_ues", "must be non-negative");
  if (c.num_buses < 0) throw ValidationError("num_buses", "must be non-negative");
  if (!(c.passenger_fraction >= 0.0 && c.passenger_fraction <= 1.0))
    throw ValidationError("passenger_fraction", "must lie in [0, 1]");
  const double passengers = c.passenger_fraction * c.total_ues;
  if (std::abs(passengers - std::round(passengers)) > 1e-9)
    throw ValidationError("passenger_fraction", "passenger count " + std::to_string(passengers) + " is not integral");
  const int n = static_cast<int>(std::lround(passengers));
  if (n > 0 && c.num_buses == 0) throw ValidationError("num_buses", "passengers require at least one bus");
  if (c.num_buses > 0 && n % c.num_buses != 0)
    throw ValidationError("passenger_fraction", std::to_string(n) + " passengers do not divide evenly over " +
                                                    std::to_string(c.num_buses) + " buses");
  if (c.num_buses > 0 && n / c.num_buses > 20)
    throw ValidationError("passenger_fraction", "more passengers per bus than seats");
  if (c.cbr_packet_bits <= 0) throw ValidationError("cbr_packet_bits", "must be positive");
  if (c.cbr_interarrival_slots <= 0) throw ValidationError("cbr_interarrival_slots", "must be positive");
  if (!(c.carrier_hz > 0)) throw ValidationError("carrier_hz", "must be positive");
  if (!(c.scs_hz > 0)) throw ValidationError("scs_hz", "must be positive");
  if (c.num_rbs <= 0) throw ValidationError("num_rbs", "must be positive");
  if (c.num_rbs * 12.0 * c.scs_hz > c.bandwidth_hz)
    throw ValidationError("num_rbs", "num_rbs x 12 x scs_hz exceeds bandwidth_hz");
  if (!(c.slot_s > 0)) throw ValidationError("slot_s", "must be positive");
  if (!(c.handover_hysteresis_db >= 0)) throw ValidationError("handover_hysteresis_db", "must be non-negative");
  if (c.handover_eval_period_slots <= 0) throw ValidationError("handover_eval_period_slots", "must be positive");
  if (!(c.pico_ring_radius_m > 0)) throw ValidationError("pico_ring_radius_m", "must be positive");
}

namespace {

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer() && !it->is_number_unsigned())
        throw ValidationError(key, "expected an integer");
    } else {
      if (!it->is_number()) throw ValidationError(key, "expected a number");
    }
    out = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(key, e.what());
  }
}

}  // namespace

ScenarioConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("configuration must be a JSON object");
  static const char* kKeys[] = {"scenario_kind", "seed", "duration_slots", "num_buses", "total_ues",
                                "passenger_fraction", "cbr_packet_bits", "cbr_interarrival_slots",
                                "carrier_hz", "bandwidth_hz", "scs_hz", "num_rbs", "slot_s",
                                "handover_hysteresis_db", "handover_eval_period_slots", "pico_ring_radius_m"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : kKeys) known = known || it.key() == k;
    if (!known) throw ValidationError(it.key(), "unknown configuration key");
  }
  ScenarioConfig c;
  if (auto it = j.find("scenario_kind"); it != j.end()) {
    if (!it->is_string()) throw ValidationError("scenario_kind", "expected a string");
    c.scenario_kind = scenario_kind_from_string(it->get<std::string>());
  }
  read_key(j, "seed", c.seed);
  read_key(j, "duration_slots", c.duration_slots);
  read_key(j, "num_buses", c.num_buses);
  read_key(j, "total_ues", c.total_ues);
  read_key(j, "passenger_fraction", c.passenger_fraction);
  read_key(j, "cbr_packet_bits", c.cbr_packet_bits);
  read_key(j, "cbr_interarrival_slots", c.cbr_interarrival_slots);
  read_key(j, "carrier_hz", c.carrier_hz);
  read_key(j, "bandwidth_hz", c.bandwidth_hz);
  read_key(j, "scs_hz", c.scs_hz);
  read_key(j, "num_rbs", c.num_rbs);
  read_key(j, "slot_s", c.slot_s);
  read_key(j, "handover_hysteresis_db", c.handover_hysteresis_db);
  read_key(j, "handover_eval_period_slots", c.handover_eval_period_slots);
  read_key(j, "pico_ring_radius_m", c.pico_ring_radius_m);
  validate(c);
  return c;
}

ScenarioConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed configuration: ") + e.what());
  }
  return config_from_json(j);
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open configuration file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["scenario_kind"] = std::string(to_string(c.scenario_kind));
  j["seed"] = c.seed;
  j["duration_slots"] = c.duration_slots;
  j["num_buses"] = c.num_buses;
  j["total_ues"] = c.total_ues;
  j["passenger_fraction"] = c.passenger_fraction;
  j["cbr_packet_bits"] = c.cbr_packet_bits;
  j["cbr_interarrival_slots"] = c.cbr_interarrival_slots;
  j["carrier_hz"] = c.carrier_hz;
  j["bandwidth_hz"] = c.bandwidth_hz;
  j["scs_hz"] = c.scs_hz;
  j["num_rbs"] = c.num_rbs;
  j["slot_s"] = c.slot_s;
  j["handover_hysteresis_db"] = c.handover_hysteresis_db;
  j["handover_eval_period_slots"] = c.handover_eval_period_slots;
  j["pico_ring_radius_m"] = c.pico_ring_radius_m;
  return j;
}

}  // namespace miab
