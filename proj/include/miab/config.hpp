#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace miab {

enum class ScenarioKind { OnlyMacros, MacrosPicos, MIab };

std::string_view to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(std::string_view s);

struct ScenarioConfig {
  ScenarioKind scenario_kind{ScenarioKind::MIab};
  std::uint64_t seed{1};
  std::int64_t duration_slots{40000};
  int num_buses{6};
  int total_ues{72};
  double passenger_fraction{0.5};
  int cbr_packet_bits{3072};
  int cbr_interarrival_slots{4};
  double carrier_hz{28e9};
  double bandwidth_hz{50e6};
  double scs_hz{60e3};
  int num_rbs{66};
  double slot_s{0.25e-3};
  double handover_hysteresis_db{0.0};
  int handover_eval_period_slots{40};
  double pico_ring_radius_m{180.0};

  int num_passengers() const;
  int passengers_per_bus() const;
  int num_pedestrians() const { return total_ues - num_passengers(); }
  bool operator==(const ScenarioConfig&) const = default;
};

// Throws ValidationError naming the offending key.
void validate(const ScenarioConfig& cfg);

// Parse and validate; unknown keys are rejected.
ScenarioConfig config_from_json(const nlohmann::json& j);
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ScenarioConfig& cfg);

}  // namespace miab
