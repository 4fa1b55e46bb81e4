#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "bmflc/filter.hpp"
#include "bmflc/plant.hpp"
#include "bmflc/synth.hpp"

namespace bmflc {

using Json = nlohmann::ordered_json;

/// Thrown for malformed or inconsistent config and data files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_string(FrequencyLaw law);
FrequencyLaw parse_frequency_law(const std::string& s);

Json to_json(const SineComponent& c);
Json to_json(const SynthParams& p);
Json to_json(const MotionSpec& m);
Json to_json(const MotionRecipe& r);
Json to_json(const StepSizeParams& p);
Json to_json(const FilterState& s);
Json to_json(const ControllerParams& c);
Json to_json(const PlantParams& p);

/// The apply_* functions overwrite only the keys present in j and reject
/// unknown keys or wrongly typed values with ConfigError.
void apply_json(const Json& j, SynthParams& p);
void apply_json(const Json& j, MotionRecipe& r);
void apply_json(const Json& j, StepSizeParams& p);
void apply_json(const Json& j, ControllerParams& c);
void apply_json(const Json& j, PlantParams& p);

SineComponent sine_component_from_json(const Json& j);
MotionSpec motion_spec_from_json(const Json& j);
FilterState filter_state_from_json(const Json& j);

/// Parses a file allowing // and /* */ comments.
Json read_json_file(const std::filesystem::path& path);
/// Writes j with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

/// FNV-1a of the compact dump, as 16 hex digits.
std::string json_hash(const Json& j);

}  // namespace bmflc
