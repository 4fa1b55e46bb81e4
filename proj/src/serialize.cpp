#include "bmflc/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace bmflc {

namespace {

template <class T>
T get_as(const Json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError("field '" + key + "': " + e.what());
  }
}

double as_double(const Json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("field '" + key + "' must be a number");
  return v.get<double>();
}

int as_int(const Json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("field '" + key + "' must be an integer");
  return v.get<int>();
}

using Setter = std::function<void(const Json&)>;

/// Applies each key of j through its setter; unknown keys are an error.
void apply_fields(const Json& j, const std::string& what, const std::map<std::string, Setter>& setters) {
  if (!j.is_object()) throw ConfigError(what + " must be an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown field '" + key + "' in " + what);
    it->second(value);
  }
}

Setter number(double& target, const std::string& key) {
  return [&target, key](const Json& v) { target = as_double(v, key); };
}

}  // namespace

std::string to_string(FrequencyLaw law) {
  return law == FrequencyLaw::Exponential ? "exponential" : "uniform";
}

FrequencyLaw parse_frequency_law(const std::string& s) {
  if (s == "uniform") return FrequencyLaw::Uniform;
  if (s == "exponential") return FrequencyLaw::Exponential;
  throw ConfigError("unknown frequency law '" + s + "'");
}

Json to_json(const SineComponent& c) {
  Json j{{"nu", c.nu}, {"phi", c.phi}, {"xi", c.xi}};
  if (c.nu_prime) j["nu_prime"] = *c.nu_prime;
  if (c.phi_prime) j["phi_prime"] = *c.phi_prime;
  return j;
}

Json to_json(const SynthParams& p) {
  return Json{{"a_nu", p.a_nu},   {"b_nu", p.b_nu},   {"a_n", p.a_n},         {"b_n", p.b_n},
              {"xi_total", p.xi_total}, {"s_xi", p.s_xi}, {"s_nu", p.s_nu}, {"a_phi", p.a_phi},
              {"b_phi", p.b_phi}, {"frequency_law", to_string(p.frequency_law)}};
}

Json to_json(const MotionSpec& m) {
  Json vol = Json::array(), vib = Json::array();
  for (const auto& c : m.voluntary) vol.push_back(to_json(c));
  for (const auto& c : m.vibration) vib.push_back(to_json(c));
  return Json{{"seed", m.seed},
              {"drift_start", m.drift_start},
              {"drift_duration", m.drift_duration},
              {"s_n", m.s_n},
              {"voluntary", vol},
              {"vibration", vib}};
}

Json to_json(const MotionRecipe& r) {
  return Json{{"vibration", to_json(r.vibration)},
              {"voluntary", to_json(r.voluntary)},
              {"drift_start", r.drift_start},
              {"drift_duration", r.drift_duration},
              {"s_n", r.s_n}};
}

Json to_json(const StepSizeParams& p) {
  return Json{{"variant", std::string(to_string(p.variant))},
              {"eta", p.eta},
              {"lambda_forget", p.lambda_forget},
              {"k_dmp", p.k_dmp},
              {"x_dmp", p.x_dmp},
              {"lambda_rls", p.lambda_rls},
              {"r_kf", p.r_kf},
              {"q_kf_scale", p.q_kf_scale},
              {"p0", p.p0}};
}

Json to_json(const FilterState& s) {
  Json j{{"iter", s.iter}, {"t", s.t}};
  j["w"] = std::vector<double>(s.w.data(), s.w.data() + s.w.size());
  if (s.P.size() > 0) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < s.P.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(s.P.cols()));
      for (Eigen::Index c = 0; c < s.P.cols(); ++c) row[static_cast<std::size_t>(c)] = s.P(r, c);
      rows.push_back(row);
    }
    j["P"] = rows;
  }
  return j;
}

Json to_json(const ControllerParams& c) {
  return Json{{"k_k", c.k_k}, {"k_b", c.k_b}, {"k_ff", c.k_ff}, {"model_compensation", c.model_compensation}};
}

Json to_json(const PlantParams& p) {
  return Json{{"mass", p.mass}, {"stiffness", p.stiffness}, {"damping", p.damping}, {"dt", p.dt}};
}

void apply_json(const Json& j, SynthParams& p) {
  apply_fields(j, "synthesis parameters",
               {{"a_nu", number(p.a_nu, "a_nu")},
                {"b_nu", number(p.b_nu, "b_nu")},
                {"a_n", [&](const Json& v) { p.a_n = as_int(v, "a_n"); }},
                {"b_n", [&](const Json& v) { p.b_n = as_int(v, "b_n"); }},
                {"xi_total", number(p.xi_total, "xi_total")},
                {"s_xi", number(p.s_xi, "s_xi")},
                {"s_nu", number(p.s_nu, "s_nu")},
                {"a_phi", number(p.a_phi, "a_phi")},
                {"b_phi", number(p.b_phi, "b_phi")},
                {"frequency_law", [&](const Json& v) {
                   if (!v.is_string()) throw ConfigError("frequency_law must be a string");
                   p.frequency_law = parse_frequency_law(v.get<std::string>());
                 }}});
}

void apply_json(const Json& j, MotionRecipe& r) {
  apply_fields(j, "motion recipe",
               {{"vibration", [&](const Json& v) { apply_json(v, r.vibration); }},
                {"voluntary", [&](const Json& v) { apply_json(v, r.voluntary); }},
                {"drift_start", number(r.drift_start, "drift_start")},
                {"drift_duration", number(r.drift_duration, "drift_duration")},
                {"s_n", number(r.s_n, "s_n")}});
}

void apply_json(const Json& j, StepSizeParams& p) {
  apply_fields(j, "step-size parameters",
               {{"variant", [&](const Json& v) {
                   if (!v.is_string()) throw ConfigError("variant must be a string");
                   const auto parsed = parse_variant(v.get<std::string>());
                   if (!parsed) throw ConfigError("unknown variant '" + v.get<std::string>() + "'");
                   p.variant = *parsed;
                 }},
                {"eta", number(p.eta, "eta")},
                {"lambda_forget", number(p.lambda_forget, "lambda_forget")},
                {"k_dmp", number(p.k_dmp, "k_dmp")},
                {"x_dmp", number(p.x_dmp, "x_dmp")},
                {"lambda_rls", number(p.lambda_rls, "lambda_rls")},
                {"r_kf", number(p.r_kf, "r_kf")},
                {"q_kf_scale", number(p.q_kf_scale, "q_kf_scale")},
                {"p0", number(p.p0, "p0")}});
}

void apply_json(const Json& j, ControllerParams& c) {
  apply_fields(j, "controller parameters",
               {{"k_k", number(c.k_k, "k_k")},
                {"k_b", number(c.k_b, "k_b")},
                {"k_ff", number(c.k_ff, "k_ff")},
                {"model_compensation", [&](const Json& v) {
                   if (!v.is_boolean()) throw ConfigError("model_compensation must be a boolean");
                   c.model_compensation = v.get<bool>();
                 }}});
}

void apply_json(const Json& j, PlantParams& p) {
  apply_fields(j, "plant parameters",
               {{"mass", number(p.mass, "mass")},
                {"stiffness", number(p.stiffness, "stiffness")},
                {"damping", number(p.damping, "damping")},
                {"dt", number(p.dt, "dt")}});
}

SineComponent sine_component_from_json(const Json& j) {
  SineComponent c;
  apply_fields(j, "sine component",
               {{"nu", number(c.nu, "nu")},
                {"phi", number(c.phi, "phi")},
                {"xi", number(c.xi, "xi")},
                {"nu_prime", [&](const Json& v) { c.nu_prime = as_double(v, "nu_prime"); }},
                {"phi_prime", [&](const Json& v) { c.phi_prime = as_double(v, "phi_prime"); }}});
  return c;
}

MotionSpec motion_spec_from_json(const Json& j) {
  MotionSpec m;
  auto components = [](const Json& v, std::vector<SineComponent>& out) {
    if (!v.is_array()) throw ConfigError("component list must be an array");
    out.clear();
    for (const auto& c : v) out.push_back(sine_component_from_json(c));
  };
  apply_fields(j, "motion",
               {{"seed", [&](const Json& v) {
                   if (!v.is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
                   m.seed = v.get<std::uint64_t>();
                 }},
                {"drift_start", number(m.drift_start, "drift_start")},
                {"drift_duration", number(m.drift_duration, "drift_duration")},
                {"s_n", number(m.s_n, "s_n")},
                {"voluntary", [&](const Json& v) { components(v, m.voluntary); }},
                {"vibration", [&](const Json& v) { components(v, m.vibration); }}});
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid motion: ") + e.what());
  }
  return m;
}

FilterState filter_state_from_json(const Json& j) {
  FilterState s;
  const auto w = get_as<std::vector<double>>(j, "w");
  s.w = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
  s.iter = get_as<std::uint64_t>(j, "iter");
  s.t = get_as<double>(j, "t");
  if (j.contains("P")) {
    const auto rows = get_as<std::vector<std::vector<double>>>(j, "P");
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (n != s.w.size()) throw ConfigError("covariance size does not match the weights");
    s.P.resize(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != n)
        throw ConfigError("covariance must be square");
      for (Eigen::Index c = 0; c < n; ++c) s.P(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  return s;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string json_hash(const Json& j) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace bmflc
