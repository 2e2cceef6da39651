#include "ghsom/config.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "ghsom/error.hpp"

namespace ghsom {

using nlohmann::json;

const char* to_string(GrowthMode mode) noexcept {
  switch (mode) {
    case GrowthMode::row_column: return "row_column";
    case GrowthMode::unit_level: return "unit_level";
    case GrowthMode::hybrid: return "hybrid";
  }
  return "unknown";
}

const char* to_string(Tau1Reference ref) noexcept {
  return ref == Tau1Reference::sum ? "sum" : "mean";
}

GrowthMode parse_growth_mode(std::string_view text) {
  if (text == "row_column") return GrowthMode::row_column;
  if (text == "unit_level") return GrowthMode::unit_level;
  if (text == "hybrid") return GrowthMode::hybrid;
  fail(ErrorCode::invalid_argument,
       "growth_mode must be row_column, unit_level or hybrid (got '" + std::string(text) + "')");
}

Tau1Reference parse_tau1_reference(std::string_view text) {
  if (text == "sum") return Tau1Reference::sum;
  if (text == "mean") return Tau1Reference::mean;
  fail(ErrorCode::invalid_argument, "tau1_reference must be sum or mean");
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::invalid_argument, what);
}

bool open_unit(double v) { return v > 0.0 && v < 1.0; }

double to_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    fail(ErrorCode::invalid_argument,
         std::string(key) + ": expected a number, got '" + std::string(text) + "'");
  return v;
}

int to_int(std::string_view key, std::string_view text) {
  int v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    fail(ErrorCode::invalid_argument,
         std::string(key) + ": expected an integer, got '" + std::string(text) + "'");
  return v;
}

bool to_bool(std::string_view key, std::string_view text) {
  if (text == "1" || text == "true" || text == "on" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "off" || text == "no") return false;
  fail(ErrorCode::invalid_argument, std::string(key) + ": expected a boolean");
}

}  // namespace

void validate(const Params& p, std::size_t n_samples) {
  const auto& g = p.growth;
  require(open_unit(g.tau1), "tau1 must lie in (0,1)");
  require(g.stratification_off() || (g.tau2 > 0.0 && g.tau2 <= 1.0), "tau2 must lie in (0,1] or be off");
  require(g.max_map_units >= 4, "max_map_units must be at least 4 (maps start 2x2)");
  require(g.max_depth >= 1, "max_depth must be positive");

  const auto& s = p.schedules;
  require(s.epochs >= 1, "epochs must be positive");
  require(s.lr_end > 0.0 && s.lr_end <= s.lr_start && s.lr_start <= 1.0,
          "learning rates must satisfy 0 < lr_end <= lr_start <= 1");
  require(s.radius_start > 0.0 && s.radius_end > 0.0, "radii must be positive");

  const auto& a = p.adaptive;
  require(open_unit(a.gamma_w), "gamma_w must lie in (0,1)");
  require(open_unit(a.gamma_v), "gamma_v must lie in (0,1)");
  require(open_unit(a.gamma_a), "gamma_a must lie in (0,1)");
  require(a.theta_g > 0.0, "theta_g must be positive");
  require(a.theta_e >= 0.0, "theta_e must be nonnegative");
  require(a.theta_c > 0.0 && a.theta_c <= 1.0, "theta_c must lie in (0,1]");

  const auto& i = p.interactive;
  require(i.alpha > 0.0 && i.alpha <= 1.0, "alpha must lie in (0,1]");
  require(i.beta > 0.0, "beta must be positive");
  if (n_samples > 0)
    require(i.alpha * static_cast<double>(n_samples) >= 1.0,
            "alpha * sample count must be at least 1");
  require(p.jobs >= 1, "jobs must be positive");
}

void set_param(Params& p, std::string_view key, std::string_view value) {
  auto& g = p.growth;
  auto& s = p.schedules;
  auto& a = p.adaptive;
  auto& i = p.interactive;
  if (key == "tau1") g.tau1 = to_double(key, value);
  else if (key == "tau2") g.tau2 = value == "off" ? std::numeric_limits<double>::infinity() : to_double(key, value);
  else if (key == "max_map_units") g.max_map_units = to_int(key, value);
  else if (key == "max_depth") g.max_depth = to_int(key, value);
  else if (key == "growth_mode") g.mode = parse_growth_mode(value);
  else if (key == "tau1_reference") g.tau1_reference = parse_tau1_reference(value);
  else if (key == "epochs") s.epochs = to_int(key, value);
  else if (key == "lr_start") s.lr_start = to_double(key, value);
  else if (key == "lr_end") s.lr_end = to_double(key, value);
  else if (key == "radius_start") s.radius_start = to_double(key, value);
  else if (key == "radius_end") s.radius_end = to_double(key, value);
  else if (key == "alpha") i.alpha = to_double(key, value);
  else if (key == "beta") i.beta = to_double(key, value);
  else if (key == "interactive") i.enabled = to_bool(key, value);
  else if (key == "gamma_w") a.gamma_w = to_double(key, value);
  else if (key == "gamma_v") a.gamma_v = to_double(key, value);
  else if (key == "gamma_a") a.gamma_a = to_double(key, value);
  else if (key == "theta_g") a.theta_g = to_double(key, value);
  else if (key == "theta_e") a.theta_e = to_double(key, value);
  else if (key == "theta_c") a.theta_c = to_double(key, value);
  else if (key == "jobs") p.jobs = to_int(key, value);
  else fail(ErrorCode::invalid_argument, "unknown parameter '" + std::string(key) + "'");
}

json to_json(const Params& p) {
  json j;
  j["tau1"] = p.growth.tau1;
  j["tau2"] = p.growth.stratification_off() ? json("off") : json(p.growth.tau2);
  j["max_map_units"] = p.growth.max_map_units;
  j["max_depth"] = p.growth.max_depth;
  j["growth_mode"] = to_string(p.growth.mode);
  j["tau1_reference"] = to_string(p.growth.tau1_reference);
  j["epochs"] = p.schedules.epochs;
  j["lr_start"] = p.schedules.lr_start;
  j["lr_end"] = p.schedules.lr_end;
  j["radius_start"] = p.schedules.radius_start;
  j["radius_end"] = p.schedules.radius_end;
  j["alpha"] = p.interactive.alpha;
  j["beta"] = p.interactive.beta;
  j["interactive"] = p.interactive.enabled;
  j["gamma_w"] = p.adaptive.gamma_w;
  j["gamma_v"] = p.adaptive.gamma_v;
  j["gamma_a"] = p.adaptive.gamma_a;
  j["theta_g"] = p.adaptive.theta_g;
  j["theta_e"] = p.adaptive.theta_e;
  j["theta_c"] = p.adaptive.theta_c;
  j["jobs"] = p.jobs;
  return j;
}

Params params_from_json(const json& j, Params base) {
  if (!j.is_object()) fail(ErrorCode::invalid_argument, "parameters must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    std::string text;
    if (value.is_string()) text = value.get<std::string>();
    else if (value.is_boolean()) text = value.get<bool>() ? "true" : "false";
    else if (value.is_number_integer()) text = std::to_string(value.get<long long>());
    else if (value.is_number()) {
      // Exact: assign directly instead of round-tripping through text.
      const double v = value.get<double>();
      if (key == "tau1") base.growth.tau1 = v;
      else if (key == "tau2") base.growth.tau2 = v;
      else if (key == "lr_start") base.schedules.lr_start = v;
      else if (key == "lr_end") base.schedules.lr_end = v;
      else if (key == "radius_start") base.schedules.radius_start = v;
      else if (key == "radius_end") base.schedules.radius_end = v;
      else if (key == "alpha") base.interactive.alpha = v;
      else if (key == "beta") base.interactive.beta = v;
      else if (key == "gamma_w") base.adaptive.gamma_w = v;
      else if (key == "gamma_v") base.adaptive.gamma_v = v;
      else if (key == "gamma_a") base.adaptive.gamma_a = v;
      else if (key == "theta_g") base.adaptive.theta_g = v;
      else if (key == "theta_e") base.adaptive.theta_e = v;
      else if (key == "theta_c") base.adaptive.theta_c = v;
      else
        fail(ErrorCode::invalid_argument,
             "parameter '" + key + "' is unknown or does not take a fractional value");
      continue;
    } else {
      fail(ErrorCode::invalid_argument, "parameter '" + key + "' has an unsupported type");
    }
    set_param(base, key, text);
  }
  return base;
}

}  // namespace ghsom
