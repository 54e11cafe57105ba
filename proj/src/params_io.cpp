#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "vcr/components.hpp"
#include "vcr/errors.hpp"

namespace vcr {

namespace {

const std::map<std::string, double PlantParams::*>& param_keys() {
  static const std::map<std::string, double PlantParams::*> m = {
      {"c_eev", &PlantParams::c_eev},
      {"a", &PlantParams::a},
      {"b", &PlantParams::b},
      {"c", &PlantParams::c},
      {"S_t", &PlantParams::S_t},
      {"UA_comp", &PlantParams::UA_comp},
      {"A_e_trnsf", &PlantParams::A_e_trnsf},
      {"A_c_trnsf", &PlantParams::A_c_trnsf},
      {"L_e", &PlantParams::L_e},
      {"L_c", &PlantParams::L_c},
      {"alpha_e_sh", &PlantParams::alpha_e_sh},
      {"alpha_e_tp", &PlantParams::alpha_e_tp},
      {"alpha_c_sh", &PlantParams::alpha_c_sh},
      {"alpha_c_tp", &PlantParams::alpha_c_tp},
      {"alpha_c_sc", &PlantParams::alpha_c_sc},
      {"V_R", &PlantParams::V_R},
      {"cp_e_sec", &PlantParams::cp_e_sec},
      {"cp_c_sec", &PlantParams::cp_c_sec},
      {"gamma_bar", &PlantParams::gamma_bar}};
  return m;
}

const std::map<std::string, double Disturbances::*>& dist_keys() {
  static const std::map<std::string, double Disturbances::*> m = {
      {"mdot_e_sec", &Disturbances::mdot_e_sec},
      {"mdot_c_sec", &Disturbances::mdot_c_sec},
      {"T_e_sec_in", &Disturbances::T_e_sec_in},
      {"T_c_sec_in", &Disturbances::T_c_sec_in},
      {"T_surr", &Disturbances::T_surr}};
  return m;
}

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t\r") + 1);
  return s;
}

}  // namespace

void apply_param(PlantParams& p, const std::string& key, double value) {
  auto it = param_keys().find(key);
  if (it == param_keys().end()) throw ConfigError("unknown plant parameter '" + key + "'");
  p.*(it->second) = value;
}

void apply_disturbance(Disturbances& d, const std::string& key, double value) {
  auto it = dist_keys().find(key);
  if (it == dist_keys().end()) throw ConfigError("unknown disturbance '" + key + "'");
  d.*(it->second) = value;
}

PlantParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open params file: " + path);
  PlantParams p;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("{}:{}: expected key = value", path, lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != val.size())
      throw ConfigError(fmt::format("{}:{}: bad value for '{}'", path, lineno, key));
    if (param_keys().count(key) == 0)
      throw ConfigError(fmt::format("{}:{}: unknown plant parameter '{}'", path, lineno, key));
    apply_param(p, key, x);
  }
  p.validate();
  return p;
}

std::string to_text(const PlantParams& p) {
  std::ostringstream os;
  for (const auto& [k, m] : param_keys()) os << k << " = " << fmt::format("{:.10g}", p.*m) << "\n";
  return os.str();
}

void PlantParams::validate(double cr_max, double cv_cp) const {
  for (const auto& [k, m] : param_keys()) {
    const double v = this->*m;
    if (!std::isfinite(v) || v <= 0) throw ConfigError("plant parameter '" + k + "' must be positive");
  }
  if (gamma_bar >= 1) throw ConfigError("plant parameter 'gamma_bar' must be below 1");
  if (!(S_t > c * (std::pow(cr_max, cv_cp) - 1.0)))
    throw ConfigError("plant parameter 'S_t' too small for the admissible compression ratio");
}

void Disturbances::validate() const {
  for (const auto& [k, m] : dist_keys()) {
    const double v = this->*m;
    if (!std::isfinite(v) || v <= 0) throw ConfigError("disturbance '" + k + "' must be positive");
  }
}

}  // namespace vcr
