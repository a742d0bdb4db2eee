#include "gridse/case_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace gridse {
namespace {

constexpr double kPi = 3.14159265358979323846;

using nlohmann::json;

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& err) {
    throw ParseError(path + ": " + err.what());
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing \"" + key + "\" key");
  return *it;
}

double number_at(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) throw ParseError(where + ": \"" + key + "\" is not a number");
  return v.get<double>();
}

}  // namespace

NetworkModel load_case(const std::string& path) {
  const json doc = parse_file(path);
  if (!doc.is_object()) throw ParseError(path + ": top level is not an object");

  const double base_mva = number_at(doc, "base_mva", path);
  const json& jbuses = require(doc, "buses", path);
  const json& jbranches = require(doc, "branches", path);
  if (!jbuses.is_array()) throw ParseError(path + ": \"buses\" is not an array");
  if (!jbranches.is_array()) throw ParseError(path + ": \"branches\" is not an array");

  std::vector<Bus> buses;
  buses.reserve(jbuses.size());
  for (std::size_t i = 0; i < jbuses.size(); ++i) {
    const std::string where = path + ": buses[" + std::to_string(i) + "]";
    const json& jb = jbuses[i];
    Bus bus;
    bus.id = static_cast<int>(number_at(jb, "id", where));
    const json& jslack = require(jb, "slack", where);
    if (!jslack.is_boolean()) throw ParseError(where + ": \"slack\" is not a boolean");
    bus.slack = jslack.get<bool>();
    bus.shunt_g = number_at(jb, "gs", where);
    bus.shunt_b = number_at(jb, "bs", where);
    bus.v_true = number_at(jb, "vm", where);
    bus.theta_true = number_at(jb, "va_deg", where) * kPi / 180.0;
    buses.push_back(bus);
  }

  // external id -> position, for branch endpoint resolution
  std::unordered_map<int, int> index;
  for (std::size_t i = 0; i < buses.size(); ++i) index.emplace(buses[i].id, static_cast<int>(i));

  std::vector<Branch> branches;
  branches.reserve(jbranches.size());
  for (std::size_t i = 0; i < jbranches.size(); ++i) {
    const std::string where = path + ": branches[" + std::to_string(i) + "]";
    const json& jb = jbranches[i];
    Branch br;
    const int from_id = static_cast<int>(number_at(jb, "from", where));
    const int to_id = static_cast<int>(number_at(jb, "to", where));
    const auto fit = index.find(from_id);
    const auto tit = index.find(to_id);
    if (fit == index.end()) {
      throw ValidationError(where + ": endpoint references unknown bus " +
                            std::to_string(from_id));
    }
    if (tit == index.end()) {
      throw ValidationError(where + ": endpoint references unknown bus " +
                            std::to_string(to_id));
    }
    br.from = fit->second;
    br.to = tit->second;
    br.r = number_at(jb, "r", where);
    br.x = number_at(jb, "x", where);
    br.b_charging = number_at(jb, "b", where);
    br.tap = number_at(jb, "tap", where);
    branches.push_back(br);
  }

  std::string name = doc.value("name", std::string{});
  return NetworkModel(std::move(buses), std::move(branches), base_mva, std::move(name));
}

void save_case(const NetworkModel& net, const std::string& path) {
  json doc;
  if (!net.name().empty()) doc["name"] = net.name();
  doc["base_mva"] = net.base_mva();
  json jbuses = json::array();
  for (const Bus& bus : net.buses()) {
    jbuses.push_back({{"id", bus.id},
                      {"slack", bus.slack},
                      {"gs", bus.shunt_g},
                      {"bs", bus.shunt_b},
                      {"vm", bus.v_true},
                      {"va_deg", bus.theta_true * 180.0 / kPi}});
  }
  doc["buses"] = std::move(jbuses);
  json jbranches = json::array();
  for (const Branch& br : net.branches()) {
    jbranches.push_back({{"from", net.buses()[br.from].id},
                         {"to", net.buses()[br.to].id},
                         {"r", br.r},
                         {"x", br.x},
                         {"b", br.b_charging},
                         {"tap", br.tap}});
  }
  doc["branches"] = std::move(jbranches);
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  out << doc.dump(1) << "\n";
}

// ---------------------------------------------------------------------------
// IEEE Common Data Format import.
//
// Field positions follow the published CDF layout (1-based columns):
//   bus:    1-4 number, 25-26 type, 28-33 final voltage, 34-40 final angle,
//           107-114 shunt G, 115-122 shunt B
//   branch: 1-4 tap bus, 6-9 z bus, 19 type, 20-29 R, 30-40 X, 41-50 B,
//           77-82 turns ratio, 84-90 phase shift
// Records are space padded; a field whose columns lie beyond the record end
// is taken as zero.

namespace {

std::string slice(const std::string& line, int col_from, int col_to) {
  if (static_cast<int>(line.size()) < col_from) return {};
  const auto begin = static_cast<std::size_t>(col_from - 1);
  const auto len = static_cast<std::size_t>(col_to - col_from + 1);
  return line.substr(begin, std::min(len, line.size() - begin));
}

double cdf_number(const std::string& line, int col_from, int col_to, const char* field,
                  int lineno) {
  const std::string text = slice(line, col_from, col_to);
  if (text.find_first_not_of(" \t\r") == std::string::npos) return 0.0;
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(lineno) + ": malformed " + field +
                     " field \"" + text + "\"");
  }
  if (text.find_first_not_of(" \t\r", used) != std::string::npos) {
    throw ParseError("line " + std::to_string(lineno) + ": malformed " + field +
                     " field \"" + text + "\"");
  }
  return value;
}

int cdf_int(const std::string& line, int col_from, int col_to, const char* field,
            int lineno) {
  return static_cast<int>(cdf_number(line, col_from, col_to, field, lineno));
}

bool starts_with(const std::string& line, const char* prefix) {
  return line.rfind(prefix, 0) == 0;
}

}  // namespace

NetworkModel import_cdf(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");

  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  ++lineno;
  double base_mva = cdf_number(line, 32, 37, "MVA base", lineno);
  if (base_mva <= 0.0) base_mva = 100.0;

  std::vector<Bus> buses;
  std::unordered_map<int, int> index;
  std::vector<Branch> branches;
  bool saw_bus_section = false;
  bool saw_branch_section = false;

  while (std::getline(in, line)) {
    ++lineno;
    if (starts_with(line, "BUS DATA FOLLOWS")) {
      saw_bus_section = true;
      bool terminated = false;
      while (std::getline(in, line)) {
        ++lineno;
        if (starts_with(line, "-999")) {
          terminated = true;
          break;
        }
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Bus bus;
        bus.id = cdf_int(line, 1, 4, "bus number", lineno);
        const int type = cdf_int(line, 25, 26, "bus type", lineno);
        bus.slack = (type == 3);
        bus.v_true = cdf_number(line, 28, 33, "final voltage", lineno);
        bus.theta_true = cdf_number(line, 34, 40, "final angle", lineno) * kPi / 180.0;
        bus.shunt_g = cdf_number(line, 107, 114, "shunt conductance", lineno);
        bus.shunt_b = cdf_number(line, 115, 122, "shunt susceptance", lineno);
        index.emplace(bus.id, static_cast<int>(buses.size()));
        buses.push_back(bus);
      }
      if (!terminated) throw ParseError(path + ": bus section not terminated by -999");
    } else if (starts_with(line, "BRANCH DATA FOLLOWS")) {
      saw_branch_section = true;
      bool terminated = false;
      while (std::getline(in, line)) {
        ++lineno;
        if (starts_with(line, "-999")) {
          terminated = true;
          break;
        }
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Branch br;
        const int from_id = cdf_int(line, 1, 4, "tap bus number", lineno);
        const int to_id = cdf_int(line, 6, 9, "z bus number", lineno);
        const auto fit = index.find(from_id);
        const auto tit = index.find(to_id);
        if (fit == index.end() || tit == index.end()) {
          throw ValidationError("line " + std::to_string(lineno) +
                                ": branch references unknown bus");
        }
        br.from = fit->second;
        br.to = tit->second;
        const int type = cdf_int(line, 19, 19, "branch type", lineno);
        if (type == 4) {
          throw ParseError("line " + std::to_string(lineno) +
                           ": unsupported record type (phase shifter)");
        }
        br.r = cdf_number(line, 20, 29, "resistance", lineno);
        br.x = cdf_number(line, 30, 40, "reactance", lineno);
        br.b_charging = cdf_number(line, 41, 50, "line charging", lineno);
        const double ratio = cdf_number(line, 77, 82, "turns ratio", lineno);
        const double shift = cdf_number(line, 84, 90, "phase shift", lineno);
        if (shift != 0.0) {
          throw ParseError("line " + std::to_string(lineno) +
                           ": unsupported record type (nonzero phase shift)");
        }
        br.tap = (ratio == 0.0) ? 1.0 : ratio;
        branches.push_back(br);
      }
      if (!terminated) throw ParseError(path + ": branch section not terminated by -999");
    }
  }

  if (!saw_bus_section) throw ParseError(path + ": no BUS DATA section");
  if (!saw_branch_section) throw ParseError(path + ": no BRANCH DATA section");

  return NetworkModel(std::move(buses), std::move(branches), base_mva, path);
}

}  // namespace gridse
