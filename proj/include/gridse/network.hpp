#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "gridse/types.hpp"

namespace gridse {

struct Bus {
  int id = 0;            // external id as found in the case file
  bool slack = false;
  double shunt_g = 0.0;  // p.u. conductance to ground
  double shunt_b = 0.0;  // p.u. susceptance to ground
  double v_true = 1.0;   // p.u. magnitude of the solved operating point
  double theta_true = 0.0;  // radians
};

struct Branch {
  int from = 0;  // internal 0-based bus indices
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b_charging = 0.0;  // total line charging susceptance
  double tap = 1.0;         // turn ratio, 1.0 for lines
};

/// Branch admittances seen from its two terminals: I_from = y_ff U_f + y_ft U_t,
/// I_to = y_tf U_f + y_tt U_t.
struct TwoPortAdmittance {
  Complex y_ff, y_ft, y_tf, y_tt;
};

TwoPortAdmittance branch_two_port(const Branch& branch);

SpCMat build_ybus(const std::vector<Bus>& buses, const std::vector<Branch>& branches);

/// Immutable network: buses, branches and the assembled bus admittance matrix.
/// Construction validates the model (exactly one slack, no dangling or zero
/// impedance branches, connected graph) and throws ValidationError otherwise.
class NetworkModel {
 public:
  NetworkModel(std::vector<Bus> buses, std::vector<Branch> branches, double base_mva,
               std::string name = "");

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const SpCMat& ybus() const { return ybus_; }
  double base_mva() const { return base_mva_; }
  const std::string& name() const { return name_; }

  int size() const { return static_cast<int>(buses_.size()); }
  int slack_index() const { return slack_index_; }

  /// Internal index of an external bus id; throws ValidationError if unknown.
  int index_of(int external_id) const;

 private:
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  SpCMat ybus_;
  double base_mva_ = 100.0;
  std::string name_;
  int slack_index_ = -1;
  std::unordered_map<int, int> id_to_index_;
};

}  // namespace gridse
