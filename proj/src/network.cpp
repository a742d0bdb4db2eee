#include "gridse/network.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <utility>

namespace gridse {

TwoPortAdmittance branch_two_port(const Branch& branch) {
  const Complex y = 1.0 / Complex(branch.r, branch.x);
  const Complex y_sh(0.0, branch.b_charging / 2.0);
  const double k = branch.tap;
  TwoPortAdmittance tp;
  tp.y_ff = (y + y_sh) / (k * k);
  tp.y_ft = -y / k;
  tp.y_tf = -y / k;
  tp.y_tt = y + y_sh;
  return tp;
}

SpCMat build_ybus(const std::vector<Bus>& buses, const std::vector<Branch>& branches) {
  const int n = static_cast<int>(buses.size());
  std::vector<CTriplet> trips;
  trips.reserve(4 * branches.size() + buses.size());
  for (const Branch& br : branches) {
    const TwoPortAdmittance tp = branch_two_port(br);
    trips.emplace_back(br.from, br.from, tp.y_ff);
    trips.emplace_back(br.to, br.to, tp.y_tt);
    trips.emplace_back(br.from, br.to, tp.y_ft);
    trips.emplace_back(br.to, br.from, tp.y_tf);
  }
  for (int i = 0; i < n; ++i) {
    if (buses[i].shunt_g != 0.0 || buses[i].shunt_b != 0.0) {
      trips.emplace_back(i, i, Complex(buses[i].shunt_g, buses[i].shunt_b));
    }
  }
  SpCMat ybus(n, n);
  ybus.setFromTriplets(trips.begin(), trips.end());
  ybus.makeCompressed();
  return ybus;
}

NetworkModel::NetworkModel(std::vector<Bus> buses, std::vector<Branch> branches,
                           double base_mva, std::string name)
    : buses_(std::move(buses)),
      branches_(std::move(branches)),
      base_mva_(base_mva),
      name_(std::move(name)) {
  const int n = size();
  if (n == 0) throw ValidationError("network has no buses");

  for (int i = 0; i < n; ++i) {
    const Bus& bus = buses_[i];
    if (!id_to_index_.emplace(bus.id, i).second) {
      throw ValidationError("duplicate bus id " + std::to_string(bus.id));
    }
    if (bus.slack) {
      if (slack_index_ >= 0) {
        throw ValidationError("more than one slack bus (" +
                              std::to_string(buses_[slack_index_].id) + " and " +
                              std::to_string(bus.id) + ")");
      }
      slack_index_ = i;
    }
    if (!(bus.v_true > 0.0)) {
      throw ValidationError("bus " + std::to_string(bus.id) +
                            ": solved voltage magnitude must be positive");
    }
  }
  if (slack_index_ < 0) throw ValidationError("no slack bus");

  for (std::size_t k = 0; k < branches_.size(); ++k) {
    const Branch& br = branches_[k];
    std::ostringstream where;
    where << "branch " << k;
    if (br.from < 0 || br.from >= n || br.to < 0 || br.to >= n) {
      throw ValidationError(where.str() + ": endpoint out of range");
    }
    if (br.from == br.to) {
      throw ValidationError(where.str() + ": from and to coincide");
    }
    if (br.r * br.r + br.x * br.x <= 0.0) {
      throw ValidationError(where.str() + ": zero series impedance");
    }
    if (!(br.tap > 0.0)) {
      throw ValidationError(where.str() + ": tap ratio must be positive");
    }
  }

  // reject disconnected networks
  std::vector<std::vector<int>> adj(n);
  for (const Branch& br : branches_) {
    adj[br.from].push_back(br.to);
    adj[br.to].push_back(br.from);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{slack_index_};
  seen[slack_index_] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int w : adj[u]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  if (reached != n) {
    throw ValidationError("network is disconnected (" + std::to_string(n - reached) +
                          " buses unreachable from slack)");
  }

  ybus_ = build_ybus(buses_, branches_);
}

int NetworkModel::index_of(int external_id) const {
  const auto it = id_to_index_.find(external_id);
  if (it == id_to_index_.end()) {
    throw ValidationError("unknown bus id " + std::to_string(external_id));
  }
  return it->second;
}

}  // namespace gridse
