#include "gridse/measurement.hpp"

#include <cassert>
#include <cmath>

#include <json.hpp>

namespace gridse {

using nlohmann::json;

std::string to_string(Family family) {
  return family == Family::Pmu ? "pmu" : "scada";
}

Family family_from_string(const std::string& name) {
  if (name == "pmu") return Family::Pmu;
  if (name == "scada") return Family::Scada;
  throw ParseError("unknown measurement family \"" + name + "\"");
}

CVec StateVector::phasors() const {
  const int n = size();
  CVec u(n);
  if (kind == Kind::Rectangular) {
    for (int i = 0; i < n; ++i) u[i] = Complex(a[i], b[i]);
  } else {
    for (int i = 0; i < n; ++i) u[i] = std::polar(a[i], b[i]);
  }
  return u;
}

Vec pack_unknowns(const StateVector& state) {
  const int n = state.size();
  if (state.kind == StateVector::Kind::Rectangular) {
    Vec x(2 * n);
    x.head(n) = state.a;
    x.tail(n) = state.b;
    return x;
  }
  Vec x(2 * n - 1);
  int col = 0;
  for (int i = 0; i < n; ++i) {
    if (i == state.slack_index) continue;
    x[col++] = state.b[i];
  }
  x.tail(n) = state.a;
  return x;
}

StateVector state_from_unknowns(const StateVector& like, const Vec& unknowns) {
  const int n = like.size();
  StateVector out = like;
  if (like.kind == StateVector::Kind::Rectangular) {
    assert(unknowns.size() == 2 * n);
    out.a = unknowns.head(n);
    out.b = unknowns.tail(n);
    return out;
  }
  assert(unknowns.size() == 2 * n - 1);
  int col = 0;
  for (int i = 0; i < n; ++i) {
    if (i == like.slack_index) continue;
    out.b[i] = unknowns[col++];
  }
  out.a = unknowns.tail(n);
  return out;
}

void apply_step(StateVector& state, const Vec& delta) {
  const int n = state.size();
  if (state.kind == StateVector::Kind::Rectangular) {
    assert(delta.size() == 2 * n);
    state.a += delta.head(n);
    state.b += delta.tail(n);
    return;
  }
  assert(delta.size() == 2 * n - 1);
  int col = 0;
  for (int i = 0; i < n; ++i) {
    if (i == state.slack_index) continue;
    state.b[i] += delta[col++];
  }
  state.a += delta.tail(n);
}

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::VRe: return "v_re";
    case ChannelKind::VIm: return "v_im";
    case ChannelKind::IInjRe: return "i_inj_re";
    case ChannelKind::IInjIm: return "i_inj_im";
    case ChannelKind::IBrRe: return "i_br_re";
    case ChannelKind::IBrIm: return "i_br_im";
    case ChannelKind::Vmag: return "vmag";
    case ChannelKind::PInj: return "p_inj";
    case ChannelKind::QInj: return "q_inj";
    case ChannelKind::PFlow: return "p_flow";
    case ChannelKind::QFlow: return "q_flow";
  }
  return "?";
}

ChannelKind channel_kind_from_string(const std::string& name) {
  for (ChannelKind kind :
       {ChannelKind::VRe, ChannelKind::VIm, ChannelKind::IInjRe, ChannelKind::IInjIm,
        ChannelKind::IBrRe, ChannelKind::IBrIm, ChannelKind::Vmag, ChannelKind::PInj,
        ChannelKind::QInj, ChannelKind::PFlow, ChannelKind::QFlow}) {
    if (to_string(kind) == name) return kind;
  }
  throw ParseError("unknown channel kind \"" + name + "\"");
}

bool is_pmu_kind(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::VRe:
    case ChannelKind::VIm:
    case ChannelKind::IInjRe:
    case ChannelKind::IInjIm:
    case ChannelKind::IBrRe:
    case ChannelKind::IBrIm:
      return true;
    default:
      return false;
  }
}

bool is_branch_kind(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::IBrRe:
    case ChannelKind::IBrIm:
    case ChannelKind::PFlow:
    case ChannelKind::QFlow:
      return true;
    default:
      return false;
  }
}

MeasurementPlan default_plan(const NetworkModel& net, Family family) {
  MeasurementPlan plan;
  plan.family = family;
  const int n = net.size();
  const int m = static_cast<int>(net.branches().size());
  if (family == Family::Pmu) {
    plan.channels.reserve(4 * n + 4 * m);
    for (int i = 0; i < n; ++i) {
      plan.channels.push_back({ChannelKind::VRe, i, -1, BranchEnd::From, kSigmaVoltage});
      plan.channels.push_back({ChannelKind::VIm, i, -1, BranchEnd::From, kSigmaVoltage});
    }
    for (int i = 0; i < n; ++i) {
      plan.channels.push_back({ChannelKind::IInjRe, i, -1, BranchEnd::From, kSigmaCurrent});
      plan.channels.push_back({ChannelKind::IInjIm, i, -1, BranchEnd::From, kSigmaCurrent});
    }
    for (int k = 0; k < m; ++k) {
      for (BranchEnd end : {BranchEnd::From, BranchEnd::To}) {
        plan.channels.push_back({ChannelKind::IBrRe, -1, k, end, kSigmaCurrent});
        plan.channels.push_back({ChannelKind::IBrIm, -1, k, end, kSigmaCurrent});
      }
    }
  } else {
    plan.channels.reserve(3 * n + 4 * m);
    for (int i = 0; i < n; ++i) {
      plan.channels.push_back({ChannelKind::Vmag, i, -1, BranchEnd::From, kSigmaVoltage});
    }
    for (int i = 0; i < n; ++i) {
      plan.channels.push_back({ChannelKind::PInj, i, -1, BranchEnd::From, kSigmaPower});
      plan.channels.push_back({ChannelKind::QInj, i, -1, BranchEnd::From, kSigmaPower});
    }
    for (int k = 0; k < m; ++k) {
      for (BranchEnd end : {BranchEnd::From, BranchEnd::To}) {
        plan.channels.push_back({ChannelKind::PFlow, -1, k, end, kSigmaPower});
        plan.channels.push_back({ChannelKind::QFlow, -1, k, end, kSigmaPower});
      }
    }
  }
  return plan;
}

Vec eval_pmu(const StateVector& state, const NetworkModel& net, const MeasurementPlan& plan) {
  assert(plan.family == Family::Pmu);
  assert(state.kind == StateVector::Kind::Rectangular);
  const CVec u = state.phasors();
  const CVec i_inj = net.ybus() * u;

  Vec y(plan.size());
  for (int row = 0; row < plan.size(); ++row) {
    const MeasurementChannel& ch = plan.channels[row];
    switch (ch.kind) {
      case ChannelKind::VRe: y[row] = u[ch.bus].real(); break;
      case ChannelKind::VIm: y[row] = u[ch.bus].imag(); break;
      case ChannelKind::IInjRe: y[row] = i_inj[ch.bus].real(); break;
      case ChannelKind::IInjIm: y[row] = i_inj[ch.bus].imag(); break;
      case ChannelKind::IBrRe:
      case ChannelKind::IBrIm: {
        const Branch& br = net.branches()[ch.branch];
        const TwoPortAdmittance tp = branch_two_port(br);
        const Complex current = (ch.end == BranchEnd::From)
                                    ? tp.y_ff * u[br.from] + tp.y_ft * u[br.to]
                                    : tp.y_tf * u[br.from] + tp.y_tt * u[br.to];
        y[row] = (ch.kind == ChannelKind::IBrRe) ? current.real() : current.imag();
        break;
      }
      default:
        throw ValidationError("non-PMU channel in PMU plan");
    }
  }
  return y;
}

SpMat pmu_matrix(const NetworkModel& net, const MeasurementPlan& plan) {
  assert(plan.family == Family::Pmu);
  const int n = net.size();
  std::vector<Triplet> trips;
  trips.reserve(8 * plan.size());

  // I = Y U in rectangular parts:
  //   Re I_i = sum_j G_ij e_j - B_ij f_j
  //   Im I_i = sum_j B_ij e_j + G_ij f_j
  const SpCMat& ybus = net.ybus();
  for (int row = 0; row < plan.size(); ++row) {
    const MeasurementChannel& ch = plan.channels[row];
    switch (ch.kind) {
      case ChannelKind::VRe:
        trips.emplace_back(row, ch.bus, 1.0);
        break;
      case ChannelKind::VIm:
        trips.emplace_back(row, n + ch.bus, 1.0);
        break;
      case ChannelKind::IInjRe:
      case ChannelKind::IInjIm: {
        // ybus is symmetric, so column ch.bus holds row ch.bus
        for (SpCMat::InnerIterator it(ybus, ch.bus); it; ++it) {
          const int j = static_cast<int>(it.row());
          const double g = it.value().real();
          const double b = it.value().imag();
          if (ch.kind == ChannelKind::IInjRe) {
            trips.emplace_back(row, j, g);
            trips.emplace_back(row, n + j, -b);
          } else {
            trips.emplace_back(row, j, b);
            trips.emplace_back(row, n + j, g);
          }
        }
        break;
      }
      case ChannelKind::IBrRe:
      case ChannelKind::IBrIm: {
        const Branch& br = net.branches()[ch.branch];
        const TwoPortAdmittance tp = branch_two_port(br);
        const Complex y_own = (ch.end == BranchEnd::From) ? tp.y_ff : tp.y_tf;
        const Complex y_other = (ch.end == BranchEnd::From) ? tp.y_ft : tp.y_tt;
        const int own = br.from;
        const int other = br.to;
        if (ch.kind == ChannelKind::IBrRe) {
          trips.emplace_back(row, own, y_own.real());
          trips.emplace_back(row, n + own, -y_own.imag());
          trips.emplace_back(row, other, y_other.real());
          trips.emplace_back(row, n + other, -y_other.imag());
        } else {
          trips.emplace_back(row, own, y_own.imag());
          trips.emplace_back(row, n + own, y_own.real());
          trips.emplace_back(row, other, y_other.imag());
          trips.emplace_back(row, n + other, y_other.real());
        }
        break;
      }
      default:
        throw ValidationError("non-PMU channel in PMU plan");
    }
  }

  SpMat h(plan.size(), 2 * n);
  h.setFromTriplets(trips.begin(), trips.end());
  h.makeCompressed();
  return h;
}

namespace {

struct FlowTerms {
  double p, q;                    // from- or to-side complex power
  double dp_dth_own, dp_dth_other, dp_dv_own, dp_dv_other;
  double dq_dth_own, dq_dth_other, dq_dv_own, dq_dv_other;
};

// S = conj(y_own) v_own^2 + conj(y_other) v_own v_other e^{j(th_own - th_other)}
FlowTerms flow_terms(Complex y_own, Complex y_other, double v_own, double v_other,
                     double th_own, double th_other) {
  const double g1 = y_own.real(), b1 = y_own.imag();
  const double g2 = y_other.real(), b2 = y_other.imag();
  const double d = th_own - th_other;
  const double c = std::cos(d), s = std::sin(d);
  const double pc = g2 * c + b2 * s;   // Re(conj(y_other) e^{jd})
  const double qc = g2 * s - b2 * c;   // Im(conj(y_other) e^{jd})
  FlowTerms t;
  t.p = g1 * v_own * v_own + v_own * v_other * pc;
  t.q = -b1 * v_own * v_own + v_own * v_other * qc;
  t.dp_dth_own = v_own * v_other * (-g2 * s + b2 * c);
  t.dp_dth_other = -t.dp_dth_own;
  t.dp_dv_own = 2.0 * g1 * v_own + v_other * pc;
  t.dp_dv_other = v_own * pc;
  t.dq_dth_own = v_own * v_other * pc;
  t.dq_dth_other = -t.dq_dth_own;
  t.dq_dv_own = -2.0 * b1 * v_own + v_other * qc;
  t.dq_dv_other = v_own * qc;
  return t;
}

}  // namespace

Vec eval_scada(const StateVector& state, const NetworkModel& net, const MeasurementPlan& plan) {
  assert(plan.family == Family::Scada);
  assert(state.kind == StateVector::Kind::Polar);
  const CVec u = state.phasors();
  const CVec i_inj = net.ybus() * u;

  Vec y(plan.size());
  for (int row = 0; row < plan.size(); ++row) {
    const MeasurementChannel& ch = plan.channels[row];
    switch (ch.kind) {
      case ChannelKind::Vmag:
        y[row] = state.a[ch.bus];
        break;
      case ChannelKind::PInj:
      case ChannelKind::QInj: {
        const Complex s = u[ch.bus] * std::conj(i_inj[ch.bus]);
        y[row] = (ch.kind == ChannelKind::PInj) ? s.real() : s.imag();
        break;
      }
      case ChannelKind::PFlow:
      case ChannelKind::QFlow: {
        const Branch& br = net.branches()[ch.branch];
        const TwoPortAdmittance tp = branch_two_port(br);
        const Complex current = (ch.end == BranchEnd::From)
                                    ? tp.y_ff * u[br.from] + tp.y_ft * u[br.to]
                                    : tp.y_tf * u[br.from] + tp.y_tt * u[br.to];
        const Complex s = ((ch.end == BranchEnd::From) ? u[br.from] : u[br.to]) *
                          std::conj(current);
        y[row] = (ch.kind == ChannelKind::PFlow) ? s.real() : s.imag();
        break;
      }
      default:
        throw ValidationError("non-SCADA channel in SCADA plan");
    }
  }
  return y;
}

SpMat scada_jacobian(const StateVector& state, const NetworkModel& net,
                     const MeasurementPlan& plan) {
  assert(plan.family == Family::Scada);
  assert(state.kind == StateVector::Kind::Polar);
  const int n = net.size();
  const int slack = state.slack_index;
  const Vec& vm = state.a;
  const Vec& va = state.b;
  const SpCMat& ybus = net.ybus();

  // column layout: theta for every non-slack bus (bus order), then all v
  const auto th_col = [&](int bus) { return bus < slack ? bus : bus - 1; };
  const auto v_col = [&](int bus) { return (n - 1) + bus; };

  std::vector<Triplet> trips;
  trips.reserve(12 * plan.size());
  const auto add_theta = [&](int row, int bus, double value) {
    if (bus != slack) trips.emplace_back(row, th_col(bus), value);
  };
  const auto add_v = [&](int row, int bus, double value) {
    trips.emplace_back(row, v_col(bus), value);
  };

  for (int row = 0; row < plan.size(); ++row) {
    const MeasurementChannel& ch = plan.channels[row];
    switch (ch.kind) {
      case ChannelKind::Vmag:
        add_v(row, ch.bus, 1.0);
        break;
      case ChannelKind::PInj:
      case ChannelKind::QInj: {
        const int i = ch.bus;
        double p_i = 0.0, q_i = 0.0, g_ii = 0.0, b_ii = 0.0;
        // first pass accumulates P_i, Q_i and emits off-diagonal partials
        for (SpCMat::InnerIterator it(ybus, i); it; ++it) {
          const int j = static_cast<int>(it.row());
          const double g = it.value().real();
          const double b = it.value().imag();
          if (j == i) {
            g_ii = g;
            b_ii = b;
            p_i += vm[i] * vm[i] * g;
            q_i += -vm[i] * vm[i] * b;
            continue;
          }
          const double d = va[i] - va[j];
          const double c = std::cos(d), s = std::sin(d);
          p_i += vm[i] * vm[j] * (g * c + b * s);
          q_i += vm[i] * vm[j] * (g * s - b * c);
          if (ch.kind == ChannelKind::PInj) {
            add_theta(row, j, vm[i] * vm[j] * (g * s - b * c));
            add_v(row, j, vm[i] * (g * c + b * s));
          } else {
            add_theta(row, j, -vm[i] * vm[j] * (g * c + b * s));
            add_v(row, j, vm[i] * (g * s - b * c));
          }
        }
        if (ch.kind == ChannelKind::PInj) {
          add_theta(row, i, -q_i - b_ii * vm[i] * vm[i]);
          add_v(row, i, p_i / vm[i] + g_ii * vm[i]);
        } else {
          add_theta(row, i, p_i - g_ii * vm[i] * vm[i]);
          add_v(row, i, q_i / vm[i] - b_ii * vm[i]);
        }
        break;
      }
      case ChannelKind::PFlow:
      case ChannelKind::QFlow: {
        const Branch& br = net.branches()[ch.branch];
        const TwoPortAdmittance tp = branch_two_port(br);
        const bool from_side = (ch.end == BranchEnd::From);
        const int own = from_side ? br.from : br.to;
        const int other = from_side ? br.to : br.from;
        const Complex y_own = from_side ? tp.y_ff : tp.y_tt;
        const Complex y_other = from_side ? tp.y_ft : tp.y_tf;
        const FlowTerms t =
            flow_terms(y_own, y_other, vm[own], vm[other], va[own], va[other]);
        if (ch.kind == ChannelKind::PFlow) {
          add_theta(row, own, t.dp_dth_own);
          add_theta(row, other, t.dp_dth_other);
          add_v(row, own, t.dp_dv_own);
          add_v(row, other, t.dp_dv_other);
        } else {
          add_theta(row, own, t.dq_dth_own);
          add_theta(row, other, t.dq_dth_other);
          add_v(row, own, t.dq_dv_own);
          add_v(row, other, t.dq_dv_other);
        }
        break;
      }
      default:
        throw ValidationError("non-SCADA channel in SCADA plan");
    }
  }

  SpMat h(plan.size(), 2 * n - 1);
  h.setFromTriplets(trips.begin(), trips.end());
  h.makeCompressed();
  return h;
}

std::string plan_to_json(const MeasurementPlan& plan) {
  json doc;
  doc["family"] = to_string(plan.family);
  json channels = json::array();
  for (const MeasurementChannel& ch : plan.channels) {
    json jc;
    jc["kind"] = to_string(ch.kind);
    if (is_branch_kind(ch.kind)) {
      jc["branch"] = ch.branch;
      jc["end"] = ch.end == BranchEnd::From ? "from" : "to";
    } else {
      jc["bus"] = ch.bus;
    }
    jc["sigma"] = ch.sigma;
    channels.push_back(std::move(jc));
  }
  doc["channels"] = std::move(channels);
  return doc.dump(1);
}

MeasurementPlan plan_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ParseError(std::string("measurement plan: ") + err.what());
  }
  MeasurementPlan plan;
  plan.family = family_from_string(doc.at("family").get<std::string>());
  for (const json& jc : doc.at("channels")) {
    MeasurementChannel ch;
    ch.kind = channel_kind_from_string(jc.at("kind").get<std::string>());
    if (is_branch_kind(ch.kind)) {
      ch.branch = jc.at("branch").get<int>();
      ch.end = jc.at("end").get<std::string>() == "to" ? BranchEnd::To : BranchEnd::From;
    } else {
      ch.bus = jc.at("bus").get<int>();
    }
    ch.sigma = jc.at("sigma").get<double>();
    if (!(ch.sigma > 0.0)) throw ValidationError("channel sigma must be positive");
    plan.channels.push_back(ch);
  }
  return plan;
}

}  // namespace gridse
