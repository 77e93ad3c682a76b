#include "irsrs/rate_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace irsrs {

namespace {

void check_shapes(const UserChannels& uc, const PrecoderSet& pre) {
  if (uc.groups() != pre.groups()) throw StructuralError("precoder/channel group count mismatch");
  for (int k = 0; k < uc.groups(); ++k)
    for (auto kind : {UserKind::Near, UserKind::Edge})
      if (uc.of(kind, k).size() != pre.antennas())
        throw StructuralError("precoder/channel antenna count mismatch");
}

Streams<double> user_sinrs(const CVec& c, UserKind kind, int k, const PrecoderSet& pre) {
  const int groups = pre.groups();
  const double s_global = gain(c, pre.global);
  double group_all = 0.0, group_other = 0.0, priv_other = 0.0, priv_all = 0.0;
  double own_group = 0.0, own_near = 0.0, own_edge = 0.0;
  for (int i = 0; i < groups; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const double q = gain(c, pre.group[idx]);
    const double a = gain(c, pre.near[idx]);
    const double b = gain(c, pre.edge[idx]);
    group_all += q;
    priv_all += a + b;
    if (i == k) {
      own_group = q;
      own_near = a;
      own_edge = b;
    } else {
      group_other += q;
      priv_other += a + b + q;
    }
  }
  const double own_priv = kind == UserKind::Near ? own_near : own_edge;
  const double sibling_priv = kind == UserKind::Near ? own_edge : own_near;

  Streams<double> s;
  s.global = s_global / (group_all + priv_all + 1.0);
  s.group = own_group / (group_other + priv_all + 1.0);
  s.priv = own_priv / (sibling_priv + priv_other + 1.0);
  return s;
}

}  // namespace

SinrReport compute_sinrs(const UserChannels& uc, const PrecoderSet& pre) {
  check_shapes(uc, pre);
  SinrReport r(uc.groups());
  for (int k = 0; k < uc.groups(); ++k)
    for (auto kind : {UserKind::Near, UserKind::Edge})
      r.at(kind, k) = user_sinrs(uc.of(kind, k), kind, k, pre);
  return r;
}

SinrReport compute_sinrs(const ChannelSet& ch, const PrecoderSet& pre, const IrsSelection& sel,
                         const IrsCodebook& cb) {
  return compute_sinrs(user_channels(ch, sel, cb), pre);
}

StreamRates rates_from_sinrs(const SinrReport& s) {
  StreamRates r(s.groups());
  auto rate = [](double g) { return std::log2(1.0 + g); };
  for (int k = 0; k < s.groups(); ++k)
    for (auto kind : {UserKind::Near, UserKind::Edge}) {
      const auto& in = s.at(kind, k);
      r.at(kind, k) = {rate(in.global), rate(in.group), rate(in.priv)};
    }
  return r;
}

double global_cap(const StreamRates& rates) {
  double cap = std::numeric_limits<double>::infinity();
  for (int k = 0; k < rates.groups(); ++k)
    cap = std::min({cap, rates.near[static_cast<std::size_t>(k)].global,
                    rates.edge[static_cast<std::size_t>(k)].global});
  return cap;
}

std::vector<double> group_caps(const StreamRates& rates) {
  std::vector<double> caps(static_cast<std::size_t>(rates.groups()));
  for (std::size_t k = 0; k < caps.size(); ++k)
    caps[k] = std::min(rates.near[k].group, rates.edge[k].group);
  return caps;
}

RateReport total_rates(const StreamRates& rates, const RateAllocation& alloc, double slack) {
  const int groups = rates.groups();
  if (alloc.groups() != groups) throw StructuralError("allocation group count mismatch");

  RateReport rep;
  rep.stream = rates;
  rep.global_cap = global_cap(rates);
  rep.group_cap = group_caps(rates);
  rep.total = PerUser<double>(groups);

  for (int k = 0; k < groups; ++k)
    for (auto kind : {UserKind::Near, UserKind::Edge})
      if (alloc.global_share(kind, k) < 0.0 || alloc.group_share(kind, k) < 0.0)
        throw InfeasibleAllocation("common-rate portions must be non-negative");

  const double used = alloc.global_sum();
  if (used > rep.global_cap + slack)
    throw InfeasibleAllocation("global common allocation " + std::to_string(used) +
                               " exceeds R_s = " + std::to_string(rep.global_cap));
  for (int k = 0; k < groups; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double g = alloc.group_near[i] + alloc.group_edge[i];
    if (g > rep.group_cap[i] + slack)
      throw InfeasibleAllocation("group " + std::to_string(k) + " common allocation exceeds cap");
    rep.total.near[i] = alloc.global_near[i] + alloc.group_near[i] + rates.near[i].priv;
    rep.total.edge[i] = alloc.global_edge[i] + alloc.group_edge[i] + rates.edge[i].priv;
  }
  return rep;
}

double wsr(std::span<const double> user_weights, const RateReport& report) {
  const int groups = report.total.groups();
  if (user_weights.size() != static_cast<std::size_t>(2 * groups))
    throw StructuralError("user_weights must have 2K entries");
  double total = 0.0;
  for (int k = 0; k < groups; ++k) {
    const auto i = static_cast<std::size_t>(k);
    total += user_weights[i] * report.total.near[i] +
             user_weights[i + static_cast<std::size_t>(groups)] * report.total.edge[i];
  }
  return total;
}

RateAllocation clip_to_caps(const StreamRates& rates, const RateAllocation& alloc) {
  RateAllocation out = alloc;
  const double cap_s = global_cap(rates);
  const auto caps_g = group_caps(rates);
  for (std::size_t k = 0; k < out.global_near.size(); ++k) {
    out.global_near[k] = std::clamp(out.global_near[k], 0.0, cap_s);
    out.global_edge[k] = std::clamp(out.global_edge[k], 0.0, cap_s);
    out.group_near[k] = std::clamp(out.group_near[k], 0.0, caps_g[k]);
    out.group_edge[k] = std::clamp(out.group_edge[k], 0.0, caps_g[k]);
    const double g = out.group_near[k] + out.group_edge[k];
    if (g > caps_g[k]) {
      const double f = caps_g[k] / g;
      out.group_near[k] *= f;
      out.group_edge[k] *= f;
    }
  }
  const double s = out.global_sum();
  if (s > cap_s) {
    const double f = cap_s / s;
    for (std::size_t k = 0; k < out.global_near.size(); ++k) {
      out.global_near[k] *= f;
      out.global_edge[k] *= f;
    }
  }
  return out;
}

RateReport evaluate_rates(const UserChannels& uc, const PrecoderSet& pre,
                          const RateAllocation& alloc, std::span<const double> user_weights) {
  auto rep = total_rates(rates_from_sinrs(compute_sinrs(uc, pre)), alloc);
  rep.wsr = wsr(user_weights, rep);
  return rep;
}

}  // namespace irsrs
