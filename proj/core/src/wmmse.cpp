#include "irsrs/wmmse.hpp"

#include "irsrs/rate_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace irsrs {

namespace {

// Intended-stream inner products c^H p for one user.
Streams<cdouble> intended(const CVec& c, UserKind kind, int k, const PrecoderSet& pre) {
  const auto i = static_cast<std::size_t>(k);
  const CVec& own = kind == UserKind::Near ? pre.near[i] : pre.edge[i];
  return {c.dot(pre.global), c.dot(pre.group[i]), c.dot(own)};
}

template <typename F>
void for_each_user(int groups, F&& f) {
  for (int k = 0; k < groups; ++k)
    for (auto kind : {UserKind::Near, UserKind::Edge}) f(kind, k);
}

}  // namespace

StreamPowerReport stream_powers(const UserChannels& uc, const PrecoderSet& pre) {
  if (uc.groups() != pre.groups()) throw StructuralError("precoder/channel group count mismatch");
  StreamPowerReport r{PerUser<Streams<double>>(uc.groups()), PerUser<Streams<double>>(uc.groups())};
  for_each_user(uc.groups(), [&](UserKind kind, int k) {
    const CVec& c = uc.of(kind, k);
    double total = 1.0;
    for (const auto& id : pre.column_ids()) total += gain(c, pre.column(id));
    const auto s = intended(c, kind, k, pre);

    auto& T = r.T.at(kind, k);
    auto& I = r.I.at(kind, k);
    T.global = total;
    T.group = T.global - std::norm(s.global);
    T.priv = T.group - std::norm(s.group);
    I.global = T.group;
    I.group = T.priv;
    I.priv = T.priv - std::norm(s.priv);
  });
  return r;
}

StreamPowerReport stream_powers(const ChannelSet& ch, const PrecoderSet& pre,
                                const IrsSelection& sel, const IrsCodebook& cb) {
  return stream_powers(user_channels(ch, sel, cb), pre);
}

EqualizerSet mmse_equalizers(const UserChannels& uc, const PrecoderSet& pre) {
  const auto powers = stream_powers(uc, pre);
  EqualizerSet g(uc.groups());
  for_each_user(uc.groups(), [&](UserKind kind, int k) {
    const auto s = intended(uc.of(kind, k), kind, k, pre);
    const auto& T = powers.T.at(kind, k);
    // p^H c = conj(c^H p)
    g.at(kind, k) = {std::conj(s.global) / T.global, std::conj(s.group) / T.group,
                     std::conj(s.priv) / T.priv};
  });
  return g;
}

EqualizerSet mmse_equalizers(const ChannelSet& ch, const PrecoderSet& pre,
                             const IrsSelection& sel, const IrsCodebook& cb) {
  return mmse_equalizers(user_channels(ch, sel, cb), pre);
}

MseSet mmse_values(const StreamPowerReport& powers) {
  MseSet eps(powers.T.groups());
  for_each_user(powers.T.groups(), [&](UserKind kind, int k) {
    const auto& T = powers.T.at(kind, k);
    const auto& I = powers.I.at(kind, k);
    eps.at(kind, k) = {I.global / T.global, I.group / T.group, I.priv / T.priv};
  });
  return eps;
}

MmseWeightSet optimal_weights(const MseSet& eps) {
  MmseWeightSet u(eps.groups());
  auto inv = [](double e) {
    if (!(e > 0.0)) throw DomainError("MSE must be positive to form an MMSE weight");
    return 1.0 / std::max(e, kMinMse);
  };
  for_each_user(eps.groups(), [&](UserKind kind, int k) {
    const auto& e = eps.at(kind, k);
    u.at(kind, k) = {inv(e.global), inv(e.group), inv(e.priv)};
  });
  return u;
}

MseSet stream_mses(const UserChannels& uc, const PrecoderSet& pre, const EqualizerSet& g) {
  const auto powers = stream_powers(uc, pre);
  MseSet eps(uc.groups());
  auto mse = [](cdouble gi, double T, cdouble s) {
    return std::max(std::norm(gi) * T - 2.0 * std::real(gi * s) + 1.0, kMinMse);
  };
  for_each_user(uc.groups(), [&](UserKind kind, int k) {
    const auto s = intended(uc.of(kind, k), kind, k, pre);
    const auto& T = powers.T.at(kind, k);
    const auto& gi = g.at(kind, k);
    eps.at(kind, k) = {mse(gi.global, T.global, s.global), mse(gi.group, T.group, s.group),
                       mse(gi.priv, T.priv, s.priv)};
  });
  return eps;
}

WmseReport wmse_objective(const UserChannels& uc, const PrecoderSet& pre, const EqualizerSet& g,
                          const MmseWeightSet& u, const RateAllocation& alloc,
                          std::span<const double> user_weights) {
  const int groups = uc.groups();
  if (user_weights.size() != static_cast<std::size_t>(2 * groups))
    throw StructuralError("user_weights must have 2K entries");
  const auto eps = stream_mses(uc, pre, g);

  WmseReport r;
  r.xi = PerUser<Streams<double>>(groups);
  r.total = PerUser<double>(groups);
  r.group_max.assign(static_cast<std::size_t>(groups), -std::numeric_limits<double>::infinity());
  r.global_max = -std::numeric_limits<double>::infinity();

  for_each_user(groups, [&](UserKind kind, int k) {
    const auto& e = eps.at(kind, k);
    const auto& w = u.at(kind, k);
    auto& xi = r.xi.at(kind, k);
    xi = {weighted_mse(w.global, e.global), weighted_mse(w.group, e.group),
          weighted_mse(w.priv, e.priv)};
    r.global_max = std::max(r.global_max, xi.global);
    auto& gm = r.group_max[static_cast<std::size_t>(k)];
    gm = std::max(gm, xi.group);
    r.total.at(kind, k) = -alloc.global_share(kind, k) - alloc.group_share(kind, k) + xi.priv;
  });

  for (int k = 0; k < groups; ++k) {
    const auto i = static_cast<std::size_t>(k);
    r.objective += user_weights[i] * r.total.near[i] +
                   user_weights[i + static_cast<std::size_t>(groups)] * r.total.edge[i];
  }
  return r;
}

WmseReport wmse_objective(const ChannelSet& ch, const PrecoderSet& pre, const IrsSelection& sel,
                          const IrsCodebook& cb, const EqualizerSet& g, const MmseWeightSet& u,
                          const RateAllocation& alloc, const NetworkConfig& cfg) {
  return wmse_objective(user_channels(ch, sel, cb), pre, g, u, alloc, cfg.user_weights);
}

}  // namespace irsrs
