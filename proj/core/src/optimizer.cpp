#include "irsrs/optimizer.hpp"

#include "irsrs/lp.hpp"
#include "irsrs/qcqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace irsrs {

std::string_view to_string(Scheme s) { return s == Scheme::RateSplitting ? "rs" : "noma"; }

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIter: return "max-iter";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

bool column_active(Scheme scheme, PrecoderKind kind) {
  if (scheme == Scheme::RateSplitting) return true;
  return kind == PrecoderKind::Group || kind == PrecoderKind::Near;
}

bool global_share_free(Scheme scheme, UserKind) { return scheme == Scheme::RateSplitting; }

bool group_share_free(Scheme scheme, UserKind kind) {
  return scheme == Scheme::RateSplitting || kind == UserKind::Edge;
}

namespace {

constexpr UserKind kKinds[] = {UserKind::Near, UserKind::Edge};

// Relaxation of the common-rate and sign constraints inside the precoder QCQP
// so that degenerate (zero-rate) streams still leave a strict interior.
constexpr double kCommonSlack = 1e-9;

constexpr int kAndersonDepth = 5;
constexpr double kStartPowerShrink = 0.99;
constexpr double kStartRateShrink = 0.9;

CVec unit_or_first_axis(const CVec& v) {
  const double n = v.norm();
  if (n > 0.0) return v / n;
  CVec e = CVec::Zero(v.size());
  if (e.size() > 0) e(0) = 1.0;
  return e;
}

}  // namespace

IrsSelection initial_selection(const ChannelSet& ch, const IrsCodebook& cb) {
  IrsSelection sel;
  sel.col.assign(static_cast<std::size_t>(ch.groups()), 0);
  for (int k = 0; k < ch.groups(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    double best = -1.0;
    for (int p = 0; p < cb.columns(); ++p) {
      const double g = effective_channel(ch.h_edge[i], p, cb, ch.G[i]).squaredNorm();
      if (g > best) {
        best = g;
        sel.col[i] = p;
      }
    }
  }
  return sel;
}

PrecoderSet init_precoders(const ChannelSet& ch, const IrsSelection& sel, const IrsCodebook& cb,
                           const NetworkConfig& cfg, const SolverOptions& opts, Scheme scheme) {
  const auto uc = user_channels(ch, sel, cb);
  const int groups = uc.groups();
  auto pre = PrecoderSet::zeros(groups, cfg.antennas);

  const bool global_on = column_active(scheme, PrecoderKind::Global);
  const bool edge_on = column_active(scheme, PrecoderKind::Edge);
  const int n_private = groups * (edge_on ? 2 : 1);
  double common_power = std::clamp(opts.init_power_split, 0.0, 1.0) * cfg.transmit_power;
  double private_power = cfg.transmit_power - common_power;
  if (n_private == 0) {
    common_power += private_power;
    private_power = 0.0;
  }
  const double global_power = global_on ? 0.5 * common_power : 0.0;
  const double group_power = (common_power - global_power) / groups;
  const double per_private = private_power / n_private;

  CVec sum_all = CVec::Zero(cfg.antennas);
  for (int k = 0; k < groups; ++k)
    for (auto kind : kKinds) sum_all += uc.of(kind, k);
  if (global_on) pre.global = std::sqrt(global_power) * unit_or_first_axis(sum_all);

  for (int k = 0; k < groups; ++k) {
    const auto i = static_cast<std::size_t>(k);
    pre.group[i] = std::sqrt(group_power) *
                   unit_or_first_axis(uc.of(UserKind::Near, k) + uc.of(UserKind::Edge, k));
    pre.near[i] = std::sqrt(per_private) * unit_or_first_axis(uc.of(UserKind::Near, k));
    if (edge_on) pre.edge[i] = std::sqrt(per_private) * unit_or_first_axis(uc.of(UserKind::Edge, k));
  }
  return pre;
}

std::optional<RateAllocation> allocate_common_rates(const AllocationProblem& prob) {
  const int groups = static_cast<int>(prob.group_caps.size());
  struct Var {
    bool global;
    UserKind kind;
    int k;
  };
  std::vector<Var> vars;
  for (int k = 0; k < groups; ++k)
    for (auto kind : {UserKind::Edge, UserKind::Near})
      if (global_share_free(prob.scheme, kind)) vars.push_back({true, kind, k});
  for (int k = 0; k < groups; ++k)
    for (auto kind : {UserKind::Edge, UserKind::Near})
      if (group_share_free(prob.scheme, kind)) vars.push_back({false, kind, k});

  const auto n = static_cast<Eigen::Index>(vars.size());
  auto weight = [&](UserKind kind, int k) {
    return prob.user_weights.at(static_cast<std::size_t>(kind == UserKind::Near ? k : groups + k));
  };
  RVec c(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& v = vars[static_cast<std::size_t>(j)];
    // Lexicographic tie-break: edge users first, then lower group index.
    const double edge_bias = v.kind == UserKind::Edge ? 1e-9 : 0.0;
    c(j) = weight(v.kind, v.k) * (1.0 + edge_bias) * (1.0 - 1e-12 * v.k);
  }

  std::vector<RVec> rows;
  std::vector<double> rhs;
  RVec global_row = RVec::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j)
    if (vars[static_cast<std::size_t>(j)].global) global_row(j) = 1.0;
  if (global_row.sum() > 0) {
    rows.push_back(global_row);
    rhs.push_back(std::max(prob.global_cap, 0.0));
  }
  for (int k = 0; k < groups; ++k) {
    RVec row = RVec::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& v = vars[static_cast<std::size_t>(j)];
      if (!v.global && v.k == k) row(j) = 1.0;
    }
    if (row.sum() > 0) {
      rows.push_back(row);
      rhs.push_back(std::max(prob.group_caps[static_cast<std::size_t>(k)], 0.0));
    }
  }
  for (int k = 0; k < groups; ++k)
    for (auto kind : kKinds) {
      const double need = prob.qos.at(kind, k) - prob.private_rates.at(kind, k);
      if (!(need > 0.0)) continue;
      RVec row = RVec::Zero(n);
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto& v = vars[static_cast<std::size_t>(j)];
        if (v.kind == kind && v.k == k) row(j) = -1.0;
      }
      if (row.sum() == 0) return std::nullopt;
      rows.push_back(row);
      rhs.push_back(-need);
    }

  RMat A(static_cast<Eigen::Index>(rows.size()), n);
  RVec b(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    A.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    b(static_cast<Eigen::Index>(r)) = rhs[r];
  }

  auto alloc = RateAllocation::zeros(groups);
  if (n == 0) return alloc;
  const auto res = solve_lp(c, A, b);
  if (res.status != LpStatus::Optimal) return std::nullopt;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& v = vars[static_cast<std::size_t>(j)];
    const double x = std::max(res.x(j), 0.0);
    const auto k = static_cast<std::size_t>(v.k);
    if (v.global)
      (v.kind == UserKind::Near ? alloc.global_near : alloc.global_edge)[k] = x;
    else
      (v.kind == UserKind::Near ? alloc.group_near : alloc.group_edge)[k] = x;
  }
  return alloc;
}

std::optional<RateAllocation> update_common_allocation(const UserChannels& uc,
                                                       const PrecoderSet& pre,
                                                       const EqualizerSet& g,
                                                       const MmseWeightSet& u,
                                                       const NetworkConfig& cfg, Scheme scheme) {
  const int groups = uc.groups();
  const auto rep = wmse_objective(uc, pre, g, u, RateAllocation::zeros(groups), cfg.user_weights);
  AllocationProblem prob;
  prob.scheme = scheme;
  prob.user_weights = cfg.user_weights;
  prob.global_cap = 1.0 - rep.global_max;
  prob.group_caps.resize(static_cast<std::size_t>(groups));
  prob.private_rates = PerUser<double>(groups);
  prob.qos = PerUser<double>(groups);
  for (int k = 0; k < groups; ++k) {
    prob.group_caps[static_cast<std::size_t>(k)] = 1.0 - rep.group_max[static_cast<std::size_t>(k)];
    for (auto kind : kKinds) {
      prob.private_rates.at(kind, k) = 1.0 - rep.xi.at(kind, k).priv;
      prob.qos.at(kind, k) = cfg.qos(kind, k);
    }
  }
  return allocate_common_rates(prob);
}

EqualizerUpdate update_equalizers_weights(const UserChannels& uc, const PrecoderSet& pre) {
  EqualizerUpdate out;
  out.g = mmse_equalizers(uc, pre);
  out.u = optimal_weights(mmse_values(stream_powers(uc, pre)));
  return out;
}

SurrogateValue evaluate_surrogate(const UserChannels& uc, const PrecoderSet& pre,
                                  const EqualizerSet& g, const MmseWeightSet& u,
                                  const RateAllocation& alloc, const NetworkConfig& cfg,
                                  double slack) {
  const auto rep = wmse_objective(uc, pre, g, u, alloc, cfg.user_weights);
  SurrogateValue v{rep.objective, true};
  if (rep.global_max > 1.0 - alloc.global_sum() + slack) v.feasible = false;
  for (int k = 0; k < uc.groups(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    if (rep.group_max[i] > 1.0 - alloc.group_near[i] - alloc.group_edge[i] + slack)
      v.feasible = false;
    for (auto kind : kKinds) {
      const double th = cfg.qos(kind, k);
      if (th > 0.0 && rep.total.at(kind, k) > 1.0 - th + slack) v.feasible = false;
    }
  }
  return v;
}

SelectionUpdate select_irs_columns(const ChannelSet& ch, const PrecoderSet& pre,
                                   const RateAllocation& alloc, const IrsSelection& current,
                                   const IrsCodebook& cb, const NetworkConfig& cfg,
                                   const SolverOptions& opts) {
  const int groups = ch.groups();
  const int cols = cb.columns();

  struct Scored {
    double objective;
    bool feasible;
    EqualizerUpdate eq;
  };
  auto score = [&](const IrsSelection& sel) {
    const auto uc = user_channels(ch, sel, cb);
    auto eq = update_equalizers_weights(uc, pre);
    const auto v = evaluate_surrogate(uc, pre, eq.g, eq.u, alloc, cfg);
    return Scored{v.objective, v.feasible, std::move(eq)};
  };
  auto better = [](const Scored& a, const Scored& b) {
    return a.objective < b.objective - 1e-12 * (1.0 + std::abs(b.objective));
  };

  double combos = 1.0;
  for (int k = 0; k < groups; ++k) combos *= cols;
  const bool exhaustive = opts.irs_search == IrsSearch::Exhaustive ||
                          (opts.irs_search == IrsSearch::Auto && combos <= 256.0);

  IrsSelection best_sel = current;
  Scored best = score(current);
  if (exhaustive) {
    // Lexicographic enumeration, so the first strict improvement keeps the
    // lowest indices among ties.
    IrsSelection cand;
    cand.col.assign(static_cast<std::size_t>(groups), 0);
    std::optional<Scored> first_best;
    IrsSelection first_sel;
    while (true) {
      auto s = score(cand);
      if (s.feasible && (!first_best || better(s, *first_best))) {
        first_best = std::move(s);
        first_sel = cand;
      }
      int k = groups - 1;
      while (k >= 0 && ++cand.col[static_cast<std::size_t>(k)] == cols)
        cand.col[static_cast<std::size_t>(k--)] = 0;
      if (k < 0) break;
    }
    if (first_best && !better(best, *first_best)) {
      best = std::move(*first_best);
      best_sel = first_sel;
    }
  } else {
    for (int k = 0; k < groups; ++k) {
      IrsSelection cand = best_sel;
      std::optional<Scored> col_best;
      int col_idx = best_sel.col[static_cast<std::size_t>(k)];
      for (int p = 0; p < cols; ++p) {
        cand.col[static_cast<std::size_t>(k)] = p;
        auto s = score(cand);
        if (s.feasible && (!col_best || better(s, *col_best))) {
          col_best = std::move(s);
          col_idx = p;
        }
      }
      if (col_best && !better(best, *col_best)) {
        best = std::move(*col_best);
        best_sel.col[static_cast<std::size_t>(k)] = col_idx;
      }
    }
  }
  return {best_sel, std::move(best.eq.g), std::move(best.eq.u)};
}

namespace {

// Maps precoder columns and free allocation entries onto the real vector
// z = [Re p_j; Im p_j]_j active ++ [D entries].
class PrecoderLayout {
 public:
  PrecoderLayout(int groups, int antennas, Scheme scheme, bool joint)
      : groups_(groups), antennas_(antennas) {
    offsets_.assign(static_cast<std::size_t>(1 + 3 * groups), -1);
    Eigen::Index off = 0;
    const auto ids = PrecoderSet::zeros(groups, 0).column_ids();
    for (const auto& id : ids)
      if (column_active(scheme, id.kind)) {
        offsets_[static_cast<std::size_t>(slot(id))] = off;
        columns_.push_back(id);
        off += 2 * antennas;
      }
    precoder_dim_ = off;
    if (joint) {
      for (int k = 0; k < groups; ++k)
        for (auto kind : kKinds) {
          if (global_share_free(scheme, kind)) dvars_.push_back({true, kind, k});
          if (group_share_free(scheme, kind)) dvars_.push_back({false, kind, k});
        }
    }
    dim_ = precoder_dim_ + static_cast<Eigen::Index>(dvars_.size());
  }

  struct DVar {
    bool global;
    UserKind kind;
    int k;
  };

  Eigen::Index dim() const { return dim_; }
  Eigen::Index precoder_dim() const { return precoder_dim_; }
  int antennas() const { return antennas_; }
  const std::vector<ColumnId>& columns() const { return columns_; }
  const std::vector<DVar>& dvars() const { return dvars_; }

  Eigen::Index offset(ColumnId id) const { return offsets_[static_cast<std::size_t>(slot(id))]; }

  Eigen::Index dvar_index(bool global, UserKind kind, int k) const {
    for (std::size_t j = 0; j < dvars_.size(); ++j)
      if (dvars_[j].global == global && dvars_[j].kind == kind && dvars_[j].k == k)
        return precoder_dim_ + static_cast<Eigen::Index>(j);
    return -1;
  }

  RVec pack(const PrecoderSet& pre, const RateAllocation& alloc) const {
    RVec z = RVec::Zero(dim_);
    for (const auto& id : columns_) {
      const CVec& p = pre.column(id);
      z.segment(offset(id), antennas_) = p.real();
      z.segment(offset(id) + antennas_, antennas_) = p.imag();
    }
    for (std::size_t j = 0; j < dvars_.size(); ++j) {
      const auto& d = dvars_[j];
      const double c = d.global ? alloc.global_share(d.kind, d.k) : alloc.group_share(d.kind, d.k);
      z(precoder_dim_ + static_cast<Eigen::Index>(j)) = -c;
    }
    return z;
  }

  PrecoderSet unpack_precoders(const RVec& z) const {
    auto pre = PrecoderSet::zeros(groups_, antennas_);
    for (const auto& id : columns_) {
      CVec& p = pre.column(id);
      for (int m = 0; m < antennas_; ++m)
        p(m) = cdouble(z(offset(id) + m), z(offset(id) + antennas_ + m));
    }
    return pre;
  }

  RateAllocation unpack_alloc(const RVec& z, RateAllocation alloc) const {
    for (std::size_t j = 0; j < dvars_.size(); ++j) {
      const auto& d = dvars_[j];
      const double c = std::max(-z(precoder_dim_ + static_cast<Eigen::Index>(j)), 0.0);
      const auto k = static_cast<std::size_t>(d.k);
      if (d.global)
        (d.kind == UserKind::Near ? alloc.global_near : alloc.global_edge)[k] = c;
      else
        (d.kind == UserKind::Near ? alloc.group_near : alloc.group_edge)[k] = c;
    }
    return alloc;
  }

 private:
  int slot(ColumnId id) const {
    switch (id.kind) {
      case PrecoderKind::Global: return 0;
      case PrecoderKind::Group: return 1 + id.group;
      case PrecoderKind::Near: return 1 + groups_ + id.group;
      case PrecoderKind::Edge: return 1 + 2 * groups_ + id.group;
    }
    return 0;
  }

  int groups_;
  int antennas_;
  std::vector<Eigen::Index> offsets_;
  std::vector<ColumnId> columns_;
  std::vector<DVar> dvars_;
  Eigen::Index precoder_dim_ = 0;
  Eigen::Index dim_ = 0;
};

enum class Layer { Global, Group, Private };

// xi(z) = (u eps(z) - ln u - 1) / ln 2 + 1 with
// eps(z) = |g|^2 (sum_{j in S} |c^H p_j|^2 + 1) - 2 Re{g c^H p_target} + 1
QuadraticFn weighted_mse_fn(const PrecoderLayout& layout, const CVec& c, UserKind kind, int k,
                            Layer layer, cdouble g, double u_raw) {
  const double u = u_raw / std::numbers::ln2;
  const int M = layout.antennas();
  const Eigen::Index n = layout.dim();
  RVec v1(2 * M), v2(2 * M);
  v1 << c.real(), c.imag();
  v2 << -c.imag(), c.real();

  QuadraticFn f;
  f.H = RMat::Zero(n, n);
  f.b = RVec::Zero(n);
  const double g2 = std::norm(g);
  f.c = u * g2 + u + 1.0 - (std::log(u_raw) + 1.0) / std::numbers::ln2;

  if (g2 > 0.0) {
    const RMat block = 2.0 * u * g2 * (v1 * v1.transpose() + v2 * v2.transpose());
    for (const auto& id : layout.columns()) {
      if (layer != Layer::Global && id.kind == PrecoderKind::Global) continue;
      if (layer == Layer::Private && id.kind == PrecoderKind::Group && id.group == k) continue;
      const auto off = layout.offset(id);
      f.H.block(off, off, 2 * M, 2 * M) += block;
    }
  }

  ColumnId target{PrecoderKind::Global, 0};
  if (layer == Layer::Group) target = {PrecoderKind::Group, k};
  if (layer == Layer::Private)
    target = {kind == UserKind::Near ? PrecoderKind::Near : PrecoderKind::Edge, k};
  const auto off = layout.offset(target);
  if (off >= 0) f.b.segment(off, 2 * M) = -2.0 * u * (g.real() * v1 - g.imag() * v2);
  return f;
}

void add_dvar(QuadraticFn& f, Eigen::Index idx, double coef) {
  if (idx >= 0) f.b(idx) += coef;
}

}  // namespace

PrecoderUpdate update_precoders(const UserChannels& uc, const PrecoderSet& current,
                                const RateAllocation& alloc, const EqualizerSet& g,
                                const MmseWeightSet& u, const NetworkConfig& cfg,
                                const SolverOptions& opts, Scheme scheme) {
  const int groups = uc.groups();
  const PrecoderLayout layout(groups, cfg.antennas, scheme, opts.joint_allocation);
  const Eigen::Index n = layout.dim();

  auto d_const = [&](bool global, UserKind kind, int k) {
    // Contribution of D = -C when the entry is not a variable.
    if (layout.dvar_index(global, kind, k) >= 0) return 0.0;
    return -(global ? alloc.global_share(kind, k) : alloc.group_share(kind, k));
  };

  QcqpProblem prob;
  prob.objective.H = RMat::Zero(n, n);
  prob.objective.b = RVec::Zero(n);

  std::vector<QuadraticFn> global_fns, group_fns;
  for (int k = 0; k < groups; ++k)
    for (auto kind : kKinds) {
      const CVec& c = uc.of(kind, k);
      const auto& gi = g.at(kind, k);
      const auto& ui = u.at(kind, k);
      const double w = cfg.weight(kind, k);

      auto priv = weighted_mse_fn(layout, c, kind, k, Layer::Private, gi.priv, ui.priv);
      prob.objective.H += w * priv.H;
      prob.objective.b += w * priv.b;
      prob.objective.c += w * (priv.c + d_const(true, kind, k) + d_const(false, kind, k));
      add_dvar(prob.objective, layout.dvar_index(true, kind, k), w);
      add_dvar(prob.objective, layout.dvar_index(false, kind, k), w);

      // C4/C5: D^s + D^g + xi^priv <= 1 - R_th
      const double th = cfg.qos(kind, k);
      if (th > 0.0) {
        QuadraticFn q = priv;
        q.c += d_const(true, kind, k) + d_const(false, kind, k) - 1.0 + th;
        add_dvar(q, layout.dvar_index(true, kind, k), 1.0);
        add_dvar(q, layout.dvar_index(false, kind, k), 1.0);
        prob.constraints.push_back(std::move(q));
      }

      // C1: xi^s_j <= 1 + sum_i D^s_i
      if (column_active(scheme, PrecoderKind::Global)) {
        auto f = weighted_mse_fn(layout, c, kind, k, Layer::Global, gi.global, ui.global);
        f.c -= 1.0 + kCommonSlack;
        for (int i = 0; i < groups; ++i)
          for (auto other : kKinds) {
            f.c -= d_const(true, other, i);
            add_dvar(f, layout.dvar_index(true, other, i), -1.0);
          }
        prob.constraints.push_back(std::move(f));
      }

      // C2: xi^g_j <= 1 + D^g_k + D^g_k'
      auto f = weighted_mse_fn(layout, c, kind, k, Layer::Group, gi.group, ui.group);
      f.c -= 1.0 + kCommonSlack;
      for (auto member : kKinds) {
        f.c -= d_const(false, member, k);
        add_dvar(f, layout.dvar_index(false, member, k), -1.0);
      }
      prob.constraints.push_back(std::move(f));
    }

  // C3: ||vec(P)||^2 <= P_t
  QuadraticFn power;
  power.H = RMat::Zero(n, n);
  power.H.topLeftCorner(layout.precoder_dim(), layout.precoder_dim()).diagonal().setConstant(2.0);
  power.b = RVec::Zero(n);
  power.c = -cfg.transmit_power;
  prob.constraints.push_back(std::move(power));

  // C6: D <= 0
  for (Eigen::Index j = layout.precoder_dim(); j < n; ++j) {
    QuadraticFn d;
    d.b = RVec::Zero(n);
    d.b(j) = 1.0;
    d.c = -kCommonSlack;
    prob.constraints.push_back(std::move(d));
  }

  PrecoderUpdate out{current, alloc, false};
  // The previous iterate sits on the power and common-rate boundaries; start
  // from a point shrunk into the interior.
  RVec start = layout.pack(current, alloc);
  start.head(layout.precoder_dim()) *= std::sqrt(kStartPowerShrink);
  start.tail(n - layout.precoder_dim()) *= kStartRateShrink;
  QcqpOptions qopts;
  qopts.gap_tol = std::min(1e-8, 1e-2 * opts.subproblem_kkt_tol);
  const auto res = solve_qcqp(prob, start, qopts);
  if (res.status == QcqpStatus::NoInterior) return out;

  auto pre = layout.unpack_precoders(res.z);
  const double power_now = precoder_power(pre);
  if (power_now > cfg.transmit_power) pre = current;  // numerically outside the ball
  const auto new_alloc = layout.unpack_alloc(res.z, alloc);

  const auto before = evaluate_surrogate(uc, current, g, u, alloc, cfg);
  const auto after = evaluate_surrogate(uc, pre, g, u, new_alloc, cfg);
  if (after.feasible && after.objective <= before.objective) {
    out.precoders = std::move(pre);
    out.alloc = new_alloc;
    out.solved = true;
  }
  return out;
}

namespace {

struct Extrapolated {
  PrecoderSet precoders;
  RateAllocation alloc;
  EqualizerSet g;
  MmseWeightSet u;
};

PrecoderSet combine(const PrecoderSet& a, const PrecoderSet& b, double beta) {
  PrecoderSet out = b;
  for (const auto& id : out.column_ids())
    out.column(id) = b.column(id) + beta * (b.column(id) - a.column(id));
  return out;
}

RVec flatten(const PrecoderSet& pre) {
  const auto ids = pre.column_ids();
  const auto M = pre.antennas();
  RVec v(2 * M * static_cast<Eigen::Index>(ids.size()));
  Eigen::Index off = 0;
  for (const auto& id : ids) {
    v.segment(off, M) = pre.column(id).real();
    v.segment(off + M, M) = pre.column(id).imag();
    off += 2 * M;
  }
  return v;
}

PrecoderSet unflatten(const RVec& v, const PrecoderSet& shape) {
  PrecoderSet pre = shape;
  const auto M = pre.antennas();
  Eigen::Index off = 0;
  for (const auto& id : pre.column_ids()) {
    CVec& p = pre.column(id);
    for (Eigen::Index m = 0; m < M; ++m) p(m) = cdouble(v(off + m), v(off + M + m));
    off += 2 * M;
  }
  return pre;
}

// Anderson mixing over the map P -> (one AO iteration) at a fixed selection.
class AndersonHistory {
 public:
  explicit AndersonHistory(int depth) : depth_(depth) {}

  void reset() {
    x_.clear();
    f_.clear();
  }

  void push(RVec x, RVec f) {
    x_.push_back(std::move(x));
    f_.push_back(std::move(f));
    if (static_cast<int>(x_.size()) > depth_ + 1) {
      x_.erase(x_.begin());
      f_.erase(f_.begin());
    }
  }

  std::optional<RVec> mix() const {
    const auto n = static_cast<Eigen::Index>(x_.size());
    if (n < 2) return std::nullopt;
    const auto dim = x_.front().size();
    RMat dr(dim, n - 1), df(dim, n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const auto a = static_cast<std::size_t>(i), b = a + 1;
      df.col(i) = f_[b] - f_[a];
      dr.col(i) = (f_[b] - x_[b]) - (f_[a] - x_[a]);
    }
    const RVec r = f_.back() - x_.back();
    const RVec gamma = dr.completeOrthogonalDecomposition().solve(r);
    if (!gamma.allFinite()) return std::nullopt;
    return RVec(f_.back() - df * gamma);
  }

 private:
  int depth_;
  std::vector<RVec> x_, f_;
};

struct Candidate {
  Extrapolated point;
  double value;
};

// Candidate pulled back into the power ball, then g, u and d re-minimized.
std::optional<Candidate> try_candidate(const UserChannels& uc, PrecoderSet cand,
                                       const NetworkConfig& cfg, Scheme scheme) {
  const double power = precoder_power(cand);
  if (!std::isfinite(power)) return std::nullopt;
  if (power > cfg.transmit_power) {
    const double s = std::sqrt(cfg.transmit_power / power) * (1.0 - 1e-12);
    for (const auto& id : cand.column_ids()) cand.column(id) *= s;
  }
  auto eq = update_equalizers_weights(uc, cand);
  auto alloc = update_common_allocation(uc, cand, eq.g, eq.u, cfg, scheme);
  if (!alloc) return std::nullopt;
  const auto v = evaluate_surrogate(uc, cand, eq.g, eq.u, *alloc, cfg);
  if (!v.feasible) return std::nullopt;
  return Candidate{{std::move(cand), *alloc, std::move(eq.g), std::move(eq.u)}, v.objective};
}

// Anderson candidate first, then a doubling search on beta over P + beta (P - P_prev).
std::optional<Extrapolated> extrapolate(const UserChannels& uc, const PrecoderSet& prev,
                                        const PrecoderSet& cur, const AndersonHistory& history,
                                        const NetworkConfig& cfg, Scheme scheme,
                                        double current_value) {
  if (auto mixed = history.mix())
    if (auto c = try_candidate(uc, unflatten(*mixed, cur), cfg, scheme);
        c && c->value < current_value)
      return std::move(c->point);

  std::optional<Extrapolated> best;
  double best_value = current_value;
  for (double beta = 0.5; beta <= 64.0; beta *= 2.0) {
    auto c = try_candidate(uc, combine(prev, cur, beta), cfg, scheme);
    if (!c || !(c->value < best_value)) break;
    best_value = c->value;
    best = std::move(c->point);
  }
  return best;
}

// Steps 1-6 from a given starting selection and precoders; cfg already defaulted.
Solution run_ao(const ChannelSet& ch_est, const NetworkConfig& cfg, const IrsCodebook& cb,
                const SolverOptions& opts, Scheme scheme, IrsSelection start_sel,
                PrecoderSet start_pre) {
  Solution sol;
  sol.scheme = scheme;
  sol.selection = std::move(start_sel);
  sol.precoders = std::move(start_pre);

  auto uc = user_channels(ch_est, sol.selection, cb);
  auto eq = update_equalizers_weights(uc, sol.precoders);
  sol.equalizers = eq.g;
  sol.weights = eq.u;

  auto surrogate = [&] {
    return evaluate_surrogate(uc, sol.precoders, sol.equalizers, sol.weights, sol.alloc, cfg)
        .objective;
  };
  auto finish_rates = [&] {
    sol.rates = total_rates(rates_from_sinrs(compute_sinrs(uc, sol.precoders)), sol.alloc);
    sol.rates.wsr = wsr(cfg.user_weights, sol.rates);
    sol.wsr = sol.rates.wsr;
  };

  auto alloc0 = update_common_allocation(uc, sol.precoders, sol.equalizers, sol.weights, cfg, scheme);
  if (!alloc0) {
    sol.alloc = RateAllocation::zeros(cfg.groups);
    sol.status = SolveStatus::Infeasible;
    sol.trace.push_back(surrogate());
    finish_rates();
    return sol;
  }
  sol.alloc = *alloc0;
  sol.trace.push_back(surrogate());
  sol.step_trace.push_back(sol.trace.back());

  AndersonHistory history(kAndersonDepth);
  sol.status = SolveStatus::MaxIter;
  for (int n = 1; n <= opts.max_iter; ++n) {
    sol.iterations = n;

    // 2) IRS selection at fixed P, d
    auto sel = select_irs_columns(ch_est, sol.precoders, sol.alloc, sol.selection, cb, cfg, opts);
    if (sel.selection != sol.selection) history.reset();
    sol.selection = sel.selection;
    sol.equalizers = std::move(sel.g);
    sol.weights = std::move(sel.u);
    uc = user_channels(ch_est, sol.selection, cb);
    sol.step_trace.push_back(surrogate());

    // 3) common-rate allocation at fixed P, selection
    auto alloc = update_common_allocation(uc, sol.precoders, sol.equalizers, sol.weights, cfg, scheme);
    if (!alloc) {
      sol.status = SolveStatus::Infeasible;
      break;
    }
    sol.alloc = *alloc;
    sol.step_trace.push_back(surrogate());

    // 4) MMSE equalizers and weights
    eq = update_equalizers_weights(uc, sol.precoders);
    sol.equalizers = eq.g;
    sol.weights = eq.u;
    sol.step_trace.push_back(surrogate());

    // 5) precoders at fixed d (or jointly with d), selection, g, u
    auto upd = update_precoders(uc, sol.precoders, sol.alloc, sol.equalizers, sol.weights, cfg,
                                opts, scheme);
    const PrecoderSet prev = sol.precoders;
    sol.precoders = std::move(upd.precoders);
    sol.alloc = upd.alloc;
    sol.step_trace.push_back(surrogate());

    // Extrapolate along the last precoder move; kept only when the surrogate,
    // re-minimized over g, u and d, drops.
    if (!upd.solved) history.reset();
    if (opts.extrapolate && upd.solved) {
      history.push(flatten(prev), flatten(sol.precoders));
      if (auto ex = extrapolate(uc, prev, sol.precoders, history, cfg, scheme,
                                sol.step_trace.back())) {
        sol.precoders = std::move(ex->precoders);
        sol.alloc = ex->alloc;
        sol.equalizers = std::move(ex->g);
        sol.weights = std::move(ex->u);
        sol.step_trace.push_back(surrogate());
      }
    }

    sol.trace.push_back(sol.step_trace.back());
    if (std::abs(sol.trace.back() - sol.trace[sol.trace.size() - 2]) < opts.tol) {
      sol.status = SolveStatus::Converged;
      break;
    }
  }

  if (sol.status != SolveStatus::Infeasible) {
    // Refresh g, u and re-split the common rates at their exact caps.
    eq = update_equalizers_weights(uc, sol.precoders);
    sol.equalizers = eq.g;
    sol.weights = eq.u;
    if (auto alloc = update_common_allocation(uc, sol.precoders, sol.equalizers, sol.weights, cfg,
                                              scheme))
      sol.alloc = *alloc;
    sol.step_trace.push_back(surrogate());
  }
  finish_rates();
  return sol;
}

bool better(const Solution& a, const Solution& b) {
  const bool fa = a.status != SolveStatus::Infeasible, fb = b.status != SolveStatus::Infeasible;
  if (fa != fb) return fa;
  return a.wsr > b.wsr;
}

}  // namespace

Solution solve(const ChannelSet& ch_est, const NetworkConfig& cfg_in, const SolverOptions& opts,
               Scheme scheme) {
  NetworkConfig cfg = cfg_in;
  cfg.with_defaults();
  check_channels(ch_est, cfg);
  const auto cb = build_codebook(cfg.codebook_cols, cfg.ones_block);
  const auto sel = initial_selection(ch_est, cb);

  auto sol = run_ao(ch_est, cfg, cb, opts, scheme, sel,
                    init_precoders(ch_est, sel, cb, cfg, opts, scheme));
  if (scheme == Scheme::RateSplitting && opts.restricted_start) {
    // Second start at the NOMA optimum, a feasible RS point.
    const auto noma = run_ao(ch_est, cfg, cb, opts, Scheme::Noma, sel,
                             init_precoders(ch_est, sel, cb, cfg, opts, Scheme::Noma));
    if (noma.status != SolveStatus::Infeasible) {
      auto warm = run_ao(ch_est, cfg, cb, opts, scheme, noma.selection, noma.precoders);
      if (better(warm, sol)) sol = std::move(warm);
    }
  }
  return sol;
}

Solution ao_solve(const ChannelSet& ch_est, const NetworkConfig& cfg, const SolverOptions& opts) {
  return solve(ch_est, cfg, opts, Scheme::RateSplitting);
}

Solution noma_solve(const ChannelSet& ch_est, const NetworkConfig& cfg, const SolverOptions& opts) {
  return solve(ch_est, cfg, opts, Scheme::Noma);
}

RateReport realized_rates(const Solution& sol, const ChannelSet& true_ch,
                          const NetworkConfig& cfg_in) {
  NetworkConfig cfg = cfg_in;
  cfg.with_defaults();
  const auto cb = build_codebook(cfg.codebook_cols, cfg.ones_block);
  const auto uc = user_channels(true_ch, sol.selection, cb);
  const auto rates = rates_from_sinrs(compute_sinrs(uc, sol.precoders));
  auto rep = total_rates(rates, clip_to_caps(rates, sol.alloc));
  rep.wsr = wsr(cfg.user_weights, rep);
  return rep;
}

}  // namespace irsrs
