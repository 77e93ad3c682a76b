#pragma once

// Random instances and independent reference computations for the tests.
// The oracles use explicit loops over entries and precoder columns and never
// call the library code paths they are compared against.

#include "irsrs/model.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace testing {

using irsrs::cdouble;
using irsrs::CMat;
using irsrs::ColumnId;
using irsrs::CVec;
using irsrs::PrecoderKind;
using irsrs::UserKind;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double normal() { return nd_(gen_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  cdouble cn(double var = 1.0) {
    const double s = std::sqrt(var / 2.0);
    return {s * normal(), s * normal()};
  }
  CVec cvec(Eigen::Index n, double var = 1.0) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cn(var);
    return v;
  }
  CMat cmat(Eigen::Index r, Eigen::Index c, double var = 1.0) {
    CMat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = cn(var);
    return m;
  }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> nd_;
};

inline irsrs::NetworkConfig small_config(int groups, int antennas, int cols, int ones,
                                         double power = 100.0) {
  irsrs::NetworkConfig cfg;
  cfg.groups = groups;
  cfg.antennas = antennas;
  cfg.codebook_cols = cols;
  cfg.ones_block = ones;
  cfg.irs_elements = cols * ones;
  cfg.transmit_power = power;
  cfg.with_defaults();
  return cfg;
}

inline irsrs::ChannelSet random_channels(Rng& rng, const irsrs::NetworkConfig& cfg) {
  irsrs::ChannelSet ch;
  for (int k = 0; k < cfg.groups; ++k) {
    ch.h_near.push_back(rng.cvec(cfg.antennas));
    ch.G.push_back(rng.cmat(cfg.irs_elements, cfg.antennas, cfg.edge_scale));
    ch.h_edge.push_back(rng.cvec(cfg.irs_elements, cfg.edge_scale));
  }
  return ch;
}

// Random columns rescaled so the total power is a random fraction of P_t.
inline irsrs::PrecoderSet random_precoders(Rng& rng, const irsrs::NetworkConfig& cfg) {
  auto pre = irsrs::PrecoderSet::zeros(cfg.groups, cfg.antennas);
  double total = 0.0;
  for (const auto& id : pre.column_ids()) {
    pre.column(id) = rng.cvec(cfg.antennas);
    total += pre.column(id).squaredNorm();
  }
  const double scale = std::sqrt(rng.uniform(0.05, 1.0) * cfg.transmit_power / total);
  for (const auto& id : pre.column_ids()) pre.column(id) *= scale;
  return pre;
}

inline irsrs::IrsSelection random_selection(Rng& rng, const irsrs::NetworkConfig& cfg) {
  irsrs::IrsSelection sel;
  for (int k = 0; k < cfg.groups; ++k) sel.col.push_back(rng.integer(0, cfg.codebook_cols - 1));
  return sel;
}

namespace oracle {

// sum_i conj(a_i) b_i
inline cdouble inner(const CVec& a, const CVec& b) {
  cdouble s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += std::conj(a(i)) * b(i);
  return s;
}

inline double power_gain(const CVec& c, const CVec& p) { return std::norm(inner(c, p)); }

// Row vector h^H Z G from the dense N x N matrix Z, entry by entry.
inline std::vector<cdouble> triple_product(const CVec& h, const irsrs::RMat& Z, const CMat& G) {
  const auto N = h.size();
  const auto M = G.cols();
  std::vector<cdouble> row(static_cast<std::size_t>(M), 0.0);
  for (Eigen::Index m = 0; m < M; ++m)
    for (Eigen::Index i = 0; i < N; ++i)
      for (Eigen::Index j = 0; j < N; ++j)
        row[static_cast<std::size_t>(m)] += std::conj(h(i)) * Z(i, j) * G(j, m);
  return row;
}

// Channel through which user (kind, k) receives: h_k, or the column vector
// whose conjugate transpose is h_k'^H diag(a_col) G_k.
inline CVec user_channel(const irsrs::ChannelSet& ch, const irsrs::IrsCodebook& cb,
                         const irsrs::IrsSelection& sel, UserKind kind, int k) {
  const auto i = static_cast<std::size_t>(k);
  if (kind == UserKind::Near) return ch.h_near[i];
  irsrs::RMat Z = irsrs::RMat::Zero(cb.elements(), cb.elements());
  for (int n = 0; n < cb.elements(); ++n) Z(n, n) = cb.A(n, sel.col[i]);
  const auto row = triple_product(ch.h_edge[i], Z, ch.G[i]);
  CVec c(static_cast<Eigen::Index>(row.size()));
  for (std::size_t m = 0; m < row.size(); ++m) c(static_cast<Eigen::Index>(m)) = std::conj(row[m]);
  return c;
}

enum class Layer { Global, Group, Private };

struct StreamTerms {
  ColumnId signal;
  std::vector<ColumnId> interference;
};

// Signal and interference columns of one decoded stream, read off the SINR
// expressions term by term.
inline StreamTerms classify(int groups, UserKind kind, int k, Layer layer) {
  StreamTerms t{{PrecoderKind::Global, 0}, {}};
  const PrecoderKind own = kind == UserKind::Near ? PrecoderKind::Near : PrecoderKind::Edge;
  const PrecoderKind sibling = kind == UserKind::Near ? PrecoderKind::Edge : PrecoderKind::Near;
  switch (layer) {
    case Layer::Global:
      for (int i = 0; i < groups; ++i) {
        t.interference.push_back({PrecoderKind::Group, i});
        t.interference.push_back({PrecoderKind::Near, i});
        t.interference.push_back({PrecoderKind::Edge, i});
      }
      break;
    case Layer::Group:
      t.signal = {PrecoderKind::Group, k};
      for (int i = 0; i < groups; ++i) {
        if (i != k) t.interference.push_back({PrecoderKind::Group, i});
        t.interference.push_back({PrecoderKind::Near, i});
        t.interference.push_back({PrecoderKind::Edge, i});
      }
      break;
    case Layer::Private:
      t.signal = {own, k};
      t.interference.push_back({sibling, k});
      for (int i = 0; i < groups; ++i) {
        if (i == k) continue;
        t.interference.push_back({PrecoderKind::Near, i});
        t.interference.push_back({PrecoderKind::Edge, i});
        t.interference.push_back({PrecoderKind::Group, i});
      }
      break;
  }
  return t;
}

inline double enumerated_sinr(const CVec& c, const irsrs::PrecoderSet& pre, const StreamTerms& t) {
  double denom = 1.0;
  for (const auto& id : t.interference) denom += power_gain(c, pre.column(id));
  return power_gain(c, pre.column(t.signal)) / denom;
}

// Receive power with every column counted once, plus noise.
inline double total_receive_power(const CVec& c, const irsrs::PrecoderSet& pre) {
  double t = 1.0;
  for (const auto& id : pre.column_ids()) t += power_gain(c, pre.column(id));
  return t;
}

}  // namespace oracle

}  // namespace testing
