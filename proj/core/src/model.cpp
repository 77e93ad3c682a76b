#include "irsrs/model.hpp"

#include <cmath>
#include <sstream>

namespace irsrs {

double NetworkConfig::resolved_csit_error_var() const {
  if (csit_error_var) return *csit_error_var;
  return std::pow(transmit_power, -0.6);
}

NetworkConfig& NetworkConfig::with_defaults() {
  const auto n = static_cast<std::size_t>(groups > 0 ? groups : 0);
  if (user_weights.empty()) user_weights.assign(2 * n, 1.0);
  if (qos_near.empty()) qos_near.assign(n, 0.0);
  if (qos_edge.empty()) qos_edge.assign(n, 0.0);
  return *this;
}

std::vector<std::string> validate_config(const NetworkConfig& cfg) {
  std::vector<std::string> errors;
  auto fail = [&](std::string msg) { errors.push_back(std::move(msg)); };

  if (cfg.groups < 1) fail("K must be at least 1");
  if (cfg.antennas < 1) fail("M must be at least 1");
  if (cfg.codebook_cols < 1) fail("P must be at least 1");
  if (cfg.ones_block < 1) fail("Q must be at least 1");
  if (cfg.irs_elements != cfg.codebook_cols * cfg.ones_block) {
    std::ostringstream os;
    os << "N != P*Q (" << cfg.irs_elements << " != " << cfg.codebook_cols << "*" << cfg.ones_block
       << ")";
    fail(os.str());
  }
  if (!(cfg.transmit_power > 0.0) || !std::isfinite(cfg.transmit_power))
    fail("P_t must be positive");
  if (!(cfg.edge_scale > 0.0) || !std::isfinite(cfg.edge_scale))
    fail("edge_scale must be positive");
  if (cfg.csit_error_var && !(*cfg.csit_error_var >= 0.0))
    fail("csit_error_var must be non-negative");

  const auto k = static_cast<std::size_t>(cfg.groups > 0 ? cfg.groups : 0);
  auto check_thresholds = [&](const std::vector<double>& v, const char* name) {
    if (!v.empty() && v.size() != k) fail(std::string(name) + " must have K entries");
    for (double t : v)
      if (!(t >= 0.0)) {
        fail(std::string(name) + " thresholds must be non-negative");
        break;
      }
  };
  check_thresholds(cfg.qos_near, "R_th_near");
  check_thresholds(cfg.qos_edge, "R_th_edge");

  if (!cfg.user_weights.empty() && cfg.user_weights.size() != 2 * k)
    fail("user_weights must have 2K entries");
  for (double w : cfg.user_weights)
    if (!(w > 0.0) || !std::isfinite(w)) {
      fail("user_weights must be positive");
      break;
    }
  return errors;
}

void check_channels(const ChannelSet& ch, const NetworkConfig& cfg) {
  const auto k = static_cast<std::size_t>(cfg.groups);
  if (ch.h_near.size() != k || ch.G.size() != k || ch.h_edge.size() != k)
    throw StructuralError("channel set does not have K groups");
  for (std::size_t i = 0; i < k; ++i) {
    if (ch.h_near[i].size() != cfg.antennas) throw StructuralError("h_near length != M");
    if (ch.G[i].rows() != cfg.irs_elements || ch.G[i].cols() != cfg.antennas)
      throw StructuralError("G is not N x M");
    if (ch.h_edge[i].size() != cfg.irs_elements) throw StructuralError("h_edge length != N");
    if (!ch.h_near[i].allFinite() || !ch.G[i].allFinite() || !ch.h_edge[i].allFinite())
      throw StructuralError("channel entries must be finite");
  }
}

IrsCodebook build_codebook(int cols, int ones_block) {
  IrsCodebook cb;
  cb.ones_block = ones_block;
  cb.A = RMat::Zero(static_cast<Eigen::Index>(cols) * ones_block, cols);
  const double v = 1.0 / std::sqrt(static_cast<double>(ones_block));
  for (int p = 0; p < cols; ++p) cb.A.col(p).segment(p * ones_block, ones_block).setConstant(v);
  return cb;
}

RMat apply_selection(const IrsCodebook& cb, const IrsSelection& sel, int k) {
  if (k < 0 || k >= static_cast<int>(sel.col.size()))
    throw StructuralError("group index out of range");
  const int col = sel.col[static_cast<std::size_t>(k)];
  if (col < 0 || col >= cb.columns()) throw StructuralError("codebook column out of range");
  return cb.A.col(col).asDiagonal();
}

CVec effective_channel(const CVec& h_edge, int col, const IrsCodebook& cb, const CMat& G) {
  if (col < 0 || col >= cb.columns()) throw StructuralError("codebook column out of range");
  if (h_edge.size() != cb.elements() || G.rows() != cb.elements())
    throw StructuralError("IRS dimension mismatch");
  // h_eff = G^H Z h_edge, with Z real diagonal.
  const CVec masked = cb.A.col(col).cast<cdouble>().cwiseProduct(h_edge);
  return G.adjoint() * masked;
}

UserChannels user_channels(const ChannelSet& ch, const IrsSelection& sel, const IrsCodebook& cb) {
  const int groups = ch.groups();
  if (static_cast<int>(sel.col.size()) != groups)
    throw StructuralError("selection does not have K entries");
  UserChannels uc;
  uc.c = PerUser<CVec>(groups);
  for (int k = 0; k < groups; ++k) {
    const auto i = static_cast<std::size_t>(k);
    uc.c.near[i] = ch.h_near[i];
    uc.c.edge[i] = effective_channel(ch.h_edge[i], sel.col[i], cb, ch.G[i]);
  }
  return uc;
}

PrecoderSet PrecoderSet::zeros(int groups, int antennas) {
  PrecoderSet p;
  p.global = CVec::Zero(antennas);
  const auto k = static_cast<std::size_t>(groups);
  p.group.assign(k, CVec::Zero(antennas));
  p.near.assign(k, CVec::Zero(antennas));
  p.edge.assign(k, CVec::Zero(antennas));
  return p;
}

CVec& PrecoderSet::column(ColumnId id) {
  const auto k = static_cast<std::size_t>(id.group);
  switch (id.kind) {
    case PrecoderKind::Global: return global;
    case PrecoderKind::Group: return group.at(k);
    case PrecoderKind::Near: return near.at(k);
    case PrecoderKind::Edge: return edge.at(k);
  }
  throw StructuralError("unknown precoder kind");
}

const CVec& PrecoderSet::column(ColumnId id) const {
  return const_cast<PrecoderSet&>(*this).column(id);
}

std::vector<ColumnId> PrecoderSet::column_ids() const {
  std::vector<ColumnId> ids;
  ids.reserve(static_cast<std::size_t>(column_count()));
  ids.push_back({PrecoderKind::Global, 0});
  for (auto kind : {PrecoderKind::Group, PrecoderKind::Near, PrecoderKind::Edge})
    for (int k = 0; k < groups(); ++k) ids.push_back({kind, k});
  return ids;
}

CMat PrecoderSet::matrix() const {
  CMat P(antennas(), column_count());
  Eigen::Index j = 0;
  for (const auto& id : column_ids()) P.col(j++) = column(id);
  return P;
}

double precoder_power(const PrecoderSet& pre) {
  double total = pre.global.squaredNorm();
  for (int k = 0; k < pre.groups(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    total += pre.group[i].squaredNorm() + pre.near[i].squaredNorm() + pre.edge[i].squaredNorm();
  }
  return total;
}

RateAllocation RateAllocation::zeros(int groups) {
  RateAllocation a;
  const auto k = static_cast<std::size_t>(groups);
  a.global_near.assign(k, 0.0);
  a.global_edge.assign(k, 0.0);
  a.group_near.assign(k, 0.0);
  a.group_edge.assign(k, 0.0);
  return a;
}

double RateAllocation::global_sum() const {
  double s = 0.0;
  for (std::size_t k = 0; k < global_near.size(); ++k) s += global_near[k] + global_edge[k];
  return s;
}

double RateAllocation::global_share(UserKind kind, int k) const {
  return (kind == UserKind::Near ? global_near : global_edge).at(static_cast<std::size_t>(k));
}

double RateAllocation::group_share(UserKind kind, int k) const {
  return (kind == UserKind::Near ? group_near : group_edge).at(static_cast<std::size_t>(k));
}

}  // namespace irsrs
