#pragma once

// Domain types shared by every module: network configuration, channels,
// the ON-OFF IRS codebook, precoders, common-rate allocations and the
// per-stream equalizer / WMMSE weight containers.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace irsrs {

using cdouble = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

/// Thrown when operands have inconsistent shapes or indices are out of range.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numeric input lies outside an operation's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class UserKind { Near, Edge };

/// A value per decoded stream, in SIC order: global common, group common, private.
template <typename T>
struct Streams {
  T global{};
  T group{};
  T priv{};
};

/// One value per near user and one per cell-edge user, indexed by group.
template <typename T>
struct PerUser {
  std::vector<T> near;
  std::vector<T> edge;

  PerUser() = default;
  explicit PerUser(int groups, const T& init = T{})
      : near(static_cast<std::size_t>(groups), init),
        edge(static_cast<std::size_t>(groups), init) {}

  int groups() const { return static_cast<int>(near.size()); }
  T& at(UserKind kind, int k) {
    return kind == UserKind::Near ? near.at(static_cast<std::size_t>(k))
                                  : edge.at(static_cast<std::size_t>(k));
  }
  const T& at(UserKind kind, int k) const {
    return kind == UserKind::Near ? near.at(static_cast<std::size_t>(k))
                                  : edge.at(static_cast<std::size_t>(k));
  }
};

struct NetworkConfig {
  int groups = 1;            // K near/edge pairs
  int antennas = 4;          // M
  int irs_elements = 20;     // N
  int codebook_cols = 4;     // P
  int ones_block = 5;        // Q
  double transmit_power = 100.0;  // P_t, linear; equals the transmit SNR (unit noise)
  double edge_scale = 0.3;
  std::vector<double> qos_near;  // R_th per near user, bits/s/Hz
  std::vector<double> qos_edge;
  // [near_1..near_K, edge_1..edge_K]
  std::vector<double> user_weights;
  // Unset means the SNR-scaled default P_t^-0.6.
  std::optional<double> csit_error_var;
  std::uint64_t seed = 1;

  double weight(UserKind kind, int k) const {
    return user_weights.at(static_cast<std::size_t>(kind == UserKind::Near ? k : groups + k));
  }
  double qos(UserKind kind, int k) const {
    const auto& v = kind == UserKind::Near ? qos_near : qos_edge;
    return v.empty() ? 0.0 : v.at(static_cast<std::size_t>(k));
  }
  double resolved_csit_error_var() const;

  /// Fills unset per-user vectors (weights 1, thresholds 0) to length K.
  NetworkConfig& with_defaults();
};

/// Returns every violated invariant of `cfg`; empty means valid.
std::vector<std::string> validate_config(const NetworkConfig& cfg);

struct ChannelSet {
  std::vector<CVec> h_near;  // BS -> near user k, length M
  std::vector<CMat> G;       // BS -> IRS k, N x M
  std::vector<CVec> h_edge;  // IRS k -> edge user k, length N

  int groups() const { return static_cast<int>(h_near.size()); }
};

/// Dimensions and finiteness of `ch` against `cfg`; throws StructuralError.
void check_channels(const ChannelSet& ch, const NetworkConfig& cfg);

/// The ON-OFF column dictionary A = (1/sqrt(Q)) I_P kron 1_Q.
struct IrsCodebook {
  RMat A;
  int ones_block = 1;

  int columns() const { return static_cast<int>(A.cols()); }
  int elements() const { return static_cast<int>(A.rows()); }
};

IrsCodebook build_codebook(int cols, int ones_block);

/// Zero-based codebook column chosen for each IRS.
struct IrsSelection {
  std::vector<int> col;

  friend bool operator==(const IrsSelection&, const IrsSelection&) = default;
};

/// Diagonal reflection matrix Z_k = diag(a_{col[k]}) as a dense N x N matrix.
RMat apply_selection(const IrsCodebook& cb, const IrsSelection& sel, int k);

/// h_eff with h_eff^H = h_edge^H diag(a_col) G.
CVec effective_channel(const CVec& h_edge, int col, const IrsCodebook& cb, const CMat& G);

/// The M-vector channel each user decodes through: h_near[k] for near users,
/// the IRS effective channel for edge users. Computed once per (channel, selection).
struct UserChannels {
  PerUser<CVec> c;

  int groups() const { return c.groups(); }
  const CVec& of(UserKind kind, int k) const { return c.at(kind, k); }
};

UserChannels user_channels(const ChannelSet& ch, const IrsSelection& sel, const IrsCodebook& cb);

enum class PrecoderKind { Global, Group, Near, Edge };

/// Column id inside P = [p, p_11', ..., p_KK', p_1, ..., p_K, p_1', ..., p_K'].
struct ColumnId {
  PrecoderKind kind;
  int group = 0;
};

struct PrecoderSet {
  CVec global;
  std::vector<CVec> group;
  std::vector<CVec> near;
  std::vector<CVec> edge;

  static PrecoderSet zeros(int groups, int antennas);

  int groups() const { return static_cast<int>(group.size()); }
  int antennas() const { return static_cast<int>(global.size()); }
  int column_count() const { return 1 + 3 * groups(); }

  CVec& column(ColumnId id);
  const CVec& column(ColumnId id) const;
  /// All columns in P order.
  std::vector<ColumnId> column_ids() const;
  /// Dense M x (3K+1) matrix in P order.
  CMat matrix() const;
};

/// tr(P P^H).
double precoder_power(const PrecoderSet& pre);

/// Common-rate portions c. D = -c in the WMSE domain is derived, not stored.
struct RateAllocation {
  std::vector<double> global_near;  // C^s_k
  std::vector<double> global_edge;  // C^s_k'
  std::vector<double> group_near;   // C^{s_kk'}_k
  std::vector<double> group_edge;   // C^{s_kk'}_k'

  static RateAllocation zeros(int groups);
  int groups() const { return static_cast<int>(global_near.size()); }
  double global_sum() const;
  double global_share(UserKind kind, int k) const;
  double group_share(UserKind kind, int k) const;
};

using EqualizerSet = PerUser<Streams<cdouble>>;
using MmseWeightSet = PerUser<Streams<double>>;

}  // namespace irsrs
