#pragma once

// MSE-domain view of the 2-layer rate-splitting link: per-stream receive
// powers, MMSE equalizers and weights, and the weighted-MSE surrogate whose
// optimum coincides with 1 - rate for every decoded stream.

#include "irsrs/model.hpp"

#include <cmath>
#include <numbers>
#include <span>

namespace irsrs {

/// Lower clamp applied to MSEs before 1/eps or log2(eps).
inline constexpr double kMinMse = 1e-12;

/// T (receive power incl. noise) and I (interference plus noise left after
/// removing the intended stream) for each decoded stream, following the SIC
/// chain: T_group = T_global - |global|^2, T_priv = T_group - |own group|^2,
/// I_global = T_group, I_group = T_priv, I_priv = T_priv - |own private|^2.
struct StreamPowerReport {
  PerUser<Streams<double>> T;
  PerUser<Streams<double>> I;
};

using MseSet = PerUser<Streams<double>>;

struct WmseReport {
  PerUser<Streams<double>> xi;     // weighted_mse(u, eps(g))
  double global_max = 0.0;         // xi_s, max over all 2K users
  std::vector<double> group_max;   // xi_{s_kk'}, max over the pair
  PerUser<double> total;           // D^s + D^group + xi^priv, with D = -C
  double objective = 0.0;          // sum_i userweight_i * total_i
};

StreamPowerReport stream_powers(const UserChannels& uc, const PrecoderSet& pre);
StreamPowerReport stream_powers(const ChannelSet& ch, const PrecoderSet& pre,
                                const IrsSelection& sel, const IrsCodebook& cb);

/// g = p^H c / T for each stream (c is the user's effective channel).
EqualizerSet mmse_equalizers(const UserChannels& uc, const PrecoderSet& pre);
EqualizerSet mmse_equalizers(const ChannelSet& ch, const PrecoderSet& pre,
                             const IrsSelection& sel, const IrsCodebook& cb);

/// eps^MMSE = I / T.
MseSet mmse_values(const StreamPowerReport& powers);

/// u* = 1 / eps. Throws DomainError for eps <= 0.
MmseWeightSet optimal_weights(const MseSet& eps);

/// eps(g) = |g|^2 T - 2 Re{g c^H p} + 1 at arbitrary equalizers.
MseSet stream_mses(const UserChannels& uc, const PrecoderSet& pre, const EqualizerSet& g);

/// Weighted MSEs and the reformulated objective at the given (g, u, allocation).
WmseReport wmse_objective(const UserChannels& uc, const PrecoderSet& pre, const EqualizerSet& g,
                          const MmseWeightSet& u, const RateAllocation& alloc,
                          std::span<const double> user_weights);
WmseReport wmse_objective(const ChannelSet& ch, const PrecoderSet& pre, const IrsSelection& sel,
                          const IrsCodebook& cb, const EqualizerSet& g, const MmseWeightSet& u,
                          const RateAllocation& alloc, const NetworkConfig& cfg);

/// Weighted MSE of one stream in bits: (u eps - ln u - 1) / ln 2 + 1.
/// Its minimum over u sits at u = 1/eps, where it equals 1 + log2(eps).
inline double weighted_mse(double u, double eps) {
  return (u * eps - std::log(u) - 1.0) / std::numbers::ln2 + 1.0;
}

}  // namespace irsrs
