#pragma once

#include "irsrs/model.hpp"

#include <span>
#include <stdexcept>

namespace irsrs {

/// A common-rate allocation exceeds the cap of the stream it is carved from.
class InfeasibleAllocation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear-scale SINR of each decoded stream at each user.
using SinrReport = PerUser<Streams<double>>;
/// log2(1 + SINR) per decoded stream, bits/s/Hz.
using StreamRates = PerUser<Streams<double>>;

struct RateReport {
  StreamRates stream;
  double global_cap = 0.0;          // R_s, min over all 2K users
  std::vector<double> group_cap;    // R_{s_kk'}, min over the pair
  PerUser<double> total;            // allocated common portions + private rate
  double wsr = 0.0;                 // filled by evaluate_wsr
};

/// Received power |c^H p|^2 of precoder column `p` through user channel `c`.
inline double gain(const CVec& c, const CVec& p) { return std::norm(c.dot(p)); }

SinrReport compute_sinrs(const UserChannels& uc, const PrecoderSet& pre);
SinrReport compute_sinrs(const ChannelSet& ch, const PrecoderSet& pre, const IrsSelection& sel,
                         const IrsCodebook& cb);

StreamRates rates_from_sinrs(const SinrReport& s);

/// Composes user totals. Throws InfeasibleAllocation when an allocation entry
/// is negative or a cap is exceeded by more than `slack`.
RateReport total_rates(const StreamRates& rates, const RateAllocation& alloc, double slack = 1e-9);

/// sum_k (u_k R_tot,k + u_k' R_tot,k'), weights ordered [near..., edge...].
double wsr(std::span<const double> user_weights, const RateReport& report);

/// Reduces common portions so they fit the caps of `rates`: each portion is
/// first clipped to its cap, then a stream whose portions still overflow is
/// scaled down proportionally.
RateAllocation clip_to_caps(const StreamRates& rates, const RateAllocation& alloc);

/// Caps only (R_s and R_{s_kk'}) of a set of stream rates.
double global_cap(const StreamRates& rates);
std::vector<double> group_caps(const StreamRates& rates);

/// compute_sinrs -> rates_from_sinrs -> total_rates -> wsr in one call.
RateReport evaluate_rates(const UserChannels& uc, const PrecoderSet& pre,
                          const RateAllocation& alloc, std::span<const double> user_weights);

}  // namespace irsrs
