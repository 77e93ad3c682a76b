#pragma once

// Alternating optimization of IRS selection, common-rate allocation,
// equalizers/weights and precoders for the 2-layer rate-splitting downlink,
// plus the NOMA baseline expressed as a restricted instance of the same
// problem (no global common stream, no edge private stream, the group common
// stream carries only the edge user's message).

#include "irsrs/model.hpp"
#include "irsrs/rate_engine.hpp"
#include "irsrs/wmmse.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace irsrs {

enum class Scheme { RateSplitting, Noma };
enum class IrsSearch { Auto, Exhaustive, Greedy };
enum class SolveStatus { Converged, MaxIter, Infeasible };

std::string_view to_string(Scheme s);
std::string_view to_string(SolveStatus s);

struct SolverOptions {
  double tol = 1e-4;                  // absolute change of the WMSE objective
  int max_iter = 50;
  double subproblem_kkt_tol = 1e-6;
  IrsSearch irs_search = IrsSearch::Auto;  // Auto: exhaustive while P^K <= 256
  double init_power_split = 0.5;      // fraction of P_t on the common layers
  // Precoder step also optimizes the common-rate portions (jointly convex in
  // P and d for fixed g, u). When false, d stays at the step-3 value.
  bool joint_allocation = true;
  // After each precoder step, try moving further along the last step
  // direction; accepted only on a strict surrogate decrease.
  bool extrapolate = true;
  // Rate splitting also runs from the NOMA solution (a feasible RS point)
  // and keeps the higher-WSR result.
  bool restricted_start = true;
};

/// Whether a precoder column / allocation entry exists under a scheme.
bool column_active(Scheme scheme, PrecoderKind kind);
bool global_share_free(Scheme scheme, UserKind kind);
bool group_share_free(Scheme scheme, UserKind kind);

/// Step 1: per IRS, the codebook column with the strongest effective channel.
IrsSelection initial_selection(const ChannelSet& ch, const IrsCodebook& cb);

/// Step 1: common precoders along the normalized sum of their decoders'
/// channels, private precoders matched to their user; total power exactly P_t
/// with `init_power_split` on the common layers (half global, half groups).
PrecoderSet init_precoders(const ChannelSet& ch, const IrsSelection& sel, const IrsCodebook& cb,
                           const NetworkConfig& cfg, const SolverOptions& opts,
                           Scheme scheme = Scheme::RateSplitting);

/// Everything the common-rate LP needs, in rate units.
struct AllocationProblem {
  double global_cap = 0.0;
  std::vector<double> group_caps;
  PerUser<double> private_rates;
  std::vector<double> user_weights;
  PerUser<double> qos;
  Scheme scheme = Scheme::RateSplitting;
};

/// maximize sum_i w_i (C^s_i + C^g_i) subject to the caps, QoS and C >= 0.
/// Ties go to edge users, then to lower group index. nullopt when QoS is infeasible.
std::optional<RateAllocation> allocate_common_rates(const AllocationProblem& problem);

/// Step 3: caps and private rates taken from the WMSE surrogates at (g, u),
/// i.e. R = 1 - xi on the max-xi users.
std::optional<RateAllocation> update_common_allocation(const UserChannels& uc,
                                                       const PrecoderSet& pre,
                                                       const EqualizerSet& g,
                                                       const MmseWeightSet& u,
                                                       const NetworkConfig& cfg, Scheme scheme);

struct EqualizerUpdate {
  EqualizerSet g;
  MmseWeightSet u;
};

/// Step 4: MMSE equalizers and optimal weights.
EqualizerUpdate update_equalizers_weights(const UserChannels& uc, const PrecoderSet& pre);

/// Reformulated objective with its constraints checked (C1, C2, C4, C5 within `slack`).
struct SurrogateValue {
  double objective = 0.0;
  bool feasible = true;
};

SurrogateValue evaluate_surrogate(const UserChannels& uc, const PrecoderSet& pre,
                                  const EqualizerSet& g, const MmseWeightSet& u,
                                  const RateAllocation& alloc, const NetworkConfig& cfg,
                                  double slack = 1e-8);

struct SelectionUpdate {
  IrsSelection selection;
  EqualizerSet g;
  MmseWeightSet u;
};

/// Step 2: minimizes the surrogate over codebook columns with P and d fixed.
/// Each candidate is scored with its own MMSE equalizers/weights; candidates
/// that break a common-rate or QoS constraint are skipped. Ties keep the
/// lowest column index.
SelectionUpdate select_irs_columns(const ChannelSet& ch, const PrecoderSet& pre,
                                   const RateAllocation& alloc, const IrsSelection& current,
                                   const IrsCodebook& cb, const NetworkConfig& cfg,
                                   const SolverOptions& opts);

struct PrecoderUpdate {
  PrecoderSet precoders;
  RateAllocation alloc;
  bool solved = false;  // false: the previous iterate was kept
};

/// Step 5: convex QCQP in the stacked precoder (and d when joint) at fixed g, u, selection.
PrecoderUpdate update_precoders(const UserChannels& uc, const PrecoderSet& current,
                                const RateAllocation& alloc, const EqualizerSet& g,
                                const MmseWeightSet& u, const NetworkConfig& cfg,
                                const SolverOptions& opts, Scheme scheme);

struct Solution {
  Scheme scheme = Scheme::RateSplitting;
  PrecoderSet precoders;
  RateAllocation alloc;
  IrsSelection selection;
  EqualizerSet equalizers;
  MmseWeightSet weights;
  std::vector<double> trace;       // objective after init and after every iteration
  std::vector<double> step_trace;  // objective after every individual step
  RateReport rates;                // on the channels the design used
  double wsr = 0.0;
  SolveStatus status = SolveStatus::MaxIter;
  int iterations = 0;
};

Solution ao_solve(const ChannelSet& ch_est, const NetworkConfig& cfg, const SolverOptions& opts);
Solution noma_solve(const ChannelSet& ch_est, const NetworkConfig& cfg, const SolverOptions& opts);
Solution solve(const ChannelSet& ch_est, const NetworkConfig& cfg, const SolverOptions& opts,
               Scheme scheme);

/// Rates the designed solution achieves on `true_ch`, common portions clipped
/// to the true caps.
RateReport realized_rates(const Solution& sol, const ChannelSet& true_ch,
                          const NetworkConfig& cfg);

}  // namespace irsrs
