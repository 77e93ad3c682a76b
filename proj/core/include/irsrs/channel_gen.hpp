#pragma once

#include "irsrs/model.hpp"

#include <cstdint>

namespace irsrs {

/// What the BS designs on versus what the users actually see.
struct CsitPair {
  ChannelSet true_channels;
  ChannelSet estimated_channels;
};

/// Rayleigh i.i.d. realization: h_near ~ CN(0, 1); G and h_edge ~ CN(0, edge_scale).
/// Deterministic in `seed`.
ChannelSet sample_channels(const NetworkConfig& cfg, std::uint64_t seed);

/// estimated = true + e with e ~ CN(0, error_var) on every entry of h_near, G and h_edge.
CsitPair apply_csit_error(const ChannelSet& true_ch, double error_var, std::uint64_t seed);

/// Seed for the CSIT error stream of a trial; disjoint from the channel seed stream.
std::uint64_t csit_error_seed(std::uint64_t channel_seed);

}  // namespace irsrs
