#include "irsrs/channel_gen.hpp"

#include <cmath>
#include <random>

namespace irsrs {

namespace {

// Box-Muller over mt19937_64; output is identical across standard libraries,
// unlike std::normal_distribution.
class ComplexGaussian {
 public:
  explicit ComplexGaussian(std::uint64_t seed) : rng_(seed) {}

  // CN(0, var): real and imaginary parts N(0, var/2), Box-Muller.
  cdouble operator()(double var) {
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double r = std::sqrt(-std::log(u1) * var);
    const double a = 2.0 * M_PI * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

 private:
  double uniform_open() {
    // 53 random bits mapped into (0, 1).
    return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::mt19937_64 rng_;
};

void fill(CVec& v, ComplexGaussian& gen, double var) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = gen(var);
}

void fill(CMat& m, ComplexGaussian& gen, double var) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = gen(var);
}

}  // namespace

ChannelSet sample_channels(const NetworkConfig& cfg, std::uint64_t seed) {
  ComplexGaussian gen(seed);
  ChannelSet ch;
  const auto k = static_cast<std::size_t>(cfg.groups);
  ch.h_near.assign(k, CVec(cfg.antennas));
  ch.G.assign(k, CMat(cfg.irs_elements, cfg.antennas));
  ch.h_edge.assign(k, CVec(cfg.irs_elements));
  for (std::size_t i = 0; i < k; ++i) {
    fill(ch.h_near[i], gen, 1.0);
    fill(ch.G[i], gen, cfg.edge_scale);
    fill(ch.h_edge[i], gen, cfg.edge_scale);
  }
  return ch;
}

CsitPair apply_csit_error(const ChannelSet& true_ch, double error_var, std::uint64_t seed) {
  if (!(error_var >= 0.0)) throw DomainError("CSIT error variance must be non-negative");
  CsitPair pair{true_ch, true_ch};
  if (error_var == 0.0) return pair;
  ComplexGaussian gen(seed);
  auto& est = pair.estimated_channels;
  for (std::size_t i = 0; i < est.h_near.size(); ++i) {
    CVec e_near(est.h_near[i].size());
    CMat e_g(est.G[i].rows(), est.G[i].cols());
    CVec e_edge(est.h_edge[i].size());
    fill(e_near, gen, error_var);
    fill(e_g, gen, error_var);
    fill(e_edge, gen, error_var);
    est.h_near[i] += e_near;
    est.G[i] += e_g;
    est.h_edge[i] += e_edge;
  }
  return pair;
}

std::uint64_t csit_error_seed(std::uint64_t channel_seed) {
  // splitmix64 finalizer keeps the error stream decorrelated from seed + t.
  std::uint64_t z = channel_seed + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace irsrs
