// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is nonzero when any criterion fails.

#include "support.hpp"

#include "irsrs/channel_gen.hpp"
#include "irsrs/experiment.hpp"
#include "irsrs/optimizer.hpp"
#include "irsrs/rate_engine.hpp"
#include "irsrs/wmmse.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace irsrs;
using testing::Rng;
namespace oracle = testing::oracle;

namespace {

const UserKind kKinds[] = {UserKind::Near, UserKind::Edge};
const oracle::Layer kLayers[] = {oracle::Layer::Global, oracle::Layer::Group, oracle::Layer::Private};

double layer_of(const Streams<double>& s, oracle::Layer l) {
  return l == oracle::Layer::Global ? s.global : l == oracle::Layer::Group ? s.group : s.priv;
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;
double worst_power_excess = -1e300;  // max over every returned solution of tr(PP^H) - P_t
int solutions_checked = 0;

void note_power(const Solution& s, const NetworkConfig& cfg) {
  worst_power_excess = std::max(worst_power_excess, precoder_power(s.precoders) - cfg.transmit_power);
  ++solutions_checked;
}

void report(const char* name, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s  %-28s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

template <typename F>
void parallel_for(int n, F&& body) {
  const int workers = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) body(i);
    });
  for (auto& t : pool) t.join();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

NetworkConfig desk(double snr_db) {
  NetworkConfig cfg;
  cfg.transmit_power = std::pow(10.0, snr_db / 10.0);
  cfg.with_defaults();
  return cfg;
}

struct Instance {
  UserChannels uc;
  PrecoderSet pre;
};

std::vector<Instance> random_instances(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Instance> out;
  for (int i = 0; i < n; ++i) {
    const int K = rng.integer(1, 3);
    const int P = rng.integer(1, 4) * 2, Q = rng.integer(1, 5);
    auto cfg = testing::small_config(K, rng.integer(1, 6), P, Q, std::pow(10.0, rng.uniform(-1, 3)));
    const auto ch = testing::random_channels(rng, cfg);
    const auto cb = build_codebook(P, Q);
    const auto sel = testing::random_selection(rng, cfg);
    out.push_back({user_channels(ch, sel, cb), testing::random_precoders(rng, cfg)});
  }
  return out;
}

Outcome wmmse_identity() {
  const auto inst = random_instances(1000, 1001);
  double worst = 0.0;
  for (const auto& in : inst) {
    const auto g = mmse_equalizers(in.uc, in.pre);
    const auto u = optimal_weights(mmse_values(stream_powers(in.uc, in.pre)));
    const int K = in.uc.groups();
    const auto alloc = RateAllocation::zeros(K);
    const std::vector<double> w(static_cast<std::size_t>(2 * K), 1.0);
    const auto rep = wmse_objective(in.uc, in.pre, g, u, alloc, w);
    for (int k = 0; k < K; ++k)
      for (auto kind : kKinds)
        for (auto layer : kLayers) {
          const double sinr =
              oracle::enumerated_sinr(in.uc.of(kind, k), in.pre, oracle::classify(K, kind, k, layer));
          const double xi = layer_of(rep.xi.at(kind, k), layer);
          worst = std::max(worst, std::abs(xi - (1.0 - std::log2(1.0 + sinr))));
        }
  }
  return {worst < 1e-9, fmt("6000 streams, max |xi - (1 - log2(1+SINR))| = %.2e", worst)};
}

Outcome mse_sinr() {
  const auto inst = random_instances(1000, 1001);
  double worst = 0.0;
  for (const auto& in : inst) {
    const auto eps = stream_mses(in.uc, in.pre, mmse_equalizers(in.uc, in.pre));
    const int K = in.uc.groups();
    for (int k = 0; k < K; ++k)
      for (auto kind : kKinds)
        for (auto layer : kLayers) {
          const double sinr =
              oracle::enumerated_sinr(in.uc.of(kind, k), in.pre, oracle::classify(K, kind, k, layer));
          worst = std::max(worst, std::abs(layer_of(eps.at(kind, k), layer) - 1.0 / (1.0 + sinr)));
        }
  }
  return {worst < 1e-9, fmt("max |eps - 1/(1+SINR)| = %.2e", worst)};
}

// A = B / sqrt(Q) with B binary. B^T B = Q I is checked in integers, every
// nonzero of A must be the correctly rounded 1/sqrt(Q), and the floating Gram
// matrix may differ from I only by the rounding of that constant.
Outcome codebook_exact() {
  int pairs = 0;
  double worst_gram = 0.0;
  for (int P = 1; P <= 64; ++P)
    for (int Q = 1; P * Q <= 64; ++Q) {
      ++pairs;
      const auto cb = build_codebook(P, Q);
      const double entry = 1.0 / std::sqrt(static_cast<double>(Q));
      if (cb.A.rows() != P * Q || cb.A.cols() != P) return {false, fmt("shape at P=%d Q=%d", P, Q)};
      std::vector<std::vector<int>> B(static_cast<std::size_t>(P * Q), std::vector<int>(P, 0));
      for (int r = 0; r < P * Q; ++r)
        for (int c = 0; c < P; ++c) {
          const double a = cb.A(r, c);
          if (a == 0.0) continue;
          if (a != entry) return {false, fmt("entry %.17g != 1/sqrt(Q) at P=%d Q=%d", a, P, Q)};
          B[r][c] = 1;
        }
      for (int i = 0; i < P; ++i)
        for (int j = 0; j < P; ++j) {
          int dot = 0;
          for (int r = 0; r < P * Q; ++r) dot += B[r][i] * B[r][j];
          if (dot != (i == j ? Q : 0)) return {false, fmt("B^T B != Q I at P=%d Q=%d", P, Q)};
        }
      const RMat gram = cb.A.transpose() * cb.A;
      for (int i = 0; i < P; ++i)
        for (int j = 0; j < P; ++j) {
          if (i != j && gram(i, j) != 0.0) return {false, fmt("off-diagonal at P=%d Q=%d", P, Q)};
          const double dev = std::abs(gram(i, j) - (i == j ? 1.0 : 0.0));
          worst_gram = std::max(worst_gram, dev);
          if (dev > Q * std::numeric_limits<double>::epsilon())
            return {false, fmt("diagonal off by %.2e at P=%d Q=%d", dev, P, Q)};
        }
    }
  return {true, fmt("%d (P,Q) pairs; B^T B = Q I exactly, max |A^T A - I| = %.1e (rounding of 1/sqrt(Q))",
                    pairs, worst_gram)};
}

Outcome ao_monotone() {
  const auto cfg = desk(20);
  int converged = 0, monotone_violations = 0;
  double worst_rise = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto s = ao_solve(sample_channels(cfg, seed), cfg, SolverOptions{});
    note_power(s, cfg);
    converged += s.status == SolveStatus::Converged && s.iterations <= 50;
    bool ok = true;
    for (std::size_t i = 1; i < s.step_trace.size(); ++i) {
      const double rise = s.step_trace[i] - s.step_trace[i - 1];
      worst_rise = std::max(worst_rise, rise);
      if (rise > 1e-6) ok = false;
    }
    monotone_violations += !ok;
  }
  return {monotone_violations == 0 && converged >= 95,
          fmt("100 seeds at 20 dB: %d non-monotone, %d converged, worst step rise %.1e",
              monotone_violations, converged, worst_rise)};
}

Outcome dominance() {
  const double snrs[] = {0, 5, 10, 15, 20, 25, 30};
  constexpr int kSeeds = 100;
  std::vector<double> gap(7 * kSeeds);
  std::vector<Solution> keep(2 * gap.size());
  parallel_for(static_cast<int>(gap.size()), [&](int i) {
    const auto cfg = desk(snrs[i / kSeeds]);
    const auto ch = sample_channels(cfg, static_cast<std::uint64_t>(i % kSeeds + 1));
    keep[2 * i] = ao_solve(ch, cfg, SolverOptions{});
    keep[2 * i + 1] = noma_solve(ch, cfg, SolverOptions{});
    gap[i] = keep[2 * i].wsr - keep[2 * i + 1].wsr;
  });
  int violations = 0;
  for (std::size_t i = 0; i < gap.size(); ++i) {
    note_power(keep[2 * i], desk(snrs[i / kSeeds]));
    note_power(keep[2 * i + 1], desk(snrs[i / kSeeds]));
    violations += gap[i] < -1e-3;
  }
  double mean20 = 0.0;
  for (int s = 0; s < kSeeds; ++s) mean20 += gap[4 * kSeeds + s] / kSeeds;
  return {violations == 0 && mean20 > 0.0,
          fmt("700 pairs: %d with RS < NOMA - 1e-3, worst gap %.2e, mean gap at 20 dB %.3f", violations,
              *std::min_element(gap.begin(), gap.end()), mean20)};
}

Outcome rate_region() {
  auto spec = parse_config("study = rate-region\nscheme = both\ntrials = 50\nregion_snr_db = 20\n");
  const auto rows = run_experiment(spec);
  int outside_failures = 0;
  double edge_rs = 0, edge_noma = 0;
  for (std::size_t i = 0; i + 1 < rows.size(); i += 2) {
    const auto& rs = rows[i];
    const auto& no = rows[i + 1];
    if (rs.scheme != Scheme::RateSplitting || no.scheme != Scheme::Noma) return {false, "row order"};
    // support-function form of "weakly outside": at the sweep's own weights
    const double w_rs = rs.weight_near * rs.mean_rate_near + rs.weight_edge * rs.mean_rate_edge;
    const double w_no = no.weight_near * no.mean_rate_near + no.weight_edge * no.mean_rate_edge;
    outside_failures += w_rs < w_no - 1e-3 * std::max(rs.weight_near, rs.weight_edge);
    if (rs.weight_edge == 1000.0) {
      edge_rs = rs.mean_rate_edge;
      edge_noma = no.mean_rate_edge;
    }
  }
  return {outside_failures == 0 && edge_rs > edge_noma,
          fmt("11 weights x 50 trials: %d points inside NOMA; edge rate at +3: RS %.3f vs NOMA %.3f",
              outside_failures, edge_rs, edge_noma)};
}

Outcome imperfect_csit() {
  auto spec = parse_config("study = wsr-vs-snr\nscheme = both\ntrials = 50\ncsit = perfect\n");
  const auto perfect = run_experiment(spec);
  spec.csit = Csit::Imperfect;
  const auto imperfect = run_experiment(spec);
  int order_failures = 0, scheme_failures = 0;
  std::string gaps;
  for (std::size_t i = 0; i < perfect.size(); ++i)
    order_failures += imperfect[i].mean_wsr > perfect[i].mean_wsr;
  for (std::size_t i = 0; i + 1 < imperfect.size(); i += 2) {
    const double g = imperfect[i].mean_wsr - imperfect[i + 1].mean_wsr;
    scheme_failures += g < -1e-3;
    gaps += fmt(" %.0fdB:%+.2f", imperfect[i].snr_db, g);
  }
  return {order_failures == 0 && scheme_failures == 0,
          fmt("7 SNRs x 50 trials: %d imperfect > perfect, %d RS < NOMA; RS-NOMA gap", order_failures,
              scheme_failures) + gaps};
}

// K = 1, M = 1: SINRs from the four precoder magnitudes, rates from the best
// allocation vertex (all common rate to the heavier user when QoS is off).
double oracle_wsr(double cn, double ce, const double a[4], double wn, double we) {
  auto sinr_set = [&](double c) {
    const double s = c * a[0] / (1 + c * (a[1] + a[2] + a[3]));
    const double g = c * a[1] / (1 + c * (a[2] + a[3]));
    return std::pair{s, g};
  };
  const auto [sn, gn] = sinr_set(cn);
  const auto [se, ge] = sinr_set(ce);
  const double rs = std::log2(1 + std::min(sn, se));
  const double rg = std::log2(1 + std::min(gn, ge));
  const double pn = std::log2(1 + cn * a[2] / (1 + cn * a[3]));
  const double pe = std::log2(1 + ce * a[3] / (1 + ce * a[2]));
  return wn * pn + we * pe + std::max(wn, we) * (rs + rg);
}

Outcome small_oracle() {
  auto cfg = testing::small_config(1, 1, 4, 5, 100.0);
  const double root = std::sqrt(cfg.transmit_power);
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i * 0.05 * root);
  const auto cb = build_codebook(4, 5);
  int bad = 0;
  double worst = -1e300, worst_consistency = 0.0;
  constexpr int kSeeds = 20;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    const auto ch = sample_channels(cfg, seed);
    const double cn = std::norm(ch.h_near[0](0));
    double best_grid = -1e300;
    for (int col = 0; col < 4; ++col) {
      const auto eff = oracle::user_channel(ch, cb, IrsSelection{{col}}, UserKind::Edge, 0);
      const double ce = std::norm(eff(0));
      for (double a0 : grid)
        for (double a1 : grid)
          for (double a2 : grid)
            for (double a3 : grid) {
              const double pw[4] = {a0 * a0, a1 * a1, a2 * a2, a3 * a3};
              if (pw[0] + pw[1] + pw[2] + pw[3] > cfg.transmit_power * (1 + 1e-12)) continue;
              best_grid = std::max(best_grid, oracle_wsr(cn, ce, pw, 1, 1));
            }
    }
    const auto s = ao_solve(ch, cfg, SolverOptions{});
    note_power(s, cfg);
    // recompute the returned design's WSR independently
    const auto eff = oracle::user_channel(ch, cb, s.selection, UserKind::Edge, 0);
    const double pw[4] = {std::norm(s.precoders.global(0)), std::norm(s.precoders.group[0](0)),
                          std::norm(s.precoders.near[0](0)), std::norm(s.precoders.edge[0](0))};
    const double own = oracle_wsr(cn, std::norm(eff(0)), pw, 1, 1);
    worst_consistency = std::max(worst_consistency, std::abs(own - s.wsr));
    const double f_grid = 2.0 - best_grid, f_ao = 2.0 - own;
    const double excess = (f_ao - f_grid) / std::abs(f_grid);
    worst = std::max(worst, excess);
    bad += excess > 0.01 || std::abs(own - s.wsr) > 1e-6;
  }
  return {bad == 0, fmt("%d seeds: worst (F_ao - F_grid)/|F_grid| = %.2e, reported vs recomputed WSR %.1e",
                        kSeeds, worst, worst_consistency)};
}

Outcome sinr_enumeration() {
  Rng rng(2002);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    auto cfg = testing::small_config(2, rng.integer(1, 6), 4, 5, std::pow(10.0, rng.uniform(-1, 3)));
    const auto ch = testing::random_channels(rng, cfg);
    const auto cb = build_codebook(4, 5);
    const auto sel = testing::random_selection(rng, cfg);
    const auto pre = testing::random_precoders(rng, cfg);
    const auto got = compute_sinrs(ch, pre, sel, cb);
    for (int k = 0; k < 2; ++k)
      for (auto kind : kKinds) {
        const auto c = oracle::user_channel(ch, cb, sel, kind, k);
        for (auto layer : kLayers) {
          const double ref = oracle::enumerated_sinr(c, pre, oracle::classify(2, kind, k, layer));
          const double v = layer_of(got.at(kind, k), layer);
          worst = std::max(worst, std::abs(v - ref) / std::max(1.0, std::abs(ref)));
        }
      }
  }
  return {worst < 1e-10, fmt("200 K=2 instances, max error %.2e", worst)};
}

Outcome csv_reproducible() {
  auto spec = parse_config("study = wsr-vs-snr\nscheme = both\ntrials = 5\nseed = 42\nsnr_list_db = 0, 15, 30\n");
  const auto a = run_experiment(spec);
  spec.threads = 1;
  const auto b = run_experiment(spec);
  const auto dir = std::filesystem::temp_directory_path() / "irsrs_acceptance";
  std::filesystem::create_directories(dir);
  write_results(a, spec, dir / "a.csv");
  write_results(b, spec, dir / "b.csv");
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const auto ta = slurp(dir / "a.csv");
  const bool identical = ta == slurp(dir / "b.csv");
  const bool parsed = parse_csv(ta) == a;
  std::filesystem::remove_all(dir);
  return {identical && parsed,
          fmt("%zu rows, byte-identical %s, parse-back %s", a.size(), identical ? "yes" : "no",
              parsed ? "equal" : "differs")};
}

Outcome runtime_limit(Outcome inner, double secs, double limit) {
  if (secs >= limit) {
    inner.pass = false;
    inner.detail += fmt("; exceeded %.0f s limit", limit);
  }
  return inner;
}

Outcome timed(const std::function<Outcome()>& fn, double limit) {
  const auto t0 = std::chrono::steady_clock::now();
  auto o = fn();
  return runtime_limit(o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
                       limit);
}

}  // namespace

int main() {
  report("wmmse-rate-identity", [] { return timed(wmmse_identity, 10); });
  report("mse-sinr-relation", mse_sinr);
  report("codebook-exactness", codebook_exact);
  report("ao-monotone-descent", [] { return timed(ao_monotone, 300); });
  report("sinr-enumeration-oracle", sinr_enumeration);
  report("small-instance-oracle", [] { return timed(small_oracle, 30); });
  report("restriction-dominance", dominance);
  report("rate-region-dominance", rate_region);
  report("imperfect-csit-ordering", imperfect_csit);
  report("csv-reproducibility", csv_reproducible);
  report("power-feasibility", [] {
    return Outcome{solutions_checked > 0 && worst_power_excess <= 1e-6,
                   fmt("%d solutions, max tr(PP^H) - P_t = %.2e", solutions_checked, worst_power_excess)};
  });
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
