#include "irsrs/experiment.hpp"

#include "irsrs/channel_gen.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace irsrs {

std::string_view to_string(Study s) { return s == Study::RateRegion ? "rate-region" : "wsr-vs-snr"; }

std::string_view to_string(SchemeChoice s) {
  switch (s) {
    case SchemeChoice::Rs: return "rs";
    case SchemeChoice::Noma: return "noma";
    case SchemeChoice::Both: return "both";
  }
  return "both";
}

std::string_view to_string(Csit c) { return c == Csit::Perfect ? "perfect" : "imperfect"; }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt_double(v[i]);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
    throw ConfigError("key '" + key + "': '" + s + "' is not a number");
  return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': '" + s + "' is not an integer");
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("key '" + key + "': expected true or false");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Runs fn(i) for i in [0, n) on up to `threads` workers; results must be
// written by index so the outcome does not depend on scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  int next = 0;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      int i;
      {
        std::lock_guard lock(mu);
        if (next >= n || error) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<Scheme> schemes_of(SchemeChoice c) {
  switch (c) {
    case SchemeChoice::Rs: return {Scheme::RateSplitting};
    case SchemeChoice::Noma: return {Scheme::Noma};
    case SchemeChoice::Both: return {Scheme::RateSplitting, Scheme::Noma};
  }
  return {};
}

struct TrialOutcome {
  bool ok = false;
  bool converged = false;
  double near = 0.0;
  double edge = 0.0;
  double wsr = 0.0;
};

// One sweep point: `trials` paired channel draws, every scheme on each draw.
std::vector<ResultRow> run_point(const ExperimentSpec& spec, const NetworkConfig& cfg,
                                 double snr_db) {
  const auto schemes = schemes_of(spec.scheme);
  const auto n_schemes = schemes.size();
  std::vector<TrialOutcome> out(static_cast<std::size_t>(spec.trials) * n_schemes);

  parallel_for(spec.trials, spec.threads, [&](int t) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(t);
    const auto true_ch = sample_channels(cfg, seed);
    ChannelSet design_ch = true_ch;
    if (spec.csit == Csit::Imperfect)
      design_ch = apply_csit_error(true_ch, cfg.resolved_csit_error_var(), csit_error_seed(seed))
                      .estimated_channels;

    for (std::size_t s = 0; s < n_schemes; ++s) {
      auto& o = out[static_cast<std::size_t>(t) * n_schemes + s];
      const auto sol = solve(design_ch, cfg, spec.solver, schemes[s]);
      if (sol.status == SolveStatus::Infeasible) continue;
      const auto rep = spec.csit == Csit::Imperfect ? realized_rates(sol, true_ch, cfg) : sol.rates;
      o.ok = true;
      o.converged = sol.status == SolveStatus::Converged;
      o.wsr = rep.wsr;
      for (int k = 0; k < cfg.groups; ++k) {
        o.near += rep.total.near[static_cast<std::size_t>(k)] / cfg.groups;
        o.edge += rep.total.edge[static_cast<std::size_t>(k)] / cfg.groups;
      }
    }
  });

  std::vector<ResultRow> rows;
  for (std::size_t s = 0; s < n_schemes; ++s) {
    ResultRow r;
    r.study = spec.study;
    r.scheme = schemes[s];
    r.csit = spec.csit;
    r.snr_db = snr_db;
    r.weight_near = cfg.weight(UserKind::Near, 0);
    r.weight_edge = cfg.weight(UserKind::Edge, 0);
    r.trials = spec.trials;
    r.seed_base = cfg.seed;
    int ok = 0, converged = 0;
    for (int t = 0; t < spec.trials; ++t) {
      const auto& o = out[static_cast<std::size_t>(t) * n_schemes + s];
      if (!o.ok) {
        ++r.failed;
        continue;
      }
      ++ok;
      converged += o.converged ? 1 : 0;
      r.mean_rate_near += o.near;
      r.mean_rate_edge += o.edge;
      r.mean_wsr += o.wsr;
    }
    if (ok > 0) {
      r.mean_rate_near /= ok;
      r.mean_rate_edge /= ok;
      r.mean_wsr /= ok;
    }
    r.converged_fraction = static_cast<double>(converged) / spec.trials;
    rows.push_back(r);
  }
  return rows;
}

void require_valid(const ExperimentSpec& spec) {
  const auto errors = validate_spec(spec);
  if (errors.empty()) return;
  std::string msg = "invalid experiment spec:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw ConfigError(msg);
}

}  // namespace

std::vector<std::string> validate_spec(const ExperimentSpec& spec) {
  auto errors = validate_config(spec.base);
  if (spec.trials < 1) errors.emplace_back("trials must be at least 1");
  if (spec.study == Study::WsrVsSnr && spec.snr_list_db.empty())
    errors.emplace_back("snr_list_db must not be empty");
  if (spec.study == Study::RateRegion && spec.weight_exponents.empty())
    errors.emplace_back("weight_exponents must not be empty");
  if (spec.study == Study::RateRegion && spec.csit != Csit::Perfect)
    errors.emplace_back("rate-region study requires csit = perfect");
  if (!(spec.solver.tol > 0.0)) errors.emplace_back("tol must be positive");
  if (spec.solver.max_iter < 1) errors.emplace_back("max_iter must be at least 1");
  if (!(spec.solver.subproblem_kkt_tol > 0.0))
    errors.emplace_back("subproblem_kkt_tol must be positive");
  if (!(spec.solver.init_power_split >= 0.0 && spec.solver.init_power_split <= 1.0))
    errors.emplace_back("init_power_split must lie in [0, 1]");
  return errors;
}

ExperimentSpec parse_config(std::string_view text) {
  ExperimentSpec spec;
  auto& cfg = spec.base;
  std::map<std::string, int> seen;

  std::stringstream ss{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string l = trim(line);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(l).substr(0, eq));
    const std::string val = trim(std::string_view(l).substr(eq + 1));
    if (seen[key]++) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");

    if (key == "study") {
      if (val == "rate-region") spec.study = Study::RateRegion;
      else if (val == "wsr-vs-snr") spec.study = Study::WsrVsSnr;
      else throw ConfigError("study must be rate-region or wsr-vs-snr");
    } else if (key == "scheme") {
      if (val == "rs") spec.scheme = SchemeChoice::Rs;
      else if (val == "noma") spec.scheme = SchemeChoice::Noma;
      else if (val == "both") spec.scheme = SchemeChoice::Both;
      else throw ConfigError("scheme must be rs, noma or both");
    } else if (key == "csit") {
      if (val == "perfect") spec.csit = Csit::Perfect;
      else if (val == "imperfect") spec.csit = Csit::Imperfect;
      else throw ConfigError("csit must be perfect or imperfect");
    } else if (key == "trials") {
      spec.trials = parse_int<int>(key, val);
    } else if (key == "seed") {
      cfg.seed = parse_int<std::uint64_t>(key, val);
    } else if (key == "snr_list_db") {
      spec.snr_list_db = parse_list(key, val);
    } else if (key == "weight_exponents") {
      spec.weight_exponents = parse_list(key, val);
    } else if (key == "region_snr_db") {
      spec.region_snr_db = parse_double(key, val);
    } else if (key == "output_path") {
      spec.output_path = val;
    } else if (key == "groups") {
      cfg.groups = parse_int<int>(key, val);
    } else if (key == "antennas") {
      cfg.antennas = parse_int<int>(key, val);
    } else if (key == "irs_elements") {
      cfg.irs_elements = parse_int<int>(key, val);
    } else if (key == "codebook_cols") {
      cfg.codebook_cols = parse_int<int>(key, val);
    } else if (key == "ones_block") {
      cfg.ones_block = parse_int<int>(key, val);
    } else if (key == "edge_scale") {
      cfg.edge_scale = parse_double(key, val);
    } else if (key == "user_weights") {
      cfg.user_weights = parse_list(key, val);
    } else if (key == "qos_near") {
      cfg.qos_near = parse_list(key, val);
    } else if (key == "qos_edge") {
      cfg.qos_edge = parse_list(key, val);
    } else if (key == "csit_error_var") {
      if (val == "auto") cfg.csit_error_var.reset();
      else cfg.csit_error_var = parse_double(key, val);
    } else if (key == "tol") {
      spec.solver.tol = parse_double(key, val);
    } else if (key == "max_iter") {
      spec.solver.max_iter = parse_int<int>(key, val);
    } else if (key == "subproblem_kkt_tol") {
      spec.solver.subproblem_kkt_tol = parse_double(key, val);
    } else if (key == "irs_search") {
      if (val == "auto") spec.solver.irs_search = IrsSearch::Auto;
      else if (val == "exhaustive") spec.solver.irs_search = IrsSearch::Exhaustive;
      else if (val == "greedy") spec.solver.irs_search = IrsSearch::Greedy;
      else throw ConfigError("irs_search must be auto, exhaustive or greedy");
    } else if (key == "init_power_split") {
      spec.solver.init_power_split = parse_double(key, val);
    } else if (key == "joint_allocation") {
      spec.solver.joint_allocation = parse_bool(key, val);
    } else if (key == "extrapolate") {
      spec.solver.extrapolate = parse_bool(key, val);
    } else if (key == "restricted_start") {
      spec.solver.restricted_start = parse_bool(key, val);
    } else {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  cfg.transmit_power = db_to_linear(spec.region_snr_db);
  cfg.with_defaults();
  require_valid(spec);
  return spec;
}

ExperimentSpec load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string() + ": " + std::strerror(errno));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string canonical_config(const ExperimentSpec& spec) {
  const auto& c = spec.base;
  const auto& s = spec.solver;
  std::ostringstream os;
  os << "study = " << to_string(spec.study) << "\n"
     << "scheme = " << to_string(spec.scheme) << "\n"
     << "csit = " << to_string(spec.csit) << "\n"
     << "trials = " << spec.trials << "\n"
     << "seed = " << c.seed << "\n"
     << "snr_list_db = " << fmt_list(spec.snr_list_db) << "\n"
     << "weight_exponents = " << fmt_list(spec.weight_exponents) << "\n"
     << "region_snr_db = " << fmt_double(spec.region_snr_db) << "\n"
     << "output_path = " << spec.output_path << "\n"
     << "groups = " << c.groups << "\n"
     << "antennas = " << c.antennas << "\n"
     << "irs_elements = " << c.irs_elements << "\n"
     << "codebook_cols = " << c.codebook_cols << "\n"
     << "ones_block = " << c.ones_block << "\n"
     << "edge_scale = " << fmt_double(c.edge_scale) << "\n"
     << "user_weights = " << fmt_list(c.user_weights) << "\n"
     << "qos_near = " << fmt_list(c.qos_near) << "\n"
     << "qos_edge = " << fmt_list(c.qos_edge) << "\n"
     << "csit_error_var = " << (c.csit_error_var ? fmt_double(*c.csit_error_var) : "auto") << "\n"
     << "tol = " << fmt_double(s.tol) << "\n"
     << "max_iter = " << s.max_iter << "\n"
     << "subproblem_kkt_tol = " << fmt_double(s.subproblem_kkt_tol) << "\n"
     << "irs_search = "
     << (s.irs_search == IrsSearch::Auto ? "auto"
                                         : s.irs_search == IrsSearch::Exhaustive ? "exhaustive"
                                                                                 : "greedy")
     << "\n"
     << "init_power_split = " << fmt_double(s.init_power_split) << "\n"
     << "joint_allocation = " << (s.joint_allocation ? "true" : "false") << "\n"
     << "extrapolate = " << (s.extrapolate ? "true" : "false") << "\n"
     << "restricted_start = " << (s.restricted_start ? "true" : "false") << "\n";
  return os.str();
}

std::string config_hash(const ExperimentSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(spec)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<ResultRow> run_rate_region(const ExperimentSpec& spec) {
  require_valid(spec);
  if (spec.study != Study::RateRegion) throw ConfigError("run_rate_region needs study = rate-region");
  std::vector<ResultRow> rows;
  for (double e : spec.weight_exponents) {
    NetworkConfig cfg = spec.base;
    cfg.with_defaults();
    cfg.transmit_power = db_to_linear(spec.region_snr_db);
    for (int k = 0; k < cfg.groups; ++k) {
      cfg.user_weights[static_cast<std::size_t>(k)] = 1.0;
      cfg.user_weights[static_cast<std::size_t>(cfg.groups + k)] = std::pow(10.0, e);
    }
    auto point = run_point(spec, cfg, spec.region_snr_db);
    rows.insert(rows.end(), point.begin(), point.end());
  }
  return rows;
}

std::vector<ResultRow> run_wsr_vs_snr(const ExperimentSpec& spec) {
  require_valid(spec);
  if (spec.study != Study::WsrVsSnr) throw ConfigError("run_wsr_vs_snr needs study = wsr-vs-snr");
  std::vector<ResultRow> rows;
  for (double snr : spec.snr_list_db) {
    NetworkConfig cfg = spec.base;
    cfg.with_defaults();
    cfg.transmit_power = db_to_linear(snr);
    auto point = run_point(spec, cfg, snr);
    rows.insert(rows.end(), point.begin(), point.end());
  }
  return rows;
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
  return spec.study == Study::RateRegion ? run_rate_region(spec) : run_wsr_vs_snr(spec);
}

std::string format_csv(const std::vector<ResultRow>& rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::string(to_string(r.study)) + ',' + std::string(to_string(r.scheme)) + ',' +
           std::string(to_string(r.csit)) + ',' + fmt_double(r.snr_db) + ',' +
           fmt_double(r.weight_near) + ',' + fmt_double(r.weight_edge) + ',' +
           fmt_double(r.mean_rate_near) + ',' + fmt_double(r.mean_rate_edge) + ',' +
           fmt_double(r.mean_wsr) + ',' + std::to_string(r.trials) + ',' +
           fmt_double(r.converged_fraction) + ',' + std::to_string(r.seed_base) + '\n';
  }
  return out;
}

std::vector<ResultRow> parse_csv(std::string_view text) {
  std::stringstream ss{std::string(text)};
  std::string line;
  if (!std::getline(ss, line) || trim(line) != kCsvHeader)
    throw std::runtime_error("CSV header does not match the result schema");
  std::vector<ResultRow> rows;
  int lineno = 1;
  while (std::getline(ss, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string item;
    while (std::getline(ls, item, ',')) f.push_back(trim(item));
    if (f.size() != 12)
      throw std::runtime_error("CSV line " + std::to_string(lineno) + ": expected 12 fields");
    const std::string ctx = "CSV line " + std::to_string(lineno);
    ResultRow r;
    if (f[0] == "rate-region") r.study = Study::RateRegion;
    else if (f[0] == "wsr-vs-snr") r.study = Study::WsrVsSnr;
    else throw std::runtime_error(ctx + ": bad study");
    if (f[1] == "rs") r.scheme = Scheme::RateSplitting;
    else if (f[1] == "noma") r.scheme = Scheme::Noma;
    else throw std::runtime_error(ctx + ": bad scheme");
    if (f[2] == "perfect") r.csit = Csit::Perfect;
    else if (f[2] == "imperfect") r.csit = Csit::Imperfect;
    else throw std::runtime_error(ctx + ": bad csit");
    try {
      r.snr_db = parse_double("snr_db", f[3]);
      r.weight_near = parse_double("weight_near", f[4]);
      r.weight_edge = parse_double("weight_edge", f[5]);
      r.mean_rate_near = parse_double("mean_rate_near", f[6]);
      r.mean_rate_edge = parse_double("mean_rate_edge", f[7]);
      r.mean_wsr = parse_double("mean_wsr", f[8]);
      r.trials = parse_int<int>("trials", f[9]);
      r.converged_fraction = parse_double("converged_fraction", f[10]);
      r.seed_base = parse_int<std::uint64_t>("seed_base", f[11]);
    } catch (const ConfigError& e) {
      throw std::runtime_error(ctx + ": " + e.what());
    }
    rows.push_back(r);
  }
  return rows;
}

std::filesystem::path manifest_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p += ".manifest.txt";
  return p;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string() + ": " + std::strerror(errno));
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

void write_results(const std::vector<ResultRow>& rows, const ExperimentSpec& spec,
                   const std::filesystem::path& path) {
  write_file(path, format_csv(rows));

  std::ostringstream m;
  m << "tool_version = " << kToolVersion << "\n"
    << "config_hash = " << config_hash(spec) << "\n"
    << "seed_base = " << spec.base.seed << "\n"
    << "channel_seed = seed_base + trial index\n"
    << "csit_error_seed = splitmix64(channel_seed)\n"
    << "csit_error_var = "
    << (spec.base.csit_error_var ? fmt_double(*spec.base.csit_error_var) : "P_t^-0.6 per SNR point")
    << "\n"
    << "csit_error_applies_to = h_near, G, h_edge\n"
    << "\n[decisions]\n"
    << "noise variance 1; SNR swept through P_t only\n"
    << "rates in bits/s/Hz (log2) everywhere\n"
    << "IRS: ON-OFF codebook, one column per IRS, initial column = strongest effective channel\n"
    << "precoder init: sum-channel commons, matched-filter privates, init_power_split on commons\n"
    << "alternation: steps 2-5 repeated until |objective change| < tol or max_iter\n"
    << "NOMA baseline: constrained rate-splitting instance (no global common stream, no edge "
       "private stream, group common stream carries the edge message); interpretation, not the "
       "reference algorithm\n"
    << "imperfect CSIT: design on estimates, rates on true channels, common portions clipped to "
       "true caps\n"
    << "QoS thresholds default 0 (inactive)\n"
    << "trial means exclude infeasible trials; rates averaged over users of each kind\n"
    << "\n[rows]\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    m << i << ": " << to_string(r.scheme) << " snr_db=" << fmt_double(r.snr_db)
      << " weight_edge=" << fmt_double(r.weight_edge) << " failed=" << r.failed << "\n";
  }
  m << "\n[config]\n" << canonical_config(spec);
  write_file(manifest_path(path), m.str());
}

}  // namespace irsrs
