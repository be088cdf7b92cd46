#pragma once

// Config-driven runner: builds instances, runs an algorithm per grid point,
// compares against the matching bound and writes CSV records.
//
// Config grammar: one `key = value` per line, `#` starts a comment, lists are
// comma-separated. Keys:
//   algorithm        param-elim | design-elim | benign-elim | general-features | random-baseline  (required)
//   source           random (default) | file | hard
//   instance         path to an instance file (source = file)
//   d, s, k          integer lists (k may be `auto` for source = hard)
//   epsilon          real list
//   seeds            integer list (an empty list gives an empty grid)
//   noise            none (default) | gaussian;  noise_scale  real (default 1)
//   c_const, c_jl    reals (defaults 2, 8)
//   kappa            bound multiplier for benign-elim / general-features (defaults: calibrated constants)
//   upsilon          benign-elim distortion (default (log k)^{1/4} sqrt(eps))
//   budget           query budget for benign-elim / general-features
//   gap              Delta for source = hard (default 0.5)
//   tau, delta, c    hard-matrix constants (defaults 0.1, 0.25, 2)
//   policy           rows (default) | whole      hard-matrix generation policy
//   net_truth        on (default) | off          seed the net with theta*'s restriction (param-elim)
//   same_subset_rivals, line_centres   on (default) | off   (param-elim)
//   output           CSV path (default results.csv);  summary  sweep summary path
//   timing           off (default) | on          wall_ms column is 0 unless on

#include "sparse_bandit/bandit_model.hpp"
#include "sparse_bandit/combinatorics.hpp"
#include "sparse_bandit/compressed_elimination.hpp"
#include "sparse_bandit/covering_net.hpp"
#include "sparse_bandit/design_elimination.hpp"
#include "sparse_bandit/general_features.hpp"
#include "sparse_bandit/hard_instances.hpp"
#include "sparse_bandit/instance_generators.hpp"
#include "sparse_bandit/instance_io.hpp"
#include "sparse_bandit/jl_compression.hpp"
#include "sparse_bandit/param_elimination.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace sparse_bandit {

/// Frozen after one calibration sweep each (see README).
inline constexpr double kBenignKappa = 0.8;
inline constexpr double kNoisyBenignKappa = 30.0;
inline constexpr double kGeneralKappa = 0.5;

enum class Algorithm { kParamElim, kDesignElim, kBenignElim, kGeneralFeatures, kRandomBaseline };
enum class Source { kRandom, kFile, kHard };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kParamElim: return "param-elim";
    case Algorithm::kDesignElim: return "design-elim";
    case Algorithm::kBenignElim: return "benign-elim";
    case Algorithm::kGeneralFeatures: return "general-features";
    case Algorithm::kRandomBaseline: return "random-baseline";
  }
  return "?";
}

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kParamElim;
  Source source = Source::kRandom;
  std::string instance_path;
  std::vector<Index> d{4};
  std::vector<Index> s{1};
  std::vector<Index> k{40};
  bool k_auto = false;
  std::vector<double> epsilon{0.1};
  std::vector<std::uint64_t> seeds{0};
  NoiseModel::Kind noise = NoiseModel::Kind::kNone;
  double noise_scale = 1.0;
  double c_const = 2.0;
  double c_jl = kDefaultJlConstant;
  std::optional<double> kappa;
  std::optional<double> upsilon;
  std::optional<std::size_t> budget;
  double gap = 0.5;
  double tau = 0.1;
  double delta = 0.25;
  double c = 2.0;
  GenerationPolicy policy = GenerationPolicy::kResampleRows;
  bool net_truth = true;
  bool same_subset_rivals = true;
  bool line_centres = true;
  std::string output = "results.csv";
  std::optional<std::string> summary;
  bool timing = false;
};

namespace detail {

inline std::string trim(std::string_view v) {
  const auto b = v.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = v.find_last_not_of(" \t\r");
  return std::string(v.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline bool parse_switch(const std::string& v, std::size_t line, const std::string& key) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ParseError(line, key + ": expected on or off, got '" + v + "'");
}

inline double positive_real(const std::string& v, std::size_t line, const std::string& key) {
  const double x = parse_real(v, line);
  if (!(x > 0.0) || !std::isfinite(x)) throw ParseError(line, key + " must be positive");
  return x;
}

struct ConfigEntry {
  std::size_t line;
  std::string key;
  std::string value;
};

/// `key = value` lines with comments and blanks dropped; duplicate keys are errors.
inline std::vector<ConfigEntry> read_entries(std::istream& in) {
  std::vector<ConfigEntry> out;
  std::set<std::string> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected 'key = value'");
    ConfigEntry e{line, trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
    if (e.key.empty()) throw ParseError(line, "empty key");
    if (!seen.insert(e.key).second) throw ParseError(line, "duplicate key '" + e.key + "'");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  const auto entries = detail::read_entries(in);
  const std::size_t last_line = entries.empty() ? 0 : entries.back().line;
  for (const auto& [line, key, value] : entries) {
    seen.insert(key);
    const bool list_key = key == "d" || key == "s" || key == "k" || key == "epsilon" || key == "seeds";
    if (value.empty() && !list_key) throw ParseError(line, "empty value for '" + key + "'");
    const auto items = detail::split_list(value);

    auto uints = [&](bool allow_zero) {
      std::vector<std::uint64_t> out;
      for (const auto& it : items) {
        const auto x = detail::parse_uint(it, line);
        if (!allow_zero && x == 0) throw ParseError(line, key + " entries must be positive");
        out.push_back(x);
      }
      return out;
    };
    auto indices = [&] {
      std::vector<Index> out;
      for (auto x : uints(false)) out.push_back(static_cast<Index>(x));
      return out;
    };

    if (key == "algorithm") {
      static const std::map<std::string, Algorithm> names{{"param-elim", Algorithm::kParamElim},
                                                          {"design-elim", Algorithm::kDesignElim},
                                                          {"benign-elim", Algorithm::kBenignElim},
                                                          {"general-features", Algorithm::kGeneralFeatures},
                                                          {"random-baseline", Algorithm::kRandomBaseline}};
      const auto it = names.find(value);
      if (it == names.end()) throw ParseError(line, "unknown algorithm '" + value + "'");
      cfg.algorithm = it->second;
    } else if (key == "source") {
      if (value == "random") cfg.source = Source::kRandom;
      else if (value == "file") cfg.source = Source::kFile;
      else if (value == "hard") cfg.source = Source::kHard;
      else throw ParseError(line, "unknown source '" + value + "'");
    } else if (key == "instance") {
      cfg.instance_path = value;
    } else if (key == "d") {
      cfg.d = indices();
    } else if (key == "s") {
      cfg.s = indices();
    } else if (key == "k") {
      if (value == "auto") {
        cfg.k_auto = true;
      } else {
        cfg.k = indices();
      }
    } else if (key == "epsilon") {
      cfg.epsilon.clear();
      for (const auto& it : items) cfg.epsilon.push_back(detail::positive_real(it, line, key));
    } else if (key == "seeds") {
      cfg.seeds = uints(true);
    } else if (key == "noise") {
      if (value == "none") cfg.noise = NoiseModel::Kind::kNone;
      else if (value == "gaussian") cfg.noise = NoiseModel::Kind::kGaussian;
      else throw ParseError(line, "noise must be none or gaussian");
    } else if (key == "noise_scale") {
      cfg.noise_scale = detail::positive_real(value, line, key);
    } else if (key == "c_const") {
      cfg.c_const = detail::positive_real(value, line, key);
    } else if (key == "c_jl") {
      cfg.c_jl = detail::positive_real(value, line, key);
    } else if (key == "kappa") {
      cfg.kappa = detail::positive_real(value, line, key);
    } else if (key == "upsilon") {
      cfg.upsilon = detail::positive_real(value, line, key);
    } else if (key == "budget") {
      cfg.budget = static_cast<std::size_t>(uints(false).at(0));
    } else if (key == "gap") {
      cfg.gap = detail::positive_real(value, line, key);
    } else if (key == "tau") {
      cfg.tau = detail::parse_real(value, line);
      if (!(cfg.tau >= 0.0 && cfg.tau < 1.0)) throw ParseError(line, "tau must lie in [0, 1)");
    } else if (key == "delta") {
      cfg.delta = detail::parse_real(value, line);
      if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) throw ParseError(line, "delta must lie in (0, 1]");
    } else if (key == "c") {
      cfg.c = detail::parse_real(value, line);
      if (!(cfg.c > 1.0)) throw ParseError(line, "c must exceed 1");
    } else if (key == "policy") {
      if (value == "rows") cfg.policy = GenerationPolicy::kResampleRows;
      else if (value == "whole") cfg.policy = GenerationPolicy::kWholeMatrix;
      else throw ParseError(line, "policy must be rows or whole");
    } else if (key == "net_truth") {
      cfg.net_truth = detail::parse_switch(value, line, key);
    } else if (key == "same_subset_rivals") {
      cfg.same_subset_rivals = detail::parse_switch(value, line, key);
    } else if (key == "line_centres") {
      cfg.line_centres = detail::parse_switch(value, line, key);
    } else if (key == "output") {
      cfg.output = value;
    } else if (key == "summary") {
      cfg.summary = value;
    } else if (key == "timing") {
      cfg.timing = detail::parse_switch(value, line, key);
    } else {
      throw ParseError(line, "unknown key '" + key + "'");
    }
    if (items.empty() && !list_key) throw ParseError(line, "no value for '" + key + "'");
  }
  if (!seen.count("algorithm")) throw ParseError(last_line, "missing required key 'algorithm'");
  if (cfg.source == Source::kFile && cfg.instance_path.empty()) throw ParseError(last_line, "source = file needs 'instance'");
  if (cfg.k_auto && cfg.source != Source::kHard) throw ParseError(last_line, "k = auto is only valid with source = hard");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open config '" + path + "'");
  return parse_config(in);
}

struct GridPoint {
  Index d = 0;
  Index s = 0;
  Index k = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

struct RunRecord {
  std::string algorithm;
  Index d = 0;
  Index s = 0;
  double epsilon = 0.0;
  Index k = 0;
  std::uint64_t seed = 0;
  std::size_t queries = 0;
  double uniform_error = 0.0;
  double suboptimality = 0.0;
  double bound = 0.0;
  bool bound_satisfied = false;
  std::int64_t wall_ms = 0;
  /// Bound divided by its multiplier (kappa for benign / general); the
  /// calibration sweep reports max uniform_error / shape.
  double shape = 0.0;
};

/// Hard-matrix spec used for a grid point: generated at orthogonality level
/// eps / (2 Delta) so the planted embedding has ||nu||_inf <= eps.
inline HardMatrixSpec hard_spec_for(const ExperimentConfig& cfg, const GridPoint& p) {
  HardMatrixSpec spec;
  spec.k = p.k;
  spec.d = p.d;
  spec.s = p.s;
  spec.epsilon = p.epsilon / (2.0 * cfg.gap);
  spec.tau = cfg.tau;
  spec.delta = cfg.delta;
  spec.c = cfg.c;
  spec.seed = p.seed;
  return spec;
}

/// Grid in deterministic order: d, s, epsilon, k, seed (outer to inner).
inline std::vector<GridPoint> expand_grid(const ExperimentConfig& cfg) {
  std::vector<GridPoint> out;
  if (cfg.source == Source::kFile) {
    const auto rec = [&] {
      std::ifstream in(cfg.instance_path);
      if (!in) throw ParseError(0, "cannot open instance '" + cfg.instance_path + "'");
      return read_record(in);
    }();
    for (auto seed : cfg.seeds) out.push_back({rec.d, rec.s, rec.k, rec.epsilon, seed});
    return out;
  }
  for (Index d : cfg.d) {
    for (Index s : cfg.s) {
      if (s > d) throw ParseError(0, "grid point has s = " + std::to_string(s) + " > d = " + std::to_string(d));
      for (double eps : cfg.epsilon) {
        std::vector<Index> ks = cfg.k;
        if (cfg.k_auto) {
          GridPoint probe{d, s, 1, eps, 0};
          const auto th = k_threshold(hard_spec_for(cfg, probe));
          if (th.saturated) throw GuardError("k_threshold saturates for d = " + std::to_string(d) + ", s = " + std::to_string(s));
          ks = {static_cast<Index>(th.k)};
        }
        for (Index k : ks) {
          for (auto seed : cfg.seeds) out.push_back({d, s, k, eps, seed});
        }
      }
    }
  }
  return out;
}

inline BanditInstance make_instance(const ExperimentConfig& cfg, const GridPoint& p) {
  NoiseModel noise{cfg.noise, cfg.noise_scale, p.seed ^ 0x6E6F697365ULL};
  switch (cfg.source) {
    case Source::kFile: {
      auto rec = [&] {
        std::ifstream in(cfg.instance_path);
        return read_record(in);
      }();
      if (cfg.noise != NoiseModel::Kind::kNone) rec.noise = noise;
      return to_instance(rec);
    }
    case Source::kHard: {
      const auto spec = hard_spec_for(cfg, p);
      const auto gen = generate_hard_matrix(spec, cfg.policy);
      return embed_index_query(gen.matrix, static_cast<Index>(p.seed % p.k), cfg.gap, p.epsilon);
    }
    case Source::kRandom:
      break;
  }
  RandomInstanceSpec spec;
  spec.k = p.k;
  spec.d = p.d;
  spec.s = p.s;
  spec.epsilon = p.epsilon;
  spec.seed = p.seed;
  spec.noise = noise;
  return random_sparse_instance(spec);
}

/// Lower estimate of a maximal eps/2-separated set on S^{s-1}, used to refuse
/// hopeless parameter-elimination runs before building the net.
inline double net_size_floor(Index s, double epsilon) {
  return s == 1 ? 2.0 : std::pow(2.0 / epsilon, static_cast<double>(s - 1));
}

/// Every guard violation across the grid; empty means the run may start.
inline std::vector<std::string> guard_violations(const ExperimentConfig& cfg, const std::vector<GridPoint>& grid) {
  std::vector<std::string> out;
  std::set<std::tuple<Index, Index, double, std::uint64_t>> checked;
  for (const auto& p : grid) {
    const std::string where = "d=" + std::to_string(p.d) + " s=" + std::to_string(p.s) + " epsilon=" + format_real(p.epsilon) +
                              " k=" + std::to_string(p.k) + " seed=" + std::to_string(p.seed) + ": ";
    switch (cfg.algorithm) {
      case Algorithm::kParamElim: {
        if (!checked.insert({p.d, p.s, p.epsilon, p.seed}).second) break;
        const double subsets = static_cast<double>(binomial(p.d, p.s));
        const double floor = net_size_floor(p.s, p.epsilon);
        const double centres_floor = p.s == 1 && cfg.line_centres ? 4.0 / p.epsilon + 1.0 : floor;
        if (floor * centres_floor * subsets > static_cast<double>(kMaxCandidateTriples)) {
          out.push_back(where + "parameter elimination needs more than " + std::to_string(kMaxCandidateTriples) + " triples");
          break;
        }
        const auto net = build_separated_net(p.s, std::min(p.epsilon, 2.0), p.seed);
        const auto centres = group_centres(net, p.epsilon, cfg.line_centres);
        const auto triples = triple_count(p.d, p.s, net.size(), centres.size());
        if (triples > kMaxCandidateTriples) {
          out.push_back(where + std::to_string(triples) + " candidate triples exceed " + std::to_string(kMaxCandidateTriples));
        }
        break;
      }
      case Algorithm::kDesignElim:
      case Algorithm::kGeneralFeatures:
        if (binomial(p.d, p.s) > kMaxDesignSubsets) {
          out.push_back(where + "C(d, s) = " + std::to_string(binomial(p.d, p.s)) + " subsets exceed " +
                        std::to_string(kMaxDesignSubsets));
        }
        break;
      case Algorithm::kBenignElim:
      case Algorithm::kRandomBaseline:
        break;
    }
  }
  return out;
}

inline double param_elim_bound(double eps) { return 4.0 * eps; }
inline double design_elim_bound(double eps, Index s) { return 3.0 * design_certificate(eps, s); }
inline double benign_shape(double k, double eps) { return std::pow(std::log(k), 0.25) * std::sqrt(eps) + eps; }
inline double noisy_benign_shape(double k, double eps, double p, double t, double n) {
  return std::pow(std::log(k), 0.25) * std::sqrt(eps) + std::sqrt(p / t * std::log(k * n));
}
inline double general_shape(Index s, Index d, double eps) {
  return std::pow(static_cast<double>(s) * std::log(static_cast<double>(d)), 0.25) * std::sqrt(static_cast<double>(s) * eps) +
         eps;
}

/// Default benign-elimination budget: the larger of ceil(sqrt(log k) / eps)
/// and four full designs; noisy runs get sixty-four designs' worth.
inline std::size_t default_benign_budget(double k, double eps, Index p, bool noisy) {
  const auto designs = static_cast<std::size_t>(design_support_bound(p));
  if (noisy) return 64 * designs;
  return std::max(static_cast<std::size_t>(std::ceil(std::sqrt(std::log(k)) / eps)), 4 * designs);
}

inline RunRecord run_point(const ExperimentConfig& cfg, const GridPoint& p) {
  const auto t0 = std::chrono::steady_clock::now();
  const BanditInstance inst = make_instance(cfg, p);
  RunRecord rec;
  rec.algorithm = algorithm_name(cfg.algorithm);
  rec.d = inst.d();
  rec.s = inst.s();
  rec.epsilon = inst.epsilon();
  rec.k = inst.k();
  rec.seed = p.seed;
  const double eps = inst.epsilon();
  const double k = static_cast<double>(inst.k());
  const double best = brute_force_best(inst).reward;
  QueryLedger ledger;

  switch (cfg.algorithm) {
    case Algorithm::kParamElim: {
      ParamEliminationOptions opt;
      opt.net_seed = p.seed;
      opt.same_subset_rivals = cfg.same_subset_rivals;
      opt.line_centres_cover_interval = cfg.line_centres;
      CoveringNet net = build_separated_net(inst.s(), std::min(eps, 2.0), p.seed);
      if (cfg.net_truth) {
        const Vector truth = restrict_vector(inst.theta_star().coords(), inst.theta_star().support());
        if (std::abs(truth.norm() - 1.0) <= kNormTolerance) net = include_point(net, truth);
      }
      opt.net = std::move(net);
      const auto r = run_parameter_elimination(inst, ledger, opt);
      rec.uniform_error = uniform_error(inst, r.support, r.theta);
      rec.suboptimality = best - inst.rewards()(static_cast<Eigen::Index>(greedy_action(inst.features().matrix(), r.support, r.theta)));
      rec.shape = rec.bound = param_elim_bound(eps);
      break;
    }
    case Algorithm::kDesignElim: {
      const auto r = run_design_elimination(inst, ledger);
      rec.uniform_error = uniform_error(inst, r.support, r.theta);
      rec.suboptimality = best - inst.rewards()(static_cast<Eigen::Index>(greedy_action(inst.features().matrix(), r.support, r.theta)));
      rec.shape = rec.bound = design_elim_bound(eps, inst.s());
      break;
    }
    case Algorithm::kBenignElim: {
      const bool noisy = inst.noise().kind != NoiseModel::Kind::kNone;
      const double ups = cfg.upsilon.value_or(std::pow(std::log(std::max(k, 2.0)), 0.25) * std::sqrt(eps));
      const Index dim = choose_target_dim(std::max(k, 2.0), ups, inst.d(), cfg.c_jl);
      const auto cm = certified_map(inst.features().matrix(), inst.theta_star().coords(), dim, ups, p.seed);
      const std::size_t budget = cfg.budget.value_or(default_benign_budget(std::max(k, 2.0), eps, dim, noisy));
      BenignOptions opt;
      opt.c_const = cfg.c_const;
      const auto r = run_benign_elimination(inst, cm.map, budget, ledger, opt);
      rec.uniform_error = compressed_uniform_error(inst, cm.map, r.theta);
      const Vector pred = cm.map.apply_rows(inst.features().matrix()) * r.theta;
      Eigen::Index arg = 0;
      pred.maxCoeff(&arg);
      rec.suboptimality = best - inst.rewards()(arg);
      rec.shape = noisy ? noisy_benign_shape(std::max(k, 2.0), eps, static_cast<double>(dim),
                                             static_cast<double>(std::max<std::size_t>(r.queries, 1)), static_cast<double>(budget))
                        : benign_shape(std::max(k, 2.0), eps);
      rec.bound = cfg.kappa.value_or(noisy ? kNoisyBenignKappa : kBenignKappa) * rec.shape;
      break;
    }
    case Algorithm::kGeneralFeatures: {
      GeneralOptions opt;
      opt.c_const = cfg.c_const;
      opt.c_jl = cfg.c_jl;
      opt.budget = cfg.budget;
      opt.map_seed = p.seed;
      const auto r = run_general_features(inst, ledger, opt);
      rec.uniform_error = uniform_error(inst, r.theta);
      IndexSet all(inst.d());
      std::iota(all.begin(), all.end(), Index{0});
      rec.suboptimality = best - inst.rewards()(static_cast<Eigen::Index>(greedy_action(inst.features().matrix(), all, r.theta)));
      rec.shape = general_shape(inst.s(), inst.d(), eps);
      rec.bound = cfg.kappa.value_or(kGeneralKappa) * rec.shape;
      break;
    }
    case Algorithm::kRandomBaseline: {
      // Error column: suboptimality of the action found; bound: Delta.
      const double gap = inst.hard_info() ? inst.hard_info()->gap : cfg.gap;
      const auto r = random_search(inst, best - gap, p.seed, ledger);
      rec.suboptimality = best - inst.rewards()(static_cast<Eigen::Index>(r.found));
      rec.uniform_error = rec.suboptimality;
      rec.shape = rec.bound = gap;
      break;
    }
  }
  rec.queries = ledger.size();
  rec.bound_satisfied = rec.uniform_error <= rec.bound;
  if (cfg.timing) {
    rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  }
  return rec;
}

inline constexpr const char* kCsvHeader =
    "algorithm,d,s,epsilon,k,seed,queries,uniform_error,suboptimality,bound,bound_satisfied,wall_ms";

inline void write_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kCsvHeader << "\n";
  for (const auto& r : records) {
    out << r.algorithm << "," << r.d << "," << r.s << "," << format_real(r.epsilon) << "," << r.k << "," << r.seed << ","
        << r.queries << "," << format_real(r.uniform_error) << "," << format_real(r.suboptimality) << ","
        << format_real(r.bound) << "," << (r.bound_satisfied ? "true" : "false") << "," << r.wall_ms << "\n";
  }
}

/// Guard-checks the whole grid, then runs every point in grid order.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  const auto grid = expand_grid(cfg);
  const auto violations = guard_violations(cfg, grid);
  if (!violations.empty()) {
    std::string msg = std::to_string(violations.size()) + " grid point(s) exceed a desk-scale guard:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw GuardError(msg);
  }
  std::vector<RunRecord> out;
  out.reserve(grid.size());
  for (const auto& p : grid) out.push_back(run_point(cfg, p));
  return out;
}

struct SweepGroup {
  std::string algorithm;
  Index d = 0;
  Index s = 0;
  double epsilon = 0.0;
  Index k = 0;
  std::size_t runs = 0;
  double max_error = 0.0;
  double max_shape_ratio = 0.0;  // max uniform_error / shape
  bool all_satisfied = true;
};

/// Per (algorithm, d, s, epsilon, k) calibration summary, in first-seen order.
inline std::vector<SweepGroup> summarize(const std::vector<RunRecord>& records) {
  std::vector<SweepGroup> groups;
  for (const auto& r : records) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const SweepGroup& g) {
      return g.algorithm == r.algorithm && g.d == r.d && g.s == r.s && g.epsilon == r.epsilon && g.k == r.k;
    });
    if (it == groups.end()) {
      groups.push_back({r.algorithm, r.d, r.s, r.epsilon, r.k});
      it = std::prev(groups.end());
    }
    ++it->runs;
    it->max_error = std::max(it->max_error, r.uniform_error);
    if (r.shape > 0.0) it->max_shape_ratio = std::max(it->max_shape_ratio, r.uniform_error / r.shape);
    it->all_satisfied = it->all_satisfied && r.bound_satisfied;
  }
  return groups;
}

inline void write_summary_csv(std::ostream& out, const std::vector<SweepGroup>& groups) {
  out << "algorithm,d,s,epsilon,k,runs,max_error,max_shape_ratio,all_satisfied\n";
  for (const auto& g : groups) {
    out << g.algorithm << "," << g.d << "," << g.s << "," << format_real(g.epsilon) << "," << g.k << "," << g.runs << ","
        << format_real(g.max_error) << "," << format_real(g.max_shape_ratio) << "," << (g.all_satisfied ? "true" : "false")
        << "\n";
  }
}

struct HardRequest {
  HardMatrixSpec spec;  // spec.epsilon here is the misspecification level
  bool k_auto = false;
  double gap = 0.5;
  Index target = 0;
  GenerationPolicy policy = GenerationPolicy::kResampleRows;
};

/// Same line grammar as the run config. Keys: d, s, k (integer or auto),
/// epsilon, gap, tau, delta, c, seed, target, policy (rows | whole).
inline HardRequest parse_hard_request(std::istream& in) {
  HardRequest req;
  const auto entries = detail::read_entries(in);
  std::set<std::string> seen;
  for (const auto& [line, key, value] : entries) {
    seen.insert(key);
    if (value.empty()) throw ParseError(line, "empty value for '" + key + "'");
    auto positive_index = [&] {
      const auto x = detail::parse_uint(value, line);
      if (x == 0) throw ParseError(line, key + " must be positive");
      return static_cast<Index>(x);
    };
    if (key == "d") {
      req.spec.d = positive_index();
    } else if (key == "s") {
      req.spec.s = positive_index();
    } else if (key == "k") {
      if (value == "auto") {
        req.k_auto = true;
      } else {
        req.spec.k = positive_index();
      }
    } else if (key == "epsilon") {
      req.spec.epsilon = detail::positive_real(value, line, key);
    } else if (key == "gap") {
      req.gap = detail::positive_real(value, line, key);
    } else if (key == "tau") {
      req.spec.tau = detail::parse_real(value, line);
      if (!(req.spec.tau >= 0.0 && req.spec.tau < 1.0)) throw ParseError(line, "tau must lie in [0, 1)");
    } else if (key == "delta") {
      req.spec.delta = detail::parse_real(value, line);
      if (!(req.spec.delta > 0.0 && req.spec.delta <= 1.0)) throw ParseError(line, "delta must lie in (0, 1]");
    } else if (key == "c") {
      req.spec.c = detail::parse_real(value, line);
      if (!(req.spec.c > 1.0)) throw ParseError(line, "c must exceed 1");
    } else if (key == "seed") {
      req.spec.seed = detail::parse_uint(value, line);
    } else if (key == "target") {
      req.target = static_cast<Index>(detail::parse_uint(value, line));
    } else if (key == "policy") {
      if (value == "rows") req.policy = GenerationPolicy::kResampleRows;
      else if (value == "whole") req.policy = GenerationPolicy::kWholeMatrix;
      else throw ParseError(line, "policy must be rows or whole");
    } else {
      throw ParseError(line, "unknown key '" + key + "'");
    }
  }
  const std::size_t last = entries.empty() ? 0 : entries.back().line;
  for (const char* required : {"d", "s", "k", "epsilon"}) {
    if (!seen.count(required)) throw ParseError(last, std::string("missing required key '") + required + "'");
  }
  if (req.spec.s > req.spec.d) throw ParseError(last, "s must not exceed d");
  return req;
}

/// Generates the certified matrix at orthogonality eps / (2 Delta) and plants
/// the target index.
inline BanditInstance generate_hard_instance(const HardRequest& req) {
  HardMatrixSpec spec = req.spec;
  spec.epsilon = req.spec.epsilon / (2.0 * req.gap);
  if (req.k_auto) {
    const auto th = k_threshold(spec);
    if (th.saturated) throw GuardError("k_threshold saturates above " + format_real(kThresholdSaturation));
    spec.k = static_cast<Index>(th.k);
  }
  if (req.target >= spec.k) throw ValidationError("hard target index", "target must be < k");
  const auto gen = generate_hard_matrix(spec, req.policy);
  return embed_index_query(gen.matrix, req.target, req.gap, req.spec.epsilon);
}

}  // namespace sparse_bandit
