/*
 * Copyright 2026 The gmh Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gmh/core.hpp"
#include "gmh/diagnostics.hpp"
#include "gmh/io.hpp"
#include "gmh/pseudo_marginal/kernels.hpp"
#include "gmh/samplers/elliptical.hpp"
#include "gmh/samplers/gibbs.hpp"
#include "gmh/samplers/hamiltonian.hpp"
#include "gmh/samplers/metropolis.hpp"
#include "gmh/samplers/slice.hpp"
#include "gmh/targets.hpp"
#include "gmh/toy_models.hpp"

// Declarative experiments: an INI file with [experiment], [target] and
// [sampler] sections. Every key is checked; unknown keys are errors.
namespace gmh::experiment {

namespace fs = std::filesystem;

/// One INI section with tracking of the keys that were read.
class Section {
 public:
  Section() = default;
  Section(std::string name, std::map<std::string, std::string> values)
      : name_(std::move(name)), values_(std::move(values)) {}

  const std::string& name() const { return name_; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("[" + name_ + "] missing required key '" + key + "'");
    used_.insert(key);
    return it->second;
  }
  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

  double real(const std::string& key) const { return parse_real(key, text(key)); }
  double real(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }

  std::int64_t integer(const std::string& key) const {
    const std::string s = text(key);
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ConfigError("[" + name_ + "] " + key + ": expected an integer, got '" + s + "'");
    return v;
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  std::uint64_t unsigned_integer(const std::string& key) const {
    const std::string s = text(key);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ConfigError("[" + name_ + "] " + key + ": expected a non-negative integer, got '" + s + "'");
    return v;
  }

  std::uint64_t unsigned_integer_or(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? unsigned_integer(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string s = text(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("[" + name_ + "] " + key + ": expected true or false");
  }

  /// Comma-separated reals.
  Vector vector(const std::string& key) const {
    std::vector<double> out;
    for (auto part : io::split(text(key))) out.push_back(parse_real(key, std::string(part)));
    return Eigen::Map<Vector>(out.data(), static_cast<Index>(out.size()));
  }

  /// Rows separated by ';', entries by ','.
  Matrix matrix(const std::string& key) const {
    const std::string s = text(key);
    std::vector<std::vector<double>> rows;
    for (auto row : io::split(s, ';')) {
      rows.emplace_back();
      for (auto part : io::split(row)) rows.back().push_back(parse_real(key, std::string(part)));
    }
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.front().size())
        throw ConfigError("[" + name_ + "] " + key + ": rows have different lengths");
      for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    return m;
  }

  /// Throws on any key that no reader consumed.
  void check_all_used() const {
    for (const auto& [k, v] : values_)
      if (used_.count(k) == 0) throw ConfigError("[" + name_ + "] unknown key '" + k + "'");
  }

 private:
  double parse_real(const std::string& key, const std::string& s) const {
    try {
      const double v = io::parse_double(s);
      if (!std::isfinite(v)) throw ConfigError("not finite");
      return v;
    } catch (const ConfigError&) {
      throw ConfigError("[" + name_ + "] " + key + ": expected a number, got '" + s + "'");
    }
  }

  std::string name_;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

struct Config {
  Section experiment;
  Section target;
  Section sampler;
  fs::path base_dir;  // relative dataset paths resolve against the config's directory

  static Config parse(std::istream& in, fs::path base_dir = {}) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
      pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError(std::string("config syntax: ") + e.what());
    }
    Config c;
    c.base_dir = std::move(base_dir);
    std::set<std::string> seen;
    for (const auto& [name, node] : tree) {
      if (node.empty() && !node.data().empty()) throw ConfigError("config: key '" + name + "' outside any section");
      std::map<std::string, std::string> values;
      for (const auto& [key, leaf] : node) {
        if (!leaf.empty()) throw ConfigError("config: nested key in [" + name + "]");
        values[key] = leaf.data();
      }
      Section s(name, std::move(values));
      if (name == "experiment") c.experiment = std::move(s);
      else if (name == "target") c.target = std::move(s);
      else if (name == "sampler") c.sampler = std::move(s);
      else throw ConfigError("config: unknown section [" + name + "]");
      seen.insert(name);
    }
    for (const char* required : {"experiment", "target", "sampler"})
      if (seen.count(required) == 0) throw ConfigError(std::string("config: missing section [") + required + "]");
    return c;
  }

  static Config parse_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    return parse(in, path.parent_path());
  }
};

/// Pseudo-marginal side of a target: prior, estimator and exact likelihood.
struct PseudoMarginalSetup {
  PseudoMarginalTarget target;
  LogDensityFn exact_log_likelihood;
  std::size_t particles = 0;
};

/// A validated, ready-to-run experiment.
struct Experiment {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  Index iterations = 0;
  std::size_t chains = 1;
  Index burn_in = 0;
  fs::path output_dir = ".";
  std::string sampler_kind;
  std::string target_kind;
  Index dimension = 0;
  std::function<std::vector<ChainTrace>(unsigned threads)> run;
};

struct SamplerInfo {
  const char* name;
  const char* description;
};

inline const std::vector<SamplerInfo>& sampler_catalog() {
  static const std::vector<SamplerInfo> catalog = {
      {"metropolis", "random-walk Metropolis with Gaussian increments (covariance | scale)"},
      {"nonrecursive_slice", "Metropolis written as a slice move with h = u pi(theta) (covariance | scale)"},
      {"refresh_metropolis", "Metropolis with the increment carried between iterations (covariance | scale)"},
      {"adaptive_metropolis", "adaptive Metropolis with Robbins-Monro scale control (target_rate, initial_scale, "
                              "covariance_warmup, freeze_after)"},
      {"univariate_slice", "coordinate-wise stepping-out slice sampler (width, shared_height)"},
      {"recursive_gaussian_slice", "slice sampler with recursive Gaussian proposals (covariance | scale)"},
      {"directional_slice", "slice sampling along chain differences; needs >= 3 chains (width, scale)"},
      {"elliptical_slice", "elliptical slice sampler for a Gaussian prior (mean, covariance)"},
      {"hamiltonian_slice", "slice sampling on elliptical trajectories (mean, covariance)"},
      {"hmc", "leapfrog Hamiltonian Monte Carlo (step_size, steps, step_jitter, tune_iterations)"},
      {"mala", "Metropolis-adjusted Langevin (step_size, step_jitter, tune_iterations)"},
      {"gibbs", "toy_joint only: slice on u, exact draws of x"},
      {"auxiliary_gibbs", "toy_joint only: one slice height per factor (width)"},
      {"pmmh", "linear_gaussian_ssm only: pseudo-marginal Metropolis-Hastings (covariance | scale)"},
      {"pm_hamiltonian_slice", "linear_gaussian_ssm only: pseudo-marginal Hamiltonian slice (mean, covariance, "
                               "r_proposal, r_sigma, r_zeta)"},
  };
  return catalog;
}

namespace detail {

struct BuiltTarget {
  TargetDensity density;
  std::function<Vector(RngStream&)> initial_draw;
  std::optional<GaussianTarget> gaussian;
  std::optional<ToyJointTarget> toy_joint;
  std::optional<PseudoMarginalSetup> pseudo_marginal;
};

inline std::vector<double> load_dataset(const Section& s, const fs::path& base) {
  if (!s.has("dataset")) return reference_toy_dataset();
  fs::path p = s.text("dataset");
  if (p.is_relative() && !base.empty()) p = base / p;
  return io::read_dataset_csv(p);
}

inline Matrix proposal_covariance(const Section& s, Index n) {
  if (s.has("covariance") && s.has("scale")) throw ConfigError("[sampler] give covariance or scale, not both");
  if (s.has("covariance")) {
    Matrix c = s.matrix("covariance");
    if (c.rows() != n || c.cols() != n) throw ConfigError("[sampler] covariance has the wrong shape");
    return c;
  }
  const double scale = s.real("scale", 1.0);
  if (!(scale > 0.0)) throw ConfigError("[sampler] scale must be positive");
  return scale * scale * Matrix::Identity(n, n);
}

inline BuiltTarget build_target(const Section& s, const fs::path& base, RngStream setup_rng) {
  const std::string kind = s.text("kind");
  BuiltTarget b;
  if (kind == "gaussian") {
    const Vector mean = s.vector("mean");
    const Index n = mean.size();
    const Matrix cov = s.has("covariance") ? s.matrix("covariance") : Matrix(Matrix::Identity(n, n));
    if (cov.rows() != n || cov.cols() != n) throw ConfigError("[target] covariance does not match mean");
    GaussianTarget g(mean, cov);
    b.density = g.target();
    b.initial_draw = [g](RngStream& rng) { return g.sample(rng); };
    b.gaussian = g;
  } else if (kind == "student_t") {
    const double nu = s.real("nu", 5.0), loc = s.real("location", 0.0), scale = s.real("scale", 1.0);
    b.density = student_t_target(nu, loc, scale);
    b.initial_draw = [loc, scale](RngStream& rng) { return Vector::Constant(1, loc + 0.1 * scale * rng.normal()); };
  } else if (kind == "toy_scalar") {
    const ToyScalarTarget t(load_dataset(s, base));
    b.density = t.target();
    b.initial_draw = [](RngStream& rng) { return Vector::Constant(1, 0.1 * rng.normal()); };
  } else if (kind == "toy_joint") {
    const ToyJointTarget t(load_dataset(s, base));
    b.density = t.target();
    b.initial_draw = [t](RngStream& rng) {
      const double u = 0.1 * rng.normal();
      return toy_joint_initial(t, u, rng);
    };
    b.toy_joint = t;
  } else if (kind == "linear_gaussian_ssm") {
    LinearGaussianFamily family{s.real("a", 0.0), s.real("q", 1.0), s.real("p1", 1.0)};
    if (!(family.q > 0.0) || !(family.p1 > 0.0)) throw ConfigError("[target] q and p1 must be positive");
    std::vector<double> y;
    if (s.has("dataset")) {
      y = load_dataset(s, base);
    } else {
      const auto horizon = s.integer("horizon", 50);
      if (horizon < 1) throw ConfigError("[target] horizon must be positive");
      RngStream data_rng(s.unsigned_integer_or("data_seed", 1), 0);
      y = simulate_ssm(family.model(Vector::Constant(1, s.real("true_log_r", 0.0))),
                       static_cast<std::size_t>(horizon), data_rng);
    }
    const double prior_mean = s.real("prior_mean", 0.0), prior_sd = s.real("prior_sd", 1.0);
    if (!(prior_sd > 0.0)) throw ConfigError("[target] prior_sd must be positive");
    LogDensityFn log_prior = [prior_mean, prior_sd](const Vector& th) {
      const double z = (th[0] - prior_mean) / prior_sd;
      return -0.5 * z * z - 0.5 * kLog2Pi - std::log(prior_sd);
    };
    LogDensityFn exact = [family, y](const Vector& th) { return family.log_likelihood(th, y); };
    const std::string estimator = s.text("estimator", "particle_filter");
    PseudoMarginalSetup pm;
    if (estimator == "kalman") {
      pm.target = {1, log_prior, exact_estimator(exact)};
    } else if (estimator == "particle_filter") {
      const std::string particles = s.text("particles", "auto");
      if (particles == "auto") {
        const Vector ref = Vector::Constant(1, s.real("tune_at", prior_mean));
        const auto replicates = s.integer("tune_replicates", 100);
        if (replicates < 20) throw ConfigError("[target] tune_replicates must be >= 20");
        auto factory = [family, y](std::size_t n) { return make_particle_filter_estimator(family, y, n); };
        pm.particles = tune_particle_count(factory, ref, static_cast<std::size_t>(replicates), setup_rng).n_particles;
      } else {
        const auto n = s.integer("particles");
        if (n < 2) throw ConfigError("[target] particles must be >= 2");
        pm.particles = static_cast<std::size_t>(n);
      }
      pm.target = {1, log_prior, make_particle_filter_estimator(family, y, pm.particles)};
    } else {
      throw ConfigError("[target] unknown estimator '" + estimator + "'");
    }
    pm.exact_log_likelihood = exact;
    b.density = {1, [log_prior, exact](const Vector& th) { return log_prior(th) + exact(th); }};
    b.initial_draw = [prior_mean](RngStream& rng) { return Vector::Constant(1, prior_mean + 0.1 * rng.normal()); };
    b.pseudo_marginal = std::move(pm);
  } else {
    throw ConfigError("[target] unknown kind '" + kind + "'");
  }
  return b;
}

inline EllipseParams ellipse_params(const Section& s, const BuiltTarget& t, Index n) {
  Vector mean = s.has("mean") ? s.vector("mean") : (t.gaussian ? t.gaussian->mean() : Vector(Vector::Zero(n)));
  Matrix cov = s.has("covariance") ? s.matrix("covariance")
                                   : (t.gaussian ? t.gaussian->covariance() : Matrix(Matrix::Identity(n, n)));
  if (mean.size() != n || cov.rows() != n || cov.cols() != n)
    throw ConfigError("[sampler] mean/covariance do not match the target dimension");
  return {std::move(mean), std::move(cov)};
}

inline AnyKernel build_kernel(const Section& s, const BuiltTarget& t, const std::string& kind, std::size_t chains,
                              ChainState& tuning_state, RngStream& tuning_rng) {
  const Index n = t.density.dimension();
  if (kind == "metropolis") return RandomWalkMetropolis(proposal_covariance(s, n));
  if (kind == "nonrecursive_slice") return NonRecursiveSlice(proposal_covariance(s, n));
  if (kind == "refresh_metropolis") return RefreshAuxiliaryMetropolis(proposal_covariance(s, n));
  if (kind == "adaptive_metropolis") {
    AdaptiveMetropolisConfig c;
    c.target_rate = s.real("target_rate", 0.0);
    c.initial_scale = s.real("initial_scale", 0.0);
    c.covariance_warmup = static_cast<std::uint64_t>(s.integer("covariance_warmup", 100));
    c.freeze_after = static_cast<std::uint64_t>(s.integer("freeze_after", 0));
    return AdaptiveMetropolis(n, c);
  }
  if (kind == "univariate_slice") return UnivariateSlice::sweep(s.real("width", 1.0), s.boolean("shared_height", false));
  if (kind == "recursive_gaussian_slice") return RecursiveGaussianSlice(proposal_covariance(s, n));
  if (kind == "directional_slice") {
    if (chains < 3) throw ConfigError("directional_slice needs at least 3 chains");
    return DirectionalSlice(s.real("width", 1.0), s.real("scale", 1.0));
  }
  if (kind == "elliptical_slice") return EllipticalSlice(ellipse_params(s, t, n));
  if (kind == "hamiltonian_slice") return HamiltonianSlice(ellipse_params(s, t, n));
  if (kind == "hmc" || kind == "mala") {
    if (!t.density.has_gradient()) throw ConfigError("target has no gradient");
    const int steps = kind == "mala" ? 1 : static_cast<int>(s.integer("steps", 10));
    Hmc h(s.real("step_size", 0.1), steps, MassMatrix(n), s.real("step_jitter", 0.0));
    const auto tune = s.integer("tune_iterations", 0);
    if (tune < 0) throw ConfigError("[sampler] tune_iterations must be >= 0");
    if (tune > 1) h = h.with_step_size(tune_hmc_step_size(h, t.density, tuning_state, static_cast<int>(tune), tuning_rng).step_size);
    return h;
  }
  if (kind == "gibbs") {
    if (!t.toy_joint) throw ConfigError("gibbs requires target kind toy_joint");
    return toy_gibbs_sweep(*t.toy_joint, s.real("width", 1.0));
  }
  if (kind == "auxiliary_gibbs") {
    if (!t.toy_joint) throw ConfigError("auxiliary_gibbs requires target kind toy_joint");
    return toy_auxiliary_gibbs(*t.toy_joint, s.real("width", 1.0));
  }
  throw ConfigError("[sampler] unknown kind '" + kind + "'");
}

template <PseudoMarginalKernel K>
std::vector<ChainTrace> run_pm_chains(const K& kernel, const PseudoMarginalTarget& target,
                                      const std::vector<Vector>& initials, Index iterations, const RngStream& rng,
                                      unsigned threads) {
  std::vector<ChainTrace> traces(initials.size());
  auto one = [&](std::size_t i) {
    RngStream r = rng.substream(i);
    traces[i] = run_pm_chain(kernel, target, initials[i], iterations, r);
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, initials.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < initials.size(); ++i) one(i);
    return traces;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < initials.size(); i += workers) one(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return traces;
}

}  // namespace detail

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> output_dir;
};

/// Parses and validates everything; no files are written.
inline Experiment build(const Config& config, const Overrides& overrides = {}) {
  const Section& e = config.experiment;
  Experiment x;
  x.name = e.text("name", "experiment");
  if (x.name.empty() || x.name.find_first_of("/\\") != std::string::npos)
    throw ConfigError("[experiment] name must be a plain file stem");
  x.seed = e.has("seed") ? e.unsigned_integer("seed") : 1;
  if (overrides.seed) x.seed = *overrides.seed;
  x.iterations = static_cast<Index>(e.integer("iterations"));
  if (x.iterations < 100) throw ConfigError("[experiment] iterations must be >= 100");
  const auto chains = e.integer("chains", 1);
  if (chains < 1) throw ConfigError("[experiment] chains must be >= 1");
  x.chains = static_cast<std::size_t>(chains);
  x.burn_in = static_cast<Index>(e.integer("burn_in", 0));
  if (x.burn_in < 0 || x.iterations - x.burn_in < kMinIactLength)
    throw ConfigError("[experiment] burn_in must leave at least 100 iterations");
  x.output_dir = e.text("output_dir", ".");
  if (overrides.output_dir) x.output_dir = *overrides.output_dir;
  std::optional<Vector> initial;
  if (e.has("initial")) initial = e.vector("initial");

  // stream 0 drives the chains, 1 the initial states, 2 any setup-time tuning
  RngStream setup_rng(x.seed, 2);
  auto target = std::make_shared<detail::BuiltTarget>(detail::build_target(config.target, config.base_dir, setup_rng));
  x.target_kind = config.target.text("kind");
  x.dimension = target->density.dimension();
  if (initial && initial->size() != x.dimension) throw ConfigError("[experiment] initial has the wrong dimension");

  RngStream init_rng(x.seed, 1);
  std::vector<Vector> initials;
  for (std::size_t i = 0; i < x.chains; ++i) {
    RngStream r = init_rng.substream(i);
    initials.push_back(initial ? *initial : target->initial_draw(r));
  }

  const Section& s = config.sampler;
  x.sampler_kind = s.text("kind");
  const RngStream chain_rng(x.seed, 0);
  const Index iterations = x.iterations;

  if (x.sampler_kind == "pmmh" || x.sampler_kind == "pm_hamiltonian_slice") {
    if (!target->pseudo_marginal) throw ConfigError(x.sampler_kind + " requires target kind linear_gaussian_ssm");
    if (x.sampler_kind == "pmmh") {
      const Pmmh kernel(detail::proposal_covariance(s, x.dimension));
      x.run = [kernel, target, initials, iterations, chain_rng](unsigned threads) {
        return detail::run_pm_chains(kernel, target->pseudo_marginal->target, initials, iterations, chain_rng, threads);
      };
    } else {
      IntegrationTimeProposal r;
      const std::string rk = s.text("r_proposal", "gaussian");
      if (rk == "gaussian") r.kind = IntegrationTimeProposal::Kind::gaussian;
      else if (rk == "truncated") r.kind = IntegrationTimeProposal::Kind::truncated_gaussian;
      else throw ConfigError("[sampler] r_proposal must be gaussian or truncated");
      r.sigma = s.real("r_sigma", 1.0);
      r.zeta = s.real("r_zeta", 1.0);
      const PmHamiltonianSlice kernel(detail::ellipse_params(s, *target, x.dimension), r);
      x.run = [kernel, target, initials, iterations, chain_rng](unsigned threads) {
        return detail::run_pm_chains(kernel, target->pseudo_marginal->target, initials, iterations, chain_rng, threads);
      };
    }
  } else {
    ChainState tuning_state = gmh::detail::initial_state(target->density, initials.front());
    RngStream tuning_rng(x.seed, 3);
    const AnyKernel kernel = detail::build_kernel(s, *target, x.sampler_kind, x.chains, tuning_state, tuning_rng);
    x.run = [kernel, target, initials, iterations, chain_rng](unsigned threads) {
      return run_ensemble(kernel, target->density, initials, iterations, chain_rng, threads);
    };
  }

  e.check_all_used();
  config.target.check_all_used();
  s.check_all_used();
  return x;
}

inline std::string chain_file_name(const Experiment& x, std::size_t chain) {
  return x.name + "_chain" + std::to_string(chain) + ".csv";
}

/// Runs a built experiment and writes traces plus a summary (CSV and JSON
/// lines). Files appear only after every chain finished.
inline std::vector<fs::path> execute(const Experiment& x, unsigned threads) {
  const std::vector<ChainTrace> traces = x.run(threads);
  std::vector<io::SummaryRow> summary;
  std::vector<std::string> contents;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    traces[i].validate();
    std::ostringstream out;
    io::write_trace_csv(out, traces[i]);
    contents.push_back(out.str());
    const auto rows = io::summarize_trace(traces[i].tail(x.burn_in), x.name + "_chain" + std::to_string(i));
    summary.insert(summary.end(), rows.begin(), rows.end());
  }
  fs::create_directories(x.output_dir);
  std::vector<fs::path> written;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const fs::path p = x.output_dir / chain_file_name(x, i);
    io::write_file_atomic(p, contents[i]);
    written.push_back(p);
  }
  const fs::path csv = x.output_dir / (x.name + "_summary.csv");
  const fs::path json = x.output_dir / (x.name + "_summary.jsonl");
  io::write_file_atomic(csv, io::summary_csv(summary));
  io::write_file_atomic(json, io::summary_json(summary));
  written.push_back(csv);
  written.push_back(json);
  return written;
}

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Maps library exceptions onto exit codes: configuration problems give 2,
/// contract violations and numerical failures give 3.
inline int guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ContractViolation& e) {
    err << "contract violation: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

inline int run_experiment(const fs::path& config_path, const Overrides& overrides, unsigned threads,
                          std::ostream& out, std::ostream& err) {
  std::optional<Experiment> x;
  const int code = guarded([&] { x = build(Config::parse_file(config_path), overrides); }, err);
  if (code != kExitOk) return code;
  return guarded(
      [&] {
        for (const auto& p : execute(*x, threads)) out << p.string() << '\n';
      },
      err);
}

/// Reads traces and writes one summary row-group per trace.
inline int summarize(const std::vector<fs::path>& traces, const fs::path& output_stem, Index burn_in,
                     std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        if (traces.empty()) throw ConfigError("summarize: no trace files given");
        std::vector<io::SummaryRow> rows;
        for (const auto& p : traces) {
          const ChainTrace t = io::read_trace_csv(p);
          if (burn_in < 0 || t.size() - burn_in < kMinIactLength)
            throw ContractViolation(p.string() + ": fewer than 100 rows after burn-in");
          const auto r = io::summarize_trace(t.tail(burn_in), p.stem().string());
          rows.insert(rows.end(), r.begin(), r.end());
        }
        if (output_stem.empty()) {
          out << io::summary_csv(rows);
          return;
        }
        if (output_stem.has_parent_path()) fs::create_directories(output_stem.parent_path());
        fs::path csv = output_stem, json = output_stem;
        csv += ".csv";
        json += ".jsonl";
        io::write_file_atomic(csv, io::summary_csv(rows));
        io::write_file_atomic(json, io::summary_json(rows));
        out << csv.string() << '\n' << json.string() << '\n';
      },
      err);
}

/// Particle-count tuning for a linear_gaussian_ssm target config.
inline int tune_particles(const fs::path& config_path, const Overrides& overrides, std::size_t replicates,
                          std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        const Config c = Config::parse_file(config_path);
        const Section& t = c.target;
        if (t.text("kind") != "linear_gaussian_ssm") throw ConfigError("tune-particles needs a linear_gaussian_ssm target");
        const std::uint64_t seed = overrides.seed ? *overrides.seed
                                                  : (c.experiment.has("seed") ? c.experiment.unsigned_integer("seed") : 1);
        LinearGaussianFamily family{t.real("a", 0.0), t.real("q", 1.0), t.real("p1", 1.0)};
        std::vector<double> y;
        if (t.has("dataset")) {
          y = detail::load_dataset(t, c.base_dir);
        } else {
          RngStream data_rng(t.unsigned_integer_or("data_seed", 1), 0);
          y = simulate_ssm(family.model(Vector::Constant(1, t.real("true_log_r", 0.0))),
                           static_cast<std::size_t>(t.integer("horizon", 50)), data_rng);
        }
        const Vector ref = Vector::Constant(1, t.real("tune_at", t.real("prior_mean", 0.0)));
        RngStream rng(seed, 2);
        auto factory = [family, y](std::size_t n) { return make_particle_filter_estimator(family, y, n); };
        const auto result = tune_particle_count(factory, ref, replicates, rng);
        out << "N,log_estimate_variance\n";
        for (const auto& [n, v] : result.history) out << n << ',' << io::format_double(v) << '\n';
        out << "selected " << result.n_particles << '\n';
      },
      err);
}

}  // namespace gmh::experiment
