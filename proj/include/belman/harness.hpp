#pragma once

// Experiment orchestration: JSON configs, named presets, seeded replication
// over a worker pool, mean / 75th-percentile aggregation and CSV output.
//
// Seeds. With mix(a, b, c) from rng.hpp and r the 0-based run id:
//   algorithm stream   mix(base_seed, algorithm_id(name), r)
//   reward streams     mix(base_seed, kEnvironmentStream, r), shared by all algorithms
//   queue arrivals     mix(base_seed, kArrivalStream, r)
//   queue service      mix(base_seed, kServiceStream, r)

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <atomic>
#include <mutex>
#include <exception>
#include <vector>

#include <json.hpp>

#include "belman/bandit_env.hpp"
#include "belman/baselines.hpp"
#include "belman/belman.hpp"
#include "belman/errors.hpp"
#include "belman/expfam.hpp"
#include "belman/manifold.hpp"
#include "belman/policy.hpp"
#include "belman/queueing.hpp"
#include "belman/rng.hpp"

namespace belman {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::uint64_t kEnvironmentStream = 0;
inline constexpr std::uint64_t kArrivalStream = 100;
inline constexpr std::uint64_t kServiceStream = 101;

enum class Mode { Explore, Exploit, TwoPhase, Queueing };

inline std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::Explore: return "explore";
    case Mode::Exploit: return "exploit";
    case Mode::TwoPhase: return "two_phase";
    case Mode::Queueing: return "queueing";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
  for (auto m : {Mode::Explore, Mode::Exploit, Mode::TwoPhase, Mode::Queueing}) {
    if (mode_name(m) == s) return m;
  }
  return std::nullopt;
}

inline std::string_view bounding_name(Bounding b) {
  switch (b) {
    case Bounding::None: return "none";
    case Bounding::Resample: return "resample";
    case Bounding::Truncate: return "truncate";
  }
  return "?";
}

inline std::optional<Bounding> parse_bounding(std::string_view s) {
  for (auto b : {Bounding::None, Bounding::Resample, Bounding::Truncate}) {
    if (bounding_name(b) == s) return b;
  }
  return std::nullopt;
}

// Stable algorithm ids; they enter the seed of every run, so never renumber.
inline const std::map<std::string, std::uint64_t, std::less<>>& bandit_algorithm_ids() {
  static const std::map<std::string, std::uint64_t, std::less<>> ids{
      {"belman", 1},        {"belman-explore", 2}, {"belman-exploit", 3}, {"belman-two-phase", 4},
      {"ucb", 5},           {"ucb-tuned", 6},      {"kl-ucb", 7},         {"kl-ucb-exp", 8},
      {"thompson", 9},      {"bayes-ucb", 10},     {"random", 11},
  };
  return ids;
}

inline std::uint64_t scheduler_id(SchedulerKind k) {
  return 31 + static_cast<std::uint64_t>(k);
}

struct ExperimentConfig {
  std::string name = "experiment";
  Mode mode = Mode::Exploit;
  // Bandit modes.
  RewardFamily family = RewardFamily::bernoulli();
  std::vector<double> theta;
  Bounding bounding = Bounding::None;
  // Queueing mode.
  double lambda = 0.35;
  std::vector<double> mu;
  double qths_explore_scale = 3.0;

  std::vector<std::string> algorithms;
  std::uint64_t horizon = 1000;
  std::uint64_t n_runs = 25;
  std::uint64_t base_seed = 1;
  double exposure_c = 15.0;
  std::uint64_t t_exp = 0;
  double klucb_c = 3.0;
  std::uint64_t ri_every = 1;
  std::uint64_t workers = 0;  // 0: hardware concurrency
  std::string output = "out";

  bool queueing() const noexcept { return mode == Mode::Queueing; }

  BanditInstance instance() const { return BanditInstance{family, theta, horizon, bounding}; }
  QueueConfig queue_config() const { return QueueConfig{lambda, mu, horizon, n_runs}; }

  // Schedule of "belman" in this mode.
  ExposureSchedule schedule() const {
    switch (mode) {
      case Mode::Explore: return ExposureSchedule::infinite();
      case Mode::TwoPhase: return ExposureSchedule::two_phase(t_exp, exposure_c);
      default: return ExposureSchedule::log_schedule(exposure_c);
    }
  }

  // Throws ValidationError listing every violated invariant.
  void validate() const {
    std::vector<std::string> errors;
    if (horizon < 1) errors.push_back("horizon must be >= 1");
    if (n_runs < 1) errors.push_back("n_runs must be >= 1");
    if (algorithms.empty()) errors.push_back("algorithms must be non-empty");
    if (!(exposure_c > 0.0)) errors.push_back("exposure.C must be > 0");
    if (!(klucb_c >= 0.0)) errors.push_back("klucb_c must be >= 0");
    if (ri_every < 1) errors.push_back("ri_every must be >= 1");
    if (mode == Mode::TwoPhase && t_exp < 1) errors.push_back("two_phase mode needs exposure.T_exp >= 1");
    std::set<std::string, std::less<>> seen;
    for (const auto& a : algorithms) {
      if (!seen.insert(a).second) errors.push_back("algorithm listed twice: " + a);
      const bool known = queueing() ? parse_scheduler(a).has_value() : bandit_algorithm_ids().contains(a);
      if (!known) {
        errors.push_back("unknown algorithm for mode " + std::string(mode_name(mode)) + ": " + a);
      }
      if (!queueing() && a == "kl-ucb-exp" && family.kind != FamilyKind::Exponential) {
        errors.push_back("kl-ucb-exp needs exponential rewards");
      }
    }
    if (queueing()) {
      if (!theta.empty()) errors.push_back("queueing mode takes queue.mu, not instance.theta");
      try {
        queue_config().validate();
      } catch (const ValidationError& e) {
        errors.insert(errors.end(), e.violations().begin(), e.violations().end());
      }
      if (!(qths_explore_scale >= 0.0)) errors.push_back("queue.qths_explore_scale must be >= 0");
    } else {
      if (!mu.empty()) errors.push_back("bandit modes take instance.theta, not queue.mu");
      try {
        instance().validate();
      } catch (const ValidationError& e) {
        errors.insert(errors.end(), e.violations().begin(), e.violations().end());
      }
    }
    if (!errors.empty()) throw ValidationError(std::move(errors));
  }
};

// ---- JSON ----------------------------------------------------------------

namespace detail {

using nlohmann::json;

class ConfigReader {
 public:
  std::vector<std::string> errors;

  template <class T>
  void read(const json& obj, std::string_view key, std::string_view path, T& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    const std::string where = std::string(path) + std::string(key);
    try {
      if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!it->is_number_unsigned()) {
          errors.push_back(where + ": expected a non-negative integer");
          return;
        }
      } else if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) {
          errors.push_back(where + ": expected a number");
          return;
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) {
          errors.push_back(where + ": expected a string");
          return;
        }
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (!it->is_array() || !std::all_of(it->begin(), it->end(), [](const json& v) { return v.is_number(); })) {
          errors.push_back(where + ": expected an array of numbers");
          return;
        }
      } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
        if (!it->is_array() || !std::all_of(it->begin(), it->end(), [](const json& v) { return v.is_string(); })) {
          errors.push_back(where + ": expected an array of strings");
          return;
        }
      }
      out = it->get<T>();
    } catch (const json::exception& e) {
      errors.push_back(where + ": " + e.what());
    }
  }

  void unknown_keys(const json& obj, std::string_view path, std::initializer_list<std::string_view> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
        errors.push_back("unknown key " + std::string(path) + it.key());
      }
    }
  }

  const json* object(const json& obj, std::string_view key) {
    const auto it = obj.find(key);
    if (it == obj.end()) return nullptr;
    if (!it->is_object()) {
      errors.push_back(std::string(key) + ": expected an object");
      return nullptr;
    }
    return &*it;
  }
};

}  // namespace detail

// Parses and validates; all problems are reported together.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  detail::ConfigReader r;
  ExperimentConfig c;
  if (!j.is_object()) throw ValidationError({"config must be a JSON object"});
  r.unknown_keys(j, "", {"schema_version", "name", "mode", "instance", "queue", "algorithms", "horizon",
                         "n_runs", "base_seed", "exposure", "klucb_c", "ri_every", "workers", "output"});
  std::uint64_t version = 0;
  if (!j.contains("schema_version")) {
    r.errors.push_back("schema_version is required");
  } else {
    r.read(j, "schema_version", "", version);
    if (version != static_cast<std::uint64_t>(kSchemaVersion)) {
      r.errors.push_back("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
    }
  }
  r.read(j, "name", "", c.name);
  std::string mode = "exploit";
  r.read(j, "mode", "", mode);
  if (auto m = parse_mode(mode)) {
    c.mode = *m;
  } else {
    r.errors.push_back("mode: unknown value '" + mode + "'");
  }
  if (const auto* inst = r.object(j, "instance")) {
    r.unknown_keys(*inst, "instance.", {"family", "theta", "bounding"});
    std::string fam = "bernoulli", bound = "none";
    r.read(*inst, "family", "instance.", fam);
    if (fam == "bernoulli") {
      c.family = RewardFamily::bernoulli();
    } else if (fam == "exponential") {
      c.family = RewardFamily::exponential();
    } else {
      r.errors.push_back("instance.family: unknown value '" + fam + "'");
    }
    r.read(*inst, "theta", "instance.", c.theta);
    r.read(*inst, "bounding", "instance.", bound);
    if (auto b = parse_bounding(bound)) {
      c.bounding = *b;
    } else {
      r.errors.push_back("instance.bounding: unknown value '" + bound + "'");
    }
  }
  if (const auto* q = r.object(j, "queue")) {
    r.unknown_keys(*q, "queue.", {"lambda", "mu", "qths_explore_scale"});
    r.read(*q, "lambda", "queue.", c.lambda);
    r.read(*q, "mu", "queue.", c.mu);
    r.read(*q, "qths_explore_scale", "queue.", c.qths_explore_scale);
  }
  if (const auto* e = r.object(j, "exposure")) {
    r.unknown_keys(*e, "exposure.", {"C", "T_exp"});
    r.read(*e, "C", "exposure.", c.exposure_c);
    r.read(*e, "T_exp", "exposure.", c.t_exp);
  }
  r.read(j, "algorithms", "", c.algorithms);
  r.read(j, "horizon", "", c.horizon);
  r.read(j, "n_runs", "", c.n_runs);
  r.read(j, "base_seed", "", c.base_seed);
  r.read(j, "klucb_c", "", c.klucb_c);
  r.read(j, "ri_every", "", c.ri_every);
  r.read(j, "workers", "", c.workers);
  r.read(j, "output", "", c.output);
  try {
    c.validate();
  } catch (const ValidationError& e) {
    r.errors.insert(r.errors.end(), e.violations().begin(), e.violations().end());
  }
  if (!r.errors.empty()) throw ValidationError(std::move(r.errors));
  return c;
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = c.name;
  j["mode"] = mode_name(c.mode);
  if (c.queueing()) {
    j["queue"] = {{"lambda", c.lambda}, {"mu", c.mu}, {"qths_explore_scale", c.qths_explore_scale}};
  } else {
    j["instance"] = {{"family", c.family.name()}, {"theta", c.theta}, {"bounding", bounding_name(c.bounding)}};
  }
  j["algorithms"] = c.algorithms;
  j["horizon"] = c.horizon;
  j["n_runs"] = c.n_runs;
  j["base_seed"] = c.base_seed;
  j["exposure"] = {{"C", c.exposure_c}, {"T_exp", c.t_exp}};
  j["klucb_c"] = c.klucb_c;
  j["ri_every"] = c.ri_every;
  j["workers"] = c.workers;
  j["output"] = c.output;
  return j;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"cannot open config file " + path.string()});
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError({"config is not valid JSON: " + std::string(e.what())});
  }
  return config_from_json(j);
}

// ---- presets -------------------------------------------------------------

inline const std::vector<double>& twenty_arm_means() {
  static const std::vector<double> m{0.25, 0.22, 0.2,  0.17, 0.17, 0.2,  0.13, 0.13, 0.1,  0.07,
                                     0.07, 0.05, 0.05, 0.05, 0.02, 0.02, 0.02, 0.01, 0.01, 0.01};
  return m;
}

inline std::vector<ExperimentConfig> presets() {
  const std::vector<std::string> bernoulli_suite{"belman",   "ucb",       "ucb-tuned", "kl-ucb",
                                                 "thompson", "bayes-ucb", "random"};
  const std::vector<std::string> queue_suite{"belman-q", "thompson", "q-ucb", "q-ths", "random"};
  std::vector<ExperimentConfig> out;

  ExperimentConfig fig1;
  fig1.name = "fig1";
  fig1.theta = {0.8, 0.9};
  fig1.algorithms = bernoulli_suite;
  fig1.output = "out/fig1";
  out.push_back(fig1);

  ExperimentConfig fig2 = fig1;
  fig2.name = "fig2";
  fig2.theta = twenty_arm_means();
  fig2.output = "out/fig2";
  out.push_back(fig2);

  ExperimentConfig fig3 = fig1;
  fig3.name = "fig3";
  fig3.family = RewardFamily::exponential();
  fig3.theta = {5.0, 4.0, 3.0, 2.0, 1.0};
  fig3.bounding = Bounding::Resample;
  fig3.algorithms = {"belman", "ucb", "ucb-tuned", "kl-ucb-exp", "thompson", "bayes-ucb", "random"};
  fig3.output = "out/fig3";
  out.push_back(fig3);

  ExperimentConfig fig4 = fig2;
  fig4.name = "fig4_longhorizon";
  fig4.horizon = 20'000;
  fig4.n_runs = 5;
  fig4.output = "out/fig4_longhorizon";
  out.push_back(fig4);

  ExperimentConfig fig4_full = fig4;
  fig4_full.name = "fig4_longhorizon_full";
  fig4_full.horizon = 50'000;
  fig4_full.n_runs = 50;
  fig4_full.output = "out/fig4_longhorizon_full";
  out.push_back(fig4_full);

  ExperimentConfig fig5 = fig2;
  fig5.name = "fig5_twophase";
  fig5.mode = Mode::TwoPhase;
  fig5.t_exp = 500;
  fig5.horizon = 2000;
  fig5.algorithms = {"belman", "belman-exploit"};
  fig5.output = "out/fig5_twophase";
  out.push_back(fig5);

  const std::vector<std::vector<double>> rates{{0.5, 0.33, 0.33, 0.33, 0.25},
                                               {0.33, 0.5, 0.25, 0.33, 0.25},
                                               {0.25, 0.33, 0.5, 0.25, 0.25}};
  const char* suffix[] = {"a", "b", "c"};
  for (std::size_t i = 0; i < rates.size(); ++i) {
    ExperimentConfig q;
    q.name = std::string("fig8_queueing_") + suffix[i];
    q.mode = Mode::Queueing;
    q.lambda = 0.35;
    q.mu = rates[i];
    q.algorithms = queue_suite;
    q.horizon = 10'000;
    q.n_runs = 50;
    q.output = "out/" + q.name;
    out.push_back(q);
  }
  return out;
}

inline std::optional<ExperimentConfig> find_preset(std::string_view name) {
  for (auto& p : presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

// ---- policies ------------------------------------------------------------

inline std::unique_ptr<Policy> make_bandit_policy(const ExperimentConfig& c, std::string_view name,
                                                  std::uint64_t seed) {
  const auto fam = c.family;
  const std::size_t k = c.theta.size();
  auto belman = [&](ExposureSchedule s) { return std::make_unique<BelManPolicy>(fam, k, s, seed, c.ri_every); };
  if (name == "belman") return belman(c.schedule());
  if (name == "belman-explore") return belman(ExposureSchedule::infinite());
  if (name == "belman-exploit") return belman(ExposureSchedule::log_schedule(c.exposure_c));
  if (name == "belman-two-phase") return belman(ExposureSchedule::two_phase(c.t_exp, c.exposure_c));
  if (name == "ucb") return std::make_unique<UcbPolicy>(fam, k, seed);
  if (name == "ucb-tuned") return std::make_unique<UcbTunedPolicy>(fam, k, seed);
  if (name == "kl-ucb") return std::make_unique<KlUcbPolicy>(fam, k, seed, c.klucb_c);
  if (name == "kl-ucb-exp") {
    return std::make_unique<KlUcbPolicy>(fam, RewardFamily::exponential(), k, seed, c.klucb_c);
  }
  if (name == "thompson") return std::make_unique<ThompsonPolicy>(fam, k, seed);
  if (name == "bayes-ucb") return std::make_unique<BayesUcbPolicy>(fam, k, seed);
  if (name == "random") return std::make_unique<RandomPolicy>(fam, k, seed);
  throw DomainError("unknown algorithm: " + std::string(name));
}

inline std::unique_ptr<Policy> make_queue_policy(const ExperimentConfig& c, SchedulerKind kind,
                                                 std::uint64_t seed) {
  if (kind == SchedulerKind::QThs) {
    return std::make_unique<QThsScheduler>(c.mu.size(), seed, c.qths_explore_scale);
  }
  if (kind == SchedulerKind::BelManQ) {
    return std::make_unique<BelManPolicy>(RewardFamily::bernoulli(), c.mu.size(),
                                          ExposureSchedule::log_schedule(c.exposure_c), seed, c.ri_every);
  }
  return make_scheduler(kind, c.mu, seed);
}

inline std::uint64_t algorithm_seed(const ExperimentConfig& c, std::string_view name, std::uint64_t run) {
  const std::uint64_t id = c.queueing() ? scheduler_id(*parse_scheduler(name))
                                        : bandit_algorithm_ids().find(name)->second;
  return mix_seed(c.base_seed, id, run);
}

inline QueueSeeds queue_seeds(const ExperimentConfig& c, std::string_view scheduler, std::uint64_t run) {
  return {mix_seed(c.base_seed, kArrivalStream, run), mix_seed(c.base_seed, kServiceStream, run),
          algorithm_seed(c, scheduler, run)};
}

// ---- runs ----------------------------------------------------------------

// One (algorithm, run) pair, column-wise. arm is -1 on idle queue slots.
struct RunSeries {
  std::string algorithm;
  std::uint64_t run_id = 0;
  std::vector<std::int64_t> arm;
  std::vector<double> reward;
  std::vector<double> cum_regret;
  std::vector<std::uint64_t> subopt_draws;
  std::vector<std::uint64_t> queue_len;  // queueing only
  std::vector<double> queue_regret;      // queueing only
  std::uint64_t clamped_steps = 0;

  std::size_t size() const noexcept { return arm.size(); }
};

struct AggregateSeries {
  std::string algorithm;
  std::string metric;
  std::vector<double> mean;
  std::vector<double> p75;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunSeries> runs;  // ordered by algorithm (config order), then run id
  std::vector<AggregateSeries> aggregates;

  // Runs of one algorithm, ordered by run id.
  std::vector<const RunSeries*> runs_of(std::string_view algorithm) const {
    std::vector<const RunSeries*> out;
    for (const auto& r : runs) {
      if (r.algorithm == algorithm) out.push_back(&r);
    }
    return out;
  }

  const AggregateSeries& aggregate(std::string_view algorithm, std::string_view metric) const {
    for (const auto& a : aggregates) {
      if (a.algorithm == algorithm && a.metric == metric) return a;
    }
    throw DomainError("no aggregate " + std::string(metric) + " for " + std::string(algorithm));
  }
};

inline RunSeries series_from_trace(const RunTrace& trace, const BanditInstance& inst,
                                   std::string algorithm, std::uint64_t run_id) {
  RunSeries s;
  s.algorithm = std::move(algorithm);
  s.run_id = run_id;
  s.cum_regret = cumulative_regret(trace, inst);
  s.subopt_draws = suboptimal_draws(trace, inst);
  s.arm.reserve(trace.size());
  s.reward.reserve(trace.size());
  for (const auto& st : trace.steps) {
    s.arm.push_back(static_cast<std::int64_t>(st.arm));
    s.reward.push_back(st.reward);
  }
  return s;
}

inline RunSeries series_from_queue(const QueueTrace& trace, const QueueTrace& opt, std::span<const double> mu,
                                   std::string algorithm, std::uint64_t run_id) {
  RunSeries s;
  s.algorithm = std::move(algorithm);
  s.run_id = run_id;
  s.queue_regret = queue_regret(trace, opt);
  const double best = *std::max_element(mu.begin(), mu.end());
  double regret = 0.0;
  std::uint64_t subopt = 0;
  for (const auto& slot : trace.slots) {
    if (slot.server) {
      regret += best - mu[*slot.server];
      if (mu[*slot.server] < best) ++subopt;
    }
    s.arm.push_back(slot.server ? static_cast<std::int64_t>(*slot.server) : -1);
    s.reward.push_back(static_cast<double>(slot.service));
    s.cum_regret.push_back(regret);
    s.subopt_draws.push_back(subopt);
    s.queue_len.push_back(slot.queue_len);
  }
  return s;
}

inline std::uint64_t clamped_steps_of(const Policy& p) {
  if (const auto* b = dynamic_cast<const BelManPolicy*>(&p)) return b->state().clamped_steps;
  return 0;
}

inline RunSeries run_single(const ExperimentConfig& c, const std::string& algorithm, std::uint64_t run) {
  if (c.queueing()) {
    const auto kind = *parse_scheduler(algorithm);
    const auto qc = c.queue_config();
    const auto seeds = queue_seeds(c, algorithm, run);
    auto sched = make_queue_policy(c, kind, seeds.scheduler);
    const auto trace = simulate(qc, *sched, seeds);
    OptScheduler opt(c.mu);
    const auto opt_trace = simulate(qc, opt, seeds);
    auto s = series_from_queue(trace, opt_trace, c.mu, algorithm, run);
    s.clamped_steps = clamped_steps_of(*sched);
    return s;
  }
  const auto inst = c.instance();
  BanditEnvironment env(inst, mix_seed(c.base_seed, kEnvironmentStream, run));
  auto policy = make_bandit_policy(c, algorithm, algorithm_seed(c, algorithm, run));
  const auto trace = run_policy(*policy, env, c.horizon);
  auto s = series_from_trace(trace, inst, algorithm, run);
  s.clamped_steps = clamped_steps_of(*policy);
  return s;
}

// ---- aggregation ---------------------------------------------------------

// Nearest rank: the ceil(0.75 n)-th smallest value (1-based).
inline double percentile_75(std::vector<double> values) {
  if (values.empty()) throw DomainError("percentile_75: empty input");
  const std::size_t n = values.size();
  const std::size_t rank = (3 * n + 3) / 4;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

inline std::vector<std::string> metrics_for(Mode mode) {
  if (mode == Mode::Queueing) return {"queue_regret"};
  return {"regret", "subopt_draws"};
}

inline double metric_value(const RunSeries& s, std::string_view metric, std::size_t i) {
  if (metric == "regret") return s.cum_regret[i];
  if (metric == "subopt_draws") return static_cast<double>(s.subopt_draws[i]);
  if (metric == "queue_regret") return s.queue_regret[i];
  if (metric == "queue_len") return static_cast<double>(s.queue_len[i]);
  throw DomainError("unknown metric " + std::string(metric));
}

// Sequential reduce over runs in run-id order.
inline AggregateSeries aggregate(std::span<const RunSeries* const> runs, std::string_view metric) {
  if (runs.empty()) throw DomainError("aggregate: no runs");
  const std::size_t n = runs.front()->size();
  AggregateSeries a{runs.front()->algorithm, std::string(metric), std::vector<double>(n), std::vector<double>(n)};
  std::vector<double> column(runs.size());
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      column[r] = metric_value(*runs[r], metric, i);
      sum += column[r];
    }
    a.mean[i] = sum / static_cast<double>(runs.size());
    a.p75[i] = percentile_75(column);
  }
  return a;
}

inline std::uint64_t resolve_workers(std::uint64_t requested) {
  if (const char* env = std::getenv("BANDIT_WORKERS"); env && *env) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), v);
    if (ec != std::errc() || *p != '\0' || v < 1) {
      throw ValidationError({"BANDIT_WORKERS must be a positive integer"});
    }
    return v;
  }
  if (requested > 0) return requested;
  return std::max<std::uint64_t>(1, std::thread::hardware_concurrency());
}

// Runs every (algorithm, run) pair on a pool of workers. The result does not
// depend on the worker count.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::size_t n_alg = config.algorithms.size();
  const std::size_t n_jobs = n_alg * config.n_runs;
  std::vector<RunSeries> runs(n_jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= n_jobs) return;
      try {
        runs[j] = run_single(config, config.algorithms[j / config.n_runs], j % config.n_runs);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_jobs;
      }
    }
  };
  const std::size_t n_workers = std::min<std::size_t>(resolve_workers(config.workers), n_jobs);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  ExperimentResult result{config, std::move(runs), {}};
  for (const auto& alg : config.algorithms) {
    const auto of = result.runs_of(alg);
    for (const auto& m : metrics_for(config.mode)) result.aggregates.push_back(aggregate(of, m));
    std::uint64_t clamped = 0, clamped_runs = 0;
    for (const auto* r : of) {
      clamped += r->clamped_steps;
      clamped_runs += r->clamped_steps > 0;
    }
    if (clamped > 0) {
      std::cerr << "warning: " << alg << ": exposure clamped on " << clamped << " of "
                << of.size() * config.horizon << " steps (" << clamped_runs << " of " << of.size()
                << " runs)\n";
    }
  }
  return result;
}

// ---- CSV -----------------------------------------------------------------

namespace detail {

// Shortest decimal form that parses back to the same double.
inline void put_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

template <class Int>
inline void put_integer(std::string& out, Int v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace detail

inline std::string runs_csv(const ExperimentResult& result) {
  if (result.runs.empty()) throw DomainError("emit_csv: no traces");
  const bool q = result.config.queueing();
  std::string out = "run_id,algorithm,t,arm,reward,cum_regret,subopt_draws";
  out += q ? ",queue_len,queue_regret\n" : "\n";
  for (const auto& r : result.runs) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      detail::put_integer(out, r.run_id);
      out += ',';
      out += r.algorithm;
      out += ',';
      detail::put_integer(out, static_cast<std::uint64_t>(i + 1));
      out += ',';
      detail::put_integer(out, r.arm[i]);
      out += ',';
      detail::put_number(out, r.reward[i]);
      out += ',';
      detail::put_number(out, r.cum_regret[i]);
      out += ',';
      detail::put_integer(out, r.subopt_draws[i]);
      if (q) {
        out += ',';
        detail::put_integer(out, r.queue_len[i]);
        out += ',';
        detail::put_number(out, r.queue_regret[i]);
      }
      out += '\n';
    }
  }
  return out;
}

inline std::string agg_csv(const ExperimentResult& result) {
  if (result.aggregates.empty()) throw DomainError("emit_csv: no aggregates");
  std::string out = "algorithm,t,metric,mean,p75\n";
  for (const auto& a : result.aggregates) {
    for (std::size_t i = 0; i < a.mean.size(); ++i) {
      out += a.algorithm;
      out += ',';
      detail::put_integer(out, static_cast<std::uint64_t>(i + 1));
      out += ',';
      out += a.metric;
      out += ',';
      detail::put_number(out, a.mean[i]);
      out += ',';
      detail::put_number(out, a.p75[i]);
      out += '\n';
    }
  }
  return out;
}

// Writes runs.csv and agg.csv into `dir`, creating it if needed.
inline void emit_csv(const ExperimentResult& result, const std::filesystem::path& dir) {
  const auto runs = runs_csv(result);
  const auto agg = agg_csv(result);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  detail::write_file(dir / "runs.csv", runs);
  detail::write_file(dir / "agg.csv", agg);
}

}  // namespace belman
