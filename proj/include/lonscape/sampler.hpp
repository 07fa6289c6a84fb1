#pragma once

// Iterated Local Search sampler producing run logs of accepted local optima
// and the escape transitions between them.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "lonscape/core.hpp"
#include "lonscape/encodings.hpp"
#include "lonscape/evaluate.hpp"
#include "lonscape/json_io.hpp"
#include "lonscape/rng.hpp"

namespace lonscape {

struct IlsConfig {
  int runs = 30;
  int ls_stall_budget = 100;
  int perturbation_strength = 3;
  int run_stall_limit = 30;
  int run_iteration_limit = 100;
  Encoding encoding = Encoding::Direct;
  MutationRates rates = default_rates(Encoding::Direct);
  std::uint64_t base_seed = 0;
  double fitness_equality_tolerance = 1e-9;

  bool operator==(const IlsConfig&) const = default;

  static IlsConfig for_encoding(Encoding e) {
    IlsConfig cfg;
    cfg.encoding = e;
    cfg.rates = default_rates(e);
    return cfg;
  }

  bool valid() const noexcept {
    return runs > 0 && ls_stall_budget > 0 && perturbation_strength >= 0 && run_stall_limit > 0 &&
           run_iteration_limit > 0 && rates.valid() && fitness_equality_tolerance >= 0.0;
  }
};

struct TrajectoryEntry {
  int node_index = 0;
  Fitness fitness{};
  std::uint64_t genotype_hash = 0;
  std::uint64_t phenotype_hash = 0;
  std::uint64_t design_hash = 0;
  Genotype genotype;

  bool operator==(const TrajectoryEntry&) const = default;
};

struct Transition {
  int src = 0;
  int dst = 0;

  bool operator==(const Transition&) const = default;
};

struct RunCounters {
  std::uint64_t attempted_mutations = 0;
  std::uint64_t accepted_mutations = 0;
  std::uint64_t accepted_design_changes = 0;
  std::uint64_t evaluations = 0;
  std::set<std::uint64_t> unique_design_hashes;

  bool operator==(const RunCounters&) const = default;
};

struct RunLog {
  int run_id = 0;
  Encoding encoding = Encoding::Direct;
  std::uint64_t seed = 0;
  std::vector<TrajectoryEntry> entries;
  std::vector<Transition> transitions;
  RunCounters counters;

  bool operator==(const RunLog&) const = default;
};

/// A genotype together with everything the search needs to compare it.
struct ScoredGenotype {
  Genotype genotype;
  Fitness fitness{};
  std::uint64_t genotype_hash = 0;
  std::uint64_t phenotype_hash = 0;
  std::uint64_t design_hash = 0;
};

template <Evaluator Eval>
ScoredGenotype score(Genotype g, Eval& eval, RunCounters& counters) {
  const PhenotypeTree tree = express(g);
  ScoredGenotype s{std::move(g), Fitness(eval(tree)), 0, hash_phenotype(tree), hash_design(tree)};
  s.genotype_hash = hash_genotype(s.genotype);
  ++counters.evaluations;
  counters.unique_design_hashes.insert(s.design_hash);
  return s;
}

/// First-improvement hill climb: the first sampled neighbour at least as good
/// as the incumbent replaces it. The stall counter resets only on strict
/// improvement and the climb ends once it reaches ls_stall_budget.
template <Evaluator Eval>
ScoredGenotype local_search(ScoredGenotype incumbent, const IlsConfig& cfg, RngStream& rng, Eval& eval,
                            RunCounters& counters) {
  const double tol = cfg.fitness_equality_tolerance;
  int stall = 0;
  while (stall < cfg.ls_stall_budget) {
    ScoredGenotype neighbour = score(mutate_bundle(incumbent.genotype, cfg.rates, rng), eval, counters);
    ++counters.attempted_mutations;
    const bool improves = neighbour.fitness.value > incumbent.fitness.value + tol;
    if (neighbour.fitness.value >= incumbent.fitness.value - tol) {
      ++counters.accepted_mutations;
      if (neighbour.design_hash != incumbent.design_hash) ++counters.accepted_design_changes;
      incumbent = std::move(neighbour);
    }
    stall = improves ? 0 : stall + 1;
  }
  return incumbent;
}

inline Genotype perturb(Genotype g, const IlsConfig& cfg, RngStream& rng) {
  for (int i = 0; i < cfg.perturbation_strength; ++i) g = mutate_bundle(g, cfg.rates, rng);
  return g;
}

/// One ILS trajectory seeded with base_seed + run_id. Accepted candidates
/// (fitness no worse than the incumbent) become nodes, deduplicated by
/// genotype hash, and each acceptance records a transition. Rejections leave
/// no trace in the graph.
template <Evaluator Eval>
RunLog ils_run(int run_id, const IlsConfig& cfg, Eval& eval) {
  RunLog log;
  log.run_id = run_id;
  log.encoding = cfg.encoding;
  log.seed = cfg.base_seed + static_cast<std::uint64_t>(run_id);
  RngStream rng(log.seed);
  RunCounters& counters = log.counters;
  const double tol = cfg.fitness_equality_tolerance;

  std::unordered_map<std::uint64_t, int> index_of;
  auto record = [&](const ScoredGenotype& s) {
    const auto [it, inserted] = index_of.try_emplace(s.genotype_hash, static_cast<int>(log.entries.size()));
    if (inserted)
      log.entries.push_back(
          {it->second, s.fitness, s.genotype_hash, s.phenotype_hash, s.design_hash, s.genotype});
    return it->second;
  };

  ScoredGenotype incumbent = score(random_genotype(cfg.encoding, rng), eval, counters);
  incumbent = local_search(std::move(incumbent), cfg, rng, eval, counters);
  int incumbent_index = record(incumbent);

  int stall = 0;
  for (int iteration = 0; iteration < cfg.run_iteration_limit && stall < cfg.run_stall_limit; ++iteration) {
    ScoredGenotype start = score(perturb(incumbent.genotype, cfg, rng), eval, counters);
    ScoredGenotype candidate = local_search(std::move(start), cfg, rng, eval, counters);
    ++counters.attempted_mutations;
    const bool improves = candidate.fitness.value > incumbent.fitness.value + tol;
    if (candidate.fitness.value >= incumbent.fitness.value - tol) {
      ++counters.accepted_mutations;
      if (candidate.design_hash != incumbent.design_hash) ++counters.accepted_design_changes;
      const int candidate_index = record(candidate);
      log.transitions.push_back({incumbent_index, candidate_index});
      incumbent = std::move(candidate);
      incumbent_index = candidate_index;
    }
    stall = improves ? 0 : stall + 1;
  }
  return log;
}

/// Runs cfg.runs trajectories on `jobs` worker threads. Each worker owns one
/// evaluator from `make_evaluator`; results are ordered by run id.
template <class Factory>
std::vector<RunLog> sample_runs(const IlsConfig& cfg, Factory make_evaluator, unsigned jobs = 0) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(cfg.runs));
  std::vector<RunLog> logs(static_cast<std::size_t>(cfg.runs));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    try {
      auto eval = make_evaluator();
      for (int run = next++; run < cfg.runs; run = next++) {
        logs[static_cast<std::size_t>(run)] = ils_run(run, cfg, eval);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = cfg.runs;
    }
  };

  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < jobs; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return logs;
}

/// Whether any of `samples` fresh neighbours is strictly better than `fitness`.
template <Evaluator Eval>
bool has_improving_neighbour(const Genotype& g, Fitness fitness, const IlsConfig& cfg, RngStream& rng, Eval& eval,
                             int samples = 100) {
  for (int i = 0; i < samples; ++i) {
    const Fitness f = eval(express(mutate_bundle(g, cfg.rates, rng)));
    if (f.value > fitness.value + cfg.fitness_equality_tolerance) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Run statistics
// ---------------------------------------------------------------------------

struct RunStatistics {
  double mutation_acceptance_pct = 0.0;
  double design_acceptance_pct = 0.0;
  std::uint64_t unique_designs = 0;
  std::uint64_t attempted_mutations = 0;

  bool operator==(const RunStatistics&) const = default;
};

inline RunStatistics run_statistics(std::span<const RunLog> logs) {
  if (logs.empty()) throw Error(ErrorCode::EmptyInput, "run_statistics needs at least one log");
  std::uint64_t attempted = 0;
  std::uint64_t accepted = 0;
  std::uint64_t design = 0;
  std::set<std::uint64_t> designs;
  for (const RunLog& log : logs) {
    attempted += log.counters.attempted_mutations;
    accepted += log.counters.accepted_mutations;
    design += log.counters.accepted_design_changes;
    designs.insert(log.counters.unique_design_hashes.begin(), log.counters.unique_design_hashes.end());
  }
  RunStatistics s;
  s.attempted_mutations = attempted;
  s.unique_designs = designs.size();
  s.mutation_acceptance_pct = attempted ? 100.0 * static_cast<double>(accepted) / static_cast<double>(attempted) : 0.0;
  s.design_acceptance_pct = accepted ? 100.0 * static_cast<double>(design) / static_cast<double>(accepted) : 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// Run-log files: line-delimited JSON, one tagged record per line.
//   header, entry*, transition*, counters, designs
// ---------------------------------------------------------------------------

inline void write_run_log(std::ostream& os, const RunLog& log) {
  os << Json{{"type", "header"},
             {"schema", kSchemaVersion},
             {"run_id", log.run_id},
             {"encoding", std::string(to_string(log.encoding))},
             {"seed", log.seed}}
            .dump()
     << '\n';
  for (const auto& e : log.entries) {
    os << Json{{"type", "entry"},
               {"node_index", e.node_index},
               {"fitness", e.fitness.value},
               {"killed", e.fitness.killed},
               {"genotype_hash", hash_to_hex(e.genotype_hash)},
               {"phenotype_hash", hash_to_hex(e.phenotype_hash)},
               {"design_hash", hash_to_hex(e.design_hash)},
               {"genotype", to_json(e.genotype)}}
              .dump()
       << '\n';
  }
  for (const auto& t : log.transitions)
    os << Json{{"type", "transition"}, {"src", t.src}, {"dst", t.dst}}.dump() << '\n';
  const auto& c = log.counters;
  os << Json{{"type", "counters"},
             {"attempted_mutations", c.attempted_mutations},
             {"accepted_mutations", c.accepted_mutations},
             {"accepted_design_changes", c.accepted_design_changes},
             {"evaluations", c.evaluations}}
            .dump()
     << '\n';
  Json hashes = Json::array();
  for (std::uint64_t h : c.unique_design_hashes) hashes.push_back(hash_to_hex(h));
  os << Json{{"type", "designs"}, {"hashes", std::move(hashes)}}.dump() << '\n';
}

inline RunLog read_run_log(std::istream& is) {
  RunLog log;
  bool saw_header = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::SchemaMismatch, "run log line " + std::to_string(line_no) + ": " + e.what());
    }
    detail::parse_guard("run log", [&] {
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        detail::require_schema(j, "run log");
        const auto enc = parse_encoding(j.at("encoding").get<std::string>());
        if (!enc) throw Error(ErrorCode::SchemaMismatch, "run log: unknown encoding");
        log.run_id = j.at("run_id").get<int>();
        log.encoding = *enc;
        log.seed = j.at("seed").get<std::uint64_t>();
        saw_header = true;
      } else if (!saw_header) {
        throw Error(ErrorCode::SchemaMismatch, "run log: first record must be the header");
      } else if (type == "entry") {
        TrajectoryEntry e{j.at("node_index").get<int>(),
                          {j.at("fitness").get<double>(), j.at("killed").get<bool>()},
                          hash_from_hex(j.at("genotype_hash").get<std::string>()),
                          hash_from_hex(j.at("phenotype_hash").get<std::string>()),
                          hash_from_hex(j.at("design_hash").get<std::string>()),
                          genotype_from_json(j.at("genotype"))};
        log.entries.push_back(std::move(e));
      } else if (type == "transition") {
        log.transitions.push_back({j.at("src").get<int>(), j.at("dst").get<int>()});
      } else if (type == "counters") {
        log.counters.attempted_mutations = j.at("attempted_mutations").get<std::uint64_t>();
        log.counters.accepted_mutations = j.at("accepted_mutations").get<std::uint64_t>();
        log.counters.accepted_design_changes = j.at("accepted_design_changes").get<std::uint64_t>();
        log.counters.evaluations = j.at("evaluations").get<std::uint64_t>();
      } else if (type == "designs") {
        for (const Json& h : j.at("hashes")) log.counters.unique_design_hashes.insert(hash_from_hex(h.get<std::string>()));
      } else {
        throw Error(ErrorCode::SchemaMismatch, "run log: unknown record type '" + type + "'");
      }
      return 0;
    });
  }
  if (!saw_header) throw Error(ErrorCode::SchemaMismatch, "run log has no header");
  return log;
}

}  // namespace lonscape
