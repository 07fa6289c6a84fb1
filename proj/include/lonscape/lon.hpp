#pragma once

// Monotonic local optima network merged from ILS run logs, and the graph
// metrics computed on it.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lonscape/evaluate.hpp"
#include "lonscape/json_io.hpp"
#include "lonscape/sampler.hpp"

namespace lonscape {

enum class QuartileClass { Low, Mid, High };

constexpr std::string_view to_string(QuartileClass q) {
  switch (q) {
    case QuartileClass::Low: return "Low";
    case QuartileClass::Mid: return "Mid";
    case QuartileClass::High: return "High";
  }
  return "Unknown";
}

struct LonNode {
  std::uint64_t id = 0;  // genotype hash
  Fitness fitness{};
  std::uint64_t phenotype_hash = 0;
  std::uint64_t design_hash = 0;
  std::set<int> runs;
  QuartileClass quartile_class = QuartileClass::Mid;

  bool operator==(const LonNode&) const = default;
};

struct LonEdge {
  std::uint64_t src = 0;
  std::uint64_t dst = 0;
  std::uint64_t weight = 0;

  bool operator==(const LonEdge&) const = default;
};

/// What survives of each run once logs are merged: enough for the run table
/// and the per-run distributions.
struct RunSummary {
  int run_id = 0;
  std::uint64_t chain_length = 0;
  double max_fitness = 0.0;
  std::uint64_t attempted_mutations = 0;
  std::uint64_t accepted_mutations = 0;
  std::uint64_t accepted_design_changes = 0;
  std::uint64_t evaluations = 0;

  bool operator==(const RunSummary&) const = default;
};

struct Lon {
  std::vector<LonNode> nodes;  // first-appearance order across runs
  std::vector<LonEdge> edges;  // first-appearance order, (src, dst) unique
  std::string encoding;
  std::string config_digest;
  std::vector<RunSummary> runs;
  RunStatistics run_statistics{};
  /// Node ids that appeared in more than one run.
  std::uint64_t shared_nodes = 0;

  bool operator==(const Lon&) const = default;

  std::unordered_map<std::uint64_t, std::size_t> index() const {
    std::unordered_map<std::uint64_t, std::size_t> idx;
    idx.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) idx.emplace(nodes[i].id, i);
    return idx;
  }
};

inline Lon build_lon(std::span<const RunLog> logs, std::string config_digest = {}) {
  if (logs.empty()) throw Error(ErrorCode::EmptyInput, "build_lon needs at least one run log");
  Lon lon;
  lon.encoding = std::string(to_string(logs.front().encoding));
  lon.config_digest = std::move(config_digest);
  lon.run_statistics = run_statistics(logs);

  std::unordered_map<std::uint64_t, std::size_t> node_at;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::size_t> edge_at;
  for (const RunLog& log : logs) {
    RunSummary summary{log.run_id,
                       static_cast<std::uint64_t>(log.entries.size()),
                       0.0,
                       log.counters.attempted_mutations,
                       log.counters.accepted_mutations,
                       log.counters.accepted_design_changes,
                       log.counters.evaluations};
    std::unordered_map<int, std::uint64_t> id_of;
    for (const TrajectoryEntry& e : log.entries) {
      id_of[e.node_index] = e.genotype_hash;
      summary.max_fitness = std::max(summary.max_fitness, e.fitness.value);
      auto [it, inserted] = node_at.try_emplace(e.genotype_hash, lon.nodes.size());
      if (inserted) {
        lon.nodes.push_back({e.genotype_hash, e.fitness, e.phenotype_hash, e.design_hash, {log.run_id}, {}});
      } else {
        LonNode& node = lon.nodes[it->second];
        if (!node.runs.contains(log.run_id) && node.runs.size() == 1) ++lon.shared_nodes;
        node.runs.insert(log.run_id);
      }
    }
    for (const Transition& t : log.transitions) {
      const auto s = id_of.find(t.src);
      const auto d = id_of.find(t.dst);
      if (s == id_of.end() || d == id_of.end())
        throw Error(ErrorCode::DanglingTransition, "run " + std::to_string(log.run_id) + " transition " +
                                                       std::to_string(t.src) + "->" + std::to_string(t.dst));
      const auto key = std::make_pair(s->second, d->second);
      auto [it, inserted] = edge_at.try_emplace(key, lon.edges.size());
      if (inserted)
        lon.edges.push_back({key.first, key.second, 1});
      else
        ++lon.edges[it->second].weight;
    }
    lon.runs.push_back(summary);
  }
  return lon;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Components of the undirected view, as node positions; each component is
/// sorted and components are ordered by their smallest member.
inline std::vector<std::vector<std::size_t>> weakly_connected_components(const Lon& lon) {
  const std::size_t n = lon.nodes.size();
  const auto idx = lon.index();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const LonEdge& e : lon.edges) {
    const std::size_t a = idx.at(e.src);
    const std::size_t b = idx.at(e.dst);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(n, false);
  std::vector<std::vector<std::size_t>> components;
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    std::vector<std::size_t> comp;
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (std::size_t w : adj[v])
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
    }
    std::sort(comp.begin(), comp.end());
    components.push_back(std::move(comp));
  }
  return components;
}

/// Mean directed hop distance over ordered pairs u != v with v reachable from u.
/// Self-loops and edge weights are ignored.
inline double average_path_length(const Lon& lon) {
  const std::size_t n = lon.nodes.size();
  const auto idx = lon.index();
  std::vector<std::vector<std::size_t>> out(n);
  for (const LonEdge& e : lon.edges)
    if (e.src != e.dst) out[idx.at(e.src)].push_back(idx.at(e.dst));

  double total = 0.0;
  std::uint64_t pairs = 0;
  std::vector<int> dist(n);
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    queue.assign(1, s);
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      for (std::size_t w : out[v])
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          total += dist[w];
          ++pairs;
          queue.push_back(w);
        }
    }
  }
  if (pairs == 0) throw Error(ErrorCode::NoReachablePairs, "no pair of distinct nodes is connected");
  return total / static_cast<double>(pairs);
}

/// In-degree plus out-degree averaged over nodes; a self-loop adds one to each.
inline double mean_degree(const Lon& lon) {
  if (lon.nodes.empty()) throw Error(ErrorCode::EmptyInput, "mean_degree of an empty LON");
  return 2.0 * static_cast<double>(lon.edges.size()) / static_cast<double>(lon.nodes.size());
}

inline double infeasible_pct(const Lon& lon) {
  if (lon.nodes.empty()) return 0.0;
  const auto killed = std::count_if(lon.nodes.begin(), lon.nodes.end(), [](const LonNode& n) { return n.fitness.killed; });
  return 100.0 * static_cast<double>(killed) / static_cast<double>(lon.nodes.size());
}

inline std::vector<std::uint64_t> chain_lengths(std::span<const RunLog> logs) {
  std::vector<std::uint64_t> out;
  out.reserve(logs.size());
  for (const RunLog& log : logs) out.push_back(log.entries.size());
  return out;
}

inline std::vector<std::uint64_t> chain_lengths(const Lon& lon) {
  std::vector<std::uint64_t> out;
  for (const RunSummary& r : lon.runs) out.push_back(r.chain_length);
  return out;
}

inline double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "median of no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Median fitness gain along edges, one value per component that has edges,
/// in component order.
inline std::vector<double> fitness_deltas(const Lon& lon) {
  const auto idx = lon.index();
  const auto components = weakly_connected_components(lon);
  std::vector<std::size_t> component_of(lon.nodes.size());
  for (std::size_t c = 0; c < components.size(); ++c)
    for (std::size_t v : components[c]) component_of[v] = c;

  std::vector<std::vector<double>> deltas(components.size());
  for (const LonEdge& e : lon.edges) {
    const std::size_t s = idx.at(e.src);
    const std::size_t d = idx.at(e.dst);
    const double delta = std::max(0.0, lon.nodes[d].fitness.value - lon.nodes[s].fitness.value);
    deltas[component_of[s]].push_back(delta);
  }
  std::vector<double> medians;
  for (auto& d : deltas)
    if (!d.empty()) medians.push_back(median(std::move(d)));
  return medians;
}

/// Linear-interpolation quantile on sorted data (position q * (n - 1)).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyInput, "quantile of no values");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct QuartileThresholds {
  double q1 = 0.0;
  double q3 = 0.0;

  QuartileClass classify(double f) const noexcept {
    if (f >= q3) return QuartileClass::High;
    if (f < q1) return QuartileClass::Low;
    return QuartileClass::Mid;
  }
};

/// Pools node fitness across all LONs, derives Q1/Q3 and tags every node.
inline QuartileThresholds classify_quartiles(std::span<Lon* const> lons) {
  std::vector<double> pooled;
  for (const Lon* lon : lons)
    for (const LonNode& n : lon->nodes) pooled.push_back(n.fitness.value);
  if (pooled.empty()) throw Error(ErrorCode::EmptyInput, "classify_quartiles needs at least one node");
  std::sort(pooled.begin(), pooled.end());
  const QuartileThresholds t{quantile_sorted(pooled, 0.25), quantile_sorted(pooled, 0.75)};
  for (Lon* lon : lons)
    for (LonNode& n : lon->nodes) n.quartile_class = t.classify(n.fitness.value);
  return t;
}

inline QuartileThresholds classify_quartiles(Lon& lon) {
  Lon* one[] = {&lon};
  return classify_quartiles(std::span<Lon* const>(one));
}

/// One row of the LON table; path_length is empty when no pair is connected.
struct LonSummary {
  std::uint64_t nodes = 0;
  std::uint64_t edges = 0;
  std::uint64_t components = 0;
  std::optional<double> path_length;
  double degree = 0.0;
  double infeasible_pct = 0.0;

  bool operator==(const LonSummary&) const = default;
};

inline LonSummary lon_summary(const Lon& lon) {
  LonSummary s;
  s.nodes = lon.nodes.size();
  s.edges = lon.edges.size();
  s.components = weakly_connected_components(lon).size();
  if (lon.nodes.size() >= 2) {
    try {
      s.path_length = average_path_length(lon);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoReachablePairs) throw;
    }
  }
  s.degree = lon.nodes.empty() ? 0.0 : mean_degree(lon);
  s.infeasible_pct = infeasible_pct(lon);
  return s;
}

// ---------------------------------------------------------------------------
// LON file (JSON, schema 1)
// ---------------------------------------------------------------------------

inline Json to_json(const Lon& lon) {
  Json nodes = Json::array();
  for (const LonNode& n : lon.nodes)
    nodes.push_back({{"id", hash_to_hex(n.id)},
                     {"fitness", n.fitness.value},
                     {"killed", n.fitness.killed},
                     {"phenotype_hash", hash_to_hex(n.phenotype_hash)},
                     {"design_hash", hash_to_hex(n.design_hash)},
                     {"runs", n.runs}});
  Json edges = Json::array();
  for (const LonEdge& e : lon.edges)
    edges.push_back({{"src", hash_to_hex(e.src)}, {"dst", hash_to_hex(e.dst)}, {"weight", e.weight}});
  Json runs = Json::array();
  for (const RunSummary& r : lon.runs)
    runs.push_back({{"run_id", r.run_id},
                    {"chain_length", r.chain_length},
                    {"max_fitness", r.max_fitness},
                    {"attempted_mutations", r.attempted_mutations},
                    {"accepted_mutations", r.accepted_mutations},
                    {"accepted_design_changes", r.accepted_design_changes},
                    {"evaluations", r.evaluations}});
  const RunStatistics& s = lon.run_statistics;
  return Json{{"schema", kSchemaVersion},
              {"type", "lon"},
              {"encoding", lon.encoding},
              {"config_digest", lon.config_digest},
              {"shared_nodes", lon.shared_nodes},
              {"run_statistics",
               {{"mutation_acceptance_pct", s.mutation_acceptance_pct},
                {"design_acceptance_pct", s.design_acceptance_pct},
                {"unique_designs", s.unique_designs},
                {"attempted_mutations", s.attempted_mutations}}},
              {"runs", std::move(runs)},
              {"nodes", std::move(nodes)},
              {"edges", std::move(edges)}};
}

inline Lon lon_from_json(const Json& j) {
  detail::require_schema(j, "LON");
  return detail::parse_guard("LON", [&] {
    if (j.at("type") != "lon") throw Error(ErrorCode::SchemaMismatch, "not a LON file");
    Lon lon;
    lon.encoding = j.at("encoding").get<std::string>();
    lon.config_digest = j.at("config_digest").get<std::string>();
    lon.shared_nodes = j.at("shared_nodes").get<std::uint64_t>();
    const Json& s = j.at("run_statistics");
    lon.run_statistics = {s.at("mutation_acceptance_pct").get<double>(), s.at("design_acceptance_pct").get<double>(),
                          s.at("unique_designs").get<std::uint64_t>(), s.at("attempted_mutations").get<std::uint64_t>()};
    for (const Json& r : j.at("runs"))
      lon.runs.push_back({r.at("run_id").get<int>(), r.at("chain_length").get<std::uint64_t>(),
                          r.at("max_fitness").get<double>(), r.at("attempted_mutations").get<std::uint64_t>(),
                          r.at("accepted_mutations").get<std::uint64_t>(),
                          r.at("accepted_design_changes").get<std::uint64_t>(), r.at("evaluations").get<std::uint64_t>()});
    for (const Json& n : j.at("nodes"))
      lon.nodes.push_back({hash_from_hex(n.at("id").get<std::string>()),
                           {n.at("fitness").get<double>(), n.at("killed").get<bool>()},
                           hash_from_hex(n.at("phenotype_hash").get<std::string>()),
                           hash_from_hex(n.at("design_hash").get<std::string>()),
                           n.at("runs").get<std::set<int>>(),
                           QuartileClass::Mid});
    const auto idx = lon.index();
    for (const Json& e : j.at("edges")) {
      LonEdge edge{hash_from_hex(e.at("src").get<std::string>()), hash_from_hex(e.at("dst").get<std::string>()),
                   e.at("weight").get<std::uint64_t>()};
      if (!idx.contains(edge.src) || !idx.contains(edge.dst))
        throw Error(ErrorCode::DanglingTransition, "LON edge references a missing node");
      lon.edges.push_back(edge);
    }
    return lon;
  });
}

}  // namespace lonscape
