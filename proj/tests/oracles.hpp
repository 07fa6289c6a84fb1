#pragma once

// Independent reference computations used only by the tests. None of these
// call into the implementation paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "lonscape/encodings.hpp"

namespace oracle {

/// Union-find over an undirected edge list; returns the number of sets and a
/// canonical label (smallest member) for every vertex.
struct UnionFind {
  std::vector<std::size_t> parent;

  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }

  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  std::size_t count() {
    std::size_t roots = 0;
    for (std::size_t v = 0; v < parent.size(); ++v) roots += find(v) == v;
    return roots;
  }

  std::vector<std::size_t> labels() {
    std::vector<std::size_t> smallest(parent.size(), parent.size());
    for (std::size_t v = 0; v < parent.size(); ++v) smallest[find(v)] = std::min(smallest[find(v)], v);
    std::vector<std::size_t> out(parent.size());
    for (std::size_t v = 0; v < parent.size(); ++v) out[v] = smallest[find(v)];
    return out;
  }
};

/// Floyd-Warshall mean over reachable ordered pairs; NaN when none.
inline double floyd_warshall_mean(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (auto [a, b] : edges)
    if (a != b) d[a][b] = 1.0;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && d[i][j] < inf) {
        total += d[i][j];
        ++pairs;
      }
  return pairs ? total / static_cast<double>(pairs) : std::nan("");
}

/// Exact two-sided Mann-Whitney p by listing every way to choose which of the
/// n + m ranks belong to the first sample.
inline double brute_force_exact_p(std::size_t n, std::size_t m, double u_observed) {
  const std::size_t total = n + m;
  std::vector<int> choose(total, 0);
  std::fill(choose.begin(), choose.begin() + static_cast<std::ptrdiff_t>(n), 1);
  std::sort(choose.begin(), choose.end());
  double count = 0.0, le = 0.0, ge = 0.0;
  do {
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < total; ++i)
      if (choose[i]) rank_sum += static_cast<double>(i + 1);
    const double u = rank_sum - static_cast<double>(n * (n + 1)) / 2.0;
    count += 1.0;
    if (u <= u_observed + 1e-9) le += 1.0;
    if (u >= u_observed - 1e-9) ge += 1.0;
  } while (std::next_permutation(choose.begin(), choose.end()));
  return std::min(1.0, 2.0 * std::min(le, ge) / count);
}

/// U of the first sample by direct pair counting (ties count one half).
inline double pair_count_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

/// Recursive CPPN evaluation: a node's value is computed on demand from its
/// enabled incoming connections, with memoization.
class NaiveCppn {
 public:
  explicit NaiveCppn(const lonscape::CppnGenotype& g) : g_(g) {}

  std::vector<double> run(const std::vector<double>& inputs) {
    memo_.clear();
    inputs_ = inputs;
    std::vector<double> out;
    for (int k = 0; k < lonscape::kCppnOutputs; ++k) out.push_back(value(lonscape::kCppnInputs + k));
    return out;
  }

 private:
  double value(int id) {
    if (auto it = memo_.find(id); it != memo_.end()) return it->second;
    const lonscape::CppnNode* node = nullptr;
    for (const auto& n : g_.nodes)
      if (n.id == id) node = &n;
    double v = 0.0;
    if (node->role == lonscape::NodeRole::Input) {
      v = inputs_[static_cast<std::size_t>(id)];
    } else {
      double s = node->bias;
      for (const auto& c : g_.connections)
        if (c.enabled && c.to == id) s += c.weight * value(c.from);
      switch (node->activation) {
        case lonscape::Activation::Gaussian: v = std::exp(-s * s); break;
        case lonscape::Activation::Sine: v = std::sin(s); break;
        case lonscape::Activation::Sigmoid: v = 1.0 / (1.0 + std::exp(-s)); break;
        case lonscape::Activation::Identity: v = s; break;
      }
    }
    memo_[id] = v;
    return v;
  }

  const lonscape::CppnGenotype& g_;
  std::vector<double> inputs_;
  std::map<int, double> memo_;
};

/// Depth-first colouring cycle check over enabled connections.
inline bool has_cycle(const lonscape::CppnGenotype& g) {
  std::map<int, int> colour;  // 0 white, 1 grey, 2 black
  std::function<bool(int)> visit = [&](int id) {
    colour[id] = 1;
    for (const auto& c : g.connections) {
      if (!c.enabled || c.from != id) continue;
      if (colour[c.to] == 1) return true;
      if (colour[c.to] == 0 && visit(c.to)) return true;
    }
    colour[id] = 2;
    return false;
  };
  for (const auto& n : g.nodes)
    if (colour[n.id] == 0 && visit(n.id)) return true;
  return false;
}

/// Quantile by the (n-1)p linear interpolation rule, written independently.
inline double interpolated_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const double fl = std::floor(h);
  const auto i = static_cast<std::size_t>(fl);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (h - fl) * (v[i + 1] - v[i]);
}

}  // namespace oracle
