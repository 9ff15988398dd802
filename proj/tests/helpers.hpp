#pragma once

// Test-only builders: seeded random learning graphs, oracles defined by a
// planted certificate set, and random feasible flows. These stay independent
// of the solver paths they are used to check.

#include <random>
#include <set>
#include <vector>

#include "lg/lgraph.hpp"

namespace lgtest {

using namespace lg;

// Star graph for the OR function: root connected to every singleton.
inline LGraph or_star(int n, double weight = 1.0) {
  LGraph g(n, 2);
  VertexId root = g.add_vertex(0);
  for (int j = 0; j < n; ++j) g.add_arc(root, g.add_vertex(set_with(0, j)), weight);
  return g;
}

inline FunctionOracle or_oracle(int n) {
  return FunctionOracle{n, 2,
                        [](const std::vector<int>& x) {
                          for (int v : x)
                            if (v == 1) return 1;
                          return 0;
                        },
                        nullptr};
}

// OR with the promise "no ones at all, or at least r of them".
inline FunctionOracle or_promise_oracle(int n, int r) {
  FunctionOracle f = or_oracle(n);
  f.domain = [r](const std::vector<int>& x) {
    int ones = 0;
    for (int v : x) ones += v == 1;
    return ones == 0 || ones >= r;
  };
  return f;
}

// Subset lattice up to size 2: root, singletons, pairs, arcs everywhere.
// Computes distinctness for any alphabet (a colliding pair sits inside some
// pair vertex).
inline LGraph pairs_graph(int n, int m) {
  LGraph g(n, m);
  VertexId root = g.add_vertex(0);
  std::vector<VertexId> singles(n);
  for (int j = 0; j < n; ++j) {
    singles[j] = g.add_vertex(set_with(0, j));
    g.add_arc(root, singles[j]);
  }
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      VertexId pair = g.add_vertex(set_from({j, k}));
      g.add_arc(singles[j], pair);
      g.add_arc(singles[k], pair);
    }
  return g;
}

inline FunctionOracle distinctness_oracle(int n, int m) {
  return FunctionOracle{n, m,
                        [](const std::vector<int>& x) {
                          for (std::size_t i = 0; i < x.size(); ++i)
                            for (std::size_t j = i + 1; j < x.size(); ++j)
                              if (x[i] == x[j]) return 1;
                          return 0;
                        },
                        nullptr};
}

// Connected random DAG grown from the root; may contain labeled duplicate
// vertices (same loaded set, distinct labels) when `duplicates` is set.
inline LGraph random_graph(std::mt19937& rng, int n, bool duplicates, double max_weight = 4.0) {
  LGraph g(n, 2);
  std::vector<VertexId> pool{g.add_vertex(0)};
  std::uniform_real_distribution<double> wdist(0.25, max_weight);
  int target_vertices = 3 + static_cast<int>(rng() % 8);
  int copy_counter = 0;
  while (static_cast<int>(pool.size()) < target_vertices) {
    VertexId from = pool[rng() % pool.size()];
    VarSet loaded = g.vertex(from).loaded;
    std::vector<int> missing;
    for (int j = 0; j < n; ++j)
      if (!set_contains(loaded, j)) missing.push_back(j);
    if (missing.empty()) continue;
    int j = missing[rng() % missing.size()];
    VarSet to_set = set_with(loaded, j);
    std::string label;
    if (duplicates && rng() % 3 == 0) label = "c" + std::to_string(copy_counter++);
    VertexId to;
    if (auto found = g.find_vertex(to_set, label); found && !label.empty())
      continue; // labels are one-shot
    else if (found)
      to = *found;
    else
      to = g.add_vertex(to_set, label);
    g.add_arc(from, to, wdist(rng));
    pool.push_back(to);
  }
  // A few extra arcs between existing vertices keep things non-tree-like.
  for (int tries = 0; tries < 6; ++tries) {
    VertexId a = pool[rng() % pool.size()], b = pool[rng() % pool.size()];
    VarSet add = g.vertex(b).loaded & ~g.vertex(a).loaded;
    if (set_size(add) == 1 && subset_of(g.vertex(a).loaded, g.vertex(b).loaded)) {
      bool dup = false;
      for (const Arc& e : g.arcs()) dup = dup || (e.from == a && e.to == b);
      if (!dup) g.add_arc(a, b, wdist(rng));
    }
  }
  return g;
}

// f(x) = 1 iff x agrees with one of the planted assignments; every planted
// assignment is then a 1-certificate located at its vertex.
struct PlantedOracle {
  FunctionOracle oracle;
  std::vector<VertexId> sites;
};

inline PlantedOracle planted_oracle(std::mt19937& rng, const LGraph& g) {
  auto certs = std::make_shared<std::vector<std::pair<VarSet, std::vector<int>>>>();
  std::vector<VertexId> sites;
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertices().size()); ++v) {
    VarSet s = g.vertex(v).loaded;
    if (s == 0 || rng() % 2) continue;
    std::vector<int> values(g.n(), 0);
    for (int j : set_elements(s)) values[j] = static_cast<int>(rng() % g.m());
    certs->push_back({s, values});
    sites.push_back(v);
  }
  if (certs->empty()) {
    // plant at least one certificate at a non-root vertex
    for (VertexId v = 0; v < static_cast<VertexId>(g.vertices().size()); ++v)
      if (g.vertex(v).loaded != 0) {
        std::vector<int> values(g.n(), 1);
        certs->push_back({g.vertex(v).loaded, values});
        sites.push_back(v);
        break;
      }
  }
  FunctionOracle f{g.n(), g.m(),
                   [certs](const std::vector<int>& x) {
                     for (const auto& [s, values] : *certs) {
                       bool agree = true;
                       for (int j : lg::set_elements(s)) agree = agree && x[j] == values[j];
                       if (agree) return 1;
                     }
                     return 0;
                   },
                   nullptr};
  return PlantedOracle{std::move(f), std::move(sites)};
}

// Unit-intensity nonnegative feasible flow: superposition of random
// root-to-sink paths with Dirichlet-ish weights.
inline Flow random_feasible_flow(std::mt19937& rng, const LGraph& g,
                                 const std::vector<VertexId>& sinks, int paths = 4) {
  Flow fl;
  fl.values.assign(g.arcs().size(), 0.0);
  fl.sinks = sinks;
  std::set<VertexId> sinkset(sinks.begin(), sinks.end());
  std::vector<double> mass(paths);
  double total = 0;
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (double& w : mass) {
    w = u(rng);
    total += w;
  }
  for (double w : mass) {
    // random walk from the root until a sink is hit (sinks are reachable in
    // the graphs used by the tests)
    VertexId at = g.root();
    int guard = 0;
    while (!sinkset.count(at) && guard++ < 1000) {
      std::vector<int> outs = g.out_arcs(at);
      // keep only arcs that can still reach a sink
      std::vector<int> good;
      for (int e : outs) {
        std::vector<VertexId> stack{g.arc(e).to};
        std::set<VertexId> seen(stack.begin(), stack.end());
        bool ok = false;
        while (!stack.empty() && !ok) {
          VertexId v = stack.back();
          stack.pop_back();
          ok = sinkset.count(v) > 0;
          if (!ok)
            for (int e2 : g.out_arcs(v))
              if (!seen.count(g.arc(e2).to)) {
                seen.insert(g.arc(e2).to);
                stack.push_back(g.arc(e2).to);
              }
        }
        if (ok) good.push_back(e);
      }
      if (good.empty()) break;
      int e = good[rng() % good.size()];
      fl.values[e] += w / total;
      at = g.arc(e).to;
    }
  }
  return fl;
}

} // namespace lgtest
