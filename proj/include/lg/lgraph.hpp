#pragma once

// Learning graphs: DAGs on subsets of input variables whose weighted arcs
// each load one variable. The two complexity measures live here — the
// negative one (total arc weight) and the positive one (worst-case minimum
// flow energy), the latter computed exactly as an electrical flow through
// the weighted graph Laplacian.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "lg/errors.hpp"
#include "lg/util.hpp"

namespace lg {

inline constexpr std::uint64_t kDefaultOracleBudget = std::uint64_t{1} << 20;

// ---------------------------------------------------------------------------
// Graph model

struct LVertex {
  VarSet loaded = 0;
  std::string label; // empty = unlabeled; distinct labels keep equal subsets apart

  friend bool operator==(const LVertex& a, const LVertex& b) = default;
  friend auto operator<=>(const LVertex& a, const LVertex& b) = default;
};

struct Arc {
  VertexId from = -1;
  VertexId to = -1;
  VarIndex loads = -1; // the single variable added along this arc
  double weight = 1.0;
};

class LGraph {
public:
  LGraph() = default;
  LGraph(int n, int m) : n_(n), m_(m) {
    if (n < 0 || n > kMaxVars) throw Error(Fault::validation, "variable count out of range");
    if (m < 2) throw Error(Fault::validation, "alphabet size must be at least 2");
  }

  int n() const { return n_; }
  int m() const { return m_; }
  const std::vector<LVertex>& vertices() const { return vertices_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  const LVertex& vertex(VertexId v) const { return vertices_.at(v); }
  const Arc& arc(int e) const { return arcs_.at(e); }

  VertexId add_vertex(VarSet loaded, std::string label = {}) {
    if (!subset_of(loaded, full_set())) throw Error(Fault::validation, "loaded set exceeds variable range");
    LVertex v{loaded, std::move(label)};
    if (index_.count(v)) throw Error(Fault::validation, "duplicate (loaded, label) vertex");
    vertices_.push_back(v);
    index_[v] = static_cast<VertexId>(vertices_.size()) - 1;
    return static_cast<VertexId>(vertices_.size()) - 1;
  }

  int add_arc(VertexId from, VertexId to, double weight = 1.0) {
    const LVertex& u = vertex(from);
    const LVertex& v = vertex(to);
    VarSet added = v.loaded & ~u.loaded;
    if (set_size(added) != 1 || (u.loaded & ~v.loaded) != 0)
      throw Error(Fault::validation, "arc must load exactly one new variable");
    if (!(weight > 0)) throw Error(Fault::validation, "arc weight must be positive");
    arcs_.push_back(Arc{from, to, set_elements(added)[0], weight});
    return static_cast<int>(arcs_.size()) - 1;
  }

  std::optional<VertexId> find_vertex(VarSet loaded, const std::string& label = {}) const {
    auto it = index_.find(LVertex{loaded, label});
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  VertexId root() const {
    auto r = find_vertex(0, {});
    if (!r) throw Error(Fault::validation, "graph has no root (empty unlabeled vertex)");
    return *r;
  }

  VarSet full_set() const { return n_ == 64 ? ~VarSet{0} : (VarSet{1} << n_) - 1; }

  // Checks the structural invariants: root exists, arcs grow subsets by one,
  // weights positive, everything reachable from the root.
  void validate() const {
    VertexId r = root();
    std::vector<char> seen(vertices_.size(), 0);
    std::vector<VertexId> stack{r};
    seen[r] = 1;
    while (!stack.empty()) {
      VertexId u = stack.back();
      stack.pop_back();
      for (const Arc& e : arcs_)
        if (e.from == u && !seen[e.to]) {
          seen[e.to] = 1;
          stack.push_back(e.to);
        }
    }
    for (std::size_t v = 0; v < vertices_.size(); ++v)
      if (!seen[v])
        throw Error(Fault::validation, "vertex " + std::to_string(v) + " not reachable from the root");
    for (const Arc& e : arcs_) {
      if (!(e.weight > 0)) throw Error(Fault::validation, "non-positive arc weight");
      VarSet added = vertex(e.to).loaded & ~vertex(e.from).loaded;
      if (set_size(added) != 1 || set_elements(added)[0] != e.loads)
        throw Error(Fault::validation, "arc loads field inconsistent with endpoints");
    }
  }

  std::vector<int> out_arcs(VertexId v) const {
    std::vector<int> out;
    for (int e = 0; e < static_cast<int>(arcs_.size()); ++e)
      if (arcs_[e].from == v) out.push_back(e);
    return out;
  }

  std::vector<int> in_arcs(VertexId v) const {
    std::vector<int> out;
    for (int e = 0; e < static_cast<int>(arcs_.size()); ++e)
      if (arcs_[e].to == v) out.push_back(e);
    return out;
  }

private:
  int n_ = 0;
  int m_ = 2;
  std::vector<LVertex> vertices_;
  std::vector<Arc> arcs_;
  std::map<LVertex, VertexId> index_;
};

// ---------------------------------------------------------------------------
// Function oracles

// Total function [m]^n -> {0,1}, optionally restricted to a promise domain.
// Brute-force loops skip inputs outside the domain.
struct FunctionOracle {
  int n = 0;
  int m = 2;
  std::function<int(const std::vector<int>&)> eval;
  std::function<bool(const std::vector<int>&)> domain; // null = total

  bool in_domain(const std::vector<int>& x) const { return !domain || domain(x); }
  int operator()(const std::vector<int>& x) const { return eval(x); }
};

inline FunctionOracle table_oracle(int n, int m, std::vector<std::uint8_t> table) {
  std::uint64_t want = checked_pow(static_cast<std::uint64_t>(m), n);
  if (table.size() != want) throw Error(Fault::validation, "truth table size does not match m^n");
  auto tab = std::make_shared<std::vector<std::uint8_t>>(std::move(table));
  return FunctionOracle{n, m,
                        [n, m, tab](const std::vector<int>& x) {
                          std::uint64_t idx = 0, stride = 1;
                          for (int i = 0; i < n; ++i) {
                            idx += stride * static_cast<std::uint64_t>(x[i]);
                            stride *= m;
                          }
                          return static_cast<int>((*tab)[idx]);
                        },
                        nullptr};
}

// Does the assignment x|_s force f = 1 on every agreeing input (within the
// promise domain)? Exhaustive over the free coordinates.
inline bool is_one_certificate(const FunctionOracle& f, VarSet s, const std::vector<int>& x) {
  std::vector<int> free_coords;
  for (int i = 0; i < f.n; ++i)
    if (!set_contains(s, i)) free_coords.push_back(i);
  std::vector<int> y = x;
  std::vector<int> counter(free_coords.size(), 0);
  for (std::size_t i = 0; i < free_coords.size(); ++i) y[free_coords[i]] = 0;
  while (true) {
    if (f.in_domain(y) && f(y) != 1) return false;
    std::size_t i = 0;
    for (; i < free_coords.size(); ++i) {
      if (++y[free_coords[i]] < f.m) break;
      y[free_coords[i]] = 0;
    }
    if (i == free_coords.size()) return true;
  }
}

inline void check_oracle_budget(const FunctionOracle& f, std::uint64_t budget) {
  if (checked_pow(static_cast<std::uint64_t>(f.m), f.n) > budget)
    throw Error(Fault::budget, "m^n exceeds the brute-force budget");
}

// ---------------------------------------------------------------------------
// Negative complexity and accepting vertices

inline double neg_complexity(const LGraph& g) {
  double sum = 0;
  for (const Arc& e : g.arcs()) sum += e.weight;
  return sum;
}

// Vertices whose loaded assignment is a 1-certificate for x, established by
// brute force over all agreeing inputs.
inline std::vector<VertexId> accepting_vertices(const LGraph& g, const FunctionOracle& f,
                                                const std::vector<int>& x,
                                                std::uint64_t budget = kDefaultOracleBudget) {
  if (static_cast<int>(x.size()) != g.n() || f.n != g.n() || f.m != g.m())
    throw Error(Fault::validation, "oracle/input shape does not match the graph");
  if (!f.in_domain(x) || f(x) != 1)
    throw Error(Fault::validation, "accepting vertices are defined for 1-inputs only");
  check_oracle_budget(f, budget);
  std::vector<VertexId> out;
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertices().size()); ++v)
    if (is_one_certificate(f, g.vertex(v).loaded, x)) out.push_back(v);
  return out;
}

// ---------------------------------------------------------------------------
// Flows

struct Flow {
  std::vector<double> values;    // indexed like LGraph::arcs()
  std::vector<VertexId> sinks;   // vertices allowed to absorb flow
  std::vector<int> input;        // the x this flow serves, if any
};

namespace detail {

inline bool is_sink(const Flow& fl, VertexId v) {
  return std::find(fl.sinks.begin(), fl.sinks.end(), v) != fl.sinks.end();
}

// Net out-flow minus in-flow per vertex.
inline std::vector<double> divergence(const LGraph& g, const Flow& fl) {
  std::vector<double> div(g.vertices().size(), 0.0);
  for (std::size_t e = 0; e < g.arcs().size(); ++e) {
    div[g.arc(e).from] += fl.values[e];
    div[g.arc(e).to] -= fl.values[e];
  }
  return div;
}

} // namespace detail

// Verifies unit source intensity at the root and conservation at every
// non-root non-sink vertex, then returns the flow energy sum p_e^2 / w_e.
inline double flow_complexity(const LGraph& g, const Flow& fl, double tol = 1e-9) {
  if (fl.values.size() != g.arcs().size())
    throw Error(Fault::validation, "flow is indexed by a different arc set");
  VertexId root = g.root();
  std::vector<double> div = detail::divergence(g, fl);
  if (!detail::is_sink(fl, root) && std::abs(div[root] - 1.0) > tol)
    throw Error(Fault::verification, "flow source intensity at the root is not 1");
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertices().size()); ++v) {
    if (v == root || detail::is_sink(fl, v)) continue;
    if (std::abs(div[v]) > tol)
      throw Error(Fault::verification,
                  "flow conservation violated at vertex " + std::to_string(v));
  }
  double energy = 0;
  for (std::size_t e = 0; e < g.arcs().size(); ++e)
    energy += fl.values[e] * fl.values[e] / g.arc(e).weight;
  return energy;
}

// ---------------------------------------------------------------------------
// Optimal flow = electrical flow

struct ElectricalFlow {
  Flow flow;
  double energy = 0;
  std::vector<double> potentials; // one per vertex; sinks grounded at 0
};

// Minimum-energy unit flow from the root into the given sink set. All sinks
// are contracted into one grounded super-sink; arc weights act as
// conductances, and the weighted Laplacian system yields both the flow
// (p_e = w_e (phi_from - phi_to)) and the energy (effective resistance).
inline ElectricalFlow optimal_flow(const LGraph& g, const std::vector<VertexId>& sinks) {
  if (sinks.empty()) throw Error(Fault::validation, "sink set is empty");
  const std::size_t V = g.vertices().size();
  VertexId root = g.root();

  std::vector<char> sink_mark(V, 0);
  for (VertexId s : sinks) sink_mark.at(s) = 1;

  ElectricalFlow result;
  result.flow.values.assign(g.arcs().size(), 0.0);
  result.flow.sinks = sinks;
  result.potentials.assign(V, 0.0);
  if (sink_mark[root]) return result; // already at a sink: zero flow, zero energy

  // Undirected component of the root; flow may run against arc orientation.
  std::vector<char> comp(V, 0);
  comp[root] = 1;
  for (std::vector<VertexId> stack{root}; !stack.empty();) {
    VertexId u = stack.back();
    stack.pop_back();
    for (const Arc& e : g.arcs()) {
      VertexId o = -1;
      if (e.from == u) o = e.to;
      else if (e.to == u) o = e.from;
      if (o >= 0 && !comp[o]) {
        comp[o] = 1;
        stack.push_back(o);
      }
    }
  }
  bool reachable = false;
  for (VertexId s : sinks) reachable = reachable || comp[s];
  if (!reachable) throw Error(Fault::validation, "no sink is connected to the root: no feasible flow");

  // Unknown potentials: component vertices that are not grounded sinks.
  std::vector<int> unknown_of(V, -1);
  std::vector<VertexId> unknowns;
  for (VertexId v = 0; v < static_cast<VertexId>(V); ++v)
    if (comp[v] && !sink_mark[v]) {
      unknown_of[v] = static_cast<int>(unknowns.size());
      unknowns.push_back(v);
    }

  const int U = static_cast<int>(unknowns.size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(U, U);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(U);
  b[unknown_of[root]] = 1.0;
  for (const Arc& e : g.arcs()) {
    int iu = unknown_of[e.from], iv = unknown_of[e.to];
    if (iu < 0 && iv < 0) continue;
    if (iu >= 0) L(iu, iu) += e.weight;
    if (iv >= 0) L(iv, iv) += e.weight;
    if (iu >= 0 && iv >= 0) {
      L(iu, iv) -= e.weight;
      L(iv, iu) -= e.weight;
    }
  }

  // Grounded Laplacian of a connected component is positive definite; a
  // pivoted factorization plus one refinement step keeps residuals tiny.
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(L);
  Eigen::VectorXd phi = lu.solve(b);
  phi += lu.solve(b - L * phi);
  double residual = (L * phi - b).norm();
  if (!phi.allFinite() || residual > 1e-6 * std::max(1.0, phi.norm()))
    throw Error(Fault::validation, "singular electrical system: graph structure error");

  for (int i = 0; i < U; ++i) result.potentials[unknowns[i]] = phi[i];
  double energy = 0;
  for (std::size_t e = 0; e < g.arcs().size(); ++e) {
    const Arc& a = g.arc(e);
    double p = a.weight * (result.potentials[a.from] - result.potentials[a.to]);
    if (!comp[a.from] && !comp[a.to]) p = 0;
    result.flow.values[e] = p;
    energy += p * p / a.weight;
  }
  result.energy = energy;
  return result;
}

// ---------------------------------------------------------------------------
// Graph complexity

struct Complexity {
  double negative = 0;
  double positive = 0;
  double total = 0;
  std::vector<int> worst_input; // a 1-input attaining the positive complexity
};

// negative = total weight; positive = max over 1-inputs of the optimal flow
// energy into that input's accepting vertices; total = geometric mean.
inline Complexity graph_complexity(const LGraph& g, const FunctionOracle& f,
                                   std::uint64_t budget = kDefaultOracleBudget) {
  check_oracle_budget(f, budget);
  Complexity c;
  c.negative = neg_complexity(g);

  std::vector<std::vector<int>> ones;
  std::vector<int> x = first_input(g.n());
  do {
    if (f.in_domain(x) && f(x) == 1) ones.push_back(x);
  } while (next_input(x, g.m()));

  std::vector<double> energy(ones.size(), 0.0);
  std::mutex fail_mutex;
  std::optional<Error> failure;
  parallel_for(ones.size(), [&](std::size_t i) {
    try {
      std::vector<VertexId> acc = accepting_vertices(g, f, ones[i], budget);
      if (acc.empty())
        throw Error(Fault::verification,
                    "graph does not compute f: no accepting vertex for a 1-input");
      energy[i] = optimal_flow(g, acc).energy;
    } catch (const Error& err) {
      std::lock_guard<std::mutex> lock(fail_mutex);
      if (!failure) failure = err;
    }
  });
  if (failure) throw *failure;

  for (std::size_t i = 0; i < ones.size(); ++i)
    if (energy[i] >= c.positive) {
      c.positive = energy[i];
      c.worst_input = ones[i];
    }
  c.total = std::sqrt(c.negative * c.positive);
  return c;
}

// ---------------------------------------------------------------------------
// Duplicate-vertex merging

// Repeatedly (a) combines parallel arcs by summing weights and (b) merges
// sibling vertices that share a parent and a loaded set but differ in label.
// Both steps can only decrease the complexity of the graph on any oracle.
inline LGraph merge_duplicates(const LGraph& g) {
  struct MutArc {
    VertexId from, to;
    double weight;
  };
  std::vector<LVertex> verts(g.vertices().begin(), g.vertices().end());
  std::vector<MutArc> arcs;
  for (const Arc& e : g.arcs()) arcs.push_back({e.from, e.to, e.weight});
  std::vector<char> alive(verts.size(), 1);

  auto combine_parallel = [&]() {
    std::map<std::pair<VertexId, VertexId>, std::size_t> seen;
    std::vector<MutArc> next;
    for (const MutArc& e : arcs) {
      auto key = std::make_pair(e.from, e.to);
      auto it = seen.find(key);
      if (it == seen.end()) {
        seen[key] = next.size();
        next.push_back(e);
      } else {
        next[it->second].weight += e.weight;
      }
    }
    arcs.swap(next);
  };

  combine_parallel();
  while (true) {
    // Look for two arcs out of one parent into distinct copies of one subset.
    VertexId keep = -1, drop = -1;
    for (std::size_t i = 0; i < arcs.size() && drop < 0; ++i)
      for (std::size_t j = i + 1; j < arcs.size() && drop < 0; ++j) {
        if (arcs[i].from != arcs[j].from || arcs[i].to == arcs[j].to) continue;
        if (verts[arcs[i].to].loaded == verts[arcs[j].to].loaded) {
          keep = std::min(arcs[i].to, arcs[j].to);
          drop = std::max(arcs[i].to, arcs[j].to);
        }
      }
    if (drop < 0) break;
    for (MutArc& e : arcs) {
      if (e.from == drop) e.from = keep;
      if (e.to == drop) e.to = keep;
    }
    alive[drop] = 0;
    combine_parallel();
  }

  LGraph out(g.n(), g.m());
  std::vector<VertexId> remap(verts.size(), -1);
  for (std::size_t v = 0; v < verts.size(); ++v)
    if (alive[v]) remap[v] = out.add_vertex(verts[v].loaded, verts[v].label);
  for (const MutArc& e : arcs) out.add_arc(remap[e.from], remap[e.to], e.weight);
  return out;
}

// Multiplies every arc weight by c > 0 (negative complexity scales by c,
// optimal positive complexity by 1/c, total unchanged).
inline LGraph scale_weights(const LGraph& g, double c) {
  if (!(c > 0)) throw Error(Fault::validation, "scale factor must be positive");
  LGraph out(g.n(), g.m());
  for (const LVertex& v : g.vertices()) out.add_vertex(v.loaded, v.label);
  for (const Arc& e : g.arcs()) out.add_arc(e.from, e.to, e.weight * c);
  return out;
}

} // namespace lg
