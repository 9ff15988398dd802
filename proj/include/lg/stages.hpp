#pragma once

// Reduced learning graphs: layered graphs whose transitions load several
// variables at once. Stage complexities, expansion to full learning graphs
// by path substitution (with per-stage weight rescaling), symmetry-group
// orbit enumeration, specialities, and the average-length times
// sqrt(max-speciality) stage bounds.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lg/errors.hpp"
#include "lg/lgraph.hpp"
#include "lg/rational.hpp"
#include "lg/util.hpp"

namespace lg {

inline constexpr std::uint64_t kDefaultGroupBudget = 1000000;

// ---------------------------------------------------------------------------
// Reduced graphs

struct Transition {
  VertexId from = -1;
  VertexId to = -1;
  double weight = 1.0;
  int stage = 1; // connects layer stage-1 to layer stage
};

class ReducedGraph {
public:
  ReducedGraph() = default;
  ReducedGraph(int n, int m, int stages) : n_(n), m_(m), layers_(stages + 1) {}

  int n() const { return n_; }
  int m() const { return m_; }
  int stages() const { return static_cast<int>(layers_.size()) - 1; }
  const std::vector<LVertex>& vertices() const { return vertices_; }
  const LVertex& vertex(VertexId v) const { return vertices_.at(v); }
  const std::vector<std::vector<VertexId>>& layers() const { return layers_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const Transition& transition(int t) const { return transitions_.at(t); }
  std::vector<std::string>& stage_names() { return stage_names_; }
  const std::vector<std::string>& stage_names() const { return stage_names_; }

  VertexId add_vertex(int layer, VarSet loaded, std::string label = {}) {
    LVertex v{loaded, std::move(label)};
    auto it = index_.find(v);
    VertexId id;
    if (it != index_.end()) {
      id = it->second; // the same vertex may sit in consecutive layers
    } else {
      vertices_.push_back(v);
      id = static_cast<VertexId>(vertices_.size()) - 1;
      index_[v] = id;
    }
    auto& lay = layers_.at(layer);
    if (std::find(lay.begin(), lay.end(), id) == lay.end()) lay.push_back(id);
    return id;
  }

  int add_transition(int stage, VertexId from, VertexId to, double weight = 1.0) {
    if (stage < 1 || stage > stages()) throw Error(Fault::validation, "stage index out of range");
    if (!(weight > 0)) throw Error(Fault::validation, "transition weight must be positive");
    if (!subset_of(vertex(from).loaded, vertex(to).loaded))
      throw Error(Fault::validation, "transition must not unload variables");
    transitions_.push_back(Transition{from, to, weight, stage});
    return static_cast<int>(transitions_.size()) - 1;
  }

  std::optional<VertexId> find_vertex(VarSet loaded, const std::string& label = {}) const {
    auto it = index_.find(LVertex{loaded, label});
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Length = number of variables the transition loads; 0 for pure relabels.
  int length(const Transition& t) const {
    return set_size(vertex(t.to).loaded & ~vertex(t.from).loaded);
  }
  int length(int t) const { return length(transition(t)); }

  VertexId root() const {
    if (layers_.empty() || layers_[0].size() != 1)
      throw Error(Fault::validation, "layer 0 must hold exactly the initial vertex");
    return layers_[0][0];
  }

  void validate() const {
    VertexId r = root();
    if (vertex(r).loaded != 0 || !vertex(r).label.empty())
      throw Error(Fault::validation, "the initial vertex must be the empty unlabeled one");
    for (const Transition& t : transitions_) {
      bool from_ok = std::find(layers_[t.stage - 1].begin(), layers_[t.stage - 1].end(), t.from) !=
                     layers_[t.stage - 1].end();
      bool to_ok = std::find(layers_[t.stage].begin(), layers_[t.stage].end(), t.to) !=
                   layers_[t.stage].end();
      if (!from_ok || !to_ok)
        throw Error(Fault::validation, "transition endpoints disagree with its stage layers");
    }
    if (!stage_names_.empty() && static_cast<int>(stage_names_.size()) != stages())
      throw Error(Fault::validation, "stage name list length disagrees with the stage count");
  }

private:
  int n_ = 0;
  int m_ = 2;
  std::vector<LVertex> vertices_;
  std::vector<std::vector<VertexId>> layers_;
  std::vector<Transition> transitions_;
  std::vector<std::string> stage_names_;
  std::map<LVertex, VertexId> index_;
};

// Flow on a reduced graph, indexed like transitions(). Catalog flows are
// exact rationals so the symmetry checks can demand exact equality.
using RFlow = std::vector<Rational>;

// Markings are problem-specific tokens (e.g. the colliding pair for
// distinctness, the triangle vertices for the triangle problem).
using Marking = std::vector<int>;

struct FlowFamily {
  std::vector<Marking> markings;
  std::function<RFlow(const Marking&)> flow;
  std::function<bool(int /*transition*/, const Marking&)> valid;
  std::function<bool(VertexId, const Marking&)> vertex_valid; // for the final layer
};

// Exact conservation: unit source at the root, zero divergence at every
// vertex outside the final layer.
inline void check_reduced_conservation(const ReducedGraph& rg, const RFlow& flow) {
  if (flow.size() != rg.transitions().size())
    throw Error(Fault::validation, "flow is indexed by a different transition set");
  std::vector<Rational> div(rg.vertices().size(), Rational(0));
  for (std::size_t t = 0; t < flow.size(); ++t) {
    div[rg.transition(t).from] += flow[t];
    div[rg.transition(t).to] -= flow[t];
  }
  const auto& last = rg.layers().back();
  auto in_last = [&](VertexId v) { return std::find(last.begin(), last.end(), v) != last.end(); };
  VertexId root = rg.root();
  if (!in_last(root) && div[root] != 1)
    throw Error(Fault::verification, "reduced flow source intensity is not 1");
  for (VertexId v = 0; v < static_cast<VertexId>(rg.vertices().size()); ++v) {
    if (v == root || in_last(v)) continue;
    if (div[v] != 0)
      throw Error(Fault::verification,
                  "reduced flow conservation violated at vertex " + std::to_string(v));
  }
}

// max over the supplied flows of sqrt((sum l w) (sum l p^2 / w)) over the
// stage's transitions.
inline double stage_complexity(const ReducedGraph& rg, int stage, const std::vector<RFlow>& flows,
                               bool check = true) {
  if (stage < 1 || stage > rg.stages()) throw Error(Fault::validation, "stage index out of range");
  double neg = 0;
  for (const Transition& t : rg.transitions())
    if (t.stage == stage) neg += rg.length(t) * t.weight;
  double worst = 0;
  for (const RFlow& flow : flows) {
    if (check) check_reduced_conservation(rg, flow);
    double pos = 0;
    for (std::size_t t = 0; t < flow.size(); ++t) {
      const Transition& tr = rg.transition(t);
      if (tr.stage != stage) continue;
      double p = to_double(flow[t]);
      pos += rg.length(tr) * p * p / tr.weight;
    }
    worst = std::max(worst, std::sqrt(neg * pos));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Expansion into a learning graph

struct ExpandedGraph {
  LGraph graph;
  std::vector<VertexId> vertex_image;          // reduced vertex id -> graph vertex id
  std::vector<std::vector<int>> transition_arcs; // per transition: its path arcs
  std::vector<int> arc_stage;                  // per arc
  std::vector<double> stage_scale;             // divider applied per stage (index 1..k)
};

// Each transition becomes a path of length(t) arcs through fresh labeled
// vertices unique to the transition; with `rescale`, stage-i weights are
// divided by N_i = sum of l(e) w_e so the negative complexity becomes the
// number of (non-empty) stages. Zero-length transitions contribute no arcs:
// their target aliases the source image and must have a unique parent.
inline ExpandedGraph expand(const ReducedGraph& rg, bool rescale) {
  rg.validate();
  ExpandedGraph out;
  out.graph = LGraph(rg.n(), rg.m());
  out.vertex_image.assign(rg.vertices().size(), -1);
  out.transition_arcs.assign(rg.transitions().size(), {});
  out.stage_scale.assign(rg.stages() + 1, 1.0);

  if (rescale)
    for (int s = 1; s <= rg.stages(); ++s) {
      double n_i = 0;
      for (const Transition& t : rg.transitions())
        if (t.stage == s) n_i += rg.length(t) * t.weight;
      if (n_i > 0) out.stage_scale[s] = n_i;
    }

  // Alias targets of zero-length transitions to their (unique) parent.
  std::vector<int> zero_parent(rg.vertices().size(), -1);
  for (std::size_t t = 0; t < rg.transitions().size(); ++t) {
    const Transition& tr = rg.transition(t);
    if (rg.length(tr) != 0) continue;
    if (zero_parent[tr.to] != -1 && zero_parent[tr.to] != tr.from)
      throw Error(Fault::validation,
                  "zero-length transitions into one vertex must share their parent");
    zero_parent[tr.to] = tr.from;
  }

  auto image_of = [&](VertexId v, auto&& self) -> VertexId {
    if (out.vertex_image[v] >= 0) return out.vertex_image[v];
    VertexId img;
    if (zero_parent[v] >= 0) {
      img = self(zero_parent[v], self);
    } else {
      const LVertex& lv = rg.vertex(v);
      img = out.graph.add_vertex(lv.loaded, lv.label);
    }
    out.vertex_image[v] = img;
    return img;
  };

  image_of(rg.root(), image_of);
  // stage order guarantees sources are materialized before their targets
  for (int s = 1; s <= rg.stages(); ++s) {
    for (std::size_t t = 0; t < rg.transitions().size(); ++t) {
      const Transition& tr = rg.transition(t);
      if (tr.stage != s) continue;
      VertexId at = image_of(tr.from, image_of);
      int len = rg.length(tr);
      if (len == 0) {
        image_of(tr.to, image_of);
        continue;
      }
      double w = tr.weight / out.stage_scale[s];
      std::vector<int> added = set_elements(rg.vertex(tr.to).loaded & ~rg.vertex(tr.from).loaded);
      VarSet mask = rg.vertex(tr.from).loaded;
      for (int step = 0; step < len; ++step) {
        mask = set_with(mask, added[step]);
        VertexId next;
        if (step + 1 == len)
          next = image_of(tr.to, image_of);
        else
          next = out.graph.add_vertex(mask, "e" + std::to_string(t) + "#" + std::to_string(step));
        int arc = out.graph.add_arc(at, next, w);
        out.transition_arcs[t].push_back(arc);
        out.arc_stage.push_back(s);
        at = next;
      }
    }
  }
  return out;
}

// Copies a reduced flow along the expansion paths; sinks are the images of
// the final layer.
inline Flow expand_flow(const ExpandedGraph& ex, const ReducedGraph& rg, const RFlow& flow) {
  Flow out;
  out.values.assign(ex.graph.arcs().size(), 0.0);
  for (std::size_t t = 0; t < flow.size(); ++t)
    for (int arc : ex.transition_arcs[t]) out.values[arc] += to_double(flow[t]);
  std::set<VertexId> sinks;
  for (VertexId v : rg.layers().back()) sinks.insert(ex.vertex_image[v]);
  out.sinks.assign(sinks.begin(), sinks.end());
  return out;
}

// ---------------------------------------------------------------------------
// Symmetry groups and orbits

struct SymmetrySpec {
  int base_size = 0;                         // the set the generators permute
  std::vector<std::vector<int>> generators;  // permutations of [base_size]
  // Induced permutation of variable indices; identity action when null.
  std::function<std::vector<int>(const std::vector<int>&)> var_action;
  // Action on vertex labels; labels fixed when null.
  std::function<std::string(const std::vector<int>&, const std::string&)> label_action;
};

inline std::vector<int> compose_perm(const std::vector<int>& f, const std::vector<int>& g) {
  std::vector<int> h(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) h[i] = f[g[i]];
  return h;
}

inline std::vector<std::vector<int>> enumerate_group(const SymmetrySpec& spec,
                                                     std::uint64_t budget = kDefaultGroupBudget) {
  std::vector<int> id(spec.base_size);
  for (int i = 0; i < spec.base_size; ++i) id[i] = i;
  std::set<std::vector<int>> seen{id};
  std::vector<std::vector<int>> queue{id};
  for (std::size_t head = 0; head < queue.size(); ++head) {
    for (const auto& gen : spec.generators) {
      std::vector<int> next = compose_perm(gen, queue[head]);
      if (seen.insert(next).second) {
        if (seen.size() > budget) throw Error(Fault::budget, "group enumeration budget exceeded");
        queue.push_back(next);
      }
    }
  }
  return queue;
}

inline std::vector<int> symmetric_group_generator_cycle(int n) {
  std::vector<int> c(n);
  for (int i = 0; i < n; ++i) c[i] = (i + 1) % n;
  return c;
}

inline std::vector<int> symmetric_group_generator_swap(int n) {
  std::vector<int> s(n);
  for (int i = 0; i < n; ++i) s[i] = i;
  if (n >= 2) std::swap(s[0], s[1]);
  return s;
}

inline SymmetrySpec full_symmetric_group(int n) {
  SymmetrySpec spec;
  spec.base_size = n;
  if (n >= 2)
    spec.generators = {symmetric_group_generator_swap(n), symmetric_group_generator_cycle(n)};
  return spec;
}

namespace detail {

inline std::vector<int> induced_var_perm(const SymmetrySpec& spec, const std::vector<int>& base) {
  return spec.var_action ? spec.var_action(base) : base;
}

inline LVertex apply_perm(const SymmetrySpec& spec, const std::vector<int>& base,
                          const std::vector<int>& vars, const LVertex& v) {
  VarSet loaded = 0;
  for (int i : set_elements(v.loaded)) loaded = set_with(loaded, vars.at(i));
  std::string label = spec.label_action ? spec.label_action(base, v.label) : v.label;
  return LVertex{loaded, std::move(label)};
}

} // namespace detail

struct OrbitReport {
  std::vector<int> members; // indices into the target list, sorted
  int representative = -1;  // smallest member
  long long class_size = 0;
  long long valid_count = 0;
  Rational speciality = 0;  // class_size / valid_count when valid_count > 0
  bool has_valid() const { return valid_count > 0; }
};

namespace detail {

// Partition target objects into orbits under the generator closure. The
// `act` callback maps (generator index, object index) -> object index.
inline std::vector<std::vector<int>> generator_orbits(
    int count, int generators, const std::function<int(int, int)>& act) {
  std::vector<int> orbit_of(count, -1);
  std::vector<std::vector<int>> orbits;
  for (int start = 0; start < count; ++start) {
    if (orbit_of[start] >= 0) continue;
    int id = static_cast<int>(orbits.size());
    orbits.push_back({start});
    orbit_of[start] = id;
    for (std::size_t head = 0; head < orbits[id].size(); ++head)
      for (int gidx = 0; gidx < generators; ++gidx) {
        int next = act(gidx, orbits[id][head]);
        if (orbit_of[next] < 0) {
          orbit_of[next] = id;
          orbits[id].push_back(next);
        }
      }
  }
  for (auto& o : orbits) std::sort(o.begin(), o.end());
  return orbits;
}

inline std::vector<OrbitReport> finish_reports(std::vector<std::vector<int>> orbits,
                                               const std::function<bool(int)>& valid) {
  std::vector<OrbitReport> out;
  for (auto& members : orbits) {
    OrbitReport r;
    r.class_size = static_cast<long long>(members.size());
    r.representative = members.front();
    for (int m : members) r.valid_count += valid && valid(m) ? 1 : 0;
    if (r.valid_count > 0) r.speciality = Rational(r.class_size, r.valid_count);
    r.members = std::move(members);
    out.push_back(std::move(r));
  }
  return out;
}

} // namespace detail

// Orbit partition of one stage's transitions, with validity counts and
// specialities against the supplied predicate.
inline std::vector<OrbitReport> transition_orbits(const ReducedGraph& rg, const SymmetrySpec& spec,
                                                  int stage, const std::function<bool(int)>& valid,
                                                  std::uint64_t budget = kDefaultGroupBudget) {
  std::vector<int> targets;
  for (int t = 0; t < static_cast<int>(rg.transitions().size()); ++t)
    if (rg.transition(t).stage == stage) targets.push_back(t);
  std::uint64_t order = enumerate_group(spec, budget).size();
  if (order * targets.size() > budget)
    throw Error(Fault::budget, "orbit enumeration budget exceeded");

  std::map<std::tuple<int, LVertex, LVertex>, int> lookup;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Transition& t = rg.transition(targets[i]);
    lookup[{t.stage, rg.vertex(t.from), rg.vertex(t.to)}] = static_cast<int>(i);
  }
  std::vector<std::vector<int>> var_perms;
  for (const auto& gen : spec.generators) var_perms.push_back(detail::induced_var_perm(spec, gen));

  auto act = [&](int gidx, int i) {
    const Transition& t = rg.transition(targets[i]);
    LVertex from = detail::apply_perm(spec, spec.generators[gidx], var_perms[gidx], rg.vertex(t.from));
    LVertex to = detail::apply_perm(spec, spec.generators[gidx], var_perms[gidx], rg.vertex(t.to));
    auto it = lookup.find({t.stage, from, to});
    if (it == lookup.end())
      throw Error(Fault::validation, "reduced graph is not invariant under the symmetry group");
    return it->second;
  };
  auto orbits = detail::generator_orbits(static_cast<int>(targets.size()),
                                         static_cast<int>(spec.generators.size()), act);
  std::function<bool(int)> local_valid;
  if (valid) local_valid = [&](int i) { return valid(targets[i]); };
  auto reports = detail::finish_reports(std::move(orbits), local_valid);
  for (OrbitReport& r : reports) {
    for (int& m : r.members) m = targets[m];
    r.representative = r.members.front();
  }
  return reports;
}

// Orbit partition of one layer's vertices.
inline std::vector<OrbitReport> vertex_orbits(const ReducedGraph& rg, const SymmetrySpec& spec,
                                              int layer,
                                              const std::function<bool(VertexId)>& valid,
                                              std::uint64_t budget = kDefaultGroupBudget) {
  const std::vector<VertexId>& targets = rg.layers().at(layer);
  std::uint64_t order = enumerate_group(spec, budget).size();
  if (order * targets.size() > budget)
    throw Error(Fault::budget, "orbit enumeration budget exceeded");

  std::map<LVertex, int> lookup;
  for (std::size_t i = 0; i < targets.size(); ++i) lookup[rg.vertex(targets[i])] = static_cast<int>(i);
  std::vector<std::vector<int>> var_perms;
  for (const auto& gen : spec.generators) var_perms.push_back(detail::induced_var_perm(spec, gen));

  auto act = [&](int gidx, int i) {
    LVertex v = detail::apply_perm(spec, spec.generators[gidx], var_perms[gidx],
                                   rg.vertex(targets[i]));
    auto it = lookup.find(v);
    if (it == lookup.end())
      throw Error(Fault::validation, "layer is not invariant under the symmetry group");
    return it->second;
  };
  auto orbits = detail::generator_orbits(static_cast<int>(targets.size()),
                                         static_cast<int>(spec.generators.size()), act);
  std::function<bool(int)> local_valid;
  if (valid) local_valid = [&](int i) { return valid(targets[i]); };
  auto reports = detail::finish_reports(std::move(orbits), local_valid);
  for (OrbitReport& r : reports) {
    for (int& m : r.members) m = targets[m];
    r.representative = r.members.front();
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Symmetric stage bounds

struct StageBound {
  Rational avg_length = 0;     // L: sum of p_e l(e) over the stage
  Rational max_speciality = 0; // T: worst speciality among flow-carrying classes
  double bound = 0;            // L sqrt(T)
  double exact_complexity = 0; // stage complexity with weights p'(e)
  std::vector<OrbitReport> orbits;
};

// Verifies the symmetric-flow hypotheses exactly (equal flow on the valid
// transitions of every class, constant specialities and class flows across
// markings), then returns both the L sqrt(T) bound and the certified stage
// complexity obtained by weighting every transition with its class flow.
inline StageBound symmetric_stage_bound(const ReducedGraph& rg, int stage, const FlowFamily& family,
                                        const SymmetrySpec& spec,
                                        std::uint64_t budget = kDefaultGroupBudget) {
  if (family.markings.empty()) throw Error(Fault::validation, "flow family has no markings");
  StageBound out;
  bool first = true;
  std::vector<Rational> class_flow;   // p' per orbit
  std::vector<long long> class_valid; // valid count per orbit

  for (const Marking& marking : family.markings) {
    RFlow flow = family.flow(marking);
    check_reduced_conservation(rg, flow);
    auto orbits = transition_orbits(
        rg, spec, stage, [&](int t) { return family.valid(t, marking); }, budget);
    if (first) {
      class_flow.assign(orbits.size(), Rational(0));
      class_valid.assign(orbits.size(), 0);
    } else if (orbits.size() != class_flow.size()) {
      throw Error(Fault::verification, "orbit structure changed between markings");
    }

    Rational length_sum = 0;
    for (std::size_t o = 0; o < orbits.size(); ++o) {
      const OrbitReport& orb = orbits[o];
      Rational common = 0;
      bool have = false;
      for (int t : orb.members) {
        bool is_valid = family.valid(t, marking);
        if (!is_valid) {
          if (flow[t] != 0)
            throw Error(Fault::verification,
                        "flow on an invalid transition in orbit " + std::to_string(o));
          continue;
        }
        if (!have) {
          common = flow[t];
          have = true;
        } else if (flow[t] != common) {
          throw Error(Fault::verification,
                      "unequal flow inside orbit " + std::to_string(o) +
                          " (transitions " + std::to_string(orb.representative) + "...)");
        }
        length_sum += flow[t] * rg.length(t);
      }
      if (first) {
        class_flow[o] = common;
        class_valid[o] = orb.valid_count;
      } else {
        if (class_valid[o] != orb.valid_count)
          throw Error(Fault::verification,
                      "speciality of orbit " + std::to_string(o) + " depends on the marking");
        if (class_flow[o] != common)
          throw Error(Fault::verification,
                      "class flow of orbit " + std::to_string(o) + " depends on the marking");
      }
    }
    if (first) {
      out.avg_length = length_sum;
      out.orbits = orbits;
    } else if (out.avg_length != length_sum) {
      throw Error(Fault::verification, "average length depends on the marking");
    }
    first = false;
  }

  for (std::size_t o = 0; o < out.orbits.size(); ++o)
    if (class_flow[o] > 0 && out.orbits[o].speciality > out.max_speciality)
      out.max_speciality = out.orbits[o].speciality;
  out.bound = to_double(out.avg_length) * std::sqrt(to_double(out.max_speciality));

  // Certified complexity with weights w_e = p'(e): factor one sums l(e) p'
  // over every transition of a flow-carrying class, factor two sums
  // l(e) p_e^2 / p' over the valid ones (any marking; they all agree).
  Rational neg = 0, pos = 0;
  RFlow flow = family.flow(family.markings.front());
  for (std::size_t o = 0; o < out.orbits.size(); ++o) {
    if (class_flow[o] == 0) continue;
    for (int t : out.orbits[o].members) {
      neg += class_flow[o] * rg.length(t);
      if (family.valid(t, family.markings.front()))
        pos += flow[t] * flow[t] / class_flow[o] * rg.length(t);
    }
  }
  out.exact_complexity = std::sqrt(to_double(neg) * to_double(pos));
  return out;
}

// ---------------------------------------------------------------------------
// Subroutine stage

struct Subroutine {
  double negative = 0; // both complexities must agree (balanced subroutine)
  double positive = 0;
};

struct SubroutineBound {
  double avg_complexity = 0; // L = sum p_v ell(v)
  Rational max_speciality = 0;
  double bound = 0; // L sqrt(T)
  std::vector<OrbitReport> orbits;
};

// Theorem-style bound for the subroutine stage appended after the final
// layer. Every final vertex needs exactly one pre-balanced subroutine;
// unbalanced ones are rejected with their complexity pair.
inline SubroutineBound attach_subroutine(const ReducedGraph& rg, const FlowFamily& family,
                                         const SymmetrySpec& spec,
                                         const std::map<VertexId, Subroutine>& subs,
                                         std::uint64_t budget = kDefaultGroupBudget,
                                         double tol = 1e-9) {
  const auto& last = rg.layers().back();
  for (VertexId v : last) {
    auto it = subs.find(v);
    if (it == subs.end())
      throw Error(Fault::validation,
                  "vertex " + std::to_string(v) + " in the final layer has no subroutine");
    const Subroutine& s = it->second;
    if (std::abs(s.negative - s.positive) > tol * std::max(1.0, std::abs(s.negative)))
      throw Error(Fault::validation,
                  "unbalanced subroutine at vertex " + std::to_string(v) + ": (neg, pos) = (" +
                      std::to_string(s.negative) + ", " + std::to_string(s.positive) + ")");
  }
  if (family.markings.empty()) throw Error(Fault::validation, "flow family has no markings");

  SubroutineBound out;
  bool first = true;
  std::vector<Rational> class_flow;
  for (const Marking& marking : family.markings) {
    RFlow flow = family.flow(marking);
    // in-flow per final vertex
    std::map<VertexId, Rational> p_v;
    for (VertexId v : last) p_v[v] = 0;
    for (std::size_t t = 0; t < flow.size(); ++t)
      if (rg.transition(t).stage == rg.stages()) p_v[rg.transition(t).to] += flow[t];

    std::function<bool(VertexId)> valid;
    if (family.vertex_valid)
      valid = [&](VertexId v) { return family.vertex_valid(v, marking); };
    auto orbits = vertex_orbits(rg, spec, rg.stages(), valid, budget);
    if (first) class_flow.assign(orbits.size(), Rational(0));

    double length_sum = 0;
    for (std::size_t o = 0; o < orbits.size(); ++o) {
      Rational common = 0;
      bool have = false;
      for (VertexId v : orbits[o].members) {
        bool is_valid = !valid || valid(v);
        if (!is_valid) {
          if (p_v[v] != 0)
            throw Error(Fault::verification,
                        "flow through an invalid final vertex in orbit " + std::to_string(o));
          continue;
        }
        if (!have) {
          common = p_v[v];
          have = true;
        } else if (p_v[v] != common) {
          throw Error(Fault::verification, "unequal vertex flow inside orbit " + std::to_string(o));
        }
        length_sum += to_double(p_v[v]) * subs.at(v).negative;
      }
      if (first)
        class_flow[o] = common;
      else if (class_flow[o] != common)
        throw Error(Fault::verification,
                    "class vertex flow of orbit " + std::to_string(o) + " depends on the marking");
    }
    if (first) {
      out.avg_complexity = length_sum;
      out.orbits = orbits;
    }
    first = false;
  }
  for (std::size_t o = 0; o < out.orbits.size(); ++o)
    if (class_flow[o] > 0 && out.orbits[o].speciality > out.max_speciality)
      out.max_speciality = out.orbits[o].speciality;
  out.bound = out.avg_complexity * std::sqrt(to_double(out.max_speciality));
  return out;
}

// ---------------------------------------------------------------------------
// Orbit CSV rows: class_repr,class_size,valid_count,speciality

inline std::string describe_vertex(const LVertex& v) {
  std::string s = "{";
  bool sep = false;
  for (int i : set_elements(v.loaded)) {
    if (sep) s += ' ';
    s += std::to_string(i);
    sep = true;
  }
  s += '}';
  if (!v.label.empty()) s += "|" + v.label;
  return s;
}

inline std::string orbit_csv(const ReducedGraph& rg, const std::vector<OrbitReport>& reports,
                             bool vertices) {
  std::string out = "class_repr,class_size,valid_count,speciality\n";
  for (const OrbitReport& r : reports) {
    std::string repr;
    if (vertices) {
      repr = describe_vertex(rg.vertex(r.representative));
    } else {
      const Transition& t = rg.transition(r.representative);
      repr = describe_vertex(rg.vertex(t.from)) + "->" + describe_vertex(rg.vertex(t.to));
    }
    out += repr + "," + std::to_string(r.class_size) + "," + std::to_string(r.valid_count) + ",";
    out += r.has_valid() ? rational_str(r.speciality) : std::string("-");
    out += "\n";
  }
  return out;
}

} // namespace lg
