#pragma once

// JSON schemas for every object that crosses the tool boundary. Key order
// is insertion order (nlohmann ordered_json) so reports are byte-stable.

#include "json.hpp"

#include "lg/lgraph.hpp"
#include "lg/span.hpp"

namespace lg {

using Json = nlohmann::ordered_json;

inline Json to_json(const LGraph& g) {
  Json j;
  j["n"] = g.n();
  j["m"] = g.m();
  j["vertices"] = Json::array();
  for (const LVertex& v : g.vertices()) {
    Json jv;
    jv["loaded"] = set_elements(v.loaded);
    if (!v.label.empty()) jv["label"] = v.label;
    j["vertices"].push_back(jv);
  }
  j["arcs"] = Json::array();
  for (const Arc& e : g.arcs()) {
    Json je;
    je["from"] = e.from;
    je["to"] = e.to;
    je["loads"] = e.loads;
    je["weight"] = e.weight;
    j["arcs"].push_back(je);
  }
  return j;
}

namespace detail {

// Error messages carry a JSON-pointer-ish path to the offending field.
template <typename T>
T field(const Json& j, const std::string& path, const char* key) {
  if (!j.contains(key))
    throw Error(Fault::validation, "missing field " + path + "/" + key);
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(Fault::validation, "bad value at " + path + "/" + key);
  }
}

} // namespace detail

inline LGraph lgraph_from_json(const Json& j, const std::string& path = "") {
  LGraph g(detail::field<int>(j, path, "n"), detail::field<int>(j, path, "m"));
  auto jverts = detail::field<Json>(j, path, "vertices");
  int vi = 0;
  for (const Json& jv : jverts) {
    std::string vpath = path + "/vertices/" + std::to_string(vi++);
    auto loaded = detail::field<std::vector<int>>(jv, vpath, "loaded");
    std::string label = jv.contains("label") ? jv.at("label").get<std::string>() : "";
    g.add_vertex(set_from(loaded), label);
  }
  auto jarcs = detail::field<Json>(j, path, "arcs");
  int ai = 0;
  for (const Json& je : jarcs) {
    std::string apath = path + "/arcs/" + std::to_string(ai++);
    int from = detail::field<int>(je, apath, "from");
    int to = detail::field<int>(je, apath, "to");
    double weight = detail::field<double>(je, apath, "weight");
    if (from < 0 || from >= static_cast<int>(g.vertices().size()) || to < 0 ||
        to >= static_cast<int>(g.vertices().size()))
      throw Error(Fault::validation, "arc endpoint out of range at " + apath);
    int idx = g.add_arc(from, to, weight);
    if (je.contains("loads") && je.at("loads").get<int>() != g.arc(idx).loads)
      throw Error(Fault::validation, "arc loads mismatch at " + apath + "/loads");
  }
  g.validate();
  return g;
}

inline Json to_json(const LGraph& g, const Flow& fl) {
  Json j;
  if (!fl.input.empty()) j["x"] = fl.input;
  Json values = Json::object();
  for (std::size_t e = 0; e < fl.values.size(); ++e)
    if (fl.values[e] != 0.0) values[std::to_string(e)] = fl.values[e];
  j["flow"] = values;
  j["sinks"] = fl.sinks;
  (void)g;
  return j;
}

inline Flow flow_from_json(const LGraph& g, const Json& j) {
  Flow fl;
  fl.values.assign(g.arcs().size(), 0.0);
  if (j.contains("x")) fl.input = j.at("x").get<std::vector<int>>();
  const Json values = detail::field<Json>(j, "", "flow");
  for (const auto& [key, val] : values.items()) {
    std::size_t e = std::stoul(key);
    if (e >= fl.values.size()) throw Error(Fault::validation, "flow arc index out of range: " + key);
    fl.values[e] = val.get<double>();
  }
  fl.sinks = detail::field<std::vector<int>>(j, "", "sinks");
  return fl;
}

// ---------------------------------------------------------------------------
// Span programs: {"dim", "target":[...], "free":[[...]], "groups":{"j,b":[[...]]}}

namespace detail {

inline std::vector<double> densify(const SparseVec& v, int dim) {
  std::vector<double> out(dim, 0.0);
  for (auto [i, x] : v.nz) out[i] += x;
  return out;
}

inline SparseVec sparsify(const std::vector<double>& v) {
  SparseVec out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) out.nz.push_back({static_cast<int>(i), v[i]});
  return out;
}

} // namespace detail

inline Json to_json(const SpanProgram& P) {
  Json j;
  j["dim"] = P.dim;
  j["target"] = std::vector<double>(P.target.data(), P.target.data() + P.target.size());
  j["free"] = Json::array();
  for (const SparseVec& v : P.free_vectors) j["free"].push_back(detail::densify(v, P.dim));
  j["groups"] = Json::object();
  for (const auto& [key, vecs] : P.groups) {
    Json arr = Json::array();
    for (const SparseVec& v : vecs) arr.push_back(detail::densify(v, P.dim));
    j["groups"][std::to_string(key.first) + "," + std::to_string(key.second)] = arr;
  }
  return j;
}

inline SpanProgram span_from_json(const Json& j) {
  SpanProgram P;
  P.dim = detail::field<int>(j, "", "dim");
  auto target = detail::field<std::vector<double>>(j, "", "target");
  if (static_cast<int>(target.size()) != P.dim)
    throw Error(Fault::validation, "bad value at /target: length differs from dim");
  P.target = Eigen::Map<Eigen::VectorXd>(target.data(), target.size());
  if (P.target.norm() == 0) throw Error(Fault::validation, "bad value at /target: zero vector");
  const Json free = detail::field<Json>(j, "", "free");
  for (const Json& jv : free) {
    auto v = jv.get<std::vector<double>>();
    if (static_cast<int>(v.size()) != P.dim)
      throw Error(Fault::validation, "bad value at /free: vector length differs from dim");
    P.free_vectors.push_back(detail::sparsify(v));
  }
  const Json groups = detail::field<Json>(j, "", "groups");
  for (const auto& [key, arr] : groups.items()) {
    auto comma = key.find(',');
    if (comma == std::string::npos)
      throw Error(Fault::validation, "bad group key '" + key + "' at /groups (want \"j,b\")");
    int var = std::stoi(key.substr(0, comma));
    int val = std::stoi(key.substr(comma + 1));
    if (val != 0 && val != 1)
      throw Error(Fault::validation, "bad group key '" + key + "' at /groups: value must be 0 or 1");
    for (const Json& jv : arr) {
      auto v = jv.get<std::vector<double>>();
      if (static_cast<int>(v.size()) != P.dim)
        throw Error(Fault::validation, "bad value at /groups/" + key + ": vector length differs from dim");
      P.groups[{var, val}].push_back(detail::sparsify(v));
    }
    P.vars = std::max(P.vars, var + 1);
  }
  return P;
}

inline Json to_json(const Witness& w) {
  Json j;
  j["kind"] = w.kind == Witness::Kind::positive ? "positive" : "negative";
  j["size"] = w.size;
  j["residual"] = w.residual;
  return j;
}

} // namespace lg
