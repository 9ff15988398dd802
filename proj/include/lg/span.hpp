#pragma once

// Span programs and the compiler from Boolean learning graphs. A compiled
// program has one orthonormal coordinate per assignment over each vertex's
// loaded set; the empty assignment is the target, certificate assignments
// become free vectors, and every arc contributes two difference vectors per
// assignment on its tail. Witness sizes are computed by (constrained) least
// squares over the assembled input-vector matrices.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lg/errors.hpp"
#include "lg/lgraph.hpp"
#include "lg/util.hpp"

namespace lg {

inline constexpr std::uint64_t kDefaultDimCap = std::uint64_t{1} << 16;
inline constexpr double kRankTol = 1e-7;

struct SparseVec {
  std::vector<std::pair<int, double>> nz;

  Eigen::VectorXd dense(int dim) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    for (auto [i, x] : nz) v[i] += x;
    return v;
  }
};

struct SpanProgram {
  int dim = 0;
  int vars = 0; // Boolean input variables
  Eigen::VectorXd target;
  std::vector<SparseVec> free_vectors;
  std::map<std::pair<int, int>, std::vector<SparseVec>> groups; // (j, b) -> vectors
};

// Coordinate layout of a compiled program: vertex v owns a block of
// 2^{|loaded(v)|} coordinates, one per assignment. Assignment bits follow
// the sorted order of the loaded variables.
struct BasisIndex {
  std::vector<int> offset; // per vertex id
  int dim = 0;

  int index(VertexId v, std::uint64_t sigma_bits) const {
    return offset.at(v) + static_cast<int>(sigma_bits);
  }
};

struct CompiledSpan {
  SpanProgram program;
  BasisIndex basis;
};

namespace detail {

// Position of variable j within the sorted loaded set.
inline int bit_rank(VarSet loaded, VarIndex j) {
  return set_size(loaded & ((VarSet{1} << j) - 1));
}

// Insert bit b for a newly loaded variable at the given rank.
inline std::uint64_t insert_bit(std::uint64_t sigma, int rank, int b) {
  std::uint64_t low = sigma & ((std::uint64_t{1} << rank) - 1);
  std::uint64_t high = sigma >> rank;
  return low | (static_cast<std::uint64_t>(b) << rank) | (high << (rank + 1));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Compiler (Boolean alphabet)

inline CompiledSpan compile_boolean(const LGraph& g, const FunctionOracle& f,
                                    std::uint64_t dim_cap = kDefaultDimCap,
                                    std::uint64_t oracle_budget = kDefaultOracleBudget) {
  if (g.m() != 2)
    throw Error(Fault::validation,
                "span compiler requires a Boolean alphabet; expand through the multiplexor first");
  if (f.n != g.n() || f.m != 2) throw Error(Fault::validation, "oracle shape does not match graph");
  check_oracle_budget(f, oracle_budget);

  CompiledSpan out;
  BasisIndex& basis = out.basis;
  std::uint64_t dim = 0;
  basis.offset.resize(g.vertices().size());
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertices().size()); ++v) {
    basis.offset[v] = static_cast<int>(dim);
    dim += std::uint64_t{1} << set_size(g.vertex(v).loaded);
    if (dim > dim_cap)
      throw Error(Fault::budget, "span program dimension exceeds the cap (needs at least " +
                                     std::to_string(dim) + ")");
  }
  basis.dim = static_cast<int>(dim);

  SpanProgram& P = out.program;
  P.dim = basis.dim;
  P.vars = g.n();
  P.target = Eigen::VectorXd::Zero(P.dim);
  P.target[basis.index(g.root(), 0)] = 1.0;

  // Free vectors: assignments that are 1-certificates, checked exhaustively.
  std::vector<int> x(g.n(), 0);
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertices().size()); ++v) {
    VarSet s = g.vertex(v).loaded;
    std::vector<int> elems = set_elements(s);
    for (std::uint64_t sigma = 0; sigma < (std::uint64_t{1} << elems.size()); ++sigma) {
      for (std::size_t i = 0; i < elems.size(); ++i) x[elems[i]] = (sigma >> i) & 1;
      if (is_one_certificate(f, s, x))
        P.free_vectors.push_back(SparseVec{{{basis.index(v, sigma), 1.0}}});
    }
    for (int e : elems) x[e] = 0;
  }

  // Arc vectors: sqrt(w) (t_sigma - t_{sigma + j:=b}) labeled by (j, b).
  for (const Arc& e : g.arcs()) {
    VarSet tail = g.vertex(e.from).loaded;
    int rank = detail::bit_rank(g.vertex(e.to).loaded, e.loads);
    double scale = std::sqrt(e.weight);
    for (std::uint64_t sigma = 0; sigma < (std::uint64_t{1} << set_size(tail)); ++sigma)
      for (int b = 0; b < 2; ++b) {
        std::uint64_t sigma2 = detail::insert_bit(sigma, rank, b);
        P.groups[{e.loads, b}].push_back(
            SparseVec{{{basis.index(e.from, sigma), scale}, {basis.index(e.to, sigma2), -scale}}});
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Multiplexor expansion for non-Boolean alphabets

inline int code_width(int m) {
  int k = 0;
  while ((1 << k) < m) ++k;
  return k;
}

// Little-endian binary blocks, one per variable.
inline std::vector<int> encode_input(const std::vector<int>& x, int m) {
  int k = code_width(m);
  std::vector<int> bits(x.size() * k);
  for (std::size_t j = 0; j < x.size(); ++j)
    for (int i = 0; i < k; ++i) bits[j * k + i] = (x[j] >> i) & 1;
  return bits;
}

// Unused code points (>= m) decode to value 0 so the encoded function stays
// total and certificates transfer.
inline std::vector<int> decode_input(const std::vector<int>& bits, int n, int m) {
  int k = code_width(m);
  std::vector<int> x(n);
  for (int j = 0; j < n; ++j) {
    int v = 0;
    for (int i = 0; i < k; ++i) v |= bits[j * k + i] << i;
    x[j] = v < m ? v : 0;
  }
  return x;
}

inline FunctionOracle encode_oracle(const FunctionOracle& f) {
  int n = f.n, m = f.m;
  int k = code_width(m);
  FunctionOracle out;
  out.n = n * k;
  out.m = 2;
  out.eval = [f, n, m](const std::vector<int>& bits) { return f(decode_input(bits, n, m)); };
  if (f.domain)
    out.domain = [f, n, m](const std::vector<int>& bits) {
      return f.domain(decode_input(bits, n, m));
    };
  return out;
}

struct MuxResult {
  LGraph graph;
  int k = 0;
};

// Each m-ary variable becomes k = ceil(log2 m) Boolean variables; each arc
// becomes a k-arc path of the same weight through fresh labeled vertices, so
// both complexities scale by exactly k.
inline MuxResult multiplexor_expand(const LGraph& g) {
  if (g.m() <= 2)
    throw Error(Fault::validation, "multiplexor expansion requires an alphabet larger than 2");
  int k = code_width(g.m());
  MuxResult out{LGraph(g.n() * k, 2), k};
  LGraph& h = out.graph;

  auto expand_set = [k](VarSet s) {
    VarSet t = 0;
    for (int j : set_elements(s))
      for (int i = 0; i < k; ++i) t = set_with(t, j * k + i);
    return t;
  };

  std::vector<VertexId> image(g.vertices().size());
  for (VertexId v = 0; v < static_cast<VertexId>(g.vertices().size()); ++v)
    image[v] = h.add_vertex(expand_set(g.vertex(v).loaded), g.vertex(v).label);

  for (std::size_t e = 0; e < g.arcs().size(); ++e) {
    const Arc& a = g.arc(e);
    VertexId at = image[a.from];
    VarSet mask = expand_set(g.vertex(a.from).loaded);
    for (int i = 0; i < k; ++i) {
      mask = set_with(mask, a.loads * k + i);
      VertexId next;
      if (i + 1 == k)
        next = image[a.to];
      else
        next = h.add_vertex(mask, "mux:e" + std::to_string(e) + ":" + std::to_string(i));
      h.add_arc(at, next, a.weight);
      at = next;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation and witnesses

namespace detail {

struct Assembled {
  Eigen::MatrixXd free;    // free columns (available on every input)
  Eigen::MatrixXd grouped; // grouped columns available on this input
  Eigen::MatrixXd all;     // every input vector (for negative witness sizes)

  int available_cols() const { return static_cast<int>(free.cols() + grouped.cols()); }
  Eigen::MatrixXd available() const {
    Eigen::MatrixXd a(all.rows(), available_cols());
    a << free, grouped;
    return a;
  }
};

inline Eigen::MatrixXd densify_columns(int dim, const std::vector<const SparseVec*>& cols) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, static_cast<int>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (auto [i, val] : cols[c]->nz) m(i, static_cast<int>(c)) += val;
  return m;
}

inline Assembled assemble(const SpanProgram& P, const std::vector<int>& x) {
  if (static_cast<int>(x.size()) < P.vars)
    throw Error(Fault::validation, "input shorter than the program's variable count");
  std::vector<const SparseVec*> fr, avail, all;
  for (const SparseVec& v : P.free_vectors) {
    fr.push_back(&v);
    all.push_back(&v);
  }
  for (const auto& [key, vecs] : P.groups) {
    bool on = x[key.first] == key.second;
    for (const SparseVec& v : vecs) {
      all.push_back(&v);
      if (on) avail.push_back(&v);
    }
  }
  Assembled out;
  out.free = densify_columns(P.dim, fr);
  out.grouped = densify_columns(P.dim, avail);
  out.all = densify_columns(P.dim, all);
  return out;
}

struct PositiveSolve {
  Eigen::VectorXd w_free;    // coefficients on free vectors (cost nothing)
  Eigen::VectorXd w_grouped; // coefficients on available grouped vectors
  Eigen::VectorXd residual;  // t - A(x) w
  double rel_residual;
};

// Least squares for A_free w_f + A_grouped w_g = t minimizing |w_g|^2 only:
// free vectors carry no cost, so the grouped part is solved against the
// projection onto the orthogonal complement of the free span.
inline PositiveSolve solve_positive(const SpanProgram& P, const Assembled& a) {
  PositiveSolve s;
  Eigen::VectorXd t = P.target;
  Eigen::MatrixXd q_free; // orthonormal basis of the free span
  if (a.free.cols() > 0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a.free);
    Eigen::MatrixXd q = cod.householderQ();
    q_free = q.leftCols(cod.rank());
  }
  auto project_out = [&](const Eigen::MatrixXd& m) -> Eigen::MatrixXd {
    if (q_free.cols() == 0) return m;
    return m - q_free * (q_free.transpose() * m);
  };

  if (a.grouped.cols() == 0) {
    s.w_grouped = Eigen::VectorXd::Zero(0);
  } else {
    Eigen::MatrixXd M = project_out(a.grouped);
    Eigen::VectorXd rhs = project_out(t);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
    s.w_grouped = cod.solve(rhs);
  }
  Eigen::VectorXd rest = t;
  if (a.grouped.cols() > 0) rest -= a.grouped * s.w_grouped;
  if (a.free.cols() > 0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a.free);
    s.w_free = cod.solve(rest);
    s.residual = rest - a.free * s.w_free;
  } else {
    s.w_free = Eigen::VectorXd::Zero(0);
    s.residual = rest;
  }
  s.rel_residual = s.residual.norm() / t.norm();
  return s;
}

} // namespace detail

// True iff the target lies in the span of the available vectors (least
// squares residual under the rank tolerance).
inline bool evaluate(const SpanProgram& P, const std::vector<int>& x, double rank_tol = kRankTol) {
  if (P.target.norm() == 0) throw Error(Fault::validation, "span program has a zero target");
  detail::Assembled a = detail::assemble(P, x);
  return detail::solve_positive(P, a).rel_residual <= rank_tol;
}

struct Witness {
  enum class Kind { positive, negative };
  Kind kind;
  Eigen::VectorXd coefficients; // combination (positive, free block first) or functional (negative)
  double size = 0;
  double residual = 0; // constraint violation of the returned witness
};

// Minimum-size combination reaching the target. Free vectors carry no cost:
// the size is the squared norm of the grouped coefficients only.
inline Witness positive_witness(const SpanProgram& P, const std::vector<int>& x,
                                double rank_tol = kRankTol) {
  detail::Assembled a = detail::assemble(P, x);
  detail::PositiveSolve s = detail::solve_positive(P, a);
  if (s.rel_residual > rank_tol)
    throw Error(Fault::verification, "no positive witness: the program evaluates to 0 here");
  Eigen::VectorXd coeff(s.w_free.size() + s.w_grouped.size());
  coeff << s.w_free, s.w_grouped;
  Witness w{Witness::Kind::positive, coeff, s.w_grouped.squaredNorm(), s.residual.norm()};
  return w;
}

// Minimizer of |A^T w'|^2 subject to <w', t> = 1 and A(x)^T w' = 0, found by
// restricting to the orthogonal complement of span(t, A(x)).
inline Witness negative_witness(const SpanProgram& P, const std::vector<int>& x,
                                double rank_tol = kRankTol) {
  detail::Assembled a = detail::assemble(P, x);
  detail::PositiveSolve s = detail::solve_positive(P, a);
  if (s.rel_residual <= rank_tol)
    throw Error(Fault::verification, "no negative witness: the program evaluates to 1 here");

  Eigen::MatrixXd available = a.available();

  // Feasible point: the normalized residual of t against the available span
  // (orthogonal to everything available, inner product 1 with t).
  Eigen::VectorXd resid = P.target;
  if (available.cols() > 0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> codA(available);
    Eigen::MatrixXd q = codA.householderQ();
    Eigen::MatrixXd q1 = q.leftCols(codA.rank());
    resid -= q1 * (q1.transpose() * P.target);
  }
  Eigen::VectorXd w0 = resid / resid.squaredNorm();

  // Orthonormal basis of the complement of span([t A(x)]).
  Eigen::MatrixXd B(P.dim, available.cols() + 1);
  B.col(0) = P.target;
  if (available.cols() > 0) B.rightCols(available.cols()) = available;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> codB(B);
  int rank = static_cast<int>(codB.rank());
  Eigen::MatrixXd Q = codB.householderQ();
  Eigen::MatrixXd Z = Q.rightCols(P.dim - rank);

  Eigen::VectorXd wprime = w0;
  if (Z.cols() > 0) {
    Eigen::MatrixXd M = a.all.transpose() * Z;
    Eigen::VectorXd rhs = -(a.all.transpose() * w0);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> codM(M);
    wprime += Z * codM.solve(rhs);
  }

  double constraint = std::abs(wprime.dot(P.target) - 1.0);
  if (available.cols() > 0)
    constraint = std::max(constraint, (available.transpose() * wprime).cwiseAbs().maxCoeff());
  Witness w{Witness::Kind::negative, wprime, (a.all.transpose() * wprime).squaredNorm(),
            constraint};
  return w;
}

struct WsizeReport {
  double wsize0 = 0;
  double wsize1 = 0;
  double wsize = 0;
  std::vector<int> worst0, worst1; // inputs attaining the maxima
};

// Geometric mean of the worst-case witness sizes over a labeled domain.
// Misclassified inputs are reported; both classes must be nonempty.
inline WsizeReport wsize(const SpanProgram& P,
                         const std::vector<std::pair<std::vector<int>, int>>& domain) {
  WsizeReport rep;
  bool saw0 = false, saw1 = false;
  std::mutex mu;
  std::optional<Error> failure;
  parallel_for(domain.size(), [&](std::size_t i) {
    const auto& [x, label] = domain[i];
    try {
      bool got = evaluate(P, x);
      if (got != (label == 1)) {
        std::string xs;
        for (int v : x) xs += std::to_string(v);
        throw Error(Fault::verification,
                    "program misclassifies input x=" + xs + " (expected " +
                        std::to_string(label) + ")");
      }
      Witness w = label == 1 ? positive_witness(P, x) : negative_witness(P, x);
      std::lock_guard<std::mutex> lock(mu);
      if (label == 1) {
        saw1 = true;
        if (w.size >= rep.wsize1) {
          rep.wsize1 = w.size;
          rep.worst1 = x;
        }
      } else {
        saw0 = true;
        if (w.size >= rep.wsize0) {
          rep.wsize0 = w.size;
          rep.worst0 = x;
        }
      }
    } catch (const Error& err) {
      std::lock_guard<std::mutex> lock(mu);
      if (!failure) failure = err;
    }
  });
  if (failure) throw *failure;
  if (!saw0 || !saw1)
    throw Error(Fault::validation, "witness size needs both output classes in the domain");
  rep.wsize = std::sqrt(rep.wsize0 * rep.wsize1);
  return rep;
}

} // namespace lg
