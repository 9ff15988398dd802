#pragma once

// Stage-table calculus: monomials n^a r^b l^c s^d with exact rational
// exponents, the per-stage length times sqrt(speciality) expression, and
// min-max exponent optimization as an exact rational linear program solved
// by a small dense simplex.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lg/errors.hpp"
#include "lg/rational.hpp"

namespace lg {

// ---------------------------------------------------------------------------
// Monomials and expressions

enum class Param { rho = 0, lambda = 1, sigma = 2 }; // exponents of r, l, s

inline const char* param_name(Param p) {
  switch (p) {
    case Param::rho: return "rho";
    case Param::lambda: return "lambda";
    case Param::sigma: return "sigma";
  }
  return "?";
}

struct Monomial {
  Rational n_e = 0, r_e = 0, l_e = 0, s_e = 0;

  Rational param_exponent(Param p) const {
    switch (p) {
      case Param::rho: return r_e;
      case Param::lambda: return l_e;
      case Param::sigma: return s_e;
    }
    return 0;
  }

  // total n-exponent once r = n^rho, l = n^lambda, s = n^sigma
  Rational exponent_at(const std::map<Param, Rational>& params) const {
    Rational e = n_e;
    for (auto [p, v] : params) e += param_exponent(p) * v;
    return e;
  }

  friend bool operator==(const Monomial& a, const Monomial& b) = default;
};

inline Monomial monomial(Rational n_e, Rational r_e = 0, Rational l_e = 0, Rational s_e = 0) {
  return Monomial{std::move(n_e), std::move(r_e), std::move(l_e), std::move(s_e)};
}

struct ComplexityExpr {
  std::vector<Monomial> terms; // interpreted as a sum, constants dropped
};

struct StageTable {
  std::vector<std::string> names;
  std::vector<Monomial> speciality;
  std::vector<Monomial> length;
};

// L_i * T_i^{1/2} per stage: exponents of the length plus half those of the
// speciality.
inline ComplexityExpr stage_table_to_expr(const StageTable& table) {
  if (table.speciality.size() != table.length.size())
    throw Error(Fault::validation, "stage table rows have different lengths");
  ComplexityExpr expr;
  for (std::size_t i = 0; i < table.length.size(); ++i) {
    const Monomial& t = table.speciality[i];
    const Monomial& l = table.length[i];
    expr.terms.push_back(Monomial{l.n_e + t.n_e / 2, l.r_e + t.r_e / 2, l.l_e + t.l_e / 2,
                                  l.s_e + t.s_e / 2});
  }
  return expr;
}

inline std::string monomial_str(const Monomial& mono) {
  std::string out;
  auto emit = [&](const char* sym, const Rational& e) {
    if (e == 0) return;
    if (!out.empty()) out += ' ';
    out += sym;
    if (e != 1) out += "^" + rational_str(e);
  };
  emit("n", mono.n_e);
  emit("r", mono.r_e);
  emit("l", mono.l_e);
  emit("s", mono.s_e);
  return out.empty() ? "1" : out;
}

// Numeric value at concrete n with r = n^rho etc. substituted.
inline double eval_expr(const ComplexityExpr& expr, double n,
                        const std::map<Param, Rational>& params) {
  if (!(n >= 2)) throw Error(Fault::validation, "expression evaluation requires n >= 2");
  double sum = 0;
  for (const Monomial& t : expr.terms) sum += std::pow(n, to_double(t.exponent_at(params)));
  return sum;
}

// ---------------------------------------------------------------------------
// Exact simplex: minimize c.y subject to E y = f, y >= 0

struct LpResult {
  enum class Status { optimal, infeasible, unbounded };
  Status status = Status::optimal;
  std::vector<Rational> x;
  Rational objective = 0;
};

namespace detail {

class SimplexTableau {
public:
  // rows: m constraints; cols: n variables plus rhs
  SimplexTableau(std::vector<std::vector<Rational>> rows, std::vector<int> basis)
      : rows_(std::move(rows)), basis_(std::move(basis)) {}

  // Bland's rule: smallest-index entering with negative reduced cost,
  // smallest-index leaving among minimum ratios. Never cycles.
  LpResult::Status run(const std::vector<Rational>& cost) {
    const int m = static_cast<int>(rows_.size());
    const int n = static_cast<int>(cost.size());
    while (true) {
      // reduced costs r_j = c_j - c_B . column_j
      int entering = -1;
      for (int j = 0; j < n && entering < 0; ++j) {
        Rational r = cost[j];
        for (int i = 0; i < m; ++i) r -= cost[basis_[i]] * rows_[i][j];
        if (r < 0) entering = j;
      }
      if (entering < 0) return LpResult::Status::optimal;
      int leaving = -1;
      Rational best_ratio = 0;
      for (int i = 0; i < m; ++i) {
        if (rows_[i][entering] <= 0) continue;
        Rational ratio = rhs(i) / rows_[i][entering];
        if (leaving < 0 || ratio < best_ratio ||
            (ratio == best_ratio && basis_[i] < basis_[leaving])) {
          leaving = i;
          best_ratio = ratio;
        }
      }
      if (leaving < 0) return LpResult::Status::unbounded;
      pivot(leaving, entering);
    }
  }

  void pivot(int row, int col) {
    Rational p = rows_[row][col];
    for (Rational& v : rows_[row]) v /= p;
    for (int i = 0; i < static_cast<int>(rows_.size()); ++i) {
      if (i == row || rows_[i][col] == 0) continue;
      Rational factor = rows_[i][col];
      for (std::size_t j = 0; j < rows_[i].size(); ++j) rows_[i][j] -= factor * rows_[row][j];
    }
    basis_[row] = col;
  }

  Rational rhs(int i) const { return rows_[i].back(); }
  const std::vector<int>& basis() const { return basis_; }
  std::vector<std::vector<Rational>>& rows() { return rows_; }

private:
  std::vector<std::vector<Rational>> rows_;
  std::vector<int> basis_;
};

} // namespace detail

inline LpResult simplex_min(std::vector<std::vector<Rational>> e, std::vector<Rational> f,
                            std::vector<Rational> c) {
  const int m = static_cast<int>(e.size());
  const int n = static_cast<int>(c.size());
  for (int i = 0; i < m; ++i)
    if (static_cast<int>(e[i].size()) != n)
      throw Error(Fault::validation, "simplex: ragged constraint matrix");

  // phase 1 with one artificial per row (rhs made nonnegative first)
  std::vector<std::vector<Rational>> rows(m, std::vector<Rational>(n + m + 1, Rational(0)));
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) {
    Rational sign = f[i] < 0 ? Rational(-1) : Rational(1);
    for (int j = 0; j < n; ++j) rows[i][j] = sign * e[i][j];
    rows[i][n + i] = 1;
    rows[i][n + m] = sign * f[i];
    basis[i] = n + i;
  }
  detail::SimplexTableau tab(std::move(rows), std::move(basis));
  std::vector<Rational> phase1_cost(n + m, Rational(0));
  for (int i = 0; i < m; ++i) phase1_cost[n + i] = 1;
  tab.run(phase1_cost); // phase 1 cannot be unbounded

  Rational artificial_sum = 0;
  for (int i = 0; i < m; ++i)
    if (tab.basis()[i] >= n) artificial_sum += tab.rhs(i);
  LpResult result;
  if (artificial_sum != 0) {
    result.status = LpResult::Status::infeasible;
    return result;
  }

  // drive leftover artificials out of the basis; rows that cannot be
  // repaired are redundant and get dropped along with the artificial columns
  for (int i = 0; i < m; ++i) {
    if (tab.basis()[i] < n) continue;
    int col = -1;
    for (int j = 0; j < n && col < 0; ++j)
      if (tab.rows()[i][j] != 0) col = j;
    if (col >= 0) tab.pivot(i, col);
  }
  std::vector<std::vector<Rational>> rows2;
  std::vector<int> basis2;
  for (int i = 0; i < m; ++i) {
    if (tab.basis()[i] >= n) continue;
    std::vector<Rational> row(n + 1);
    for (int j = 0; j < n; ++j) row[j] = tab.rows()[i][j];
    row[n] = tab.rows()[i][n + m];
    rows2.push_back(std::move(row));
    basis2.push_back(tab.basis()[i]);
  }
  detail::SimplexTableau tab2(std::move(rows2), std::move(basis2));
  LpResult::Status status = tab2.run(c);
  if (status == LpResult::Status::unbounded) {
    result.status = status;
    return result;
  }
  result.status = LpResult::Status::optimal;
  result.x.assign(n, Rational(0));
  for (std::size_t i = 0; i < tab2.basis().size(); ++i)
    result.x[tab2.basis()[i]] = tab2.rhs(static_cast<int>(i));
  for (int j = 0; j < n; ++j) result.objective += c[j] * result.x[j];
  return result;
}

// ---------------------------------------------------------------------------
// Min-max exponent optimization

struct ExponentSolution {
  std::map<Param, Rational> params; // optimal exponents of the free parameters
  Rational value = 0;               // optimal n-exponent of the whole expression
  std::vector<int> tight;           // indices of terms achieving the optimum
  std::vector<Rational> multipliers; // LP certificate, aligned with `tight`
};

namespace detail {

// Chebyshev LP: minimize t subject to c_i + a_i . u <= t. Free variables are
// split into differences of nonnegative ones; one slack per constraint.
// Optionally pins u_p = pinned[p] and t = *t_fixed, and minimizes `goal`
// (index into [t, u...]; -1 = minimize t).
inline LpResult minmax_lp(const ComplexityExpr& expr, const std::vector<Param>& free_params,
                          const std::map<Param, Rational>& pinned,
                          const std::optional<Rational>& t_fixed, int goal) {
  const int k = static_cast<int>(free_params.size());
  const int mrows = static_cast<int>(expr.terms.size());
  const int nvars = 2 * (k + 1) + mrows; // t+, t-, u+, u-, slacks
  std::vector<std::vector<Rational>> e;
  std::vector<Rational> f;
  auto var_plus = [&](int idx) { return 2 * idx; };
  auto var_minus = [&](int idx) { return 2 * idx + 1; };
  for (int i = 0; i < mrows; ++i) {
    std::vector<Rational> row(nvars, Rational(0));
    row[var_plus(0)] = -1; // -t
    row[var_minus(0)] = 1;
    for (int p = 0; p < k; ++p) {
      Rational a = expr.terms[i].param_exponent(free_params[p]);
      row[var_plus(p + 1)] = a;
      row[var_minus(p + 1)] = -a;
    }
    row[2 * (k + 1) + i] = 1; // slack
    e.push_back(std::move(row));
    f.push_back(-expr.terms[i].n_e);
  }
  for (const auto& [p, value] : pinned) {
    auto it = std::find(free_params.begin(), free_params.end(), p);
    if (it == free_params.end()) continue;
    int idx = static_cast<int>(it - free_params.begin()) + 1;
    std::vector<Rational> row(nvars, Rational(0));
    row[var_plus(idx)] = 1;
    row[var_minus(idx)] = -1;
    e.push_back(std::move(row));
    f.push_back(value);
  }
  if (t_fixed) {
    std::vector<Rational> row(nvars, Rational(0));
    row[var_plus(0)] = 1;
    row[var_minus(0)] = -1;
    e.push_back(std::move(row));
    f.push_back(*t_fixed);
  }
  std::vector<Rational> cost(nvars, Rational(0));
  int goal_idx = goal + 1; // -1 -> t (index 0)
  cost[var_plus(goal_idx)] = 1;
  cost[var_minus(goal_idx)] = -1;
  return simplex_min(std::move(e), std::move(f), std::move(cost));
}

} // namespace detail

// Solves min over the free parameters of max over terms of the n-exponent,
// exactly. Ties among optimal parameter vectors are broken lexicographically
// on (rho, lambda, sigma). The returned tight set carries an exact LP
// optimality certificate (nonnegative multipliers, zero combined gradient).
inline ExponentSolution optimize_exponents(const ComplexityExpr& expr,
                                           const std::vector<Param>& free_params) {
  if (expr.terms.empty()) throw Error(Fault::validation, "empty expression");
  for (const Monomial& t : expr.terms)
    for (Param p : {Param::rho, Param::lambda, Param::sigma}) {
      bool is_free =
          std::find(free_params.begin(), free_params.end(), p) != free_params.end();
      if (!is_free && t.param_exponent(p) != 0)
        throw Error(Fault::validation,
                    std::string("parameter ") + param_name(p) +
                        " appears in the table but is not optimized over");
    }

  LpResult lp = detail::minmax_lp(expr, free_params, {}, std::nullopt, -1);
  if (lp.status == LpResult::Status::unbounded)
    throw Error(Fault::validation, "exponent optimization is unbounded below: ill-posed table");
  if (lp.status != LpResult::Status::optimal)
    throw Error(Fault::validation, "exponent optimization is infeasible");
  Rational t_star = lp.objective;

  // lexicographic tie-break: pin parameters one at a time at their minimum
  ExponentSolution sol;
  sol.value = t_star;
  std::map<Param, Rational> pinned;
  for (std::size_t p = 0; p < free_params.size(); ++p) {
    LpResult sub = detail::minmax_lp(expr, free_params, pinned, t_star, static_cast<int>(p));
    if (sub.status != LpResult::Status::optimal)
      throw Error(Fault::verification, "tie-breaking subproblem failed to solve");
    pinned[free_params[p]] = sub.objective;
  }
  sol.params = pinned;

  for (std::size_t i = 0; i < expr.terms.size(); ++i)
    if (expr.terms[i].exponent_at(sol.params) == t_star) sol.tight.push_back(static_cast<int>(i));

  // certificate: lambda >= 0 on the tight set, sum 1, zero gradient
  {
    const int tcount = static_cast<int>(sol.tight.size());
    std::vector<std::vector<Rational>> e;
    std::vector<Rational> f;
    std::vector<Rational> ones(tcount, Rational(1));
    e.push_back(ones);
    f.push_back(1);
    for (Param p : free_params) {
      std::vector<Rational> row(tcount);
      for (int i = 0; i < tcount; ++i) row[i] = expr.terms[sol.tight[i]].param_exponent(p);
      e.push_back(std::move(row));
      f.push_back(0);
    }
    LpResult cert = simplex_min(std::move(e), std::move(f), std::vector<Rational>(tcount, 0));
    if (cert.status != LpResult::Status::optimal)
      throw Error(Fault::verification, "no LP optimality certificate exists for the tight set");
    sol.multipliers = cert.x;
    Rational sum = 0;
    for (const Rational& l : sol.multipliers) {
      if (l < 0) throw Error(Fault::verification, "negative certificate multiplier");
      sum += l;
    }
    if (sum != 1) throw Error(Fault::verification, "certificate multipliers do not sum to 1");
    for (Param p : free_params) {
      Rational grad = 0;
      for (int i = 0; i < tcount; ++i)
        grad += sol.multipliers[i] * expr.terms[sol.tight[i]].param_exponent(p);
      if (grad != 0) throw Error(Fault::verification, "certificate gradient is not zero");
    }
  }
  return sol;
}

} // namespace lg
