#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "spectra/geometry.hpp"
#include "spectra/parallel.hpp"
#include "spectra/potential.hpp"
#include "spectra/sublevel.hpp"

namespace spectra {

struct CoveringRow {
  std::size_t lower = 0;  // certified-yes cylinders
  std::size_t upper = 0;  // yes + unknown
  std::vector<Word> yes_words;
  std::vector<Word> unknown_words;

  bool operator==(const CoveringRow&) const = default;
};

struct CoveringTable {
  double t = 0;
  SearchBudget budget;
  std::map<int, CoveringRow> rows;

  bool operator==(const CoveringTable&) const = default;
};

struct CoveringOptions {
  SearchBudget budget;
  int workers = 1;
  bool keep_words = false;
  std::size_t split_depth = 6;  // prefixes handed to workers; fixed so output never depends on workers
  std::size_t depth_cap = 64;
};

// N_u(t, r) brackets for every r in [r_min, r_max] from one pruned traversal:
// a word w belongs to P_r exactly for r in (scale(parent), scale(w)].
inline CoveringTable covering_table(double t, int r_min, int r_max, const TransitionSystem& ts,
                                    const GeometryModel& gm, const Potential& pot, const CoveringOptions& opt) {
  if (r_min < 0 || r_max < r_min) throw MalformedInput("covering: need 0 <= r_min <= r_max");
  SublevelOracle oracle(ts, pot, t, opt.budget);
  CoveringTable table;
  table.t = t;
  table.budget = opt.budget;
  for (int r = r_min; r <= r_max; ++r) table.rows[r] = {};
  if (oracle.core_empty()) return table;

  auto stop = [&](WordView w) { return gm.u_scale(w) >= r_max; };
  auto prune = [&](WordView w) { return oracle.refuted(w); };
  // Shallow nodes become single-node tasks; nodes at split depth root a subtree.
  struct Task {
    Word word;
    bool subtree;
  };
  std::vector<Task> tasks;
  Word cur;
  auto gen = [&](auto&& self) -> void {
    if (prune(cur)) return;
    if (cur.size() >= opt.split_depth || stop(cur)) {
      tasks.push_back({cur, true});
      return;
    }
    if (cur.size() >= opt.depth_cap) throw EnumerationOverflow("covering: depth cap exceeded at " + to_string(cur));
    tasks.push_back({cur, false});
    for (Symbol s : ts.successors(cur.back())) {
      cur.push_back(s);
      self(self);
      cur.pop_back();
    }
  };
  for (Symbol s : ts.alphabet()) {
    cur = {s};
    gen(gen);
  }

  using Partial = std::map<int, CoveringRow>;
  auto work = [&](std::size_t i) {
    Partial part;
    auto visit_node = [&](WordView w) {
      int sw = gm.u_scale(w);
      int sp = w.size() == 1 ? -1 : gm.u_scale(w.first(w.size() - 1));
      int lo = std::max(sp + 1, r_min), hi = std::min(sw, r_max);
      if (lo > hi) return;
      Membership m = oracle.query(w);
      if (m.verdict == Verdict::no_certified) return;
      for (int r = lo; r <= hi; ++r) {
        CoveringRow& row = part[r];
        ++row.upper;
        if (m.verdict == Verdict::yes_certified) ++row.lower;
        if (opt.keep_words)
          (m.verdict == Verdict::yes_certified ? row.yes_words : row.unknown_words).emplace_back(w.begin(), w.end());
      }
    };
    if (!tasks[i].subtree) {
      visit_node(tasks[i].word);
      return part;
    }
    for_each_word(
        ts, [](WordView) { return true; },
        [&](WordView w) {
          visit_node(w);
          return stop(w);
        },
        [](WordView) {}, prune, opt.depth_cap, tasks[i].word);
    return part;
  };
  auto parts = parallel_map(tasks.size(), opt.workers, work);
  for (auto& part : parts)
    for (auto& [r, row] : part) {
      CoveringRow& dst = table.rows[r];
      dst.lower += row.lower;
      dst.upper += row.upper;
      dst.yes_words.insert(dst.yes_words.end(), row.yes_words.begin(), row.yes_words.end());
      dst.unknown_words.insert(dst.unknown_words.end(), row.unknown_words.begin(), row.unknown_words.end());
    }
  for (auto& [r, row] : table.rows) {
    std::sort(row.yes_words.begin(), row.yes_words.end());
    std::sort(row.unknown_words.begin(), row.unknown_words.end());
  }
  return table;
}

inline CoveringRow covering_count(double t, int r, const TransitionSystem& ts, const GeometryModel& gm,
                                  const Potential& pot, const CoveringOptions& opt) {
  return covering_table(t, r, r, ts, gm, pot, opt).rows.at(r);
}

// N_s: the same machinery on the inverse dynamics, i.e. transposed system,
// transposed geometry and f composed with the reflection theta_n -> theta_{-1-n}.
inline CoveringTable covering_table_stable(double t, int r_min, int r_max, const TransitionSystem& ts,
                                           const GeometryModel& gm, const Potential& pot,
                                           const CoveringOptions& opt) {
  std::shared_ptr<const Potential> base(&pot, [](const Potential*) {});
  ReflectedPotential reflected(base);
  return covering_table(t, r_min, r_max, ts.transposed(), gm.transposed(), reflected, opt);
}

struct SubmultiplicativeCheck {
  bool holds = false;
  double slack = 0;  // log RHS - log LHS
  std::size_t lhs = 0;
  double rhs = 0;
  int c3 = 0;
};

// N(n+m) <= #A^{c3} N(n) N(m), upper counts on both sides.
inline SubmultiplicativeCheck check_submultiplicative(const CoveringTable& table, int n, int m, std::size_t alphabet,
                                                      int c3) {
  if (n < 1 || m < 1) throw MalformedInput("submultiplicativity: n, m >= 1");
  SubmultiplicativeCheck c;
  c.c3 = c3;
  c.lhs = table.rows.at(n + m).upper;
  c.rhs = std::pow(static_cast<double>(alphabet), c3) * static_cast<double>(table.rows.at(n).upper) *
          static_cast<double>(table.rows.at(m).upper);
  c.holds = static_cast<double>(c.lhs) <= c.rhs;
  if (c.lhs == 0 && c.rhs == 0)
    c.slack = 0;
  else if (c.lhs == 0)
    c.slack = std::numeric_limits<double>::infinity();
  else if (c.rhs == 0)
    c.slack = -std::numeric_limits<double>::infinity();
  else
    c.slack = std::log(c.rhs) - std::log(static_cast<double>(c.lhs));
  return c;
}

inline SubmultiplicativeCheck check_submultiplicative(double t, int n, int m, const TransitionSystem& ts,
                                                      const GeometryModel& gm, const Potential& pot,
                                                      const CoveringOptions& opt, int c3) {
  auto table = covering_table(t, std::min(n, m), n + m, ts, gm, pot, opt);
  return check_submultiplicative(table, n, m, ts.size(), c3);
}

enum class Method { fekete, moran, boxfit };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::fekete: return "fekete";
    case Method::moran: return "moran";
    default: return "boxfit";
  }
}

struct DimensionEstimate {
  double value = 0;
  double lower = 0;
  double upper = 0;
  int r_min = 0;
  int r_max = 0;
  Method method = Method::fekete;
  bool exact = false;
};

inline DimensionEstimate estimate_from_table(const CoveringTable& table, int r_min, int r_max, std::size_t alphabet,
                                             const GeometryConstants& k) {
  DimensionEstimate e;
  e.r_min = r_min;
  e.r_max = r_max;
  e.method = Method::fekete;
  bool zero = false;
  for (int r = r_min; r <= r_max; ++r) zero = zero || table.rows.at(r).upper == 0;
  if (zero) {
    e.exact = true;
    return e;
  }
  const double R = r_max;
  e.value = std::log(static_cast<double>(table.rows.at(r_max).upper)) / R;
  e.upper = std::numeric_limits<double>::infinity();
  for (int r = std::max(1, r_min); r <= r_max; ++r)
    e.upper = std::min(e.upper, (k.c3 * std::log(static_cast<double>(alphabet)) +
                                 std::log(static_cast<double>(table.rows.at(r).upper))) /
                                    r);
  std::size_t low = table.rows.at(r_max).lower;
  e.lower = low == 0 ? 0.0 : std::log(static_cast<double>(low)) / R - k.c1 / R;
  e.value = std::min(e.value, e.upper);
  e.lower = std::clamp(e.lower, 0.0, e.value);
  return e;
}

inline DimensionEstimate estimate_Du(double t, int r_min, int r_max, const TransitionSystem& ts,
                                     const GeometryModel& gm, const Potential& pot, const CoveringOptions& opt,
                                     const GeometryConstants& k) {
  if (r_min < 1) r_min = 1;
  auto table = covering_table(t, r_min, r_max, ts, gm, pot, opt);
  return estimate_from_table(table, r_min, r_max, ts.size(), k);
}

// Root of sum_beta u(beta)^d = 1.
inline DimensionEstimate moran_dimension(const std::vector<Word>& B, const GeometryModel& gm, double c1 = 0) {
  if (B.empty()) throw MalformedInput("moran_dimension: empty alphabet");
  DimensionEstimate e;
  e.method = Method::moran;
  if (B.size() == 1) {
    e.exact = true;
    return e;
  }
  std::vector<long double> logs;
  for (const Word& w : B) logs.push_back(std::log(static_cast<long double>(gm.u_size(w))));
  auto sum = [&](long double d) {
    long double s = 0;
    for (long double l : logs) s += std::exp(d * l);
    return s;
  };
  long double lo = 0, hi = 1;
  while (sum(hi) > 1) hi *= 2;
  while (hi - lo > 1e-12L) {
    long double mid = (lo + hi) / 2;
    (sum(mid) > 1 ? lo : hi) = mid;
  }
  e.value = static_cast<double>((lo + hi) / 2);
  long double lmin = *std::min_element(logs.begin(), logs.end());
  long double lmax = *std::max_element(logs.begin(), logs.end());
  double logn = std::log(static_cast<double>(B.size()));
  e.lower = std::min<double>(e.value, logn / static_cast<double>(-lmin + c1));
  double den = static_cast<double>(-lmax - c1);
  e.upper = den > 0 ? std::max<double>(e.value, logn / den) : std::numeric_limits<double>::infinity();
  return e;
}

// Least-squares slope of ln N(eps) against ln(1/eps), eps = 2^-1, 2^-2, ...
// down to the largest interval length.
inline double box_dimension_oracle(const std::vector<Interval>& intervals) {
  if (intervals.size() < 2) return 0.0;
  double maxlen = 0;
  for (const auto& I : intervals) maxlen = std::max(maxlen, I.width());
  std::vector<double> xs, ys;
  for (int k = 1; k < 60; ++k) {
    double eps = std::ldexp(1.0, -k);
    if (eps < maxlen) break;
    std::vector<std::pair<long long, long long>> spans;
    for (const auto& I : intervals)
      spans.emplace_back(static_cast<long long>(std::floor(I.lo / eps)), static_cast<long long>(std::floor(I.hi / eps)));
    std::sort(spans.begin(), spans.end());
    long long count = 0, covered = std::numeric_limits<long long>::min();
    for (auto [a, b] : spans) {
      if (b <= covered) continue;
      count += b - std::max(a, covered + 1) + 1;
      covered = b;
    }
    xs.push_back(k * std::log(2.0));
    ys.push_back(std::log(static_cast<double>(count)));
  }
  if (xs.size() < 2) return 0.0;
  double n = static_cast<double>(xs.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double den = n * sxx - sx * sx;
  if (den == 0) return 0.0;
  return std::max(0.0, (n * sxy - sx * sy) / den);
}

inline std::vector<Interval> cylinder_intervals(const std::vector<Word>& words, const GeometryModel& gm) {
  std::vector<Interval> out;
  out.reserve(words.size());
  for (const Word& w : words) out.push_back(gm.u_interval(w));
  return out;
}

}  // namespace spectra
