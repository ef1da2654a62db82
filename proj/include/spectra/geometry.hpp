#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "spectra/symbolic.hpp"

namespace spectra {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
};

inline Interval hull(const Interval& a, const Interval& b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

class GeometryModel {
 public:
  virtual ~GeometryModel() = default;

  virtual double u_size(WordView w) const = 0;
  virtual Interval u_interval(WordView w) const = 0;
  // sup of I^u(a) does not exceed inf of I^u(b); interiors are disjoint.
  virtual bool strictly_left(WordView a, WordView b) const = 0;
  // Geometry of the inverse dynamics, indexed by transposed words.
  virtual const GeometryModel& transposed() const { return *this; }
  virtual std::string canonical() const = 0;

  int u_scale(WordView w) const { return static_cast<int>(std::floor(-std::log(u_size(w)))); }

  double s_size(WordView w) const {
    Word t = transpose(w);
    return transposed().u_size(t);
  }
  int s_scale(WordView w) const { return static_cast<int>(std::floor(-std::log(s_size(w)))); }

  bool s_strictly_left(WordView a, WordView b) const {
    Word ta = transpose(a), tb = transpose(b);
    return transposed().strictly_left(ta, tb);
  }
};

namespace detail {

using boost::multiprecision::cpp_int;

struct Continuants {
  cpp_int p, pm, q, qm;  // p_n, p_{n-1}, q_n, q_{n-1}
};

inline Continuants continuants_exact(WordView w) {
  Continuants c{0, 1, 1, 0};
  for (Symbol a : w) {
    cpp_int p = a * c.p + c.pm;
    cpp_int q = a * c.q + c.qm;
    c.pm = c.p;
    c.qm = c.q;
    c.p = p;
    c.q = q;
  }
  return c;
}

// q_n and q_{n-1} in 128-bit integers; falls back to arbitrary precision on overflow.
inline long double cf_cylinder_length(WordView w) {
  using u128 = unsigned __int128;
  const u128 limit = (~u128(0)) / 4096;
  u128 q = 1, qm = 0;
  std::size_t i = 0;
  for (; i < w.size(); ++i) {
    u128 a = static_cast<u128>(w[i]);
    if (q > limit / (a + 1)) break;
    u128 nq = a * q + qm;
    qm = q;
    q = nq;
  }
  if (i == w.size()) {
    long double lq = static_cast<long double>(q), lqm = static_cast<long double>(qm);
    return 1.0L / (lq * (lq + lqm));
  }
  cpp_int Q = 1, Qm = 0;
  for (Symbol a : w) {
    cpp_int n = a * Q + Qm;
    Qm = Q;
    Q = n;
  }
  cpp_int den = Q * (Q + Qm);
  int shift = static_cast<int>(msb(den)) - 60;
  if (shift < 0) shift = 0;
  cpp_int top = den >> shift;
  long double m = static_cast<long double>(top);
  return std::ldexp(1.0L / m, -shift);
}

}  // namespace detail

// Gauss-map cylinders: I(a1..an) = {x in (0,1) : first digits a1..an}.
class ContinuedFractionGeometry : public GeometryModel {
 public:
  explicit ContinuedFractionGeometry(const TransitionSystem& ts) {
    for (Symbol s : ts.alphabet())
      if (s < 1) throw MalformedInput("continued-fraction geometry needs digits >= 1, got " + std::to_string(s));
  }

  double u_size(WordView w) const override { return static_cast<double>(detail::cf_cylinder_length(w)); }

  Interval u_interval(WordView w) const override {
    auto c = detail::continuants_exact(w);
    long double a = ratio(c.p, c.q);
    long double b = ratio(c.p + c.pm, c.q + c.qm);
    return {static_cast<double>(std::min(a, b)), static_cast<double>(std::max(a, b))};
  }

  bool strictly_left(WordView a, WordView b) const override {
    if (std::equal(a.begin(), a.end(), b.begin(), b.end())) return false;
    auto ea = endpoints(a), eb = endpoints(b);
    // hi(a) <= lo(b) as exact rationals
    return ea.hi_num * eb.lo_den <= eb.lo_num * ea.hi_den;
  }

  std::string canonical() const override { return "continued_fraction"; }

 private:
  struct Exact {
    detail::cpp_int lo_num, lo_den, hi_num, hi_den;
  };

  static long double ratio(const detail::cpp_int& n, const detail::cpp_int& d) {
    int shift = std::max(0, static_cast<int>(msb(d)) - 60);
    return static_cast<long double>(n >> shift) / static_cast<long double>(d >> shift);
  }

  static Exact endpoints(WordView w) {
    auto c = detail::continuants_exact(w);
    detail::cpp_int n1 = c.p, d1 = c.q, n2 = c.p + c.pm, d2 = c.q + c.qm;
    if (n1 * d2 <= n2 * d1) return {n1, d1, n2, d2};
    return {n2, d2, n1, d1};
  }
};

// Self-similar IFS on [0,1]: symbol i maps by x -> offset_i + ratio_i x, with
// equal gaps between consecutive images.
class AffineGeometry : public GeometryModel {
 public:
  AffineGeometry(const TransitionSystem& ts, std::vector<double> ratios) : ts_(ts), ratios_(std::move(ratios)) {
    if (ratios_.size() != ts.size()) throw MalformedInput("affine geometry: one ratio per symbol required");
    double total = 0;
    for (double r : ratios_) {
      if (!(r > 0 && r < 1)) throw MalformedInput("affine geometry: ratios must lie in (0,1)");
      total += r;
    }
    if (total > 1 + 1e-12) throw MalformedInput("affine geometry: images overlap");
    double gap = ratios_.size() > 1 ? (1 - total) / static_cast<double>(ratios_.size() - 1) : 0.0;
    double x = 0;
    for (double r : ratios_) {
      offsets_.push_back(x);
      x += r + gap;
    }
  }

  double ratio(Symbol s) const { return ratios_[ts_.index_of(s)]; }
  double offset(Symbol s) const { return offsets_[ts_.index_of(s)]; }

  double u_size(WordView w) const override {
    long double s = 1;
    for (Symbol a : w) s *= ratios_[ts_.index_of(a)];
    return static_cast<double>(s);
  }

  Interval u_interval(WordView w) const override {
    long double lo = 0, s = 1;
    for (Symbol a : w) {
      std::size_t i = ts_.index_of(a);
      lo += s * offsets_[i];
      s *= ratios_[i];
    }
    return {static_cast<double>(lo), static_cast<double>(lo + s)};
  }

  bool strictly_left(WordView a, WordView b) const override {
    if (std::equal(a.begin(), a.end(), b.begin(), b.end())) return false;
    Interval ia = u_interval(a), ib = u_interval(b);
    double tol = 1e-12 * std::min(ia.width(), ib.width());
    return ia.hi <= ib.lo + tol;
  }

  // Limit point of prefix followed by period repeated forever.
  long double point(WordView prefix, WordView period) const {
    long double c = 0, s = 1;
    for (Symbol a : period) {
      std::size_t i = ts_.index_of(a);
      c += s * offsets_[i];
      s *= ratios_[i];
    }
    long double x = c / (1 - s);
    long double pc = 0, ps = 1;
    for (Symbol a : prefix) {
      std::size_t i = ts_.index_of(a);
      pc += ps * offsets_[i];
      ps *= ratios_[i];
    }
    return pc + ps * x;
  }

  std::string canonical() const override {
    std::ostringstream os;
    os.precision(17);
    os << "affine";
    for (double r : ratios_) os << ' ' << r;
    return os.str();
  }

 private:
  TransitionSystem ts_;
  std::vector<double> ratios_;
  std::vector<double> offsets_;
};

// P_r: minimal words whose unstable scale first reaches r.
inline std::vector<Word> partition_at_scale(int r, const TransitionSystem& ts, const GeometryModel& gm,
                                            std::size_t depth_cap = 64) {
  if (r < 0) throw MalformedInput("partition_at_scale: r must be >= 0");
  return enumerate_words(
      ts, [](WordView) { return true; }, [&](WordView w) { return gm.u_scale(w) >= r; }, depth_cap);
}

struct GeometryConstants {
  double c1 = 0;
  double c2 = 0;
  int c3 = 0;
  double mu = 0;
  int depth = 0;
};

inline GeometryConstants measure_constants(const TransitionSystem& ts, const GeometryModel& gm, int depth) {
  if (depth < 2) throw MalformedInput("measure_constants: depth must be >= 2");
  GeometryConstants k;
  k.depth = depth;
  k.mu = std::numeric_limits<double>::infinity();
  const GeometryModel& gs = gm.transposed();
  TransitionSystem tst = ts.transposed();
  auto scan = [&](const TransitionSystem& sys, const GeometryModel& g, bool with_c2) {
    for (std::size_t n = 1; n <= static_cast<std::size_t>(depth); ++n) {
      for (const Word& w : words_of_length(sys, n)) {
        double u = g.u_size(w);
        if (with_c2) k.c2 = std::max(k.c2, std::abs(std::log(gs.u_size(w) / u)));
        for (std::size_t s = 1; s < n; ++s) {
          WordView a(w.data(), s), b(w.data() + s, n - s);
          k.c1 = std::max(k.c1, std::abs(std::log(u / (g.u_size(a) * g.u_size(b)))));
        }
        if (n >= 2) {
          WordView parent(w.data(), n - 1);
          k.mu = std::min(k.mu, g.u_size(parent) / u);
        }
      }
    }
  };
  scan(ts, gm, true);
  scan(tst, gs, false);
  double max_first = 0;
  for (Symbol a : ts.alphabet()) max_first = std::max(max_first, gm.u_size(Word{a}));
  double c3 = std::ceil(std::log(std::exp(2 * k.c1) * max_first) / std::log(k.mu));
  k.c3 = std::max(0, static_cast<int>(c3));
  return k;
}

}  // namespace spectra
