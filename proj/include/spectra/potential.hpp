#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "spectra/geometry.hpp"
#include "spectra/symbolic.hpp"

namespace spectra {

using Float = boost::multiprecision::cpp_bin_float_50;

// Eventually periodic bi-infinite sequence:
//   ... left_period left_period left | right right_period right_period ...
// with coordinate 0 at the start of right (or of right_period if right is empty).
struct TwoSidedSequence {
  Word left_period;
  Word left;
  Word right;
  Word right_period;

  static TwoSidedSequence periodic(const Word& w, std::size_t phase = 0) {
    return {w, Word(w.begin(), w.begin() + static_cast<long>(phase)), Word(w.begin() + static_cast<long>(phase), w.end()),
            w};
  }

  Symbol at(long i) const {
    if (i >= 0) {
      auto k = static_cast<std::size_t>(i);
      if (k < right.size()) return right[k];
      return right_period[(k - right.size()) % right_period.size()];
    }
    auto j = static_cast<std::size_t>(-1 - i);
    if (j < left.size()) return left[left.size() - 1 - j];
    std::size_t lp = left_period.size();
    return left_period[lp - 1 - ((j - left.size()) % lp)];
  }

  Word slice(long from, long to) const {
    Word out;
    for (long i = from; i < to; ++i) out.push_back(at(i));
    return out;
  }

  // sigma^n: coordinate 0 moves to old coordinate n.
  TwoSidedSequence shifted(long n) const {
    long lp = static_cast<long>(left_period.size()), rp = static_cast<long>(right_period.size());
    long lo = -static_cast<long>(left.size());
    while (lo > n) lo -= lp;
    long hi = static_cast<long>(right.size());
    while (hi < n) hi += rp;
    return {left_period, slice(lo, n), slice(n, hi), right_period};
  }

  // R: coordinate n of the result is coordinate -1-n of this.
  TwoSidedSequence reflected() const {
    return {transpose(right_period), transpose(right), transpose(left), transpose(left_period)};
  }

  bool admissible(const TransitionSystem& ts) const {
    if (left_period.empty() || right_period.empty()) return false;
    Word w = left_period + left_period + left + right + right_period + right_period;
    return is_admissible(w, ts) && closes_up(left_period, ts) && closes_up(right_period, ts);
  }
};

class Potential {
 public:
  virtual ~Potential() = default;

  // Encloses f(theta) for every admissible theta with theta[-|past|..-1] = past
  // and theta[0..|future|-1] = future.
  virtual Interval bounds(WordView past, WordView future) const = 0;
  virtual Float value_hp(const TwoSidedSequence& s) const = 0;
  virtual long double value_fast(const TwoSidedSequence& s) const { return static_cast<long double>(value_hp(s)); }
  virtual std::string canonical() const = 0;

  double value(const TwoSidedSequence& s) const { return static_cast<double>(value_hp(s)); }
  double sup_bound() const { return bounds({}, {}).hi; }
};

namespace detail {

using boost::multiprecision::cpp_int;

struct QuadraticSurd {
  // (P + sqrt(D)) / Q
  cpp_int P, D, Q;
};

inline Interval widen(long double lo, long double hi) {
  const long double rel = 1e-15L;
  long double a = lo - rel * std::abs(lo) - 1e-300L;
  long double b = hi + rel * std::abs(hi) + 1e-300L;
  return {static_cast<double>(std::nextafter(static_cast<double>(a), -INFINITY)),
          static_cast<double>(std::nextafter(static_cast<double>(b), INFINITY))};
}

}  // namespace detail

// Fixed point of x = [c1; c2, ..., cp, x].
inline detail::QuadraticSurd periodic_cf_surd(WordView period) {
  using detail::cpp_int;
  cpp_int p = 1, pm = 0, q = 0, qm = 1;  // matrix [[p, pm], [q, qm]]
  for (Symbol c : period) {
    cpp_int np = c * p + pm, nq = c * q + qm;
    pm = p;
    qm = q;
    p = np;
    q = nq;
  }
  cpp_int B = p - qm;
  return {B, B * B + 4 * q * pm, 2 * q};
}

inline Float surd_value(const detail::QuadraticSurd& s) {
  return (Float(s.P) + boost::multiprecision::sqrt(Float(s.D))) / Float(s.Q);
}

// [prefix; period, period, ...] with prefix[0] (or period[0]) as integer part.
inline Float cf_value_exact(WordView prefix, WordView period) {
  Float v = surd_value(periodic_cf_surd(period));
  for (std::size_t i = prefix.size(); i-- > 0;) v = prefix[i] + 1 / v;
  return v;
}

inline long double cf_value_fast(WordView prefix, WordView period) {
  std::size_t reps = 48 / period.size() + 2;
  long double v = period[0] + 0.5L;
  for (std::size_t r = 0; r < reps; ++r)
    for (std::size_t i = period.size(); i-- > 0;) v = period[i] + 1 / v;
  for (std::size_t i = prefix.size(); i-- > 0;) v = prefix[i] + 1 / v;
  return v;
}

// f(theta) = [a0; a1, a2, ...] + [0; a_{-1}, a_{-2}, ...].
class ClassicalCFPotential : public Potential {
 public:
  explicit ClassicalCFPotential(const TransitionSystem& ts) : ts_(ts) {
    for (Symbol s : ts.alphabet())
      if (s < 1) throw MalformedInput("classical potential needs digits >= 1");
    forward_ = hulls(ts_, false);
    backward_ = hulls(ts_, true);
  }

  Interval bounds(WordView past, WordView future) const override {
    long double flo, fhi;
    if (!future.empty()) {
      auto [xl, xh] = hull_over(ts_.successors(future.back()), forward_);
      nest(future, xl, xh);
      flo = xl;
      fhi = xh;
    } else {
      auto [xl, xh] = past.empty() ? hull_over(ts_.alphabet(), forward_) : hull_over(ts_.successors(past.back()), forward_);
      flo = xl;
      fhi = xh;
    }
    long double vl, vh;
    if (!past.empty()) {
      auto [yl, yh] = hull_over(ts_.predecessors(past.front()), backward_);
      vl = yl;
      vh = yh;
      for (std::size_t i = 0; i < past.size(); ++i) {
        long double nl = past[i] + 1 / vh, nh = past[i] + 1 / vl;
        vl = nl;
        vh = nh;
      }
    } else {
      auto [yl, yh] = future.empty() ? hull_over(ts_.alphabet(), backward_) : hull_over(ts_.predecessors(future.front()), backward_);
      vl = yl;
      vh = yh;
    }
    return detail::widen(flo + 1 / vh, fhi + 1 / vl);
  }

  Float value_hp(const TwoSidedSequence& s) const override {
    Float fut = cf_value_exact(s.right, s.right_period);
    Word lrev = transpose(s.left), prev = transpose(s.left_period);
    Float past = cf_value_exact(lrev, prev);
    return fut + 1 / past;
  }

  long double value_fast(const TwoSidedSequence& s) const override {
    Word lrev = transpose(s.left), prev = transpose(s.left_period);
    return cf_value_fast(s.right, s.right_period) + 1 / cf_value_fast(lrev, prev);
  }

  std::string canonical() const override { return "classical_cf"; }

 private:
  using Hulls = std::vector<std::pair<long double, long double>>;

  // Interval hull of [s; b1, b2, ...] over admissible continuations, per symbol;
  // backward hulls follow predecessors.
  static Hulls hulls(const TransitionSystem& ts, bool backward) {
    const auto& A = ts.alphabet();
    Hulls h(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) h[i] = {A[i], A[i] + 1.0L};
    for (int it = 0; it < 400; ++it) {
      Hulls n(A.size());
      long double change = 0;
      for (std::size_t i = 0; i < A.size(); ++i) {
        const auto& nb = backward ? ts.predecessors(A[i]) : ts.successors(A[i]);
        long double mn = std::numeric_limits<long double>::infinity(), mx = 0;
        for (Symbol b : nb) {
          mn = std::min(mn, h[ts.index_of(b)].first);
          mx = std::max(mx, h[ts.index_of(b)].second);
        }
        n[i] = {A[i] + 1 / mx, A[i] + 1 / mn};
        change = std::max({change, std::abs(n[i].first - h[i].first), std::abs(n[i].second - h[i].second)});
      }
      h = n;
      if (change < 1e-19L) break;
    }
    for (auto& [lo, hi] : h) {
      lo *= 1 - 1e-15L;
      hi *= 1 + 1e-15L;
    }
    return h;
  }

  std::pair<long double, long double> hull_over(const std::vector<Symbol>& syms, const Hulls& h) const {
    long double lo = std::numeric_limits<long double>::infinity(), hi = 0;
    for (Symbol b : syms) {
      lo = std::min(lo, h[ts_.index_of(b)].first);
      hi = std::max(hi, h[ts_.index_of(b)].second);
    }
    return {lo, hi};
  }

  // [w0; w1, ..., w_{k-1}, X] for X in [xl, xh].
  static void nest(WordView w, long double& xl, long double& xh) {
    for (std::size_t i = w.size(); i-- > 0;) {
      long double nl = w[i] + 1 / xh, nh = w[i] + 1 / xl;
      xl = nl;
      xh = nh;
    }
  }

  TransitionSystem ts_;
  Hulls forward_, backward_;
};

// f(theta) = pi_u(theta_0 theta_1 ...) + pi_s(theta_{-1} theta_{-2} ...).
class AffineCoordinatePotential : public Potential {
 public:
  explicit AffineCoordinatePotential(std::shared_ptr<const AffineGeometry> g) : g_(std::move(g)) {}

  Interval bounds(WordView past, WordView future) const override {
    Interval u = future.empty() ? Interval{0, 1} : g_->u_interval(future);
    Word rp = transpose(past);
    Interval s = past.empty() ? Interval{0, 1} : g_->u_interval(rp);
    return detail::widen(static_cast<long double>(u.lo) + s.lo, static_cast<long double>(u.hi) + s.hi);
  }

  Float value_hp(const TwoSidedSequence& s) const override { return Float(value_fast(s)); }

  long double value_fast(const TwoSidedSequence& s) const override {
    Word lrev = transpose(s.left), prev = transpose(s.left_period);
    return g_->point(s.right, s.right_period) + g_->point(lrev, prev);
  }

  std::string canonical() const override { return "affine_coordinate " + g_->canonical(); }

 private:
  std::shared_ptr<const AffineGeometry> g_;
};

class ConstantPotential : public Potential {
 public:
  explicit ConstantPotential(double c) : c_(c) {}
  Interval bounds(WordView, WordView) const override { return {c_, c_}; }
  Float value_hp(const TwoSidedSequence&) const override { return Float(c_); }
  std::string canonical() const override {
    std::ostringstream os;
    os.precision(17);
    os << "constant " << c_;
    return os.str();
  }

 private:
  double c_;
};

// Locally constant: f(theta) = table(theta[-P..Q-1]), default for missing windows.
class WindowTablePotential : public Potential {
 public:
  WindowTablePotential(const TransitionSystem& ts, std::size_t past_len, std::size_t future_len,
                       std::map<Word, double> table, double fallback)
      : ts_(ts), P_(past_len), Q_(future_len), table_(std::move(table)), fallback_(fallback) {
    if (P_ + Q_ == 0) throw MalformedInput("window potential: empty window");
    for (const auto& [w, v] : table_)
      if (w.size() != P_ + Q_) throw MalformedInput("window potential: table key of wrong length " + to_string(w));
  }

  Interval bounds(WordView past, WordView future) const override {
    std::size_t kp = std::min(past.size(), P_), kf = std::min(future.size(), Q_);
    Word core(past.end() - static_cast<long>(kp), past.end());
    core.insert(core.end(), future.begin(), future.begin() + static_cast<long>(kf));
    Interval out{INFINITY, -INFINITY};
    Word w;
    // Extend the known core to the left by P-kp symbols and to the right by Q-kf symbols.
    auto right = [&](auto&& self, Word cur, std::size_t need) -> void {
      if (need == 0) {
        double v = lookup(cur);
        out.lo = std::min(out.lo, v);
        out.hi = std::max(out.hi, v);
        return;
      }
      const auto& nx = cur.empty() ? ts_.alphabet() : ts_.successors(cur.back());
      for (Symbol s : nx) {
        Word n = cur;
        n.push_back(s);
        self(self, n, need - 1);
      }
    };
    auto left = [&](auto&& self, Word cur, std::size_t need) -> void {
      if (need == 0) {
        right(right, cur, Q_ - kf);
        return;
      }
      const auto& nx = cur.empty() ? ts_.alphabet() : ts_.predecessors(cur.front());
      for (Symbol s : nx) {
        Word n{s};
        n.insert(n.end(), cur.begin(), cur.end());
        self(self, n, need - 1);
      }
    };
    left(left, core, P_ - kp);
    return out;
  }

  Float value_hp(const TwoSidedSequence& s) const override {
    return Float(lookup(s.slice(-static_cast<long>(P_), static_cast<long>(Q_))));
  }

  std::string canonical() const override {
    std::ostringstream os;
    os.precision(17);
    os << "window " << P_ << ' ' << Q_ << ' ' << fallback_;
    for (const auto& [w, v] : table_) os << ' ' << to_string(w) << '=' << v;
    return os.str();
  }

 private:
  double lookup(const Word& w) const {
    auto it = table_.find(w);
    return it == table_.end() ? fallback_ : it->second;
  }

  TransitionSystem ts_;
  std::size_t P_, Q_;
  std::map<Word, double> table_;
  double fallback_;
};

// f o R with (R theta)_n = theta_{-1-n}; lives on the transposed system.
class ReflectedPotential : public Potential {
 public:
  explicit ReflectedPotential(std::shared_ptr<const Potential> base) : base_(std::move(base)) {}

  Interval bounds(WordView past, WordView future) const override {
    Word p = transpose(future), f = transpose(past);
    return base_->bounds(p, f);
  }
  Float value_hp(const TwoSidedSequence& s) const override { return base_->value_hp(s.reflected()); }
  long double value_fast(const TwoSidedSequence& s) const override { return base_->value_fast(s.reflected()); }
  std::string canonical() const override { return "reflected " + base_->canonical(); }

 private:
  std::shared_ptr<const Potential> base_;
};

inline double markov_value(const PeriodicPoint& p, const Potential& pot) {
  Float best = -1e300;
  for (std::size_t ph = 0; ph < p.period.size(); ++ph)
    best = std::max(best, pot.value_hp(TwoSidedSequence::periodic(p.period, ph)));
  return static_cast<double>(best);
}

inline Float markov_value_hp(WordView period, const Potential& pot) {
  Word w(period.begin(), period.end());
  Float best = -1e300;
  for (std::size_t ph = 0; ph < w.size(); ++ph) best = std::max(best, pot.value_hp(TwoSidedSequence::periodic(w, ph)));
  return best;
}

inline long double markov_value_fast(WordView period, const Potential& pot) {
  Word w(period.begin(), period.end());
  long double best = -1e300L;
  for (std::size_t ph = 0; ph < w.size(); ++ph) best = std::max(best, pot.value_fast(TwoSidedSequence::periodic(w, ph)));
  return best;
}

// Max over phases in extended precision, then 50 digits on the phases within
// 1e-9 of the leader.
inline Float markov_value_refined(WordView period, const Potential& pot) {
  Word w(period.begin(), period.end());
  std::vector<long double> fast(w.size());
  for (std::size_t ph = 0; ph < w.size(); ++ph) fast[ph] = pot.value_fast(TwoSidedSequence::periodic(w, ph));
  long double top = *std::max_element(fast.begin(), fast.end());
  Float best = -1e300;
  for (std::size_t ph = 0; ph < w.size(); ++ph)
    if (fast[ph] >= top - 1e-9L) best = std::max(best, pot.value_hp(TwoSidedSequence::periodic(w, ph)));
  return best;
}

// Sign of m(period) - t, decided in extended precision, escalating to 50 digits
// only when the fast value is within 1e-9 of t.
inline bool markov_at_most(WordView period, double t, const Potential& pot) {
  if (std::isinf(t) && t > 0) return true;
  long double m = markov_value_fast(period, pot);
  if (m < t - 1e-9L) return true;
  if (m > t + 1e-9L) return false;
  return markov_value_hp(period, pot) <= Float(t);
}

inline double lagrange_value(WordView preperiod, const PeriodicPoint& period, const Potential& pot,
                             const TransitionSystem& ts) {
  Word rot = period.rotated();
  if (!closes_up(rot, ts)) throw MalformedInput("lagrange_value: period does not close up");
  if (!preperiod.empty() && !is_admissible(Word(preperiod.begin(), preperiod.end()) + rot, ts))
    throw MalformedInput("lagrange_value: preperiod does not join the period");
  return markov_value(PeriodicPoint(rot), pot);
}

inline Interval window_bounds(WordView past, WordView future, const Potential& pot, const TransitionSystem& ts) {
  if (!past.empty() && !is_admissible(past, ts)) throw MalformedInput("window_bounds: past not admissible");
  if (!future.empty() && !is_admissible(future, ts)) throw MalformedInput("window_bounds: future not admissible");
  if (!past.empty() && !future.empty() && !ts.allows(past.back(), future.front()))
    throw ConcatenationError(0, "window_bounds: inadmissible junction between past and future");
  return pot.bounds(past, future);
}

// Largest f along the orbit of an eventually periodic sequence.
inline Float sequence_sup(const TwoSidedSequence& s, const Potential& pot, long* argmax = nullptr) {
  long lp = static_cast<long>(s.left_period.size()), rp = static_cast<long>(s.right_period.size());
  long lo = -static_cast<long>(s.left.size()) - lp * std::max(3L, 48 / lp + 1);
  long hi = static_cast<long>(s.right.size()) + rp * std::max(3L, 48 / rp + 1);
  Float best = -1e300;
  for (long n = lo; n < hi; ++n) {
    Float v = pot.value_hp(s.shifted(n));
    if (v > best) {
      best = v;
      if (argmax) *argmax = n;
    }
  }
  return best;
}

enum class CertVerdict { certified, refuted, inconclusive };

inline std::string verdict_name(CertVerdict v) {
  switch (v) {
    case CertVerdict::certified: return "certified";
    case CertVerdict::refuted: return "refuted";
    default: return "inconclusive";
  }
}

struct MonotonicityCertificate {
  double c6 = 0;
  double c7 = 0;
  int depth = 0;
  CertVerdict verdict = CertVerdict::inconclusive;
  std::size_t instances = 0;
  TwoSidedSequence counterexample_a, counterexample_b;
};

// One-symbol perturbations just past a window, with shared periodic tails on
// both sides; ratios of |delta f| to the window's unstable (resp. stable) size.
inline MonotonicityCertificate certify_monotonicity(const TransitionSystem& ts, const GeometryModel& gm,
                                                    const Potential& pot, int depth) {
  if (depth < 2) throw MalformedInput("certify_monotonicity: depth must be >= 2");
  MonotonicityCertificate c;
  c.depth = depth;
  c.c6 = INFINITY;
  std::vector<Word> tails;
  for (std::size_t n = 1; n <= 2; ++n)
    for (const Word& w : words_of_length(ts, n))
      if (closes_up(w, ts)) tails.push_back(w);
  long double worst = INFINITY;
  auto record = [&](const TwoSidedSequence& a, const TwoSidedSequence& b, double size) {
    long double d = std::abs(pot.value_fast(a) - pot.value_fast(b));
    double ratio = static_cast<double>(d / size);
    ++c.instances;
    c.c7 = std::max(c.c7, ratio);
    if (ratio < worst) {
      worst = ratio;
      c.c6 = ratio;
      c.counterexample_a = a;
      c.counterexample_b = b;
    }
  };
  for (std::size_t n = 1; n + 1 <= static_cast<std::size_t>(depth); ++n) {
    for (const Word& a : words_of_length(ts, n)) {
      const auto& nx = ts.successors(a.back());
      const auto& pv = ts.predecessors(a.front());
      for (std::size_t i = 0; i < nx.size(); ++i)
        for (std::size_t j = i + 1; j < nx.size(); ++j)
          for (const Word& q : tails) {
            if (!ts.allows(nx[i], q.front()) || !ts.allows(nx[j], q.front())) continue;
            for (const Word& p : tails) {
              if (!ts.allows(p.back(), a.front())) continue;
              TwoSidedSequence s1{p, {}, a + Word{nx[i]}, q}, s2{p, {}, a + Word{nx[j]}, q};
              record(s1, s2, gm.u_size(a));
            }
          }
      // stable side: the window is the past block, perturbed just before it
      for (std::size_t i = 0; i < pv.size(); ++i)
        for (std::size_t j = i + 1; j < pv.size(); ++j)
          for (const Word& q : tails) {
            if (!ts.allows(a.back(), q.front())) continue;
            for (const Word& p : tails) {
              if (!ts.allows(p.back(), pv[i]) || !ts.allows(p.back(), pv[j])) continue;
              TwoSidedSequence s1{p, Word{pv[i]} + a, {}, q}, s2{p, Word{pv[j]} + a, {}, q};
              record(s1, s2, gm.s_size(a));
            }
          }
    }
  }
  if (c.instances == 0) {
    c.c6 = 0;
    c.verdict = CertVerdict::inconclusive;
  } else if (!(c.c6 > 1e-12)) {
    c.verdict = CertVerdict::refuted;
  } else {
    c.verdict = CertVerdict::certified;
  }
  return c;
}

}  // namespace spectra
