#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "spectra/potential.hpp"
#include "spectra/symbolic.hpp"

namespace spectra {

// Letters of B^m are (2m+1)-tuples of B words (beta_{-m} .. beta_{-1}; beta_0 .. beta_m).
using Letter = std::vector<std::uint32_t>;

struct MaximizerSet {
  std::vector<Word> B;
  std::size_t m = 0;
  std::vector<Letter> gammas;     // blocks whose central word may carry the max of f
  std::vector<Letter> remainder;  // B* = B^m - gammas
  double gamma_floor = 0;         // every gamma-centered point has f >= this somewhere in beta_0
  double rest_ceiling = 0;        // f at points whose centered block is not a gamma
  double eta_gap = 0;             // gamma_floor - rest_ceiling
  double max_lower = 0;           // largest Markov value found on short periodic B-words
  double global_gap = 0;          // max_lower - rest_ceiling: max f off the gammas < max f - global_gap
  std::size_t d_index = 0;        // padding letter d, index into remainder
  double d_markov = 0;

  bool is_gamma(const Letter& l) const { return std::binary_search(gammas.begin(), gammas.end(), l); }

  Word flatten(const Letter& l) const {
    Word out;
    for (auto i : l) out.insert(out.end(), B[i].begin(), B[i].end());
    return out;
  }
};

namespace detail {

inline Interval centered_bounds(const MaximizerSet& ms, const std::vector<std::uint32_t>& seq, std::size_t c,
                                std::size_t offset, const Potential& pot) {
  Word past, future;
  for (std::size_t i = c - ms.m; i < c; ++i) past.insert(past.end(), ms.B[seq[i]].begin(), ms.B[seq[i]].end());
  const Word& w = ms.B[seq[c]];
  past.insert(past.end(), w.begin(), w.begin() + static_cast<long>(offset));
  future.assign(w.begin() + static_cast<long>(offset), w.end());
  for (std::size_t i = c + 1; i <= c + ms.m; ++i) future.insert(future.end(), ms.B[seq[i]].begin(), ms.B[seq[i]].end());
  return pot.bounds(past, future);
}

// Letters l1 l2 ... as one B-word sequence, cyclically, and every B-position
// whose centered block is a gamma (positions are B-word indices).
inline std::vector<std::size_t> gamma_centers(const MaximizerSet& ms, const std::vector<Letter>& cycle) {
  std::vector<std::uint32_t> seq;
  for (const Letter& l : cycle) seq.insert(seq.end(), l.begin(), l.end());
  std::vector<std::size_t> out;
  const std::size_t n = seq.size(), w = 2 * ms.m + 1;
  Letter block(w);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < w; ++i) block[i] = seq[(c + n * w - ms.m + i) % n];
    if (ms.is_gamma(block)) out.push_back(c);
  }
  return out;
}

}  // namespace detail

// Blocks of B^m that can carry the maximum of f over Sigma(B), with a certified
// gap to every other centered block.
inline MaximizerSet find_maximizers(const std::vector<Word>& B, std::size_t m, const Potential& pot,
                                    const TransitionSystem& ts, bool require_gap = true,
                                    std::size_t cap = 1000000) {
  if (m < 1) throw MalformedInput("find_maximizers: m must be >= 1");
  MaximizerSet ms;
  ms.B = check_complete_subshift(B, ts).words;
  ms.m = m;
  const std::size_t n = ms.B.size(), w = 2 * m + 1;
  if (std::pow(static_cast<double>(n), static_cast<double>(w)) > static_cast<double>(cap))
    throw MalformedInput("find_maximizers: B^m has more than " + std::to_string(cap) + " blocks");

  ms.max_lower = -INFINITY;
  for (std::size_t len = 1; len <= 3; ++len) {
    if (std::pow(static_cast<double>(n), static_cast<double>(len)) > 4096) break;
    for (const Word& p : power_words(ms.B, len)) ms.max_lower = std::max(ms.max_lower, markov_value(PeriodicPoint(p), pot));
  }

  std::vector<Letter> all;
  std::vector<double> ub, lb;
  Letter cur(w, 0);
  for (;;) {
    double hi = -INFINITY, lo = -INFINITY;
    for (std::size_t off = 0; off < ms.B[cur[m]].size(); ++off) {
      Interval b = detail::centered_bounds(ms, cur, m, off, pot);
      hi = std::max(hi, b.hi);
      lo = std::max(lo, b.lo);
    }
    all.push_back(cur);
    ub.push_back(hi);
    lb.push_back(lo);
    std::size_t i = w;
    while (i > 0 && ++cur[i - 1] == n) cur[--i] = 0;
    if (i == 0) break;
  }
  ms.gamma_floor = INFINITY;
  ms.rest_ceiling = -INFINITY;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (ub[i] >= ms.max_lower) {
      ms.gammas.push_back(all[i]);
      ms.gamma_floor = std::min(ms.gamma_floor, lb[i]);
    } else {
      ms.remainder.push_back(all[i]);
      ms.rest_ceiling = std::max(ms.rest_ceiling, ub[i]);
    }
  }
  if (ms.remainder.empty())
    throw StageError("find_maximizers", "removing the maximizing blocks leaves B* empty");
  ms.eta_gap = ms.gamma_floor - ms.rest_ceiling;
  ms.global_gap = ms.max_lower - ms.rest_ceiling;
  if (!(ms.eta_gap > 0) && !require_gap) return ms;
  if (!(ms.eta_gap > 0))
    throw Inconclusive("find_maximizers: no certified gap at m=" + std::to_string(m) + " (gamma floor " +
                       std::to_string(ms.gamma_floor) + ", rest ceiling " + std::to_string(ms.rest_ceiling) +
                       "); increase m");

  // d: the B* letter of least Markov value that can surround gammas[0]
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < ms.remainder.size() && i < 4096; ++i)
    cand.emplace_back(markov_value(PeriodicPoint(ms.flatten(ms.remainder[i])), pot), i);
  std::sort(cand.begin(), cand.end());
  for (auto [v, i] : cand) {
    const Letter& d = ms.remainder[i];
    auto centers = detail::gamma_centers(ms, {d, ms.gammas.front(), d, d});
    if (centers == std::vector<std::size_t>{w + m}) {
      ms.d_index = i;
      ms.d_markov = v;
      return ms;
    }
  }
  throw Inconclusive("find_maximizers: no padding letter isolates the maximizing block; increase m");
}

struct RealizationSpec {
  std::vector<Letter> x_word;  // letters of B*
  Word d_word;
  std::size_t J = 0;           // tau^(J) truncation
  Word tau_block;              // gamma_{-J} .. d gamma d .. gamma_J, flattened
  TwoSidedSequence theta;      // X^inf d gamma d X^inf, coordinate 0 at the start of gamma's central word
  TwoSidedSequence theta_star; // (tau^(J))^inf
  long n = 0;                  // f(sigma^n theta) = m(theta); n0 = |n|
  double value = 0;            // m(theta)
  double lagrange = 0;         // l(theta*) at depth J
  double error = 0;            // |lagrange - value|
  double runner_up = 0;        // largest f outside the inserted block
  double window_ceiling = -INFINITY;  // certified bound there
};

// True when X^inf and its junctions with d contain no gamma-centered block.
inline bool avoids_gammas(const std::vector<Letter>& x, const MaximizerSet& ms) {
  const Letter& d = ms.remainder[ms.d_index];
  std::vector<Letter> cyc = x;
  cyc.push_back(d);
  if (!detail::gamma_centers(ms, x).empty()) return false;
  return detail::gamma_centers(ms, cyc).empty();
}

inline RealizationSpec realize(const std::vector<Letter>& x, const MaximizerSet& ms, const Potential& pot,
                               std::size_t min_depth = 6) {
  if (!(ms.eta_gap > 0)) throw Inconclusive("realize: maximizer set has no certified gap");
  if (x.empty()) throw MalformedInput("realize: empty x word");
  for (const Letter& l : x)
    if (l.size() != 2 * ms.m + 1 || ms.is_gamma(l) ||
        std::any_of(l.begin(), l.end(), [&](std::uint32_t i) { return i >= ms.B.size(); }))
      throw MalformedInput("realize: x word letter is not in B*");
  if (!avoids_gammas(x, ms)) throw MalformedInput("realize: x word meets a maximizing block");
  const Letter& d = ms.remainder[ms.d_index];
  const Letter& g = ms.gammas.front();
  RealizationSpec r;
  r.x_word = x;
  r.d_word = ms.flatten(d);

  Word X;
  for (const Letter& l : x) X = X + ms.flatten(l);
  Word g_left, g_right;
  for (std::size_t i = 0; i < g.size(); ++i) {
    Word& side = i < ms.m ? g_left : g_right;
    side = side + ms.B[g[i]];
  }
  r.theta = {X, r.d_word + g_left, g_right + r.d_word, X};

  // B-word layout of X^3 d gamma d X^3; symbol coordinate 0 is the start of gamma's central word
  std::vector<std::uint32_t> seq;
  std::vector<long> start;
  auto put = [&](const Letter& l) { seq.insert(seq.end(), l.begin(), l.end()); };
  for (int i = 0; i < 3; ++i)
    for (const Letter& l : x) put(l);
  put(d);
  const std::size_t g0 = seq.size();
  put(g);
  put(d);
  for (int i = 0; i < 3; ++i)
    for (const Letter& l : x) put(l);
  long pos = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    start.push_back(pos);
    pos += static_cast<long>(ms.B[seq[i]].size());
  }
  const long shift = start[g0 + ms.m];
  for (long& v : start) v -= shift;

  Float best = -1e300;
  for (long n = start[g0]; n < start[g0 + g.size()]; ++n) {
    Float v = pot.value_hp(r.theta.shifted(n));
    if (v > best) {
      best = v;
      r.n = n;
    }
  }
  r.value = static_cast<double>(best);

  // positions outside the inserted block: certified bounds from their centered
  // blocks, and exact values
  long double second = -1e300L;
  for (std::size_t c = ms.m; c + ms.m < seq.size(); ++c) {
    if (c >= g0 && c < g0 + g.size()) continue;
    for (std::size_t off = 0; off < ms.B[seq[c]].size(); ++off) {
      double ub = detail::centered_bounds(ms, seq, c, off, pot).hi;
      r.window_ceiling = std::max(r.window_ceiling, ub);
      second = std::max(second, pot.value_fast(r.theta.shifted(start[c] + static_cast<long>(off))));
    }
  }
  r.runner_up = static_cast<double>(second);
  if (!(r.window_ceiling < r.value - ms.eta_gap))
    throw VerificationFailed("realize: a window outside the inserted block is bounded only by " +
                             std::to_string(r.window_ceiling) + " >= m(theta) - eta = " +
                             std::to_string(r.value - ms.eta_gap));

  // tau^(J) with p | J, so the periodic junction repeats an adjacency of X^inf
  const std::size_t p = x.size();
  r.J = p * ((min_depth + p - 1) / p);
  Word right_part, left_part;
  for (std::size_t i = 0; i < r.J; ++i) right_part = right_part + ms.flatten(x[i % p]);
  for (std::size_t i = 0; i < r.J; ++i) left_part = ms.flatten(x[p - 1 - (i % p)]) + left_part;
  r.tau_block = left_part + r.d_word + g_left + g_right + r.d_word + right_part;
  r.theta_star = TwoSidedSequence::periodic(r.tau_block);
  r.lagrange = static_cast<double>(markov_value_refined(r.tau_block, pot));
  r.error = std::abs(r.lagrange - r.value);
  if (!(r.error <= 1e-9))
    throw VerificationFailed("realize: l(theta*) = " + std::to_string(r.lagrange) + " differs from f(sigma^n theta) = " +
                             std::to_string(r.value));
  return r;
}

struct LagrangeSample {
  std::vector<Letter> x_word;
  double value = 0;
};

// Lagrange values realized from distinct random x words of 1..4 letters.
inline std::vector<LagrangeSample> lagrange_samples(const MaximizerSet& ms, std::size_t count, std::uint64_t seed,
                                                    const Potential& pot) {
  std::mt19937_64 rng(seed);
  std::set<std::vector<Letter>> seen;
  std::vector<LagrangeSample> out;
  const std::size_t R = ms.remainder.size();
  for (std::size_t attempt = 0; out.size() < count && attempt < 200 * count + 1000; ++attempt) {
    std::size_t len = 1 + static_cast<std::size_t>(rng() % 4);
    std::vector<Letter> x;
    for (std::size_t i = 0; i < len; ++i) x.push_back(ms.remainder[static_cast<std::size_t>(rng() % R)]);
    if (seen.count(x) || !avoids_gammas(x, ms)) continue;
    seen.insert(x);
    out.push_back({x, realize(x, ms, pot).value});
  }
  return out;
}

inline std::vector<LagrangeSample> lagrange_samples(const std::vector<Word>& B, std::size_t m, std::size_t count,
                                                    std::uint64_t seed, const Potential& pot,
                                                    const TransitionSystem& ts) {
  auto alphabet = check_complete_subshift(B, ts);
  if (alphabet.words.size() == 1) return {{{}, markov_value(PeriodicPoint(alphabet.words.front()), pot)}};
  return lagrange_samples(find_maximizers(alphabet.words, m, pot, ts), count, seed, pot);
}

}  // namespace spectra
