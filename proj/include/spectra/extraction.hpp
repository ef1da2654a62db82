#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "spectra/dimension.hpp"

namespace spectra {

struct ExtractionParams {
  double t = 3.1;
  double eta = 0.2;
  double tau = 0;  // 0: eta / 100
  int r0 = 4;
  std::size_t k = 6;
  std::size_t L = 2;
  std::size_t spacing = 2;
  SearchBudget budget;
  int workers = 1;
  double excellent_threshold = 0.9;
  bool allow_lower_threshold = false;
  bool exhaustive_frame = false;
  std::size_t pool_cap = 2000000;
  std::size_t context = 16;          // symbols of B-context on each side when certifying
  std::size_t certify_nodes = 20000;  // per (word, offset)
  bool prune_violations = true;
  int constants_depth = 8;
  int du_r_max = 16;

  double tau_value() const { return tau > 0 ? tau : eta / 100; }

  void validate() const {
    if (!(eta > 0 && eta < 1)) throw MalformedInput("extraction: eta must lie in (0,1)");
    if (!(tau_value() > 0 && tau_value() < 1)) throw MalformedInput("extraction: tau must lie in (0,1)");
    if (k < 2 || k > 64) throw MalformedInput("extraction: k must lie in [2,64]");
    if (r0 < 1) throw MalformedInput("extraction: r0 must be >= 1");
    if (L < 1) throw MalformedInput("extraction: L must be >= 1");
    if (spacing < 1) throw MalformedInput("extraction: spacing must be >= 1");
    if (!(excellent_threshold > 0 && excellent_threshold <= 1))
      throw MalformedInput("extraction: excellent threshold must lie in (0,1]");
    if (du_r_max < std::max(r0, 1)) throw MalformedInput("extraction: du_r_max must be >= r0");
  }
};

struct BaseAlphabet {
  std::vector<Word> words;
  std::size_t N0 = 0;
  DimensionEstimate du;
  std::vector<std::string> warnings;
};

// B0 = certified-yes part of C_u(t, r0).
inline BaseAlphabet base_alphabet(const ExtractionParams& p, const TransitionSystem& ts, const GeometryModel& gm,
                                  const Potential& pot, const GeometryConstants& k) {
  CoveringOptions opt;
  opt.budget = p.budget;
  opt.workers = p.workers;
  BaseAlphabet b;
  b.du = estimate_Du(p.t, 1, p.du_r_max, ts, gm, pot, opt, k);
  opt.keep_words = true;
  CoveringRow row = covering_count(p.t, p.r0, ts, gm, pot, opt);
  b.words = row.yes_words;
  b.N0 = b.words.size();
  if (b.N0 == 0)
    throw ExtractionImpossible("no certified cylinder of scale " + std::to_string(p.r0) + " meets the sublevel at t=" +
                               std::to_string(p.t));
  if (!(b.du.lower > 0)) b.warnings.push_back("D_u lower bracket is 0; positivity of D_u(t) is not certified");
  double rate = std::log(static_cast<double>(b.N0)) / p.r0;
  if (!(std::abs(rate - b.du.value) < p.tau_value() / 2 * b.du.value))
    b.warnings.push_back("r0 constraint |log N0/r0 - D_u| < (tau/2) D_u fails: log N0/r0 = " + std::to_string(rate) +
                         ", D_u = " + std::to_string(b.du.value));
  return b;
}

// k-fold concatenations of B0 blocks, stored as block indices in lexicographic order.
struct ConcatenationPool {
  std::vector<Word> blocks;
  std::size_t k = 0;
  std::vector<std::vector<std::uint32_t>> words;  // verdict != no
  std::vector<char> certified;                    // verdict == yes

  std::size_t size() const { return words.size(); }
  std::size_t lower_size() const { return static_cast<std::size_t>(std::count(certified.begin(), certified.end(), 1)); }

  Word flatten(const std::vector<std::uint32_t>& w) const {
    Word out;
    for (auto b : w) out.insert(out.end(), blocks[b].begin(), blocks[b].end());
    return out;
  }
  Word flatten(std::size_t i) const { return flatten(words[i]); }
};

inline ConcatenationPool build_concatenation_pool(const std::vector<Word>& B0, std::size_t k, double t,
                                                  const TransitionSystem& ts, const Potential& pot,
                                                  const SearchBudget& budget, int workers = 1,
                                                  std::size_t cap = 2000000) {
  if (B0.empty()) throw MalformedInput("concatenation pool: empty base alphabet");
  if (k < 1) throw MalformedInput("concatenation pool: k must be >= 1");
  ConcatenationPool pool;
  pool.blocks = B0;
  pool.k = k;
  SublevelOracle oracle(ts, pot, t, budget);
  struct Part {
    std::vector<std::vector<std::uint32_t>> words;
    std::vector<char> yes;
  };
  auto too_many = [&] {
    return EnumerationOverflow("concatenation pool exceeds " + std::to_string(cap) + " words; use a smaller k or r0");
  };
  auto work = [&](std::size_t first) {
    Part part;
    std::vector<std::uint32_t> idx{static_cast<std::uint32_t>(first)};
    Word flat = B0[first];
    auto rec = [&](auto&& self) -> void {
      if (oracle.refuted(flat)) return;
      if (idx.size() == k) {
        Membership m = oracle.query(flat);
        if (m.verdict == Verdict::no_certified) return;
        part.words.push_back(idx);
        part.yes.push_back(m.verdict == Verdict::yes_certified);
        if (part.words.size() > cap) throw too_many();
        return;
      }
      for (std::size_t b = 0; b < B0.size(); ++b) {
        if (!ts.allows(flat.back(), B0[b].front())) continue;
        idx.push_back(static_cast<std::uint32_t>(b));
        flat.insert(flat.end(), B0[b].begin(), B0[b].end());
        self(self);
        flat.resize(flat.size() - B0[b].size());
        idx.pop_back();
      }
    };
    rec(rec);
    return part;
  };
  auto parts = parallel_map(B0.size(), workers, work);
  for (auto& p : parts) {
    pool.words.insert(pool.words.end(), p.words.begin(), p.words.end());
    pool.certified.insert(pool.certified.end(), p.yes.begin(), p.yes.end());
    if (pool.words.size() > cap) throw too_many();
  }
  return pool;
}

// Bit j of right[i] (left[i]) is set when position j of pool word i is right-good (left-good).
struct GoodMasks {
  std::vector<std::uint64_t> right, left;

  std::uint64_t good(std::size_t i) const { return right[i] & left[i]; }
};

struct GoodPositionReport {
  std::vector<std::uint32_t> word;
  std::vector<std::size_t> right_good, left_good, good;  // 0-based block positions
};

inline GoodMasks good_masks(const ConcatenationPool& pool, const GeometryModel& gm) {
  const std::size_t n = pool.size(), k = pool.k, N = pool.blocks.size();
  GoodMasks m;
  m.right.assign(n, 0);
  m.left.assign(n, 0);
  std::vector<char> uL(N * N, 0), sL(N * N, 0);
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = 0; b < N; ++b) {
      uL[a * N + b] = gm.strictly_left(pool.blocks[a], pool.blocks[b]);
      sL[a * N + b] = gm.s_strictly_left(pool.blocks[a], pool.blocks[b]);
    }
  // order: sequence of pool indices where words sharing the key positions are contiguous
  auto sweep = [&](const std::vector<std::size_t>& order, auto&& same_group, const std::vector<char>& lt,
                   std::vector<std::uint64_t>& out, std::size_t j) {
    std::vector<char> present(N), below(N), above(N);
    std::size_t s = 0;
    while (s < order.size()) {
      std::size_t e = s + 1;
      while (e < order.size() && same_group(order[s], order[e])) ++e;
      std::fill(present.begin(), present.end(), 0);
      for (std::size_t i = s; i < e; ++i) present[pool.words[order[i]][j]] = 1;
      for (std::size_t c = 0; c < N; ++c) {
        below[c] = above[c] = 0;
        if (!present[c]) continue;
        for (std::size_t a = 0; a < N; ++a) {
          if (!present[a]) continue;
          if (lt[a * N + c]) below[c] = 1;
          if (lt[c * N + a]) above[c] = 1;
        }
      }
      for (std::size_t i = s; i < e; ++i) {
        auto c = pool.words[order[i]][j];
        if (below[c] && above[c]) out[order[i]] |= std::uint64_t{1} << j;
      }
      s = e;
    }
  };
  std::vector<std::size_t> fwd(n), bwd(n);
  for (std::size_t i = 0; i < n; ++i) fwd[i] = bwd[i] = i;
  std::sort(fwd.begin(), fwd.end(), [&](std::size_t a, std::size_t b) { return pool.words[a] < pool.words[b]; });
  std::sort(bwd.begin(), bwd.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(pool.words[a].rbegin(), pool.words[a].rend(), pool.words[b].rbegin(),
                                        pool.words[b].rend());
  });
  for (std::size_t j = 0; j < k; ++j) {
    sweep(
        fwd,
        [&](std::size_t a, std::size_t b) {
          return std::equal(pool.words[a].begin(), pool.words[a].begin() + static_cast<long>(j),
                            pool.words[b].begin());
        },
        uL, m.right, j);
    sweep(
        bwd,
        [&](std::size_t a, std::size_t b) {
          return std::equal(pool.words[a].begin() + static_cast<long>(j + 1), pool.words[a].end(),
                            pool.words[b].begin() + static_cast<long>(j + 1));
        },
        sL, m.left, j);
  }
  return m;
}

inline GoodPositionReport good_positions(std::size_t i, const ConcatenationPool& pool, const GoodMasks& m) {
  GoodPositionReport r;
  r.word = pool.words.at(i);
  for (std::size_t j = 0; j < pool.k; ++j) {
    if (m.right[i] >> j & 1) r.right_good.push_back(j);
    if (m.left[i] >> j & 1) r.left_good.push_back(j);
    if (m.good(i) >> j & 1) r.good.push_back(j);
  }
  return r;
}

struct ExcellentSet {
  std::vector<std::size_t> indices;
  double threshold = 0.9;
  std::size_t needed = 0;
  double fraction = 0;  // #E / #pool
};

inline ExcellentSet filter_excellent(const ConcatenationPool& pool, const GoodMasks& m, double threshold = 0.9) {
  ExcellentSet e;
  e.threshold = threshold;
  e.needed = static_cast<std::size_t>(std::ceil(threshold * static_cast<double>(pool.k) - 1e-9));
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (static_cast<std::size_t>(std::popcount(m.good(i))) >= e.needed) e.indices.push_back(i);
  e.fraction = pool.size() ? static_cast<double>(e.indices.size()) / static_cast<double>(pool.size()) : 0.0;
  return e;
}

struct Frame {
  std::vector<std::size_t> positions;                             // 0-based, increasing
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;     // blocks at positions j and j+1
  std::vector<std::size_t> X;                                     // pool indices
};

namespace detail {

inline bool supports(const ConcatenationPool& pool, const GoodMasks& m, std::size_t i, std::size_t j,
                     std::pair<std::uint32_t, std::uint32_t> pr) {
  const auto& w = pool.words[i];
  std::uint64_t need = (std::uint64_t{1} << j) | (std::uint64_t{1} << (j + 1));
  return (m.good(i) & need) == need && w[j] == pr.first && w[j + 1] == pr.second;
}

inline bool has_matching_pair(const Frame& f) {
  for (std::size_t p = 0; p < f.pairs.size(); ++p)
    for (std::size_t q = p + 1; q < f.pairs.size(); ++q)
      if (f.pairs[p] == f.pairs[q]) return true;
  return false;
}

}  // namespace detail

// Frame positions spaced >= spacing, with blocks fixed at j and j+1 and both
// positions good for every word of X. Greedy by pattern frequency; exhaustive
// maximizes #X over every choice of positions.
inline Frame find_frame(const ConcatenationPool& pool, const GoodMasks& m, const std::vector<std::size_t>& E,
                        std::size_t L, std::size_t spacing, bool exhaustive = false) {
  if (E.empty()) throw StageError("find_frame", "no excellent words");
  const std::size_t k = pool.k;
  if (L < 1 || k < 2) throw StageError("find_frame", "need L >= 1 and k >= 2");
  if ((L - 1) * spacing + 1 >= k)
    throw StageError("find_frame", "k=" + std::to_string(k) + " too short for L=" + std::to_string(L) +
                                       " positions spaced " + std::to_string(spacing));
  using Pair = std::pair<std::uint32_t, std::uint32_t>;
  auto key_of = [&](std::size_t i, std::size_t j) { return Pair{pool.words[i][j], pool.words[i][j + 1]}; };

  if (exhaustive) {
    std::size_t tuples = 0;
    Frame best;
    bool best_match = false;
    std::vector<std::size_t> pos;
    auto rec = [&](auto&& self, std::size_t from) -> void {
      if (pos.size() == L) {
        if (++tuples > 100000) throw StageError("find_frame", "exhaustive search over too many position tuples");
        std::map<std::vector<Pair>, std::vector<std::size_t>> groups;
        for (std::size_t i : E) {
          std::vector<Pair> key;
          bool ok = true;
          for (std::size_t j : pos) {
            if (!detail::supports(pool, m, i, j, key_of(i, j))) {
              ok = false;
              break;
            }
            key.push_back(key_of(i, j));
          }
          if (ok) groups[key].push_back(i);
        }
        for (auto& [key, xs] : groups) {
          Frame f{pos, key, xs};
          bool match = detail::has_matching_pair(f);
          if (best.X.empty() || std::make_pair(match, xs.size()) > std::make_pair(best_match, best.X.size())) {
            best = f;
            best_match = match;
          }
        }
        return;
      }
      for (std::size_t j = from; j + 1 < k; ++j) {
        pos.push_back(j);
        self(self, j + spacing);
        pos.pop_back();
      }
    };
    rec(rec, 0);
    if (best.X.empty()) throw StageError("find_frame", "no word of E has the required good positions");
    return best;
  }

  Frame f;
  std::vector<std::size_t> X = E;
  if (L >= 2) {
    // seed: a block pair repeated at two spaced good positions, chosen for the
    // density of the cut between them
    std::map<std::tuple<std::size_t, std::size_t, Pair>, std::vector<std::vector<std::uint32_t>>> proj;
    for (std::size_t i : E)
      for (std::size_t a = 0; a + 1 < k; ++a)
        for (std::size_t b = a + spacing; b + 1 < k; ++b) {
          Pair pr = key_of(i, a);
          if (key_of(i, b) == pr && detail::supports(pool, m, i, a, pr) && detail::supports(pool, m, i, b, pr))
            proj[{a, b, pr}].emplace_back(pool.words[i].begin() + static_cast<long>(a + 1),
                                          pool.words[i].begin() + static_cast<long>(b + 1));
        }
    if (!proj.empty()) {
      auto score = [](auto& kv) {
        auto& v = kv.second;
        std::sort(v.begin(), v.end());
        std::size_t count = v.size();
        v.erase(std::unique(v.begin(), v.end()), v.end());
        double density = std::log(static_cast<double>(v.size())) / static_cast<double>(std::get<1>(kv.first) - std::get<0>(kv.first));
        return std::make_pair(density, count);
      };
      auto best = proj.begin();
      auto best_score = score(*best);
      for (auto it = std::next(proj.begin()); it != proj.end(); ++it) {
        auto sc = score(*it);
        if (sc > best_score) {
          best = it;
          best_score = sc;
        }
      }
      auto [a, b, pr] = best->first;
      f.positions = {a, b};
      f.pairs = {pr, pr};
      std::vector<std::size_t> keep;
      for (std::size_t i : X)
        if (detail::supports(pool, m, i, a, pr) && detail::supports(pool, m, i, b, pr)) keep.push_back(i);
      X = std::move(keep);
    }
  }
  while (f.positions.size() < L) {
    std::map<std::pair<std::size_t, Pair>, std::size_t> count;
    for (std::size_t i : X)
      for (std::size_t j = 0; j + 1 < k; ++j) {
        bool spaced = true;
        for (std::size_t q : f.positions) spaced = spaced && (j >= q + spacing || q >= j + spacing);
        if (spaced && detail::supports(pool, m, i, j, key_of(i, j))) ++count[{j, key_of(i, j)}];
      }
    if (count.empty())
      throw StageError("find_frame", "only " + std::to_string(f.positions.size()) + " of " + std::to_string(L) +
                                         " frame positions found (#X=" + std::to_string(X.size()) + ")");
    auto best = count.begin();
    for (auto it = count.begin(); it != count.end(); ++it)
      if (it->second > best->second) best = it;
    auto [j, pr] = best->first;
    std::vector<std::size_t> keep;
    for (std::size_t i : X)
      if (detail::supports(pool, m, i, j, pr)) keep.push_back(i);
    X = std::move(keep);
    auto at = std::lower_bound(f.positions.begin(), f.positions.end(), j);
    f.pairs.insert(f.pairs.begin() + (at - f.positions.begin()), pr);
    f.positions.insert(at, j);
  }
  f.X = std::move(X);
  return f;
}

struct FrameCut {
  std::size_t p0 = 0, q0 = 0;  // indices into frame.positions
  WordAlphabet B;
  std::vector<std::vector<std::uint32_t>> block_words;
  Word gamma1, gamma2;
  double density = 0;
};

// B = blocks j_p+1 .. j_q of the words of X, for the matching pair (p,q) of
// largest density ln #B / (j_q - j_p); ties go to the smaller j_p.
inline FrameCut cut_frame(const ConcatenationPool& pool, const Frame& frame, const TransitionSystem& ts) {
  FrameCut best;
  bool found = false;
  for (std::size_t p = 0; p < frame.positions.size(); ++p)
    for (std::size_t q = p + 1; q < frame.positions.size(); ++q) {
      if (frame.pairs[p] != frame.pairs[q]) continue;
      std::size_t jp = frame.positions[p], jq = frame.positions[q];
      std::vector<std::vector<std::uint32_t>> proj;
      for (std::size_t i : frame.X)
        proj.emplace_back(pool.words[i].begin() + static_cast<long>(jp + 1),
                          pool.words[i].begin() + static_cast<long>(jq + 1));
      std::sort(proj.begin(), proj.end());
      proj.erase(std::unique(proj.begin(), proj.end()), proj.end());
      double density = std::log(static_cast<double>(proj.size())) / static_cast<double>(jq - jp);
      if (!found || density > best.density) {
        found = true;
        best.p0 = p;
        best.q0 = q;
        best.density = density;
        best.block_words = std::move(proj);
      }
    }
  if (!found) throw StageError("cut_frame", "no two frame positions carry the same block pair; increase L");
  auto pr = frame.pairs[best.p0];
  best.gamma1 = pool.blocks[pr.second];
  best.gamma2 = pool.blocks[pr.first];
  std::vector<Word> flat;
  for (const auto& bw : best.block_words) flat.push_back(pool.flatten(bw));
  best.B = check_complete_subshift(flat, ts, best.gamma1.size(), best.gamma2.size());
  best.B.gamma1 = best.gamma1;
  best.B.gamma2 = best.gamma2;
  return best;
}

struct ContainmentCertificate {
  double delta = 0;
  double max_upper = 0;  // certified sup of f over Sigma(B)
  Word worst_word;
  std::size_t worst_offset = 0;
  Word worst_past, worst_future;
  std::size_t nodes = 0;
  std::size_t capped = 0;  // searches stopped at the node cap (bound still sound)
};

namespace detail {

struct OffsetBound {
  double upper = -INFINITY;
  Word past, future;
  std::size_t nodes = 0;
  bool capped = false;
};

// Best-first search over B-contexts of word w read at offset l. Every node's
// bound covers all its extensions, so the first full-context node popped is the
// maximum; at the node cap the top of the queue is still an upper bound.
inline OffsetBound bound_at_offset(const std::vector<Word>& B, const Word& w, std::size_t l, const Potential& pot,
                                   std::size_t context, std::size_t cap) {
  struct Node {
    double ub;
    std::size_t seq;
    Word past, future;
    std::size_t lctx, rctx;
  };
  auto cmp = [](const Node& a, const Node& b) { return a.ub < b.ub || (a.ub == b.ub && a.seq < b.seq); };
  std::priority_queue<Node, std::vector<Node>, decltype(cmp)> q(cmp);
  std::size_t seq = 0;
  Word past(w.begin(), w.begin() + static_cast<long>(l)), future(w.begin() + static_cast<long>(l), w.end());
  q.push({pot.bounds(past, future).hi, seq++, past, future, 0, 0});
  OffsetBound out;
  while (!q.empty()) {
    Node n = q.top();
    q.pop();
    ++out.nodes;
    bool full = n.lctx >= context && n.rctx >= context;
    if (full || out.nodes >= cap) {
      out.upper = n.ub;
      out.past = std::move(n.past);
      out.future = std::move(n.future);
      out.capped = !full;
      return out;
    }
    bool left = n.rctx >= context || (n.lctx < context && n.lctx <= n.rctx);
    for (const Word& b : B) {
      Node c;
      c.seq = seq++;
      if (left) {
        c.past = b + n.past;
        c.future = n.future;
        c.lctx = n.lctx + b.size();
        c.rctx = n.rctx;
      } else {
        c.past = n.past;
        c.future = n.future + b;
        c.lctx = n.lctx;
        c.rctx = n.rctx + b.size();
      }
      c.ub = std::min(n.ub, pot.bounds(c.past, c.future).hi);
      q.push(std::move(c));
    }
  }
  return out;
}

}  // namespace detail

// Sound upper bound of f over Sigma(B): every point of Sigma(B) is, up to shift,
// read at some offset of some word of B inside a bi-infinite B-concatenation.
inline ContainmentCertificate certify_containment(const WordAlphabet& B, double t, const Potential& pot,
                                                  const TransitionSystem& ts, std::size_t context = 16,
                                                  std::size_t cap = 20000, int workers = 1) {
  if (B.words.empty()) throw MalformedInput("certify_containment: empty alphabet");
  check_complete_subshift(B.words, ts);
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t i = 0; i < B.words.size(); ++i)
    for (std::size_t l = 0; l < B.words[i].size(); ++l) jobs.emplace_back(i, l);
  auto res = parallel_map(jobs.size(), workers, [&](std::size_t j) {
    return detail::bound_at_offset(B.words, B.words[jobs[j].first], jobs[j].second, pot, context, cap);
  });
  ContainmentCertificate c;
  c.max_upper = -INFINITY;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    c.nodes += res[j].nodes;
    c.capped += res[j].capped;
    if (res[j].upper > c.max_upper) {
      c.max_upper = res[j].upper;
      c.worst_word = B.words[jobs[j].first];
      c.worst_offset = jobs[j].second;
      c.worst_past = res[j].past;
      c.worst_future = res[j].future;
    }
  }
  c.delta = t - c.max_upper;
  return c;
}

// delta_1..delta_4 from c6 and the sizes of the pieces of B words.
inline std::array<double, 4> delta_components(const WordAlphabet& B, const GeometryModel& gm, double c6) {
  std::array<double, 4> d{INFINITY, INFINITY, INFINITY, INFINITY};
  const Word& g1 = B.gamma1;
  const Word& g2 = B.gamma2;
  if (g1.empty() || g2.empty()) return {0, 0, 0, 0};
  for (const Word& w : B.words) {
    // w = g1 b g2
    std::size_t m1 = g1.size(), m2 = g2.size(), mh = w.size() - m1 - m2;
    for (std::size_t j = 1; j + 1 <= mh; ++j) {
      Word tail(w.begin() + static_cast<long>(m1 + j - 1), w.end());
      d[0] = std::min(d[0], gm.u_size(tail));
      Word head(w.begin(), w.begin() + static_cast<long>(m1 + j - 1));
      d[1] = std::min(d[1], gm.s_size(head));
    }
    for (std::size_t l = 1; l + 1 <= m1; ++l) {
      Word s = g2 + Word(g1.begin(), g1.begin() + static_cast<long>(l));
      d[2] = std::min(d[2], gm.s_size(s));
    }
    for (std::size_t l = 1; l + 1 <= m2; ++l) {
      Word s = Word(g2.begin() + static_cast<long>(l), g2.end()) + g1;
      d[3] = std::min(d[3], gm.u_size(s));
    }
  }
  for (double& x : d) x = std::isinf(x) ? 0.0 : c6 / 2 * x;
  return d;
}

struct ExtractionResult {
  ExtractionParams params;
  std::vector<Word> B0;
  std::size_t N0 = 0;
  std::size_t pool_upper = 0, pool_lower = 0;
  std::size_t excellent = 0;
  double excellent_fraction = 0;
  double threshold_used = 0;
  Frame frame;
  std::size_t p0 = 0, q0 = 0;
  WordAlphabet B;
  ContainmentCertificate certificate;
  double delta = 0;
  std::array<double, 4> deltas{};
  double c6 = 0;
  GeometryConstants constants;
  DimensionEstimate du;
  DimensionEstimate moran;
  double dim_lower = 0;
  double achieved_eta = 0;
  double theory_k = 0, theory_L = 0, theory_spacing = 0;
  std::size_t pruned = 0;
  std::vector<std::string> warnings;
};

inline ExtractionResult extract(const ExtractionParams& p, const TransitionSystem& ts, const GeometryModel& gm,
                                const Potential& pot) {
  p.validate();
  ExtractionResult r;
  r.params = p;
  r.constants = measure_constants(ts, gm, p.constants_depth);
  BaseAlphabet base = base_alphabet(p, ts, gm, pot, r.constants);
  r.B0 = base.words;
  r.N0 = base.N0;
  r.du = base.du;
  r.warnings = base.warnings;
  const double tau = p.tau_value();
  const double twotau = std::ceil(2 / tau);
  r.theory_k = 8.0 * static_cast<double>(r.N0 * r.N0) * twotau;
  r.theory_L = 3.0 * static_cast<double>(r.N0 * r.N0);
  r.theory_spacing = 2 * twotau;

  if (r.N0 == 1) {
    const Word& w = r.B0.front();
    if (!closes_up(w, ts)) throw ExtractionImpossible("single base word " + to_string(w) + " does not close up");
    r.B = check_complete_subshift({w}, ts);
    r.warnings.push_back("N0 = 1: B is the single base word");
  } else {
    ConcatenationPool pool;
    try {
      pool = build_concatenation_pool(r.B0, p.k, p.t, ts, pot, p.budget, p.workers, p.pool_cap);
    } catch (const Error& e) {
      throw StageError("build_concatenation_pool", e.what());
    }
    r.pool_upper = pool.size();
    r.pool_lower = pool.lower_size();
    if (pool.size() == 0) throw StageError("build_concatenation_pool", "every concatenation is refuted");
    GoodMasks masks = good_masks(pool, gm);
    ExcellentSet E = filter_excellent(pool, masks, p.excellent_threshold);
    if (E.indices.empty() && p.allow_lower_threshold) {
      for (std::size_t need = E.needed; need-- > 0 && E.indices.empty();) {
        E = filter_excellent(pool, masks, static_cast<double>(need) / static_cast<double>(p.k));
        if (need == 0) break;
      }
      r.warnings.push_back("relaxed mode: excellent threshold lowered to " + std::to_string(E.threshold));
    }
    if (E.indices.empty())
      throw StageError("filter_excellent", "no pool word has " + std::to_string(E.needed) + " of " +
                                               std::to_string(p.k) + " good positions");
    r.excellent = E.indices.size();
    r.excellent_fraction = E.fraction;
    r.threshold_used = E.threshold;
    r.frame = find_frame(pool, masks, E.indices, p.L, p.spacing, p.exhaustive_frame);
    FrameCut cut = cut_frame(pool, r.frame, ts);
    r.p0 = cut.p0;
    r.q0 = cut.q0;
    r.B = cut.B;
  }

  for (;;) {
    r.certificate = certify_containment(r.B, p.t, pot, ts, p.context, p.certify_nodes, p.workers);
    if (r.certificate.delta > 0) break;
    if (!p.prune_violations || r.B.words.size() == 1)
      throw CertificationFailed("certification failed: f <= " + std::to_string(r.certificate.max_upper) +
                                " exceeds t at word " + to_string(r.certificate.worst_word) + " offset " +
                                std::to_string(r.certificate.worst_offset) + " (past " +
                                to_string(r.certificate.worst_past) + ", future " +
                                to_string(r.certificate.worst_future) + ")");
    auto& words = r.B.words;
    words.erase(std::find(words.begin(), words.end(), r.certificate.worst_word));
    ++r.pruned;
  }
  if (r.pruned) r.warnings.push_back("pruned " + std::to_string(r.pruned) + " words of B to certify containment");
  r.delta = r.certificate.delta;
  auto mono = certify_monotonicity(ts, gm, pot, std::min(p.constants_depth, 6));
  r.c6 = mono.c6;
  r.deltas = delta_components(r.B, gm, r.c6);
  r.moran = moran_dimension(r.B.words, gm, r.constants.c1);
  r.dim_lower = r.moran.lower;
  r.achieved_eta = r.du.upper > 0 ? 1 - r.dim_lower / r.du.upper : 1.0;
  return r;
}

}  // namespace spectra
