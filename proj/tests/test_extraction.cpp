#include <gtest/gtest.h>

#include <cmath>
#include <iomanip>
#include <map>
#include <random>
#include <set>

#include "spectra/extraction.hpp"

using namespace spectra;

namespace {

const auto ts2 = TransitionSystem::full_shift(2);

ExtractionParams desk(double t = 3.1) {
  ExtractionParams p;
  p.t = t;
  return p;
}

const ExtractionResult& golden() {
  static const ExtractionResult r = [] {
    ContinuedFractionGeometry g(ts2);
    ClassicalCFPotential f(ts2);
    return extract(desk(), ts2, g, f);
  }();
  return r;
}

GeometryConstants constants(const GeometryModel& gm) { return measure_constants(ts2, gm, 6); }

// right/left goodness straight from the definition, with interval endpoints
std::pair<bool, bool> brute_good(const ConcatenationPool& pool, const GeometryModel& gm, std::size_t i,
                                 std::size_t j) {
  const auto& w = pool.words[i];
  auto u = gm.u_interval(pool.blocks[w[j]]);
  auto s = gm.transposed().u_interval(transpose(pool.blocks[w[j]]));
  bool ul = false, ur = false, sl = false, sr = false;
  for (const auto& v : pool.words) {
    if (std::equal(v.begin(), v.begin() + static_cast<long>(j), w.begin()) && v[j] != w[j]) {
      auto o = gm.u_interval(pool.blocks[v[j]]);
      ul = ul || o.hi <= u.lo;
      ur = ur || u.hi <= o.lo;
    }
    if (std::equal(v.begin() + static_cast<long>(j + 1), v.end(), w.begin() + static_cast<long>(j + 1)) &&
        v[j] != w[j]) {
      auto o = gm.transposed().u_interval(transpose(pool.blocks[v[j]]));
      sl = sl || o.hi <= s.lo;
      sr = sr || s.hi <= o.lo;
    }
  }
  return {ul && ur, sl && sr};
}

}  // namespace

TEST(BaseAlphabet, EmptyBelowHurwitz) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  EXPECT_THROW(base_alphabet(desk(2.2), ts2, g, f, constants(g)), ExtractionImpossible);
}

TEST(BaseAlphabet, InfiniteThresholdIsPartition) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto p = desk(INFINITY);
  p.r0 = 2;
  p.du_r_max = 8;
  auto b = base_alphabet(p, ts2, g, f, constants(g));
  EXPECT_EQ(b.N0, 5u);
  EXPECT_EQ(b.words, partition_at_scale(2, ts2, g));
}

TEST(BaseAlphabet, ThreeOneKeepsTwosDropsAlternation) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto b = base_alphabet(desk(), ts2, g, f, constants(g));
  ASSERT_GT(b.N0, 0u);
  // periodic search: every base word sits on a periodic orbit below 3.1
  std::vector<Word> low;
  for (std::size_t n = 1; n <= 10; ++n)
    for (const Word& w : words_of_length(ts2, n))
      if (markov_value(PeriodicPoint(w), f) <= 3.1) low.push_back(w);
  bool has_two = false;
  for (const Word& w : b.words) {
    has_two = has_two || std::count(w.begin(), w.end(), 2) > 0;
    bool seen = false;
    for (const Word& p : low) {
      Word rep = repeat(p, w.size() / p.size() + 2);
      for (std::size_t s = 0; s < p.size() && !seen; ++s) seen = std::equal(w.begin(), w.end(), rep.begin() + static_cast<long>(s));
      if (seen) break;
    }
    EXPECT_TRUE(seen) << to_string(w);
    Word alt{1, 2, 1, 2};
    EXPECT_EQ(std::search(w.begin(), w.end(), alt.begin(), alt.end()), w.end()) << to_string(w);
  }
  EXPECT_TRUE(has_two);
}

TEST(Pool, SingleWord) {
  ClassicalCFPotential f(ts2);
  auto pool = build_concatenation_pool({{1}}, 3, 2.5, ts2, f, SearchBudget{});
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_EQ(pool.words[0], (std::vector<std::uint32_t>{0, 0, 0}));
  EXPECT_EQ(pool.flatten(0), (Word{1, 1, 1}));
}

TEST(Pool, NoPruningAtInfinity) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto B0 = partition_at_scale(2, ts2, g);
  auto pool = build_concatenation_pool(B0, 2, INFINITY, ts2, f, SearchBudget{});
  EXPECT_EQ(pool.size(), B0.size() * B0.size());
  EXPECT_EQ(pool.lower_size(), pool.size());
  EXPECT_TRUE(std::is_sorted(pool.words.begin(), pool.words.end()));
}

TEST(Pool, ThreeOneMatchesOracle) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto B0 = base_alphabet(desk(), ts2, g, f, constants(g)).words;
  SearchBudget budget;
  auto pool = build_concatenation_pool(B0, 4, 3.1, ts2, f, budget, 2);
  SublevelOracle oracle(ts2, f, 3.1, budget);
  std::set<std::vector<std::uint32_t>> in(pool.words.begin(), pool.words.end());
  std::size_t excluded = 0;
  std::vector<std::uint32_t> w(4);
  const std::uint32_t n = static_cast<std::uint32_t>(B0.size());
  for (w[0] = 0; w[0] < n; ++w[0])
    for (w[1] = 0; w[1] < n; ++w[1])
      for (w[2] = 0; w[2] < n; ++w[2])
        for (w[3] = 0; w[3] < n; ++w[3]) {
          Word flat = pool.flatten(w);
          if (in.count(w)) {
            EXPECT_FALSE(oracle.refuted(flat));
          } else {
            ++excluded;
            EXPECT_TRUE(oracle.refuted(flat)) << to_string(flat);
          }
        }
  EXPECT_GT(excluded, 0u);
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (pool.certified[i]) {
      EXPECT_EQ(oracle.query(pool.flatten(i)).verdict, Verdict::yes_certified);
    }
}

TEST(Pool, CapExceeded) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto B0 = partition_at_scale(2, ts2, g);
  EXPECT_THROW(build_concatenation_pool(B0, 4, INFINITY, ts2, f, SearchBudget{}, 1, 100), EnumerationOverflow);
}

TEST(GoodPositions, IntervalOrderExample) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto a = g.u_interval(Word{2, 1}), b = g.u_interval(Word{2, 2}), c = g.u_interval(Word{1, 2});
  EXPECT_LE(a.hi, b.lo);
  EXPECT_LE(b.hi, c.lo);
  auto B0 = words_of_length(ts2, 2);
  auto pool = build_concatenation_pool(B0, 2, INFINITY, ts2, f, SearchBudget{});
  auto masks = good_masks(pool, g);
  std::uint32_t i22 = static_cast<std::uint32_t>(std::find(B0.begin(), B0.end(), Word{2, 2}) - B0.begin());
  auto it = std::find(pool.words.begin(), pool.words.end(), std::vector<std::uint32_t>{i22, i22});
  ASSERT_NE(it, pool.words.end());
  auto rep = good_positions(static_cast<std::size_t>(it - pool.words.begin()), pool, masks);
  EXPECT_NE(std::find(rep.right_good.begin(), rep.right_good.end(), 0u), rep.right_good.end());
}

TEST(GoodPositions, SingleWordPoolHasNone) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto pool = build_concatenation_pool({{2, 2}}, 3, INFINITY, ts2, f, SearchBudget{});
  auto masks = good_masks(pool, g);
  auto rep = good_positions(0, pool, masks);
  EXPECT_TRUE(rep.right_good.empty());
  EXPECT_TRUE(rep.left_good.empty());
  EXPECT_TRUE(rep.good.empty());
}

TEST(GoodPositions, FullPoolInteriorBlocks) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto B0 = partition_at_scale(2, ts2, g);
  auto pool = build_concatenation_pool(B0, 2, INFINITY, ts2, f, SearchBudget{});
  auto masks = good_masks(pool, g);
  auto interior = [&](std::uint32_t b) {
    bool ul = false, ur = false, sl = false, sr = false;
    for (std::uint32_t c = 0; c < B0.size(); ++c) {
      if (c == b) continue;
      ul = ul || g.strictly_left(B0[c], B0[b]);
      ur = ur || g.strictly_left(B0[b], B0[c]);
      sl = sl || g.s_strictly_left(B0[c], B0[b]);
      sr = sr || g.s_strictly_left(B0[b], B0[c]);
    }
    return ul && ur && sl && sr;
  };
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto rep = good_positions(i, pool, masks);
    std::vector<std::size_t> expect;
    for (std::size_t j = 0; j < 2; ++j)
      if (interior(pool.words[i][j])) expect.push_back(j);
    EXPECT_EQ(rep.good, expect);
  }
}

TEST(GoodPositions, MatchesDefinition) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto B0 = base_alphabet(desk(), ts2, g, f, constants(g)).words;
  auto pool = build_concatenation_pool(B0, 3, 3.1, ts2, f, SearchBudget{});
  auto masks = good_masks(pool, g);
  for (std::size_t i = 0; i < pool.size(); i += 7) {
    auto rep = good_positions(i, pool, masks);
    for (std::size_t j = 0; j < 3; ++j) {
      auto [r, l] = brute_good(pool, g, i, j);
      EXPECT_EQ(r, std::count(rep.right_good.begin(), rep.right_good.end(), j) == 1);
      EXPECT_EQ(l, std::count(rep.left_good.begin(), rep.left_good.end(), j) == 1);
    }
    std::vector<std::size_t> both;
    std::set_intersection(rep.right_good.begin(), rep.right_good.end(), rep.left_good.begin(), rep.left_good.end(),
                          std::back_inserter(both));
    EXPECT_EQ(both, rep.good);
  }
}

TEST(Excellent, Examples) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto one = build_concatenation_pool({{1, 1}}, 2, INFINITY, ts2, f, SearchBudget{});
  EXPECT_TRUE(filter_excellent(one, good_masks(one, g)).indices.empty());

  auto B0 = partition_at_scale(2, ts2, g);
  auto full = build_concatenation_pool(B0, 2, INFINITY, ts2, f, SearchBudget{});
  auto e = filter_excellent(full, good_masks(full, g), 0.5);
  EXPECT_FALSE(e.indices.empty());
  EXPECT_NEAR(e.fraction, static_cast<double>(e.indices.size()) / static_cast<double>(full.size()), 1e-15);
}

TEST(Excellent, AffineMiddleSibling) {
  auto ts3 = TransitionSystem::full_shift(3);
  AffineGeometry g(ts3, {0.2, 0.2, 0.2});
  ConstantPotential f(0);
  auto pool = build_concatenation_pool({{1}, {2}, {3}}, 4, INFINITY, ts3, f, SearchBudget{});
  auto masks = good_masks(pool, g);
  auto e = filter_excellent(pool, masks, 1.0);
  ASSERT_EQ(e.indices.size(), 1u);
  EXPECT_EQ(pool.words[e.indices[0]], (std::vector<std::uint32_t>{1, 1, 1, 1}));
  for (std::size_t i = 0; i < pool.size(); ++i)
    EXPECT_EQ(static_cast<std::size_t>(std::popcount(masks.good(i))),
              static_cast<std::size_t>(std::count(pool.words[i].begin(), pool.words[i].end(), 1u)));
}

namespace {

struct Planted {
  TransitionSystem ts = TransitionSystem::full_shift(3);
  AffineGeometry g{ts, {0.2, 0.2, 0.2}};
  ConstantPotential f{0};
  ConcatenationPool pool;
  GoodMasks masks;
  std::vector<std::size_t> E;

  Planted() {
    pool = build_concatenation_pool({{1}, {2}, {3}}, 6, INFINITY, ts, f, SearchBudget{});
    masks = good_masks(pool, g);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const auto& w = pool.words[i];
      if (w[1] == 1 && w[2] == 1 && w[4] == 1 && w[5] == 1) E.push_back(i);
    }
  }
};

}  // namespace

TEST(Frame, PlantedFrameRecovered) {
  Planted s;
  ASSERT_EQ(s.E.size(), 9u);
  auto fr = find_frame(s.pool, s.masks, s.E, 2, 3);
  EXPECT_EQ(fr.positions, (std::vector<std::size_t>{1, 4}));
  EXPECT_EQ(fr.pairs[0], (std::pair<std::uint32_t, std::uint32_t>{1, 1}));
  EXPECT_EQ(fr.pairs[1], (std::pair<std::uint32_t, std::uint32_t>{1, 1}));
  EXPECT_EQ(fr.X, s.E);
  auto ex = find_frame(s.pool, s.masks, s.E, 2, 3, true);
  EXPECT_EQ(ex.positions, fr.positions);
  EXPECT_EQ(ex.X, fr.X);
}

TEST(Frame, PlantedCut) {
  Planted s;
  auto fr = find_frame(s.pool, s.masks, s.E, 2, 3);
  auto cut = cut_frame(s.pool, fr, s.ts);
  EXPECT_EQ(cut.p0, 0u);
  EXPECT_EQ(cut.q0, 1u);
  EXPECT_EQ(cut.B.words, (std::vector<Word>{{2, 1, 2}, {2, 2, 2}, {2, 3, 2}}));
  EXPECT_EQ(cut.B.kind, AlphabetKind::framed);
  EXPECT_EQ(cut.gamma1, (Word{2}));
  EXPECT_EQ(cut.gamma2, (Word{2}));
  EXPECT_NEAR(cut.density, std::log(3.0) / 3, 1e-15);
}

TEST(Frame, SingleWordCut) {
  Planted s;
  std::vector<std::size_t> X;
  for (std::size_t i : s.E)
    if (s.pool.words[i][0] == 1 && s.pool.words[i][3] == 1) X.push_back(i);
  ASSERT_EQ(X.size(), 1u);
  auto fr = find_frame(s.pool, s.masks, X, 2, 3);
  auto cut = cut_frame(s.pool, fr, s.ts);
  ASSERT_EQ(cut.B.size(), 1u);
  EXPECT_EQ(moran_dimension(cut.B.words, s.g).value, 0.0);
}

TEST(Frame, NoMatchingPairIsAnError) {
  Planted s;
  Frame fr;
  fr.positions = {1, 4};
  fr.pairs = {{1, 1}, {1, 2}};
  fr.X = s.E;
  EXPECT_THROW(cut_frame(s.pool, fr, s.ts), StageError);
  EXPECT_THROW(find_frame(s.pool, s.masks, {}, 2, 3), StageError);
  EXPECT_THROW(find_frame(s.pool, s.masks, s.E, 3, 3), StageError);
}

TEST(Frame, PigeonholeBoundAtInfinity) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto B0 = partition_at_scale(2, ts2, g);
  const std::size_t k = 5, L = 2;
  auto pool = build_concatenation_pool(B0, k, INFINITY, ts2, f, SearchBudget{});
  auto masks = good_masks(pool, g);
  auto E = filter_excellent(pool, masks, 0.4);
  ASSERT_FALSE(E.indices.empty());
  for (bool exhaustive : {false, true}) {
    auto fr = find_frame(pool, masks, E.indices, L, 2, exhaustive);
    double denom = std::pow(2.0, static_cast<double>(k)) * std::pow(static_cast<double>(B0.size()), 2.0 * L);
    EXPECT_GE(static_cast<double>(fr.X.size()), static_cast<double>(E.indices.size()) / denom);
    for (std::size_t i : fr.X)
      for (std::size_t q = 0; q < fr.positions.size(); ++q) {
        std::size_t j = fr.positions[q];
        EXPECT_EQ(pool.words[i][j], fr.pairs[q].first);
        EXPECT_EQ(pool.words[i][j + 1], fr.pairs[q].second);
        EXPECT_TRUE(masks.good(i) >> j & 1);
        EXPECT_TRUE(masks.good(i) >> (j + 1) & 1);
      }
  }
}

TEST(Certify, FixedPoint) {
  ClassicalCFPotential f(ts2);
  auto B = check_complete_subshift({{1}}, ts2);
  auto c = certify_containment(B, 2.5, f, ts2);
  EXPECT_LE(c.delta, 2.5 - std::sqrt(5.0));
  EXPECT_NEAR(c.delta, 2.5 - std::sqrt(5.0), 1e-7);
}

TEST(Certify, TwoTwoFails) {
  ClassicalCFPotential f(ts2);
  auto B = check_complete_subshift({{2}}, ts2);
  auto c = certify_containment(B, 2.8, f, ts2);
  EXPECT_LE(c.delta, 0);
  EXPECT_GE(c.max_upper, 2 * std::sqrt(2.0) - 1e-12);
  EXPECT_EQ(c.worst_word, (Word{2}));
}

TEST(Certify, BoundCoversEveryConcatenation) {
  ClassicalCFPotential f(ts2);
  auto B = check_complete_subshift({{1, 1}, {1, 2, 2}, {2, 2, 1, 1}}, ts2);
  auto c = certify_containment(B, 4, f, ts2);
  for (const Word& w : power_words(B.words, 3))
    EXPECT_LE(markov_value(PeriodicPoint(w), f), c.max_upper + 1e-12) << to_string(w);
}

TEST(Extract, BelowHurwitzIsImpossible) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  EXPECT_THROW(extract(desk(2.2), ts2, g, f), ExtractionImpossible);
}

TEST(Extract, FixedPointOnly) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto r = extract(desk(2.5), ts2, g, f);
  ASSERT_EQ(r.B.size(), 1u);
  const Word& w = r.B.words[0];
  EXPECT_EQ(std::count(w.begin(), w.end(), 1), static_cast<long>(w.size()));
  EXPECT_EQ(r.dim_lower, 0.0);
  EXPECT_NEAR(r.delta, 2.5 - std::sqrt(5.0), 1e-7);
}

TEST(Extract, ThreeOneGolden) {
  const auto& r = golden();
  EXPECT_GT(r.delta, 0);
  EXPECT_GT(r.dim_lower, 0);
  EXPECT_EQ(r.B.kind, AlphabetKind::framed);
  EXPECT_NO_THROW(check_complete_subshift(r.B.words, ts2));
  for (const Word& w : r.B.words) {
    EXPECT_TRUE(std::equal(r.B.gamma1.begin(), r.B.gamma1.end(), w.begin()));
    EXPECT_TRUE(std::equal(r.B.gamma2.rbegin(), r.B.gamma2.rend(), w.rbegin()));
  }
  EXPECT_EQ(r.N0, 10u);
  EXPECT_EQ(r.B.size(), 7u);
  EXPECT_NEAR(r.delta, 0.065999, 5e-6);
  EXPECT_LE(r.moran.value, r.du.upper);
  EXPECT_NEAR(r.achieved_eta, 1 - r.dim_lower / r.du.upper, 1e-15);
  for (double d : r.deltas) EXPECT_GE(d, 0);
}

TEST(Extract, FrameSpacingExact) {
  const auto& r = golden();
  for (std::size_t q = 1; q < r.frame.positions.size(); ++q)
    EXPECT_GE(r.frame.positions[q] - r.frame.positions[q - 1], r.params.spacing);
  EXPECT_EQ(r.frame.positions.size(), r.params.L);
}

TEST(Extract, SoundOnRandomWindows) {
  const auto& r = golden();
  ClassicalCFPotential f(ts2);
  const double cap = r.params.t - r.delta + 1e-12;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> pick(0, r.B.size() - 1);
  for (int s = 0; s < 1000; ++s) {
    Word win;
    std::vector<std::size_t> starts;
    for (int b = 0; b < 5; ++b) {
      starts.push_back(win.size());
      win = win + r.B.words[pick(rng)];
    }
    for (std::size_t pos = starts[2]; pos < starts[3]; ++pos) {
      WordView all(win);
      auto iv = window_bounds(all.first(pos), all.subspan(pos), f, ts2);
      ASSERT_LE(iv.hi, cap) << std::setprecision(17) << iv.hi - cap << " " << to_string(win) << " at " << pos;
    }
  }
  for (std::size_t n = 1; n <= 3; ++n)
    for (const Word& w : power_words(r.B.words, n)) EXPECT_LE(markov_value(PeriodicPoint(w), f), cap);
}

TEST(Extract, IndependentOfWorkers) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto p = desk();
  p.workers = 4;
  auto r = extract(p, ts2, g, f);
  EXPECT_EQ(r.B.words, golden().B.words);
  EXPECT_EQ(r.delta, golden().delta);
  EXPECT_EQ(r.frame.positions, golden().frame.positions);
  EXPECT_EQ(r.dim_lower, golden().dim_lower);
}

TEST(Extract, TransposeDuality) {
  auto g = std::make_shared<ContinuedFractionGeometry>(ts2);
  auto f = std::make_shared<ClassicalCFPotential>(ts2);
  ReflectedPotential fr(f);
  auto tt = ts2.transposed();
  auto r = extract(desk(), tt, g->transposed(), fr);
  // stable side of the transposed words in the original model
  std::vector<Word> BT;
  for (const Word& w : r.B.words) BT.push_back(transpose(w));
  std::vector<double> sizes_u, sizes_s;
  for (std::size_t i = 0; i < BT.size(); ++i) {
    sizes_u.push_back(g->transposed().u_size(r.B.words[i]));
    sizes_s.push_back(g->s_size(BT[i]));
  }
  for (std::size_t i = 0; i < BT.size(); ++i) EXPECT_NEAR(sizes_u[i], sizes_s[i], 1e-12 * sizes_s[i]);
  EXPECT_NEAR(r.dim_lower, golden().dim_lower, 1e-9);
  EXPECT_NEAR(r.du.upper, golden().du.upper, 1e-9);
  EXPECT_GT(r.delta, 0);
}

TEST(Extract, MonotoneInBudget) {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  double last_delta = -INFINITY, last_dim = -INFINITY;
  for (std::size_t nodes : {2000u, 20000u, 200000u}) {
    auto p = desk();
    p.certify_nodes = nodes;
    auto r = extract(p, ts2, g, f);
    EXPECT_GE(r.delta, last_delta - 1e-15);
    EXPECT_GE(r.dim_lower, last_dim - 1e-15);
    last_delta = r.delta;
    last_dim = r.dim_lower;
  }
}

TEST(Params, Validation) {
  auto p = desk();
  p.k = 1;
  EXPECT_THROW(p.validate(), MalformedInput);
  p = desk();
  p.r0 = 0;
  EXPECT_THROW(p.validate(), MalformedInput);
  p = desk();
  EXPECT_NEAR(p.tau_value(), 0.002, 1e-15);
}
