#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "spectra/io.hpp"
#include "spectra/realizer.hpp"

namespace spectra {

enum class ExitCode { ok = 0, error = 1, impossible = 2 };

struct ResultEnvelope {
  std::string command;
  std::string config_hash;
  std::string version = kVersion;
  std::uint64_t seed = 0;
  std::string format;   // csv | json | text
  std::string payload;  // identical config and version give identical bytes
  double wall_seconds = 0;
  ExitCode exit = ExitCode::ok;
  std::string summary;
  std::vector<std::string> warnings;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"dimension-curve", "extract", "lagrange-sample", "verify-invariants",
                                              "spectrum-table"};
  return names;
}

namespace detail {

inline std::string fmt(double x, int digits = 12) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

inline std::string csv_header(const ResultEnvelope& e) {
  return "# spectra " + e.version + " command=" + e.command + " config=" + e.config_hash +
         " seed=" + std::to_string(e.seed) + "\n";
}

inline json tagged(double lower, double value, double upper) {
  return {{"certified_lower", num(lower)}, {"estimate", num(value)}, {"certified_upper", num(upper)}};
}

inline json words_json(const std::vector<Word>& ws) {
  json a = json::array();
  for (const Word& w : ws) a.push_back(w);
  return a;
}

inline std::vector<double> t_grid(const CurveParams& c) {
  std::size_t n = static_cast<std::size_t>(std::floor((c.t_max - c.t_min) / c.t_step + 1e-9)) + 1;
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    double t = c.t_min + static_cast<double>(i) * c.t_step;
    out.push_back(std::round(t * 1e12) / 1e12);
  }
  return out;
}

inline CoveringOptions covering_options(const RunConfig& c) {
  CoveringOptions o;
  o.budget = c.budget;
  o.workers = c.workers;
  return o;
}

inline std::string csv_word(WordView w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? " " : "") + std::to_string(w[i]);
  return s;
}

inline std::string letter_string(const Letter& l) {
  std::string s;
  for (std::size_t i = 0; i < l.size(); ++i) s += (i ? "-" : "") + std::to_string(l[i]);
  return s;
}

}  // namespace detail

// t, the dimension bracket of K_t^u, r_used, then the counts at r_used.
inline std::string dimension_curve(const RunConfig& c, CoveringCache& cache, ResultEnvelope& env) {
  Model m = build_model(c);
  auto k = measure_constants(m.ts, *m.gm, c.constants_depth);
  std::string key = model_key(c);
  std::string out = detail::csv_header(env);
  out += "t,lower,value,upper,r_used,count_lower,count_upper,exact\n";
  for (double t : detail::t_grid(c.curve)) {
    auto table = cached_covering_table(cache, key, t, c.curve.r_min, c.curve.r_max, m.ts, *m.gm, *m.pot,
                                       detail::covering_options(c));
    auto e = estimate_from_table(table, c.curve.r_min, c.curve.r_max, m.ts.size(), k);
    const auto& row = table.rows.at(c.curve.r_max);
    out += detail::fmt(t, 10) + "," + detail::fmt(e.lower) + "," + detail::fmt(e.value) + "," + detail::fmt(e.upper) +
           "," + std::to_string(c.curve.r_max) + "," + std::to_string(row.lower) + "," + std::to_string(row.upper) +
           "," + (e.exact ? "1" : "0") + "\n";
  }
  env.summary = "dimension curve over " + std::to_string(detail::t_grid(c.curve).size()) + " thresholds, r <= " +
                std::to_string(c.curve.r_max);
  return out;
}

inline json extraction_json(const ExtractionResult& r) {
  json j;
  j["t"] = detail::num(r.params.t);
  j["eta"] = r.params.eta;
  j["tau"] = r.params.tau_value();
  j["r0"] = r.params.r0;
  j["k"] = r.params.k;
  j["L"] = r.params.L;
  j["spacing"] = r.params.spacing;
  j["theoretical_scale"] = {{"k", r.theory_k}, {"L", r.theory_L}, {"spacing", r.theory_spacing}};
  j["N0"] = r.N0;
  j["B0"] = detail::words_json(r.B0);
  j["pool"] = {{"certified_lower", r.pool_lower}, {"certified_upper", r.pool_upper}};
  j["excellent"] = {{"count", r.excellent}, {"fraction", r.excellent_fraction}, {"threshold", r.threshold_used}};
  json frame = json::array();
  for (std::size_t q = 0; q < r.frame.positions.size(); ++q)
    frame.push_back({{"position", r.frame.positions[q]},
                     {"blocks", {r.B0.empty() ? Word{} : r.B0[r.frame.pairs[q].first],
                                 r.B0.empty() ? Word{} : r.B0[r.frame.pairs[q].second]}}});
  j["frame"] = {{"slots", frame}, {"X", r.frame.X.size()}, {"p0", r.p0}, {"q0", r.q0}};
  j["B"] = {{"words", detail::words_json(r.B.words)},
            {"gamma1", r.B.gamma1},
            {"gamma2", r.B.gamma2},
            {"framed", r.B.kind == AlphabetKind::framed},
            {"pruned", r.pruned}};
  j["delta"] = {{"certified_lower", r.delta},
                {"components_informational", {r.deltas[0], r.deltas[1], r.deltas[2], r.deltas[3]}},
                {"c6", r.c6}};
  j["f_sup_on_B"] = {{"certified_upper", r.certificate.max_upper},
                     {"worst_word", r.certificate.worst_word},
                     {"worst_offset", r.certificate.worst_offset},
                     {"nodes", r.certificate.nodes},
                     {"capped", r.certificate.capped}};
  j["dim_B"] = detail::tagged(r.moran.lower, r.moran.value, r.moran.upper);
  j["D_u"] = detail::tagged(r.du.lower, r.du.value, r.du.upper);
  j["achieved_eta"] = {{"estimate", r.achieved_eta}};
  j["constants"] = {{"c1", r.constants.c1}, {"c2", r.constants.c2}, {"c3", r.constants.c3}, {"depth", r.constants.depth}};
  j["warnings"] = r.warnings;
  return j;
}

inline std::string extract_command(const RunConfig& c, ResultEnvelope& env) {
  Model m = build_model(c);
  auto r = extract(c.extract, m.ts, *m.gm, *m.pot);
  env.warnings.insert(env.warnings.end(), r.warnings.begin(), r.warnings.end());
  env.summary = "#B = " + std::to_string(r.B.size()) + ", delta = " + detail::fmt(r.delta, 6) +
                ", dim(B) >= " + detail::fmt(r.dim_lower, 6) + ", D_u(t) <= " + detail::fmt(r.du.upper, 6);
  return extraction_json(r).dump(2) + "\n";
}

// Maximizer set for B, raising m until the gap is certified.
inline MaximizerSet maximizers_for(const std::vector<Word>& B, const SampleParams& s, const Potential& pot,
                                   const TransitionSystem& ts) {
  for (std::size_t m = s.m;; ++m) {
    try {
      return find_maximizers(B, m, pot, ts);
    } catch (const Inconclusive&) {
      if (m >= s.m_max) throw;
    }
  }
}

inline std::string lagrange_command(const RunConfig& c, ResultEnvelope& env) {
  Model m = build_model(c);
  auto r = extract(c.extract, m.ts, *m.gm, *m.pot);
  std::string out = detail::csv_header(env);
  out += "# t=" + detail::fmt(c.extract.t) + " delta=" + detail::fmt(r.delta) + " B=" + std::to_string(r.B.size()) +
         " words\n";
  if (r.B.size() == 1) {
    out += "# single word: the Lagrange spectrum of Sigma(B) is one value\n";
    out += "index,x_word,lagrange_value\n";
    out += "0," + detail::csv_word(r.B.words[0]) + "," + detail::fmt(markov_value(PeriodicPoint(r.B.words[0]), *m.pot), 17) +
           "\n";
    env.summary = "1 value";
    return out;
  }
  MaximizerSet ms = maximizers_for(r.B.words, c.sample, *m.pot, m.ts);
  out += "# m=" + std::to_string(ms.m) + " gammas=" + std::to_string(ms.gammas.size()) +
         " eta_gap=" + detail::fmt(ms.eta_gap) + " d=" + detail::letter_string(ms.remainder[ms.d_index]) + "\n";
  out += "index,x_word,lagrange_value\n";
  auto samples = lagrange_samples(ms, c.sample.count, c.seed, *m.pot);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::string x;
    for (std::size_t j = 0; j < samples[i].x_word.size(); ++j)
      x += (j ? "/" : "") + detail::letter_string(samples[i].x_word[j]);
    out += std::to_string(i) + "," + x + "," + detail::fmt(samples[i].value, 17) + "\n";
  }
  if (samples.size() < c.sample.count)
    env.warnings.push_back("only " + std::to_string(samples.size()) + " distinct x words found");
  env.summary = std::to_string(samples.size()) + " realized Lagrange values at m=" + std::to_string(ms.m);
  return out;
}

// Markov values of primitive periodic orbits up to the given period, sorted.
inline std::string spectrum_table(const RunConfig& c, ResultEnvelope& env) {
  Model m = build_model(c);
  struct Entry {
    Float value;
    Word period;
  };
  std::vector<Entry> rows;
  for (std::size_t n = 1; n <= c.table.max_period; ++n)
    for (const Word& w : words_of_length(m.ts, n)) {
      if (!closes_up(w, m.ts)) continue;
      bool canonical = true;
      for (std::size_t s = 1; s < n && canonical; ++s) {
        Word rot(w.begin() + static_cast<long>(s), w.end());
        rot.insert(rot.end(), w.begin(), w.begin() + static_cast<long>(s));
        if (rot <= w) canonical = false;  // not the least rotation, or not primitive
      }
      if (!canonical) continue;
      if (markov_value_fast(w, *m.pot) > c.table.t_max + 1e-9L) continue;
      Float v = markov_value_hp(w, *m.pot);
      if (v <= Float(c.table.t_max)) rows.push_back({v, w});
    }
  std::sort(rows.begin(), rows.end(), [](const Entry& a, const Entry& b) {
    return a.value < b.value || (a.value == b.value && a.period < b.period);
  });
  std::string out = detail::csv_header(env);
  out += "markov_value,period,length\n";
  for (const auto& e : rows)
    out += e.value.str(18) + "," + detail::csv_word(e.period) + "," + std::to_string(e.period.size()) + "\n";
  env.summary = std::to_string(rows.size()) + " periodic orbits with Markov value <= " + detail::fmt(c.table.t_max);
  return out;
}

struct CheckOutcome {
  std::string status;  // pass | fail | skipped
  std::string detail;
};

// Property suite of every module at the configured depth.
inline std::string verify_invariants(const RunConfig& c, ResultEnvelope& env) {
  Model m = build_model(c);
  const auto& ts = m.ts;
  const auto& gm = *m.gm;
  const auto& pot = *m.pot;
  const int D = c.verify.depth;
  const std::size_t N = c.verify.samples;
  std::mt19937_64 rng(c.seed);
  auto random_word = [&](std::size_t len) {
    Word w;
    w.push_back(ts.alphabet()[rng() % ts.size()]);
    while (w.size() < len) {
      const auto& nx = ts.successors(w.back());
      w.push_back(nx[rng() % nx.size()]);
    }
    return w;
  };
  auto random_cycle = [&](std::size_t len) {
    for (;;) {
      Word w = random_word(len);
      if (closes_up(w, ts)) return w;
    }
  };

  json checks = json::array();
  std::size_t failed = 0;
  auto run = [&](const std::string& name, const std::function<CheckOutcome()>& f) {
    CheckOutcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {"fail", std::string("exception: ") + e.what()};
    }
    if (o.status == "fail") ++failed;
    checks.push_back({{"name", name}, {"status", o.status}, {"detail", o.detail}});
  };
  auto verdict = [](bool ok, const std::string& d) { return CheckOutcome{ok ? "pass" : "fail", d}; };

  run("symbolic.transpose_involution", [&] {
    TransitionSystem tt = ts.transposed();
    bool ok = tt.transposed() == ts;
    for (std::size_t i = 0; i < N && ok; ++i) {
      Word w = random_word(1 + rng() % static_cast<std::size_t>(D));
      ok = transpose(transpose(w)) == w && is_admissible(transpose(w), tt);
    }
    return verdict(ok, std::to_string(N) + " random words");
  });

  run("symbolic.word_counts_match_matrix_powers", [&] {
    const std::size_t k = ts.size();
    std::vector<double> v(k, 1.0);
    bool ok = true;
    std::string d;
    for (int n = 1; n <= D && ok; ++n) {
      double total = 0;
      for (double x : v) total += x;
      std::size_t count = words_of_length(ts, static_cast<std::size_t>(n)).size();
      ok = static_cast<double>(count) == total;
      d = "n=" + std::to_string(n) + " count=" + std::to_string(count);
      std::vector<double> nv(k, 0.0);
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
          if (ts.allows_index(i, j)) nv[j] += v[i];
      v = nv;
    }
    return verdict(ok, d);
  });

  run("geometry.partition_disjoint", [&] {
    bool ok = true;
    std::string d;
    for (int r = 0; r <= D && ok; ++r) {
      auto part = partition_at_scale(r, ts, gm);
      auto iv = cylinder_intervals(part, gm);
      std::sort(iv.begin(), iv.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
      for (std::size_t i = 0; i + 1 < iv.size() && ok; ++i) ok = iv[i].hi <= iv[i + 1].lo + 1e-12;
      for (const Word& w : part) ok = ok && gm.u_scale(w) >= r;
      d = "r<=" + std::to_string(r) + ", " + std::to_string(part.size()) + " cylinders";
    }
    return verdict(ok, d);
  });

  run("geometry.nested_cylinders", [&] {
    bool ok = true;
    for (std::size_t i = 0; i < N && ok; ++i) {
      Word w = random_word(1 + rng() % static_cast<std::size_t>(D));
      Word ext = w;
      const auto& nx = ts.successors(w.back());
      ext.push_back(nx[rng() % nx.size()]);
      Interval a = gm.u_interval(w), b = gm.u_interval(ext);
      ok = b.lo >= a.lo - 1e-15 && b.hi <= a.hi + 1e-15 && gm.u_size(ext) <= gm.u_size(w);
    }
    return verdict(ok, std::to_string(N) + " parent/child pairs");
  });

  run("geometry.bounded_distortion", [&] {
    auto k = measure_constants(ts, gm, std::min(D, 10));
    bool ok = std::isfinite(k.c1) && k.c1 >= 0;
    for (std::size_t i = 0; i < N && ok; ++i) {
      Word a = random_word(1 + rng() % static_cast<std::size_t>(D / 2)), b = random_word(1 + rng() % static_cast<std::size_t>(D / 2));
      if (!ts.allows(a.back(), b.front())) continue;
      double r = std::log(gm.u_size(a + b)) - std::log(gm.u_size(a)) - std::log(gm.u_size(b));
      ok = std::abs(r) <= k.c1 + 1e-9 || a.size() + b.size() > static_cast<std::size_t>(std::min(D, 10));
    }
    return verdict(ok, "c1=" + detail::fmt(k.c1, 6));
  });

  run("potential.bounds_enclose_values", [&] {
    bool ok = true;
    for (std::size_t i = 0; i < N && ok; ++i) {
      Word per = random_cycle(1 + rng() % 5);
      auto s = TwoSidedSequence::periodic(per, rng() % per.size());
      double v = pot.value(s);
      std::size_t lp = rng() % static_cast<std::size_t>(D), lf = rng() % static_cast<std::size_t>(D);
      Word past = s.slice(-static_cast<long>(lp), 0), fut = s.slice(0, static_cast<long>(lf));
      Interval iv = pot.bounds(past, fut);
      ok = iv.lo <= v + 1e-12 && v <= iv.hi + 1e-12;
    }
    return verdict(ok, std::to_string(N) + " periodic points");
  });

  run("potential.bounds_shrink_with_context", [&] {
    bool ok = true;
    for (std::size_t i = 0; i < N && ok; ++i) {
      Word per = random_cycle(1 + rng() % 5);
      auto s = TwoSidedSequence::periodic(per, 0);
      std::size_t l = 1 + rng() % static_cast<std::size_t>(D);
      Interval a = pot.bounds(s.slice(-static_cast<long>(l), 0), s.slice(0, static_cast<long>(l)));
      Interval b = pot.bounds(s.slice(-static_cast<long>(l) - 1, 0), s.slice(0, static_cast<long>(l) + 1));
      ok = b.width() <= a.width() + 1e-12;
    }
    return verdict(ok, std::to_string(N) + " context pairs");
  });

  const double lo = pot.bounds({}, {}).lo, hi = pot.bounds({}, {}).hi;
  std::vector<double> ts_grid;
  for (int i = 1; i <= 3; ++i) ts_grid.push_back(lo + (hi - lo) * i / 4.0);

  run("sublevel.refutations_sound", [&] {
    bool ok = true;
    std::size_t refuted = 0;
    for (double t : ts_grid) {
      SublevelOracle oracle(ts, pot, t, c.budget);
      for (std::size_t i = 0; i < N / 2 && ok; ++i) {
        Word per = random_cycle(1 + rng() % 6);
        Word rep = repeat(per, static_cast<std::size_t>(D) / per.size() + 2);
        if (oracle.refuted(rep)) {
          ++refuted;
          ok = !markov_at_most(per, t, pot);
        }
      }
    }
    return verdict(ok, std::to_string(refuted) + " refutations checked against exact Markov values");
  });

  run("sublevel.witnesses_genuine", [&] {
    bool ok = true;
    std::size_t yes = 0;
    for (double t : ts_grid) {
      SublevelOracle oracle(ts, pot, t, c.budget);
      for (std::size_t i = 0; i < N / 4 && ok; ++i) {
        auto q = oracle.query(random_word(1 + rng() % 4));
        if (q.verdict == Verdict::yes_certified) {
          ++yes;
          ok = markov_at_most(q.witness, t, pot) && closes_up(q.witness, ts);
        }
      }
    }
    return verdict(ok, std::to_string(yes) + " witnesses");
  });

  const int R = std::min(D, 10);
  auto opt = detail::covering_options(c);
  run("dimension.counts_monotone_in_t", [&] {
    bool ok = true;
    std::vector<CoveringTable> tabs;
    for (double t : ts_grid) tabs.push_back(covering_table(t, 1, R, ts, gm, pot, opt));
    tabs.push_back(covering_table(INFINITY, 1, R, ts, gm, pot, opt));
    for (std::size_t i = 0; i + 1 < tabs.size(); ++i)
      for (int r = 1; r <= R; ++r) {
        ok = ok && tabs[i].rows.at(r).upper <= tabs[i + 1].rows.at(r).upper;
        ok = ok && tabs[i].rows.at(r).lower <= tabs[i].rows.at(r).upper;
      }
    for (int r = 1; r <= R; ++r) ok = ok && tabs.back().rows.at(r).upper == partition_at_scale(r, ts, gm).size();
    return verdict(ok, "r <= " + std::to_string(R));
  });

  run("dimension.stable_equals_unstable", [&] {
    if (!(ts.transposed() == ts)) return CheckOutcome{"skipped", "transition matrix not symmetric"};
    bool ok = true;
    for (double t : ts_grid) ok = ok && covering_table(t, 1, R, ts, gm, pot, opt) == covering_table_stable(t, 1, R, ts, gm, pot, opt);
    return verdict(ok, "N_s = N_u for r <= " + std::to_string(R));
  });

  run("dimension.submultiplicative", [&] {
    auto k = measure_constants(ts, gm, std::min(D, 10));
    bool ok = true;
    std::vector<double> grid = ts_grid;
    grid.push_back(INFINITY);
    for (double t : grid) {
      auto tab = covering_table(t, 1, R, ts, gm, pot, opt);
      for (int n = 1; n < R; ++n)
        for (int mm = 1; n + mm <= R; ++mm) ok = ok && check_submultiplicative(tab, n, mm, ts.size(), k.c3).holds;
    }
    return verdict(ok, "n+m <= " + std::to_string(R) + ", c3=" + std::to_string(k.c3));
  });

  run("dimension.moran_root", [&] {
    auto words = words_of_length(ts, static_cast<std::size_t>(std::min(D, 8)));
    std::vector<Word> closed;
    for (const Word& w : words)
      if (closes_up(w, ts) || ts.is_full_shift()) closed.push_back(w);
    if (!ts.is_full_shift()) return CheckOutcome{"skipped", "Moran root needs a complete word set"};
    auto e = moran_dimension(closed, gm);
    double s = 0;
    for (const Word& w : closed) s += std::pow(gm.u_size(w), e.value);
    return verdict(std::abs(s - 1) < 1e-9 && e.lower <= e.value && e.value <= e.upper,
                   "d=" + detail::fmt(e.value, 8));
  });

  run("extraction.certificate_covers_periodic_points", [&] {
    bool ok = true;
    std::size_t tested = 0;
    for (std::size_t i = 0; i < 8 && ok; ++i) {
      Word per = random_cycle(1 + rng() % 4);
      auto B = check_complete_subshift({per}, ts);
      double mv = markov_value(PeriodicPoint(per), pot);
      auto cert = certify_containment(B, mv + 0.5, pot, ts, 16, 4000, c.workers);
      ok = cert.max_upper >= mv - 1e-12 && cert.delta <= 0.5 + 1e-12;
      ++tested;
    }
    return verdict(ok, std::to_string(tested) + " single-orbit alphabets");
  });

  run("realizer.identity", [&] {
    std::vector<Word> B;
    for (Symbol a : ts.alphabet())
      for (Symbol b : ts.alphabet())
        if (B.empty() && a < b && ts.allows(a, a) && ts.allows(b, b) && ts.allows(a, b) && ts.allows(b, a))
          B = {{a}, {b}};
    try {
      if (B.empty()) return CheckOutcome{"skipped", "no two symbols spanning a full 2-shift"};
      SampleParams sp;
      sp.m = 1;
      sp.m_max = 2;
      auto ms = maximizers_for(B, sp, pot, ts);
      auto samples = lagrange_samples(ms, 10, c.seed, pot);
      for (const auto& s : samples) {
        auto r = realize(s.x_word, ms, pot);
        if (!(r.error <= 1e-9)) return CheckOutcome{"fail", "error " + detail::fmt(r.error)};
      }
      return CheckOutcome{"pass", std::to_string(samples.size()) + " x words at m=" + std::to_string(ms.m)};
    } catch (const Inconclusive& e) {
      return CheckOutcome{"skipped", e.what()};
    } catch (const StageError& e) {
      return CheckOutcome{"skipped", e.what()};
    }
  });

  json report = {{"checks", checks}, {"failed", failed}, {"total", checks.size()}};
  if (failed) env.exit = ExitCode::error;
  env.summary = std::to_string(checks.size() - failed) + "/" + std::to_string(checks.size()) + " checks without failure";
  return report.dump(2) + "\n";
}

inline ResultEnvelope run(const std::string& command, const RunConfig& c, CoveringCache& cache) {
  ResultEnvelope env;
  env.command = command;
  env.config_hash = config_hash(c);
  env.seed = c.seed;
  auto t0 = std::chrono::steady_clock::now();
  try {
    if (command == "dimension-curve") {
      env.format = "csv";
      env.payload = dimension_curve(c, cache, env);
    } else if (command == "extract") {
      env.format = "json";
      env.payload = extract_command(c, env);
    } else if (command == "lagrange-sample") {
      env.format = "csv";
      env.payload = lagrange_command(c, env);
    } else if (command == "verify-invariants") {
      env.format = "json";
      env.payload = verify_invariants(c, env);
    } else if (command == "spectrum-table") {
      env.format = "csv";
      env.payload = spectrum_table(c, env);
    } else {
      throw MalformedInput("unknown command '" + command + "'");
    }
  } catch (const ExtractionImpossible& e) {
    env.exit = ExitCode::impossible;
    env.format = "text";
    env.payload.clear();
    env.summary = std::string("extraction impossible: ") + e.what();
  } catch (const StageError& e) {
    env.exit = ExitCode::error;
    env.format = "text";
    env.payload.clear();
    env.summary = std::string("stage failed: ") + e.what();
  } catch (const Error& e) {
    env.exit = ExitCode::error;
    env.format = "text";
    env.payload.clear();
    env.summary = std::string("error: ") + e.what();
  }
  env.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  env.warnings.insert(env.warnings.end(), cache.warnings().begin(), cache.warnings().end());
  return env;
}

inline std::string json_document(const ResultEnvelope& env) {
  json j = {{"version", env.version}, {"command", env.command}, {"config_hash", env.config_hash}, {"seed", env.seed}};
  j["payload"] = json::parse(env.payload);
  return j.dump(2) + "\n";
}

// Bytes written to the output: CSV payloads already carry their header line.
inline std::string render(const ResultEnvelope& env) {
  if (env.format == "json") return json_document(env);
  return env.payload;
}

}  // namespace spectra
