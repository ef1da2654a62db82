// One line per acceptance criterion; exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "spectra/spectra.hpp"

using namespace spectra;

namespace {

const TransitionSystem ts2 = TransitionSystem::full_shift(2);

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

CoveringOptions opts(int workers = 1) {
  CoveringOptions o;
  o.workers = workers;
  return o;
}

const ExtractionResult& golden() {
  static const ExtractionResult r = [] {
    ContinuedFractionGeometry g(ts2);
    ClassicalCFPotential f(ts2);
    return extract(ExtractionParams{}, ts2, g, f);
  }();
  return r;
}

Outcome c1() {
  ClassicalCFPotential f(ts2);
  double k1 = markov_value(PeriodicPoint({1}), f);
  double k2 = markov_value(PeriodicPoint({2}), f);
  double k3 = markov_value(PeriodicPoint({2, 2, 1, 1}), f);
  double err = std::max({std::abs(k1 - std::sqrt(5.0)), std::abs(k2 - 2 * std::sqrt(2.0)),
                         std::abs(k3 - std::sqrt(221.0) / 5)});
  return {err <= 1e-12, "k1=" + fmt(k1, 17) + " k2=" + fmt(k2, 17) + " k3=" + fmt(k3, 17) + " max err " + fmt(err, 3)};
}

Outcome c2() {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto table = covering_table(2.2, 1, 20, ts2, g, f, opts());
  bool ok = true;
  for (const auto& [r, row] : table.rows) ok = ok && row.lower == 0 && row.upper == 0;
  auto k = measure_constants(ts2, g, 8);
  auto e = estimate_Du(2.2, 1, 20, ts2, g, f, opts(), k);
  ok = ok && e.value == 0 && e.upper == 0 && e.lower == 0;
  return {ok, "N_u(2.2, r) = (0,0) for r <= 20, D_u estimate " + fmt(e.value)};
}

Outcome c3() {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto k = measure_constants(ts2, g, 8);
  auto table = covering_table(2.5, 1, 20, ts2, g, f, opts());
  bool ok = true;
  double prev = INFINITY;
  std::string trail;
  for (int R : {5, 10, 15, 20}) {
    auto e = estimate_from_table(table, 1, R, ts2.size(), k);
    ok = ok && e.upper <= prev;
    prev = e.upper;
    trail += " R=" + std::to_string(R) + ":" + fmt(e.upper, 4);
  }
  ok = ok && prev <= 0.05;
  return {ok, "D_u(2.5) upper bracket" + trail};
}

Outcome c4() {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto k = measure_constants(ts2, g, 8);
  bool ok = true;
  double worst = INFINITY;
  std::size_t pairs = 0;
  for (double t : std::vector<double>{2.5, 3.1, 3.5, INFINITY}) {
    auto table = covering_table(t, 1, 14, ts2, g, f, opts());
    for (int n = 1; n < 14; ++n)
      for (int m = 1; n + m <= 14; ++m) {
        auto c = check_submultiplicative(table, n, m, ts2.size(), k.c3);
        ok = ok && c.holds;
        worst = std::min(worst, c.slack);
        ++pairs;
      }
  }
  return {ok, std::to_string(pairs) + " (t,n,m) triples, c3=" + std::to_string(k.c3) + ", min log slack " + fmt(worst, 4)};
}

Outcome c5() {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto k = measure_constants(ts2, g, 8);
  double moran = moran_dimension(words_of_length(ts2, 12), g).value;
  double du = estimate_Du(INFINITY, 1, 25, ts2, g, f, opts(), k).value;
  double box = box_dimension_oracle(cylinder_intervals(words_of_length(ts2, 10), g));
  double spread = std::max({std::abs(moran - du), std::abs(moran - box), std::abs(du - box)});
  return {spread <= 0.05, "moran(12)=" + fmt(moran, 5) + " D_u(inf,25)=" + fmt(du, 5) + " box(10)=" + fmt(box, 5) +
                              " spread " + fmt(spread, 3) + " (literature dim E_2 ~ 0.5313)"};
}

Outcome c6() {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  bool ok = true;
  std::size_t rows = 0;
  for (double t : std::vector<double>{2.5, 2.9, 3.0, 3.1, 3.3, 3.5, INFINITY}) {
    auto u = covering_table(t, 1, 14, ts2, g, f, opts());
    auto s = covering_table_stable(t, 1, 14, ts2, g, f, opts());
    for (const auto& [r, row] : u.rows) {
      ok = ok && s.rows.at(r).lower == row.lower && s.rows.at(r).upper == row.upper;
      ++rows;
    }
  }
  return {ok, "N_s = N_u on " + std::to_string(rows) + " (t,r) pairs, r <= 14"};
}

Outcome c7() {
  ContinuedFractionGeometry g(ts2);
  ClassicalCFPotential f(ts2);
  auto k = measure_constants(ts2, g, 8);
  const int R = 18;
  std::vector<double> ts, lo, hi;
  for (int i = 0; i <= 14; ++i) {
    double t = 2.9 + 0.05 * i;
    auto e = estimate_Du(t, 1, R, ts2, g, f, opts(), k);
    ts.push_back(t);
    lo.push_back(e.lower);
    hi.push_back(e.upper);
  }
  bool ok = true;
  double worst_jump = -INFINITY;
  std::string jumps;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    ok = ok && hi[i] <= hi[i + 1] + 1e-12 && lo[i] <= hi[i];
    worst_jump = std::max(worst_jump, lo[i + 1] - hi[i]);
    if (lo[i + 1] > hi[i] + 0.05)
      jumps += " " + fmt(ts[i], 3) + "->" + fmt(ts[i + 1], 3) + ": lower " + fmt(lo[i + 1], 3) + " > upper " +
               fmt(hi[i], 3) + " + 0.05;";
  }
  ok = ok && worst_jump <= 0.05;
  return {ok, "15 thresholds, r_max=" + std::to_string(R) + ", max lower(t+) - upper(t) = " + fmt(worst_jump, 4) +
                  (jumps.empty() ? std::string() : ";" + jumps) + " brackets at 2.9/3.25/3.6: [" + fmt(lo[0], 3) +
                  "," + fmt(hi[0], 3) + "] [" + fmt(lo[7], 3) + "," + fmt(hi[7], 3) + "] [" + fmt(lo[14], 3) + "," +
                  fmt(hi[14], 3) + "]"};
}

Outcome c8() {
  const auto& r = golden();
  ClassicalCFPotential f(ts2);
  ContinuedFractionGeometry g(ts2);
  if (!(r.delta > 0)) return {false, "delta not positive"};
  const double cap = r.params.t - r.delta;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> pick(0, r.B.size() - 1);
  bool ok = true;
  double worst = -INFINITY;
  for (int s = 0; s < 1000; ++s) {
    Word win;
    std::vector<std::size_t> starts;
    for (int b = 0; b < 5; ++b) {
      starts.push_back(win.size());
      win = win + r.B.words[pick(rng)];
    }
    WordView all(win);
    for (std::size_t pos = starts[2]; pos < starts[3]; ++pos)
      worst = std::max(worst, static_cast<double>(window_bounds(all.first(pos), all.subspan(pos), f, ts2).hi));
  }
  ok = ok && worst <= cap + 1e-12;
  double worst_periodic = -INFINITY;
  std::size_t periodic = 0;
  for (std::size_t n = 1; n <= 3; ++n)
    for (const Word& w : power_words(r.B.words, n)) {
      worst_periodic = std::max(worst_periodic, markov_value(PeriodicPoint(w), f));
      ++periodic;
    }
  ok = ok && worst_periodic <= cap + 1e-12;
  double moran = moran_dimension(r.B.words, g).value;
  ok = ok && moran <= r.du.upper;
  return {ok, "#B=" + std::to_string(r.B.size()) + " delta=" + fmt(r.delta) + " window max " + fmt(worst, 10) +
                  ", periodic max " + fmt(worst_periodic, 10) + " (" + std::to_string(periodic) + " orbits) <= " +
                  fmt(cap, 10) + "; moran(B)=" + fmt(moran, 4) + " <= D_u upper " + fmt(r.du.upper, 4)};
}

Outcome c9() {
  const auto& r = golden();
  ClassicalCFPotential f(ts2);
  ContinuedFractionGeometry g(ts2);
  double min_u = INFINITY;
  for (const Word& w : r.B.words) min_u = std::min(min_u, static_cast<double>(g.u_size(w)));
  double formula = std::log(static_cast<double>(r.B.size())) / -std::log(min_u);
  double moran = moran_dimension(r.B.words, g).value;
  double box = box_dimension_oracle(cylinder_intervals(power_words(r.B.words, 3), g));
  bool ok = formula <= moran && moran <= box + 0.05;
  auto ms = find_maximizers(r.B.words, 1, f, ts2);
  auto samples = lagrange_samples(ms, 100, 1, f);
  double top = -INFINITY;
  for (const auto& s : samples) top = std::max(top, s.value);
  ok = ok && samples.size() == 100 && top <= r.params.t - r.delta + 1e-12;
  return {ok, "log#B/-log(min u)=" + fmt(formula, 5) + " <= moran " + fmt(moran, 5) + " <= box " + fmt(box, 5) +
                  " + 0.05; 100 Lagrange samples max " + fmt(top, 12) + " <= t - delta = " +
                  fmt(r.params.t - r.delta, 12)};
}

Outcome c10() {
  ClassicalCFPotential f(ts2);
  auto ms = find_maximizers({{1}, {2}}, 2, f, ts2);
  auto samples = lagrange_samples(ms, 100, 10, f);
  bool ok = samples.size() == 100;
  double worst = 0;
  std::size_t gaps = 0;
  for (const auto& s : samples) {
    auto z = realize(s.x_word, ms, f);
    worst = std::max(worst, std::abs(z.lagrange - z.value));
    bool gap = z.runner_up < z.value - ms.eta_gap && z.window_ceiling < z.value - ms.eta_gap;
    gaps += gap;
    ok = ok && std::abs(z.lagrange - z.value) <= 1e-9 && gap;
  }
  return {ok, "B={(1),(2)}, m=2, eta_gap=" + fmt(ms.eta_gap, 4) + ": max |l(theta*) - f(sigma^n theta)| = " +
                  fmt(worst, 3) + ", gap held " + std::to_string(gaps) + "/100"};
}

std::string capture(const std::string& cmd) {
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return "<popen failed>";
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  int status = pclose(p);
  out += "\n<exit " + std::to_string(status) + ">";
  return out;
}

Outcome c11() {
  const std::string cli = SPECTRA_CLI;
  const std::vector<std::string> commands = {
      "dimension-curve --t-min 2.9 --t-max 3.3 --t-step 0.1 --r-max 12",
      "extract --t 3.1",
      "extract --t 2.2",
      "lagrange-sample --t 3.1 --count 5",
      "verify-invariants --samples 50",
      "spectrum-table --max-period 8",
  };
  bool ok = true;
  std::string bad;
  for (const auto& c : commands) {
    std::string first;
    for (int w : {1, 4, 16, 1}) {
      std::string out = capture(cli + " " + c + " --workers " + std::to_string(w) + " 2>/dev/null");
      if (first.empty()) {
        first = out;
      } else if (out != first) {
        ok = false;
        bad += " [" + c + " workers=" + std::to_string(w) + "]";
      }
    }
  }
  return {ok, std::to_string(commands.size()) + " commands x workers {1,4,16,1}" + (ok ? ": identical bytes" : ":" + bad)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "exact Markov anchors", 1, c1},
      {2, "empty sublevel below Hurwitz", 10, c2},
      {3, "discreteness below 3", 60, c3},
      {4, "submultiplicativity", 300, c4},
      {5, "estimator cross-validation", 300, c5},
      {6, "stable and unstable counts agree", 60, c6},
      {7, "semicontinuity evidence", 1800, c7},
      {8, "extraction soundness", 600, c8},
      {9, "sandwich chain", 300, c9},
      {10, "realization identity", 120, c10},
      {11, "determinism across workers", 600, c11},
  };
  int failed = 0;
  for (const auto& c : all) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = o.pass && secs < c.limit;
    if (o.pass && !pass) o.detail += "; over the time limit";
    failed += !pass;
    std::printf("criterion %d (%s): %s  %s  [%.1f s / %.0f s]\n", c.id, c.name, pass ? "PASS" : "FAIL", o.detail.c_str(),
                secs, c.limit);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed;
}
