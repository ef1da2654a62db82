#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "spectra/potential.hpp"
#include "spectra/symbolic.hpp"

namespace spectra {

enum class Verdict { no_certified, unknown, yes_certified };

inline std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::no_certified: return "no_certified";
    case Verdict::yes_certified: return "yes_certified";
    default: return "unknown";
  }
}

struct SearchBudget {
  std::size_t window = 12;      // length of the windows in the refutation graph
  std::size_t extension = 10;   // longest closing word appended when looking for a witness
  std::size_t candidates = 64;  // periodic witnesses tested per query
  std::size_t nodes = 20000;    // search nodes per witness query

  bool operator==(const SearchBudget&) const = default;
};

struct Membership {
  Verdict verdict = Verdict::unknown;
  Word witness;  // period of a sequence through the cylinder with Markov value <= t
};

// Decides whether I^u(alpha) meets K_t^u, three-valued.
//
// Refutation: a window of length L is bad when some position inside it (or
// just after it) has a lower bound of f above t. Every theta in Sigma_t is a
// bi-infinite path in the overlap graph of good windows, so it lives in the
// core of that graph (no sources, no sinks). A word none of whose occurrences
// fits the core is refuted.
//
// Confirmation: a periodic sequence through alpha with Markov value <= t.
class SublevelOracle {
 public:
  SublevelOracle(const TransitionSystem& ts, const Potential& pot, double t, SearchBudget budget)
      : ts_(ts), pot_(pot), t_(t), budget_(budget), k_(ts.size()), L_(budget.window) {
    if (L_ < 1) throw MalformedInput("search budget: window must be >= 1");
    trivial_ = t_ >= pot_.sup_bound();
    if (trivial_) return;
    double states = std::pow(static_cast<double>(k_), static_cast<double>(L_));
    if (states > static_cast<double>(1ULL << 27))
      throw MalformedInput("search budget: window " + std::to_string(L_) + " too large for this alphabet");
    pow_.assign(L_ + 1, 1);
    for (std::size_t i = 1; i <= L_; ++i) pow_[i] = pow_[i - 1] * k_;
    build_core();
  }

  double threshold() const { return t_; }
  const SearchBudget& budget() const { return budget_; }
  bool trivial() const { return trivial_; }
  bool core_empty() const { return !trivial_ && core_size_ == 0; }
  std::size_t core_size() const { return core_size_; }

  bool refuted(WordView a) const {
    if (trivial_) return false;
    if (core_size_ == 0) return true;
    const std::size_t n = a.size();
    if (n == 0) return false;
    if (n < L_) return !prefix_[n][code(a)];
    std::uint64_t c = code(a.first(L_));
    if (!core_[c]) return true;
    for (std::size_t i = L_; i < n; ++i) {
      c = (c % pow_[L_ - 1]) * k_ + ts_.index_of(a[i]);
      if (!core_[c]) return true;
    }
    return false;
  }

  Membership query(WordView a) const {
    Membership m;
    if (!is_admissible(a, ts_)) throw MalformedInput("membership query on inadmissible word " + to_string(a));
    if (refuted(a)) {
      m.verdict = Verdict::no_certified;
      return m;
    }
    std::size_t tested = 0;
    auto test = [&](const Word& w) {
      ++tested;
      if (markov_at_most(w, t_, pot_)) {
        m.verdict = Verdict::yes_certified;
        m.witness = w;
        return true;
      }
      return false;
    };
    const std::size_t n = a.size();
    for (std::size_t p = 1; p <= n && tested < budget_.candidates; ++p) {
      bool periodic = true;
      for (std::size_t i = p; i < n && periodic; ++i) periodic = a[i] == a[i - p];
      if (!periodic) continue;
      Word w(a.begin(), a.begin() + static_cast<long>(p));
      if (!closes_up(w, ts_) || !periodic_in_core(w)) continue;
      if (test(w)) return m;
    }
    Word w(a.begin(), a.end());
    std::size_t nodes = 0;
    for (std::size_t e = 1; e <= budget_.extension; ++e) {
      if (extend(w, e, tested, nodes, test)) return m;
      if (tested >= budget_.candidates || nodes >= budget_.nodes) break;
    }
    m.verdict = Verdict::unknown;
    return m;
  }

 private:
  std::uint64_t code(WordView w) const {
    std::uint64_t c = 0;
    for (Symbol s : w) c = c * k_ + ts_.index_of(s);
    return c;
  }

  // Every length-L window of w w w ... lies in the core.
  bool periodic_in_core(const Word& w) const {
    if (trivial_) return true;
    const std::size_t p = w.size();
    Word buf;
    buf.reserve(L_);
    for (std::size_t s = 0; s < p; ++s) {
      buf.clear();
      for (std::size_t i = 0; i < L_; ++i) buf.push_back(w[(s + i) % p]);
      if (!core_[code(buf)]) return false;
    }
    return true;
  }

  template <class Test>
  bool extend(Word& w, std::size_t remaining, std::size_t& tested, std::size_t& nodes, Test& test) const {
    if (tested >= budget_.candidates || nodes >= budget_.nodes) return false;
    ++nodes;
    if (remaining == 0) {
      if (!ts_.allows(w.back(), w.front()) || !periodic_in_core(w)) return false;
      return test(w);
    }
    for (Symbol s : ts_.successors(w.back())) {
      w.push_back(s);
      bool ok = trivial_ || w.size() < L_ || core_[code(WordView(w).last(L_))];
      if (ok && extend(w, remaining - 1, tested, nodes, test)) {
        w.pop_back();
        return true;
      }
      w.pop_back();
      if (tested >= budget_.candidates || nodes >= budget_.nodes) return false;
    }
    return false;
  }

  bool bad(const Word& w) const {
    for (std::size_t j = 0; j <= w.size(); ++j) {
      WordView past(w.data(), j), future(w.data() + j, w.size() - j);
      if (pot_.bounds(past, future).lo > t_) return true;
    }
    return false;
  }

  void build_core() {
    const std::uint64_t N = pow_[L_];
    core_.assign(N, 0);
    Word w;
    auto rec = [&](auto&& self) -> void {
      if (bad(w)) return;
      if (w.size() == L_) {
        core_[code(w)] = 1;
        return;
      }
      const auto& nx = w.empty() ? ts_.alphabet() : ts_.successors(w.back());
      for (Symbol s : nx) {
        w.push_back(s);
        self(self);
        w.pop_back();
      }
    };
    rec(rec);

    const std::uint64_t top = pow_[L_ - 1];
    std::vector<std::uint16_t> indeg(N, 0), outdeg(N, 0);
    auto first = [&](std::uint64_t c) { return static_cast<std::size_t>(c / top); };
    auto last = [&](std::uint64_t c) { return static_cast<std::size_t>(c % k_); };
    auto for_succ = [&](std::uint64_t c, auto&& fn) {
      for (std::size_t b = 0; b < k_; ++b)
        if (ts_.allows_index(last(c), b)) fn((c % top) * k_ + b);
    };
    auto for_pred = [&](std::uint64_t c, auto&& fn) {
      for (std::size_t a = 0; a < k_; ++a)
        if (ts_.allows_index(a, first(c))) fn(a * top + c / k_);
    };
    for (std::uint64_t c = 0; c < N; ++c) {
      if (!core_[c]) continue;
      for_succ(c, [&](std::uint64_t d) { outdeg[c] += core_[d]; });
      for_pred(c, [&](std::uint64_t d) { indeg[c] += core_[d]; });
    }
    std::deque<std::uint64_t> queue;
    for (std::uint64_t c = 0; c < N; ++c)
      if (core_[c] && (indeg[c] == 0 || outdeg[c] == 0)) queue.push_back(c);
    while (!queue.empty()) {
      std::uint64_t c = queue.front();
      queue.pop_front();
      if (!core_[c]) continue;
      core_[c] = 0;
      for_succ(c, [&](std::uint64_t d) {
        if (core_[d] && --indeg[d] == 0) queue.push_back(d);
      });
      for_pred(c, [&](std::uint64_t d) {
        if (core_[d] && --outdeg[d] == 0) queue.push_back(d);
      });
    }
    core_size_ = 0;
    prefix_.assign(L_, {});
    for (std::size_t n = 1; n < L_; ++n) prefix_[n].assign(pow_[n], 0);
    for (std::uint64_t c = 0; c < N; ++c) {
      if (!core_[c]) continue;
      ++core_size_;
      for (std::size_t n = 1; n < L_; ++n) prefix_[n][c / pow_[L_ - n]] = 1;
    }
  }

  TransitionSystem ts_;
  const Potential& pot_;
  double t_;
  SearchBudget budget_;
  std::size_t k_, L_;
  bool trivial_ = false;
  std::vector<std::uint64_t> pow_;
  std::vector<std::uint8_t> core_;
  std::vector<std::vector<std::uint8_t>> prefix_;
  std::size_t core_size_ = 0;
};

inline Membership cylinder_meets_sublevel(WordView alpha, double t, const SearchBudget& budget,
                                          const TransitionSystem& ts, const Potential& pot) {
  return SublevelOracle(ts, pot, t, budget).query(alpha);
}

}  // namespace spectra
