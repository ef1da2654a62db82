#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spectra/error.hpp"

namespace spectra {

using Symbol = int;
using Word = std::vector<Symbol>;
using WordView = std::span<const Symbol>;

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 15];
    v >>= 4;
  }
  return out;
}

inline std::string to_string(WordView w) {
  std::string s = "(";
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(w[i]);
  }
  return s + ")";
}

inline Word operator+(const Word& a, const Word& b) {
  Word out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline Word transpose(WordView w) { return Word(w.rbegin(), w.rend()); }

inline Word repeat(WordView w, std::size_t n) {
  Word out;
  out.reserve(w.size() * n);
  for (std::size_t i = 0; i < n; ++i) out.insert(out.end(), w.begin(), w.end());
  return out;
}

// Alphabet plus allowed pairs; pair lookups are a dense-table read.
class TransitionSystem {
 public:
  TransitionSystem() = default;

  TransitionSystem(std::vector<Symbol> alphabet, const std::vector<std::pair<Symbol, Symbol>>& transitions)
      : alphabet_(std::move(alphabet)) {
    if (alphabet_.empty()) throw MalformedInput("transition system: empty alphabet");
    auto [mn, mx] = std::minmax_element(alphabet_.begin(), alphabet_.end());
    min_symbol_ = *mn;
    long range = static_cast<long>(*mx) - static_cast<long>(*mn) + 1;
    if (range > (1L << 16)) throw MalformedInput("transition system: symbol range too wide");
    index_.assign(static_cast<std::size_t>(range), -1);
    for (std::size_t i = 0; i < alphabet_.size(); ++i) {
      int& slot = index_[static_cast<std::size_t>(alphabet_[i] - min_symbol_)];
      if (slot != -1) throw MalformedInput("transition system: repeated symbol " + std::to_string(alphabet_[i]));
      slot = static_cast<int>(i);
    }
    const std::size_t n = alphabet_.size();
    allowed_.assign(n * n, 0);
    for (auto [a, b] : transitions) allowed_[index_of(a) * n + index_of(b)] = 1;
    succ_.assign(n, {});
    pred_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (allowed_[i * n + j]) {
          succ_[i].push_back(alphabet_[j]);
          pred_[j].push_back(alphabet_[i]);
        }
    for (std::size_t i = 0; i < n; ++i)
      if (succ_[i].empty() || pred_[i].empty())
        throw MalformedInput("transition system: dead symbol " + std::to_string(alphabet_[i]));
  }

  static TransitionSystem full_shift(int n) {
    std::vector<Symbol> a;
    std::vector<std::pair<Symbol, Symbol>> t;
    for (int i = 1; i <= n; ++i) a.push_back(i);
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) t.emplace_back(i, j);
    return TransitionSystem(a, t);
  }

  const std::vector<Symbol>& alphabet() const { return alphabet_; }
  std::size_t size() const { return alphabet_.size(); }

  bool contains(Symbol s) const {
    long off = static_cast<long>(s) - min_symbol_;
    return off >= 0 && off < static_cast<long>(index_.size()) && index_[static_cast<std::size_t>(off)] >= 0;
  }

  std::size_t index_of(Symbol s) const {
    if (!contains(s)) throw MalformedInput("unknown symbol " + std::to_string(s));
    return static_cast<std::size_t>(index_[static_cast<std::size_t>(s - min_symbol_)]);
  }

  bool allows(Symbol a, Symbol b) const { return allowed_[index_of(a) * size() + index_of(b)] != 0; }
  bool allows_index(std::size_t i, std::size_t j) const { return allowed_[i * size() + j] != 0; }

  const std::vector<Symbol>& successors(Symbol a) const { return succ_[index_of(a)]; }
  const std::vector<Symbol>& predecessors(Symbol a) const { return pred_[index_of(a)]; }

  std::vector<std::pair<Symbol, Symbol>> transitions() const {
    std::vector<std::pair<Symbol, Symbol>> out;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < size(); ++j)
        if (allowed_[i * size() + j]) out.emplace_back(alphabet_[i], alphabet_[j]);
    return out;
  }

  TransitionSystem transposed() const {
    auto t = transitions();
    for (auto& p : t) std::swap(p.first, p.second);
    return TransitionSystem(alphabet_, t);
  }

  bool is_full_shift() const {
    return std::all_of(allowed_.begin(), allowed_.end(), [](char c) { return c != 0; });
  }

  std::string canonical() const {
    std::ostringstream os;
    os << "A";
    for (Symbol s : alphabet_) os << ' ' << s;
    os << " T";
    for (auto [a, b] : transitions()) os << ' ' << a << '>' << b;
    return os.str();
  }

  std::uint64_t hash() const { return fnv1a(canonical()); }

  bool operator==(const TransitionSystem& o) const { return canonical() == o.canonical(); }

 private:
  std::vector<Symbol> alphabet_;
  Symbol min_symbol_ = 0;
  std::vector<int> index_;
  std::vector<char> allowed_;
  std::vector<std::vector<Symbol>> succ_, pred_;
};

inline bool is_admissible(WordView w, const TransitionSystem& ts) {
  for (Symbol s : w) ts.index_of(s);
  if (w.empty()) return false;
  for (std::size_t i = 0; i + 1 < w.size(); ++i)
    if (!ts.allows(w[i], w[i + 1])) return false;
  return true;
}

inline Word concat(const std::vector<Word>& words, const TransitionSystem& ts) {
  Word out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (Symbol s : words[i]) ts.index_of(s);
    if (i > 0 && !out.empty() && !words[i].empty() && !ts.allows(out.back(), words[i].front()))
      throw ConcatenationError(i - 1, "inadmissible junction " + std::to_string(i - 1) + " between " +
                                          std::to_string(out.back()) + " and " +
                                          std::to_string(words[i].front()));
    out.insert(out.end(), words[i].begin(), words[i].end());
  }
  return out;
}

enum class AlphabetKind { free, framed };

struct WordAlphabet {
  std::vector<Word> words;
  AlphabetKind kind = AlphabetKind::free;
  Word gamma1, gamma2;

  std::size_t size() const { return words.size(); }
};

// Sorted, deduplicated; framed when every word starts with the same block of
// length first_block and ends with the same block of length last_block.
inline WordAlphabet check_complete_subshift(std::vector<Word> B, const TransitionSystem& ts,
                                            std::size_t first_block = 0, std::size_t last_block = 0) {
  if (B.empty()) throw MalformedInput("complete subshift: empty word set");
  std::sort(B.begin(), B.end());
  B.erase(std::unique(B.begin(), B.end()), B.end());
  for (std::size_t i = 0; i < B.size(); ++i)
    if (!is_admissible(B[i], ts))
      throw CompleteSubshiftError(i, i, "complete subshift: word " + to_string(B[i]) + " not admissible");
  for (std::size_t i = 0; i < B.size(); ++i)
    for (std::size_t j = 0; j < B.size(); ++j)
      if (!ts.allows(B[i].back(), B[j].front()))
        throw CompleteSubshiftError(i, j, "complete subshift: " + to_string(B[i]) + " . " + to_string(B[j]) +
                                              " not admissible");
  WordAlphabet out;
  out.words = std::move(B);
  if (first_block > 0 && last_block > 0) {
    bool framed = true;
    const Word& w0 = out.words.front();
    for (const Word& w : out.words) {
      if (w.size() < first_block || w.size() < last_block || w0.size() < first_block || w0.size() < last_block ||
          !std::equal(w.begin(), w.begin() + static_cast<long>(first_block), w0.begin()) ||
          !std::equal(w.end() - static_cast<long>(last_block), w.end(), w0.end() - static_cast<long>(last_block))) {
        framed = false;
        break;
      }
    }
    if (framed) {
      out.kind = AlphabetKind::framed;
      out.gamma1.assign(w0.begin(), w0.begin() + static_cast<long>(first_block));
      out.gamma2.assign(w0.end() - static_cast<long>(last_block), w0.end());
    }
  }
  return out;
}

struct PeriodicPoint {
  Word period;
  std::size_t phase = 0;

  PeriodicPoint() = default;
  PeriodicPoint(Word w, std::size_t ph = 0) : period(std::move(w)), phase(ph) {}

  bool valid(const TransitionSystem& ts) const {
    return !period.empty() && phase < period.size() && is_admissible(period, ts) &&
           ts.allows(period.back(), period.front());
  }

  Word rotated() const {
    Word out(period.begin() + static_cast<long>(phase), period.end());
    out.insert(out.end(), period.begin(), period.begin() + static_cast<long>(phase));
    return out;
  }
};

inline bool closes_up(WordView w, const TransitionSystem& ts) {
  return !w.empty() && is_admissible(w, ts) && ts.allows(w.back(), w.front());
}

// Depth-first, lexicographic in alphabet order. A node is skipped entirely when
// prune holds; a node where stop holds is a leaf, emitted when keep holds.
template <class Keep, class Stop, class Visit, class Prune>
void for_each_word(const TransitionSystem& ts, Keep&& keep, Stop&& stop, Visit&& visit, Prune&& prune,
                   std::size_t depth_cap = 64, Word prefix = {}) {
  Word w = std::move(prefix);
  auto step = [&](auto&& self) -> void {
    if (prune(WordView(w))) return;
    if (stop(WordView(w))) {
      if (keep(WordView(w))) visit(WordView(w));
      return;
    }
    if (w.size() >= depth_cap)
      throw EnumerationOverflow("enumeration exceeded depth cap " + std::to_string(depth_cap) + " at " + to_string(w));
    const auto& next = w.empty() ? ts.alphabet() : ts.successors(w.back());
    for (Symbol s : next) {
      w.push_back(s);
      self(self);
      w.pop_back();
    }
  };
  if (w.empty()) {
    for (Symbol s : ts.alphabet()) {
      w.push_back(s);
      step(step);
      w.pop_back();
    }
  } else {
    if (!is_admissible(w, ts)) return;
    step(step);
  }
}

template <class Keep, class Stop>
std::vector<Word> enumerate_words(const TransitionSystem& ts, Keep&& keep, Stop&& stop, std::size_t depth_cap = 64) {
  std::vector<Word> out;
  for_each_word(
      ts, keep, stop, [&](WordView w) { out.emplace_back(w.begin(), w.end()); }, [](WordView) { return false; },
      depth_cap);
  return out;
}

// All admissible words of exactly length n, lexicographic.
inline std::vector<Word> words_of_length(const TransitionSystem& ts, std::size_t n) {
  return enumerate_words(
      ts, [](WordView) { return true; }, [n](WordView w) { return w.size() >= n; }, std::max<std::size_t>(n, 1));
}

// All concatenations of n words from B (B must be a complete-subshift alphabet).
inline std::vector<Word> power_words(const std::vector<Word>& B, std::size_t n) {
  std::vector<Word> cur{Word{}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Word> next;
    next.reserve(cur.size() * B.size());
    for (const Word& c : cur)
      for (const Word& b : B) next.push_back(c + b);
    cur = std::move(next);
  }
  return cur;
}

}  // namespace spectra
