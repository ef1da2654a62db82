#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "json.hpp"
#include "spectra/dimension.hpp"
#include "spectra/extraction.hpp"

namespace spectra {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.4.0";

struct SystemSpec {
  std::string kind = "full_shift";  // full_shift | matrix
  int symbols = 2;
  std::vector<Symbol> alphabet;
  std::vector<std::pair<Symbol, Symbol>> transitions;
};

struct GeometrySpec {
  std::string model = "continued_fraction";  // continued_fraction | affine
  std::vector<double> ratios;
};

struct PotentialSpec {
  std::string name = "classical_cf";  // classical_cf | affine_coordinate | constant
  double value = 0;
};

struct CurveParams {
  double t_min = 2.0, t_max = 3.5, t_step = 0.1;
  int r_min = 1, r_max = 16;
};

struct SampleParams {
  std::size_t m = 1, m_max = 2;
  std::size_t count = 100;
};

struct VerifyParams {
  int depth = 8;
  std::size_t samples = 200;
};

struct TableParams {
  std::size_t max_period = 8;
  double t_max = 3.5;
};

struct RunConfig {
  SystemSpec system;
  GeometrySpec geometry;
  PotentialSpec potential;
  SearchBudget budget;
  std::uint64_t seed = 1;
  int workers = 1;
  int constants_depth = 8;
  CurveParams curve;
  ExtractionParams extract;
  SampleParams sample;
  VerifyParams verify;
  TableParams table;
};

namespace detail {

// Reads fields of one object, rejecting unknown keys and wrong types with the field path.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw MalformedInput(path_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (it->is_string() && (it->get<std::string>() == "inf" || it->get<std::string>() == "+inf")) {
          out = INFINITY;
          return;
        }
        if (!it->is_number()) throw MalformedInput("expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw MalformedInput("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw MalformedInput("expected an integer");
        if (std::is_unsigned_v<T> && it->get<long long>() < 0) throw MalformedInput("expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw MalformedInput("expected a string");
      }
      out = it->get<T>();
    } catch (const MalformedInput& e) {
      throw MalformedInput(path_ + "." + key + ": " + e.what());
    } catch (const json::exception& e) {
      throw MalformedInput(path_ + "." + key + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    seen_.push_back(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw MalformedInput(path_ + "." + it.key() + ": unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

inline json num(double x) {
  if (std::isinf(x)) return x > 0 ? json("inf") : json("-inf");
  return json(x);
}

}  // namespace detail

inline json budget_to_json(const SearchBudget& b) {
  return {{"window", b.window}, {"extension", b.extension}, {"candidates", b.candidates}, {"nodes", b.nodes}};
}

inline json to_json(const RunConfig& c) {
  json j;
  json sys = {{"kind", c.system.kind}};
  if (c.system.kind == "full_shift") {
    sys["symbols"] = c.system.symbols;
  } else {
    sys["alphabet"] = c.system.alphabet;
    json tr = json::array();
    for (auto [a, b] : c.system.transitions) tr.push_back({a, b});
    sys["transitions"] = tr;
  }
  j["system"] = sys;
  json geo = {{"model", c.geometry.model}};
  if (c.geometry.model == "affine") geo["ratios"] = c.geometry.ratios;
  j["geometry"] = geo;
  json pot = {{"name", c.potential.name}};
  if (c.potential.name == "constant") pot["value"] = c.potential.value;
  j["potential"] = pot;
  j["budget"] = budget_to_json(c.budget);
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["constants_depth"] = c.constants_depth;
  j["dimension_curve"] = {{"t_min", c.curve.t_min}, {"t_max", c.curve.t_max}, {"t_step", c.curve.t_step},
                          {"r_min", c.curve.r_min}, {"r_max", c.curve.r_max}};
  const auto& e = c.extract;
  j["extract"] = {{"t", detail::num(e.t)},
                  {"eta", e.eta},
                  {"tau", e.tau},
                  {"r0", e.r0},
                  {"k", e.k},
                  {"L", e.L},
                  {"spacing", e.spacing},
                  {"excellent_threshold", e.excellent_threshold},
                  {"allow_lower_threshold", e.allow_lower_threshold},
                  {"exhaustive_frame", e.exhaustive_frame},
                  {"pool_cap", e.pool_cap},
                  {"context", e.context},
                  {"certify_nodes", e.certify_nodes},
                  {"prune_violations", e.prune_violations},
                  {"du_r_max", e.du_r_max}};
  j["lagrange_sample"] = {{"m", c.sample.m}, {"m_max", c.sample.m_max}, {"count", c.sample.count}};
  j["verify_invariants"] = {{"depth", c.verify.depth}, {"samples", c.verify.samples}};
  j["spectrum_table"] = {{"max_period", c.table.max_period}, {"t_max", detail::num(c.table.t_max)}};
  return j;
}

inline void validate(const RunConfig& c) {
  if (c.system.kind == "full_shift") {
    if (c.system.symbols < 1 || c.system.symbols > 64) throw MalformedInput("config.system.symbols: must lie in [1,64]");
  } else if (c.system.kind == "matrix") {
    if (c.system.alphabet.empty()) throw MalformedInput("config.system.alphabet: empty");
  } else {
    throw MalformedInput("config.system.kind: unknown kind '" + c.system.kind + "'");
  }
  if (c.geometry.model != "continued_fraction" && c.geometry.model != "affine")
    throw MalformedInput("config.geometry.model: unknown model '" + c.geometry.model + "'");
  if (c.potential.name != "classical_cf" && c.potential.name != "affine_coordinate" && c.potential.name != "constant")
    throw MalformedInput("config.potential.name: unknown potential '" + c.potential.name + "'");
  if (c.potential.name == "affine_coordinate" && c.geometry.model != "affine")
    throw MalformedInput("config.potential.name: affine_coordinate needs the affine geometry");
  if (c.workers < 1) throw MalformedInput("config.workers: must be >= 1");
  if (c.constants_depth < 1 || c.constants_depth > 14) throw MalformedInput("config.constants_depth: must lie in [1,14]");
  if (c.budget.window < 1) throw MalformedInput("config.budget.window: must be >= 1");
  if (!(c.curve.t_step > 0)) throw MalformedInput("config.dimension_curve.t_step: must be > 0");
  if (c.curve.t_max < c.curve.t_min) throw MalformedInput("config.dimension_curve.t_max: below t_min");
  if (c.curve.r_min < 1 || c.curve.r_max < c.curve.r_min)
    throw MalformedInput("config.dimension_curve.r_max: need 1 <= r_min <= r_max");
  if (c.sample.m < 1 || c.sample.m_max < c.sample.m) throw MalformedInput("config.lagrange_sample.m: need 1 <= m <= m_max");
  if (c.verify.depth < 2 || c.verify.depth > 14) throw MalformedInput("config.verify_invariants.depth: must lie in [2,14]");
  if (c.table.max_period < 1 || c.table.max_period > 20)
    throw MalformedInput("config.spectrum_table.max_period: must lie in [1,20]");
  try {
    c.extract.validate();
  } catch (const MalformedInput& e) {
    throw MalformedInput(std::string("config.extract: ") + e.what());
  }
}

inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  detail::Reader top(j, "config");
  if (const json* s = top.sub("system")) {
    detail::Reader r(*s, top.path("system"));
    r.get("kind", c.system.kind);
    r.get("symbols", c.system.symbols);
    r.get("alphabet", c.system.alphabet);
    if (const json* t = r.sub("transitions")) {
      if (!t->is_array()) throw MalformedInput("config.system.transitions: expected an array of pairs");
      for (const auto& p : *t) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
          throw MalformedInput("config.system.transitions: expected [from, to] integer pairs");
        c.system.transitions.emplace_back(p[0].get<Symbol>(), p[1].get<Symbol>());
      }
    }
    r.finish();
  }
  if (const json* s = top.sub("geometry")) {
    detail::Reader r(*s, top.path("geometry"));
    r.get("model", c.geometry.model);
    r.get("ratios", c.geometry.ratios);
    r.finish();
  }
  if (const json* s = top.sub("potential")) {
    detail::Reader r(*s, top.path("potential"));
    r.get("name", c.potential.name);
    r.get("value", c.potential.value);
    r.finish();
  }
  if (const json* s = top.sub("budget")) {
    detail::Reader r(*s, top.path("budget"));
    r.get("window", c.budget.window);
    r.get("extension", c.budget.extension);
    r.get("candidates", c.budget.candidates);
    r.get("nodes", c.budget.nodes);
    r.finish();
  }
  top.get("seed", c.seed);
  top.get("workers", c.workers);
  top.get("constants_depth", c.constants_depth);
  if (const json* s = top.sub("dimension_curve")) {
    detail::Reader r(*s, top.path("dimension_curve"));
    r.get("t_min", c.curve.t_min);
    r.get("t_max", c.curve.t_max);
    r.get("t_step", c.curve.t_step);
    r.get("r_min", c.curve.r_min);
    r.get("r_max", c.curve.r_max);
    r.finish();
  }
  if (const json* s = top.sub("extract")) {
    detail::Reader r(*s, top.path("extract"));
    auto& e = c.extract;
    r.get("t", e.t);
    r.get("eta", e.eta);
    r.get("tau", e.tau);
    r.get("r0", e.r0);
    r.get("k", e.k);
    r.get("L", e.L);
    r.get("spacing", e.spacing);
    r.get("excellent_threshold", e.excellent_threshold);
    r.get("allow_lower_threshold", e.allow_lower_threshold);
    r.get("exhaustive_frame", e.exhaustive_frame);
    r.get("pool_cap", e.pool_cap);
    r.get("context", e.context);
    r.get("certify_nodes", e.certify_nodes);
    r.get("prune_violations", e.prune_violations);
    r.get("du_r_max", e.du_r_max);
    r.finish();
  }
  if (const json* s = top.sub("lagrange_sample")) {
    detail::Reader r(*s, top.path("lagrange_sample"));
    r.get("m", c.sample.m);
    r.get("m_max", c.sample.m_max);
    r.get("count", c.sample.count);
    r.finish();
  }
  if (const json* s = top.sub("verify_invariants")) {
    detail::Reader r(*s, top.path("verify_invariants"));
    r.get("depth", c.verify.depth);
    r.get("samples", c.verify.samples);
    r.finish();
  }
  if (const json* s = top.sub("spectrum_table")) {
    detail::Reader r(*s, top.path("spectrum_table"));
    r.get("max_period", c.table.max_period);
    r.get("t_max", c.table.t_max);
    r.finish();
  }
  top.finish();
  c.extract.budget = c.budget;
  c.extract.workers = c.workers;
  c.extract.constants_depth = c.constants_depth;
  validate(c);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInput("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw MalformedInput("config file " + path + ": " + e.what());
  }
  return config_from_json(j);
}

// Hash of everything that can change a payload; workers is left out.
inline std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  j.erase("workers");
  return hex64(fnv1a(j.dump()));
}

// The model part alone: what a covering table depends on besides (t, r, budget).
inline std::string model_key(const RunConfig& c) {
  json j = to_json(c);
  return json{{"system", j["system"]}, {"geometry", j["geometry"]}, {"potential", j["potential"]}}.dump();
}

struct Model {
  TransitionSystem ts;
  std::shared_ptr<const GeometryModel> gm;
  std::shared_ptr<const Potential> pot;
};

inline Model build_model(const RunConfig& c) {
  Model m;
  if (c.system.kind == "full_shift") {
    m.ts = TransitionSystem::full_shift(c.system.symbols);
  } else {
    m.ts = TransitionSystem(c.system.alphabet, c.system.transitions);
  }
  std::shared_ptr<const AffineGeometry> affine;
  if (c.geometry.model == "continued_fraction") {
    m.gm = std::make_shared<ContinuedFractionGeometry>(m.ts);
  } else {
    affine = std::make_shared<AffineGeometry>(m.ts, c.geometry.ratios);
    m.gm = affine;
  }
  if (c.potential.name == "classical_cf") {
    m.pot = std::make_shared<ClassicalCFPotential>(m.ts);
  } else if (c.potential.name == "affine_coordinate") {
    m.pot = std::make_shared<AffineCoordinatePotential>(affine);
  } else {
    m.pot = std::make_shared<ConstantPotential>(c.potential.value);
  }
  return m;
}

// Covering tables on disk, one file per key, written to a temporary file and
// renamed into place.
class CoveringCache {
 public:
  explicit CoveringCache(std::string dir = "") : dir_(std::move(dir)) {}

  static CoveringCache from_env() {
    const char* d = std::getenv("SPECTRA_CACHE_DIR");
    return CoveringCache(d ? d : "");
  }

  bool enabled() const { return !dir_.empty(); }
  const std::vector<std::string>& warnings() const { return warnings_; }

  static std::string key(const std::string& model, double t, int r_min, int r_max, const SearchBudget& b) {
    return json{{"model", model}, {"t", detail::num(t)}, {"r_min", r_min}, {"r_max", r_max}, {"budget", budget_to_json(b)}}
        .dump();
  }

  std::filesystem::path file_for(const std::string& key) const {
    return std::filesystem::path(dir_) / ("cover-" + hex64(fnv1a(key)) + ".json");
  }

  static json table_to_json(const CoveringTable& t) {
    json rows = json::array();
    for (const auto& [r, row] : t.rows) rows.push_back({r, row.lower, row.upper});
    return {{"t", detail::num(t.t)}, {"budget", budget_to_json(t.budget)}, {"rows", rows}};
  }

  void store(const std::string& key, const CoveringTable& table) {
    if (!enabled()) return;
    std::lock_guard<std::mutex> lock(mu_);
    std::filesystem::create_directories(dir_);
    json body = table_to_json(table);
    json doc = {{"key", key}, {"table", body}, {"checksum", hex64(fnv1a(body.dump()))}};
    auto target = file_for(key);
    auto tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << doc.dump();
      out.flush();
      if (!out) {
        warnings_.push_back("cache: could not write " + tmp.string());
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        return;
      }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
      warnings_.push_back("cache: could not publish " + target.string() + ": " + ec.message());
      std::filesystem::remove(tmp, ec);
    }
  }

  std::optional<CoveringTable> load(const std::string& key) {
    if (!enabled()) return std::nullopt;
    std::lock_guard<std::mutex> lock(mu_);
    auto path = file_for(key);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
      json doc = json::parse(in);
      if (doc.at("key").get<std::string>() != key) {
        warnings_.push_back("cache: key mismatch in " + path.string() + ", ignored");
        return std::nullopt;
      }
      const json& body = doc.at("table");
      if (doc.at("checksum").get<std::string>() != hex64(fnv1a(body.dump()))) {
        warnings_.push_back("cache: checksum mismatch in " + path.string() + ", ignored");
        return std::nullopt;
      }
      CoveringTable t;
      t.t = body.at("t").is_string() ? INFINITY : body.at("t").get<double>();
      const json& b = body.at("budget");
      t.budget = {b.at("window").get<std::size_t>(), b.at("extension").get<std::size_t>(),
                  b.at("candidates").get<std::size_t>(), b.at("nodes").get<std::size_t>()};
      for (const auto& row : body.at("rows")) {
        CoveringRow cr;
        cr.lower = row.at(1).get<std::size_t>();
        cr.upper = row.at(2).get<std::size_t>();
        t.rows[row.at(0).get<int>()] = cr;
      }
      return t;
    } catch (const std::exception& e) {
      warnings_.push_back("cache: unreadable entry " + path.string() + " (" + e.what() + "), ignored");
      return std::nullopt;
    }
  }

 private:
  std::string dir_;
  std::mutex mu_;
  std::vector<std::string> warnings_;
};

inline CoveringTable cached_covering_table(CoveringCache& cache, const std::string& model, double t, int r_min,
                                           int r_max, const TransitionSystem& ts, const GeometryModel& gm,
                                           const Potential& pot, const CoveringOptions& opt) {
  std::string key = CoveringCache::key(model, t, r_min, r_max, opt.budget);
  if (!opt.keep_words)
    if (auto hit = cache.load(key)) return *hit;
  CoveringTable table = covering_table(t, r_min, r_max, ts, gm, pot, opt);
  if (!opt.keep_words) cache.store(key, table);
  return table;
}

}  // namespace spectra
