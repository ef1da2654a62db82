#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "spectra/spectra.hpp"

using namespace spectra;

namespace {

struct Overrides {
  std::string config;
  std::string out;
  bool print_config = false;
  std::optional<int> workers, symbols, r0, r_min, r_max, depth;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> geometry, potential;
  std::vector<double> ratios;
  std::string t_grid;
  std::optional<double> t, eta, tau, t_min, t_max, t_step, table_t_max;
  std::optional<std::size_t> k, L, spacing, count, m, m_max, samples, max_period;
  bool allow_lower = false, exhaustive_frame = false;
};

template <class T>
void put(json& j, const char* section, const char* key, const std::optional<T>& v) {
  if (!v) return;
  if (section)
    j[section][key] = *v;
  else
    j[key] = *v;
}

void split_grid(Overrides& o) {
  if (o.t_grid.empty()) return;
  std::vector<double> v;
  std::stringstream in(o.t_grid);
  std::string part;
  while (std::getline(in, part, ':')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw MalformedInput("--t-grid: expected a:b:step, got '" + o.t_grid + "'");
    }
  }
  if (v.size() != 3) throw MalformedInput("--t-grid: expected a:b:step, got '" + o.t_grid + "'");
  o.t_min = v[0];
  o.t_max = v[1];
  o.t_step = v[2];
}

json with_overrides(json j, const Overrides& o) {
  put(j, nullptr, "workers", o.workers);
  put(j, nullptr, "seed", o.seed);
  if (o.symbols) j["system"] = {{"kind", "full_shift"}, {"symbols", *o.symbols}};
  if (o.geometry) {
    j["geometry"] = {{"model", *o.geometry}};
    if (!o.ratios.empty()) j["geometry"]["ratios"] = o.ratios;
  }
  if (o.potential) j["potential"] = {{"name", *o.potential}};
  if (o.t) j["extract"]["t"] = std::isinf(*o.t) ? json("inf") : json(*o.t);
  put(j, "extract", "eta", o.eta);
  put(j, "extract", "tau", o.tau);
  put(j, "extract", "r0", o.r0);
  put(j, "extract", "k", o.k);
  put(j, "extract", "L", o.L);
  put(j, "extract", "spacing", o.spacing);
  if (o.allow_lower) j["extract"]["allow_lower_threshold"] = true;
  if (o.exhaustive_frame) j["extract"]["exhaustive_frame"] = true;
  put(j, "dimension_curve", "t_min", o.t_min);
  put(j, "dimension_curve", "t_max", o.t_max);
  put(j, "dimension_curve", "t_step", o.t_step);
  put(j, "dimension_curve", "r_min", o.r_min);
  put(j, "dimension_curve", "r_max", o.r_max);
  put(j, "lagrange_sample", "count", o.count);
  put(j, "lagrange_sample", "m", o.m);
  put(j, "lagrange_sample", "m_max", o.m_max);
  put(j, "verify_invariants", "depth", o.depth);
  put(j, "verify_invariants", "samples", o.samples);
  put(j, "spectrum_table", "max_period", o.max_period);
  put(j, "spectrum_table", "t_max", o.table_t_max);
  return j;
}

void common(CLI::App* sub, Overrides& o) {
  sub->add_option("-c,--config", o.config, "JSON run configuration");
  sub->add_option("-o,--out", o.out, "write the output here instead of stdout");
  sub->add_flag("--print-config", o.print_config, "print the effective configuration and exit");
  sub->add_option("--workers", o.workers, "worker threads");
  sub->add_option("--seed", o.seed, "seed for random sampling");
  sub->add_option("--symbols", o.symbols, "full shift on this many symbols");
  sub->add_option("--geometry", o.geometry, "continued_fraction | affine");
  sub->add_option("--ratios", o.ratios, "affine contraction ratios");
  sub->add_option("--potential", o.potential, "classical_cf | affine_coordinate | constant");
}

void extraction_flags(CLI::App* sub, Overrides& o) {
  sub->add_option("--t", o.t, "threshold t");
  sub->add_option("--eta", o.eta, "target dimension loss");
  sub->add_option("--tau", o.tau, "tau (0 means eta/100)");
  sub->add_option("--r0", o.r0, "base scale");
  sub->add_option("--k", o.k, "blocks per concatenation");
  sub->add_option("--L", o.L, "frame positions");
  sub->add_option("--spacing", o.spacing, "minimum frame spacing");
  sub->add_flag("--allow-lower-threshold", o.allow_lower, "lower the excellent threshold when nothing qualifies");
  sub->add_flag("--exhaustive-frame", o.exhaustive_frame, "exhaustive frame search");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dimension and spectrum computations for sublevel sets of dynamically defined Cantor sets"};
  app.require_subcommand(1);
  Overrides o;

  auto* curve = app.add_subcommand("dimension-curve", "CSV of the D_u(t) bracket over a grid of thresholds");
  common(curve, o);
  curve->add_option("--t-grid", o.t_grid, "thresholds as a:b:step");
  curve->add_option("--t-min", o.t_min);
  curve->add_option("--t-max", o.t_max);
  curve->add_option("--t-step", o.t_step);
  curve->add_option("--r-min", o.r_min);
  curve->add_option("--r-max", o.r_max);

  auto* ext = app.add_subcommand("extract", "certified complete subshift inside the sublevel set, as JSON");
  common(ext, o);
  extraction_flags(ext, o);

  auto* lag = app.add_subcommand("lagrange-sample", "realized Lagrange values of the extracted subshift, as CSV");
  common(lag, o);
  extraction_flags(lag, o);
  lag->add_option("--count", o.count, "number of x words");
  lag->add_option("--m", o.m, "first block grouping length tried");
  lag->add_option("--m-max", o.m_max, "last block grouping length tried");

  auto* ver = app.add_subcommand("verify-invariants", "property suite of every module, as JSON");
  common(ver, o);
  ver->add_option("--depth", o.depth, "word length / scale depth");
  ver->add_option("--samples", o.samples, "random samples per check");

  auto* tab = app.add_subcommand("spectrum-table", "Markov values of periodic orbits, as CSV");
  common(tab, o);
  tab->add_option("--max-period", o.max_period);
  tab->add_option("--t-max", o.table_t_max);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : static_cast<int>(ExitCode::error);
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    split_grid(o);
    json base = o.config.empty() ? to_json(RunConfig{}) : to_json(load_config(o.config));
    cfg = config_from_json(with_overrides(base, o));
  } catch (const Error& e) {
    std::cerr << "spectra: " << e.what() << "\n";
    return static_cast<int>(ExitCode::error);
  }
  if (o.print_config) {
    std::cout << to_json(cfg).dump(2) << "\n";
    return 0;
  }

  CoveringCache cache = CoveringCache::from_env();
  ResultEnvelope env = run(command, cfg, cache);
  if (env.exit != ExitCode::ok && env.payload.empty()) {
    std::cerr << "spectra " << command << ": " << env.summary << "\n";
    return static_cast<int>(env.exit);
  }
  std::string bytes = render(env);
  if (o.out.empty()) {
    std::cout << bytes;
  } else {
    std::ofstream f(o.out, std::ios::binary | std::ios::trunc);
    f << bytes;
    if (!f) {
      std::cerr << "spectra: cannot write " << o.out << "\n";
      return static_cast<int>(ExitCode::error);
    }
  }
  for (const auto& w : env.warnings) std::cerr << "warning: " << w << "\n";
  char wall[32];
  std::snprintf(wall, sizeof wall, "%.2f", env.wall_seconds);
  std::cerr << command << " [config " << env.config_hash << "]: " << env.summary << " (" << wall << " s)\n";
  return static_cast<int>(env.exit);
}
