#include "satlab/cli.hpp"

#include "satlab/adversary.hpp"
#include "satlab/config.hpp"
#include "satlab/error.hpp"
#include "satlab/parallel.hpp"
#include "satlab/report_io.hpp"
#include "satlab/saturation_lab.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>

namespace satlab {

using nlohmann::json;

namespace {

// Relative gap allowed in the linearization identity at accepted solutions.
constexpr double kIdentityGapTol = 1e-6;

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<long long> seed;
  int jobs = 1;
  bool quiet = false;
};

struct Context {
  ExperimentConfig config;
  Options opts;
  std::ostream& out;
  std::ostream& err;
  std::filesystem::path dir;

  std::string path(const std::string& name) const { return (dir / name).string(); }
  void say(const std::string& line) const {
    if (!opts.quiet) out << line << '\n';
  }
  void emit(const std::string& stem, const Table& table, const json& doc) const {
    if (config.output.wants("csv")) write_csv(table, path(stem + ".csv"));
    if (config.output.wants("json")) write_json(doc, path(stem + ".json"));
  }
};

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

Context open_context(const Options& o, std::ostream& out, std::ostream& err) {
  Context ctx{load_config(o.config_path), o, out, err, {}};
  if (o.seed) {
    if (*o.seed < 0) throw Error(ErrorKind::invalid_parameter, "--seed must be >= 0");
    ctx.config.grid.seed = static_cast<std::uint64_t>(*o.seed);
    std::erase_if(ctx.config.warnings,
                  [](const std::string& w) { return w.rfind("grid.seed", 0) == 0; });
  }
  if (o.jobs < 1) throw Error(ErrorKind::invalid_parameter, "--jobs must be >= 1");
  if (!o.out_dir.empty()) ctx.config.output.directory = o.out_dir;
  if (!o.quiet) {
    for (const auto& w : ctx.config.warnings) err << "warning: " << w << '\n';
  }
  ctx.dir = ctx.config.output.directory;
  std::error_code ec;
  std::filesystem::create_directories(ctx.dir, ec);
  if (ec) {
    throw Error(ErrorKind::io, "cannot create output directory " + ctx.dir.string() + ": " +
                                   ec.message());
  }
  return ctx;
}

std::vector<double> descending(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Noisy data for grid cell i, seeded per cell.
NoisyObservation cell_observation(const ProblemInstance& inst, double delta, std::uint64_t seed,
                                  std::size_t i) {
  auto rng = seeded_rng(seed, static_cast<std::uint64_t>(i));
  return add_noise(inst, delta, random_unit(inst.y_exact.size(), rng));
}

SolverOptions domain_solver(const Context& ctx, const ProblemInstance& inst) {
  SolverOptions so = build_selector(ctx.config).cfg.solver;
  so.domain = Ball{inst.x_true, inst.rho()};
  return so;
}

int cmd_solve(const Context& ctx) {
  const ProblemInstance inst = build_instance(ctx.config);
  const double delta = ctx.config.grid.delta.values().front();
  const NoisyObservation obs = cell_observation(inst, delta, ctx.config.grid.seed, 0);
  const auto grid = descending(ctx.config.grid.alpha.values());
  const auto results =
      continuation_solve(*inst.model, grid, obs.y_noisy, inst.x_prior, domain_solver(ctx, inst));

  Table t{{"alpha", "error", "data_residual", "euler_residual", "euler_tolerance", "iterations",
           "converged", "failure"},
          {}};
  int unconverged = 0;
  for (const auto& r : results) {
    const double err = r.x.size() ? (r.x - inst.x_true).norm()
                                  : std::numeric_limits<double>::quiet_NaN();
    t.add({r.alpha, err, r.data_residual, r.euler_residual, r.euler_tolerance,
           static_cast<long long>(r.iterations), r.converged, r.failure});
    if (!r.converged) ++unconverged;
  }
  ctx.emit("solve", t, {{"delta", delta}, {"rows", to_json(t)}});
  ctx.say("solved " + std::to_string(results.size()) + " alphas at delta " +
          format_number(delta) + ", " + std::to_string(unconverged) + " not converged");
  return unconverged ? exit_code_for(ErrorKind::nonconvergence) : 0;
}

int cmd_select(const Context& ctx) {
  const ProblemInstance inst = build_instance(ctx.config);
  const Selector sel = build_selector(ctx.config);
  const auto deltas = ctx.config.grid.delta.values();
  std::optional<double> norm_u;
  if (inst.source && inst.source->is_half()) norm_u = inst.source->element_norm;

  std::vector<SelectionResult> picks(deltas.size());
  parallel_for(deltas.size(), ctx.opts.jobs, [&](std::size_t i) {
    const NoisyObservation obs = cell_observation(inst, deltas[i], ctx.config.grid.seed, i);
    picks[i] = sel.select(*inst.model, obs, inst.x_prior);
  });

  Table t{{"delta", "alpha", "rule", "error", "data_residual", "evaluations", "converged",
           "alpha_floor", "floor_ok"},
          {}};
  int unconverged = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const SelectionResult& s = picks[i];
    double floor = std::numeric_limits<double>::quiet_NaN();
    bool floor_ok = true;
    if (norm_u && sel.rule != Rule::apriori) {
      const AlphaFloorCheck f = alpha_lower_bound_check(s, sel.cfg, norm_u, deltas[i]);
      floor = f.bound;
      floor_ok = f.passed;
    }
    t.add({deltas[i], s.alpha, std::string(to_string(s.rule)),
           (s.solution.x - inst.x_true).norm(), s.solution.data_residual,
           static_cast<long long>(s.evaluations), s.solution.converged, floor, floor_ok});
    if (!s.solution.converged) ++unconverged;
  }
  ctx.emit("select", t, {{"rows", to_json(t)}});
  ctx.say("selected alpha for " + std::to_string(deltas.size()) + " noise levels");
  return unconverged ? exit_code_for(ErrorKind::nonconvergence) : 0;
}

struct ChainCell {
  std::size_t k = 0;
  double lam = 0.0;
  bool isolated = false;
  AdversarialCheck check;
};

std::vector<ChainCell> chain_cells(const Context& ctx, const ProblemInstance& inst) {
  const SpectralDecomposition& d = *inst.linearization;
  const auto alphas = ctx.config.grid.alpha.values();
  const auto k_first = static_cast<std::size_t>(ctx.config.grid.k_first);
  const auto k_last = static_cast<std::size_t>(ctx.config.grid.k_last);
  if (k_last > d.rank()) {
    throw Error(ErrorKind::invalid_parameter, "grid.k_range exceeds the rank of the operator");
  }
  std::vector<ChainCell> cells;
  for (std::size_t k = k_first; k <= k_last; ++k) {
    for (std::size_t a = 0; a < alphas.size(); ++a) cells.push_back({k, 0.0, false, {}});
  }
  parallel_for(cells.size(), ctx.opts.jobs, [&](std::size_t i) {
    ChainCell& c = cells[i];
    c.lam = d.eigenvalues()(static_cast<Eigen::Index>(c.k - 1));
    c.isolated = band_projector(d, c.lam).selected_indices().size() == 1;
    const AdversarialDatum datum = make_adversarial_datum(inst, c.lam);
    c.check = verify_adversarial_inequalities(inst, datum, alphas[i % alphas.size()]);
  });
  return cells;
}

int cmd_adversary(const Context& ctx) {
  const ProblemInstance inst = build_instance(ctx.config);
  const auto cells = chain_cells(ctx, inst);
  Table t{{"k", "lam_k", "isolated", "alpha", "bias_sq", "perturbation_sq", "error_sq",
           "cross_term", "spectral_cross_term", "lower_bound", "pythagoras_residual", "passed"},
          {}};
  int passed = 0;
  for (const auto& c : cells) {
    const AdversarialCheck& a = c.check;
    t.add({static_cast<long long>(c.k), c.lam, c.isolated, a.alpha, a.bias_sq, a.perturbation_sq,
           a.error_sq, a.cross_term, a.spectral_cross_term, a.lower_bound, a.pythagoras_residual,
           a.passed()});
    if (a.passed()) ++passed;
  }
  ctx.emit("adversary", t, {{"rows", to_json(t)}});
  ctx.say("adversarial chain: " + std::to_string(passed) + "/" + std::to_string(cells.size()) +
          " cells passed");
  return passed == static_cast<int>(cells.size()) ? 0 : kExitVerifyFailed;
}

int cmd_rates(const Context& ctx) {
  const ProblemInstance inst = build_instance(ctx.config);
  const Selector sel = build_selector(ctx.config);
  RateOptions ro;
  ro.n_random = ctx.config.grid.n_random;
  ro.seed = ctx.config.grid.seed;
  ro.include_adversarial = ctx.config.grid.include_adversarial;
  ro.jobs = ctx.opts.jobs;
  const RateReport report = rate_experiment(inst, sel, ctx.config.grid.delta.values(), ro);

  ctx.emit("rates", rate_table(report), rate_report_json(report));
  if (ctx.config.output.wants("csv")) {
    write_csv(direction_table(report), ctx.path("rates_directions.csv"));
  }
  if (ctx.config.output.wants("svg")) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : report.samples) {
      if (s.converged) pts.emplace_back(s.delta, s.worst_error);
    }
    write_loglog_svg(pts, report.fit, ctx.path("rates.svg"),
                     std::string("worst-case error, rule ") + to_string(sel.rule));
  }
  ctx.say("fitted slope " + fmt("%.4f", report.fit.slope) + ", r^2 " +
          fmt("%.5f", report.fit.r_squared) + ", " + std::to_string(report.failures.size()) +
          " failed noise levels");
  return 0;
}

int cmd_probe(const Context& ctx) {
  const ProblemInstance inst = build_instance(ctx.config);
  const Selector sel = build_selector(ctx.config);
  const SaturationReport report =
      saturation_probe(inst, sel, static_cast<std::size_t>(ctx.config.grid.k_first),
                       static_cast<std::size_t>(ctx.config.grid.k_last), ctx.opts.jobs);
  ctx.emit("probe", saturation_table(report), saturation_report_json(report));
  ctx.say("ratio floor " + fmt("%.4g", report.ratio_floor) + " (first " +
          fmt("%.4g", report.first_ratio) + "), tail delta/alpha " +
          fmt("%.4g", report.tail_delta_over_alpha) + " (first " +
          fmt("%.4g", report.first_delta_over_alpha) + ")");
  return 0;
}

struct SuiteCount {
  std::string name;
  int passed = 0;
  int total = 0;
  std::string note;
};

int cmd_verify(const Context& ctx) {
  const ProblemInstance inst = build_instance(ctx.config);
  const Selector sel = build_selector(ctx.config);
  const auto deltas = ctx.config.grid.delta.values();
  const auto alphas = descending(ctx.config.grid.alpha.values());
  const bool half = inst.source && inst.source->is_half();
  const double l_u =
      half ? inst.model->analytic_constants().lipschitz * inst.source->element_norm : 0.0;
  std::vector<SuiteCount> suites;

  // Continuation solves on the alpha grid, one seeded direction per delta.
  std::vector<NoisyObservation> observations;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    observations.push_back(cell_observation(inst, deltas[i], ctx.config.grid.seed, i));
  }
  const SolverOptions so = domain_solver(ctx, inst);
  std::vector<std::vector<TikhonovResult>> paths(deltas.size());
  parallel_for(deltas.size(), ctx.opts.jobs, [&](std::size_t i) {
    paths[i] = continuation_solve(*inst.model, alphas, observations[i].y_noisy, inst.x_prior, so);
  });

  SuiteCount identity{"linearization identity", 0, 0, ""};
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    for (const auto& r : paths[i]) {
      if (!r.ok() || !r.converged) continue;
      ++identity.total;
      if (linearization_identity_gap(inst, observations[i], r) <= kIdentityGapTol) {
        ++identity.passed;
      }
    }
  }
  suites.push_back(identity);

  SuiteCount chain{"adversarial chain", 0, 0, ""};
  for (const auto& c : chain_cells(ctx, inst)) {
    ++chain.total;
    if (c.check.passed()) ++chain.passed;
  }
  suites.push_back(chain);

  SuiteCount lemma{"source-condition bounds", 0, 0, ""};
  SuiteCount compare{"linearized comparison", 0, 0, ""};
  if (half && l_u < 1.0) {
    const ConstantReport constants = constant_report(inst, sel.cfg, 100, ctx.config.grid.seed);
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      const LemmaReport rep = lemma_f22_check(inst, alphas, observations[i], so);
      lemma.total += rep.converged_count();
      lemma.passed += rep.converged_count() - rep.violations();
      for (const auto& row : compare_with_linearization(inst, observations[i], rep,
                                                        constants.comparison_factor)) {
        ++compare.total;
        if (row.passed) ++compare.passed;
      }
    }
  } else {
    lemma.note = "skipped: needs a nu = 1/2 source with L ||u|| < 1";
    compare.note = lemma.note;
  }
  suites.push_back(lemma);
  suites.push_back(compare);

  SuiteCount floor{"alpha floor", 0, 0, ""};
  if (half && sel.rule != Rule::apriori) {
    std::vector<std::optional<AlphaFloorCheck>> checks(deltas.size());
    std::vector<std::string> why(deltas.size());
    parallel_for(deltas.size(), ctx.opts.jobs, [&](std::size_t i) {
      try {
        const SelectionResult s = sel.select(*inst.model, observations[i], inst.x_prior);
        checks[i] = alpha_lower_bound_check(s, sel.cfg, inst.source->element_norm, deltas[i]);
      } catch (const Error& e) {
        why[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      ++floor.total;
      if (checks[i] && checks[i]->passed) ++floor.passed;
      if (!why[i].empty() && floor.note.empty()) floor.note = why[i];
    }
  } else {
    floor.note = "skipped: needs a nu = 1/2 source and a discrepancy rule";
  }
  suites.push_back(floor);

  json doc = json::array();
  bool all_ok = true;
  for (const auto& s : suites) {
    doc.push_back({{"suite", s.name}, {"passed", s.passed}, {"total", s.total}, {"note", s.note}});
    if (s.passed != s.total) all_ok = false;
    std::string line = s.name + ": " + std::to_string(s.passed) + "/" + std::to_string(s.total);
    if (!s.note.empty()) line += " (" + s.note + ")";
    ctx.say(line);
  }
  if (ctx.config.output.wants("json")) write_json(doc, ctx.path("verify.json"));
  return all_ok ? 0 : kExitVerifyFailed;
}

int cmd_constants(const Context& ctx) {
  const ProblemInstance inst = build_instance(ctx.config);
  const Selector sel = build_selector(ctx.config);
  const ConstantReport c = constant_report(inst, sel.cfg, 100, ctx.config.grid.seed);
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  const json doc = {{"rho", c.rho},
                    {"kappa0", c.kappa0},
                    {"lipschitz", c.lipschitz},
                    {"lipschitz_sampled", c.lipschitz_sampled},
                    {"norm_u", c.norm_u ? json(*c.norm_u) : json(nullptr)},
                    {"lipschitz_times_norm_u", num(c.lipschitz_times_norm_u)},
                    {"prior_distance", c.prior_distance},
                    {"c0_range_invariance", c.c0_range_invariance},
                    {"c1", c.c1},
                    {"c0_lipschitz", num(c.c0_lipschitz)},
                    {"comparison_factor", c.comparison_factor}};
  if (ctx.config.output.wants("json")) write_json(doc, ctx.path("constants.json"));
  if (!ctx.opts.quiet) ctx.out << doc.dump(2) << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tikhonov regularization and saturation lab", "satlab"};
  app.require_subcommand(1);

  Options opts;
  using Handler = int (*)(const Context&);
  const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
      {"solve", "Tikhonov solves along the alpha grid at the first noise level", cmd_solve},
      {"select", "parameter choice at every noise level of the grid", cmd_select},
      {"adversary", "adversarial-data inequality checks over bands and alphas", cmd_adversary},
      {"rates", "worst-case error rate over the noise grid", cmd_rates},
      {"probe", "saturation probe along the adversarial sequence", cmd_probe},
      {"verify", "run the invariant suites and print pass counts", cmd_verify},
      {"constants", "report the structural constants of the instance", cmd_constants},
  };
  Handler chosen = nullptr;
  for (const auto& [name, help, handler] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", opts.out_dir, "output directory, overrides output.directory");
    sub->add_option("--seed", opts.seed, "seed, overrides grid.seed");
    sub->add_option("--jobs", opts.jobs, "worker threads");
    sub->add_flag("--quiet", opts.quiet, "suppress progress output");
    sub->callback([&chosen, h = handler] { chosen = h; });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 1;
  }

  try {
    const Context ctx = open_context(opts, out, err);
    return chosen(ctx);
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace satlab
