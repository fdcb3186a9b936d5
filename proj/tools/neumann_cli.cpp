#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "neumann/atlas.hpp"
#include "neumann/dynamics.hpp"
#include "neumann/io.hpp"
#include "neumann/reduction.hpp"
#include "neumann/separation.hpp"
#include "neumann/spectral.hpp"

using namespace neumann;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitPrecondition = 4;

enum class LogLevel { quiet, info, debug };

LogLevel log_level() {
  const char* v = std::getenv("NEUMANN_LOG");
  if (!v) return LogLevel::info;
  const std::string s(v);
  if (s == "quiet" || s == "error" || s == "0") return LogLevel::quiet;
  if (s == "debug" || s == "2") return LogLevel::debug;
  return LogLevel::info;
}

void log(LogLevel level, const std::string& msg) {
  static const LogLevel current = log_level();
  if (level <= current) std::cerr << "[neumann] " << msg << '\n';
}

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  int workers = 1;
  Format format = Format::csv;
};

struct Context {
  RunConfig cfg;
  SpectrumSpec spec;
  Options opt;
  std::string command;

  std::uint64_t seed() const { return opt.seed.value_or(cfg.seed); }

  Table table(std::vector<std::string> columns) const {
    Table t;
    t.meta("command", command);
    t.meta("version", kVersion);
    t.meta("schema_version", std::to_string(kSchemaVersion));
    t.meta("config_hash", fnv1a_hex(cfg.canonical + "\nseed=" + std::to_string(seed())));
    t.meta("seed", std::to_string(seed()));
    t.meta("variant.curve_sign", "R(b_s) = -w_s A'(b_s)^2");
    t.columns = std::move(columns);
    return t;
  }

  void write(const std::string& stem, const Table& t) const {
    const std::string path =
        (std::filesystem::path(opt.out) / (stem + (opt.format == Format::csv ? ".csv" : ".json"))).string();
    write_table(path, t, opt.format);
    log(LogLevel::info, "wrote " + path);
  }
};

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::string indexed(const std::string& name, int k) { return name + "_" + std::to_string(k); }

PhasePoint phase_point(const Context& c) {
  if (c.cfg.has_phase_point()) return {to_vector(*c.cfg.x), to_vector(*c.cfg.y)};
  if (c.cfg.has_reduced_point())
    return lift_to_phase_space(c.spec, {to_vector(*c.cfg.xi), to_vector(*c.cfg.eta), to_vector(*c.cfg.w)});
  throw ConfigError("config.initial: this command needs an initial condition");
}

RegularCoordinates reduced_point(const Context& c) {
  if (c.cfg.has_reduced_point()) return {to_vector(*c.cfg.xi), to_vector(*c.cfg.eta), to_vector(*c.cfg.w)};
  if (c.cfg.has_phase_point()) {
    const PhasePoint p = phase_point(c);
    require_on_manifold(p);
    return regular_coordinates(c.spec, p);
  }
  throw ConfigError("config.initial: this command needs an initial condition");
}

StepControl step_control(const Context& c) {
  StepControl ctl;
  ctl.dt = c.cfg.integration.dt;
  ctl.rtol = c.cfg.integration.rtol;
  ctl.adaptive = c.cfg.integration.adaptive;
  ctl.record_every = c.cfg.integration.record_every;
  return ctl;
}

int cmd_simulate(const Context& c) {
  const PhasePoint p0 = phase_point(c);
  const Trajectory traj = integrate(c.spec, p0, c.cfg.integration.t_end, step_control(c));
  const auto names = conserved_names(c.spec);
  const int n = static_cast<int>(c.spec.dimension());

  std::vector<std::string> cols{"t"};
  for (int k = 0; k < n; ++k) cols.push_back(indexed("x", k));
  for (int k = 0; k < n; ++k) cols.push_back(indexed("y", k));
  cols.insert(cols.end(), names.begin(), names.end());
  Table tt = c.table(cols);
  for (std::size_t s = 0; s < traj.size(); ++s) {
    std::vector<Cell> row{traj.t[s]};
    for (int k = 0; k < n; ++k) row.emplace_back(traj.samples[s].x[k]);
    for (int k = 0; k < n; ++k) row.emplace_back(traj.samples[s].y[k]);
    for (double q : traj.invariants[s]) row.emplace_back(q);
    tt.add(std::move(row));
  }
  c.write("trajectory", tt);

  const DriftReport dr = drift_report(c.spec, traj);
  const double limit = 100.0 * c.cfg.integration.rtol;
  Table dt = c.table({"quantity", "initial", "max_abs_drift", "max_rel_drift"});
  dt.meta("drift_limit", format_double(limit));
  for (std::size_t k = 0; k < dr.names.size(); ++k)
    dt.add({dr.names[k], traj.invariants.front()[k], dr.max_abs[k], dr.max_rel[k]});
  c.write("drift", dt);

  std::cout << "worst relative drift " << format_double(dr.worst_relative()) << " (limit " << format_double(limit)
            << ")\n";
  if (dr.worst_relative() > limit) {
    std::cerr << "error: drift exceeds rtol x 100\n";
    return kExitNumerical;
  }
  return 0;
}

int cmd_reduce(const Context& c) {
  const RegularCoordinates rc = reduced_point(c);
  const ReducedTrajectory rt = integrate_reduced(c.spec, rc.w, rc.xi, rc.eta, c.cfg.integration.t_end, step_control(c));
  const int nb = c.spec.block_count();
  std::vector<std::string> cols{"t"};
  for (int k = 0; k < nb; ++k) cols.push_back(indexed("xi", k));
  for (int k = 0; k < nb; ++k) cols.push_back(indexed("eta", k));
  cols.push_back("energy");
  Table t = c.table(cols);
  for (int k = 0; k < nb; ++k) t.meta(indexed("w", k), format_double(rc.w[k]));
  for (std::size_t s = 0; s < rt.t.size(); ++s) {
    std::vector<Cell> row{rt.t[s]};
    for (int k = 0; k < nb; ++k) row.emplace_back(rt.xi[s][k]);
    for (int k = 0; k < nb; ++k) row.emplace_back(rt.eta[s][k]);
    row.emplace_back(rt.energy[s]);
    t.add(std::move(row));
  }
  c.write("reduced", t);
  return 0;
}

// Curve of the configured point: either an initial condition or (rho, w) from the experiment block.
struct CurveRecord {
  Vector w;
  Vector rho;
  std::optional<SeparatedState> state;
  HyperellipticCurve curve;
};

CurveRecord curve_record(const Context& c) {
  CurveRecord r;
  if (c.cfg.has_reduced_point() || c.cfg.has_phase_point()) {
    const RegularCoordinates rc = reduced_point(c);
    r.w = rc.w;
    r.state = to_separated(c.spec, rc.w, rc.xi, rc.eta);
    r.rho = separation_constants(c.spec, rc.w, r.state->u, r.state->p);
  } else if (!c.cfg.experiment.rho.empty()) {
    r.rho = to_vector(c.cfg.experiment.rho);
    r.w = c.cfg.experiment.w.empty() ? Vector::Zero(c.spec.block_count()) : to_vector(c.cfg.experiment.w);
  } else {
    throw ConfigError("config: give an initial condition or experiment.rho");
  }
  r.curve = build_polynomials(c.spec, r.w, r.rho);
  return r;
}

void add_curve_rows(Table& t, const CurveRecord& r) {
  for (int k = 0; k < r.rho.size(); ++k) t.add({"rho", k + 1, r.rho[k]});
  for (int k = 0; k < r.w.size(); ++k) t.add({"w", k, r.w[k]});
  for (int k = 0; k <= r.curve.r.degree(); ++k) t.add({"curve", k, r.curve.r.coefficient(k)});
}

int cmd_separate(const Context& c) {
  const CurveRecord r = curve_record(c);
  if (!r.state) throw ConfigError("config.initial: separate needs an initial condition");
  Table t = c.table({"quantity", "index", "value"});
  for (const std::string& w : r.state->warnings) {
    t.meta("warning", w);
    log(LogLevel::info, "warning: " + w);
  }
  for (int k = 0; k < r.state->u.size(); ++k) t.add({"u", k + 1, r.state->u[k]});
  for (int k = 0; k < r.state->p.size(); ++k) t.add({"p", k + 1, r.state->p[k]});
  add_curve_rows(t, r);
  t.add({"energy", 0, energy_from_constants(c.spec, r.rho)});
  for (std::size_t k = 0; k < r.curve.real_roots.size(); ++k)
    t.add({"branch_point", static_cast<int>(k), r.curve.real_roots[k]});
  c.write("separated", t);
  return 0;
}

int cmd_actions(const Context& c) {
  const CurveRecord r = curve_record(c);
  const ActionSet a = actions(c.spec, r.curve);
  Table t = c.table({"quantity", "index", "value"});
  add_curve_rows(t, r);
  for (int k = 0; k < a.i.size(); ++k) {
    t.add({"I", k + 1, a.i[k]});
    t.add({"gamma", k + 1, a.gamma[static_cast<std::size_t>(k)]});
  }
  for (std::size_t k = 0; k < a.j_blocks.size(); ++k) {
    const int s = a.j_blocks[k];
    t.add({"J", s, a.j[static_cast<Eigen::Index>(k)]});
    t.add({"sqrt_w", s, std::sqrt(r.w[s])});
    if (r.w[s] > 0.0) t.add({"residue", s, trivial_action_residue(r.curve, s)});
  }
  try {
    const PeriodLattice pl = period_lattice(c.spec, r.w, r.rho);
    const Vector nu = pl.frequencies();
    for (int k = 0; k < nu.size(); ++k) t.add({"frequency", k, nu[k]});
  } catch (const PreconditionError& e) {
    t.meta("frequencies", std::string("unavailable: ") + e.what());
    log(LogLevel::info, std::string("frequencies unavailable: ") + e.what());
  }
  c.write("actions", t);
  return 0;
}

int cmd_equilibria(const Context& c) {
  if (c.cfg.experiment.j.empty()) throw ConfigError("config.experiment.j: equilibria needs momentum values");
  const int nb = c.spec.block_count();
  std::vector<std::string> cols{"index"};
  for (int k = 0; k < nb; ++k) cols.push_back(indexed("j", k));
  cols.push_back("beta");
  for (int k = 0; k < nb; ++k) cols.push_back(indexed("xi", k));
  for (int k = 0; k < nb; ++k) cols.push_back(indexed("omega", k));
  cols.insert(cols.end(), {"energy", "h", "gradient_norm"});
  Table t = c.table(cols);
  for (std::size_t e = 0; e < c.cfg.experiment.j.size(); ++e) {
    const RelativeEquilibrium re = relative_equilibrium(c.spec, to_vector(c.cfg.experiment.j[e]));
    Vector g = amended_potential_gradient(c.spec, re.j.array().square().matrix(), re.xi);
    g -= g.dot(re.xi) * re.xi;
    std::vector<Cell> row{static_cast<int>(e)};
    for (int k = 0; k < nb; ++k) row.emplace_back(re.j[k]);
    row.emplace_back(re.beta);
    for (int k = 0; k < nb; ++k) row.emplace_back(re.xi[k]);
    for (int k = 0; k < nb; ++k) row.emplace_back(re.omega[k]);
    row.emplace_back(re.energy);
    row.emplace_back(re.h);
    row.emplace_back(g.norm());
    t.add(std::move(row));
  }
  c.write("equilibria", t);
  return 0;
}

int cmd_locus(const Context& c) {
  if (c.spec.ell() != 2) throw ConfigError("config.spectrum: locus needs exactly three eigenvalue blocks");
  if (c.cfg.experiment.w.empty()) throw ConfigError("config.experiment.w: locus needs Casimir values");
  const Vector w = to_vector(c.cfg.experiment.w);
  const LocusVariantReport rep = select_locus_variant(c.spec, w);
  Table t = c.table({"chamber", "s", "rho_1", "rho_2", "root_gap"});
  t.meta("variant.locus", rep.selected.name());
  for (const VariantScore& s : rep.scores)
    t.meta("variant_score." + s.variant.name(), format_double(s.worst_gap) + (s.passes ? " pass" : " fail"));
  for (const LocusLine& line : locus_l2_lines(c.spec, w))
    t.meta(indexed("zero_casimir_line", line.block), format_double(line.c0) + " + " + format_double(line.c1) +
                                                         " rho_1 + " + format_double(line.c2) + " rho_2 = 0");
  const int n = c.cfg.experiment.grid;
  for (int chamber = 1; chamber <= 2; ++chamber)
    for (int k = 1; k <= n; ++k) {
      const double s = c.spec.b(chamber - 1) + (c.spec.b(chamber) - c.spec.b(chamber - 1)) * k / (n + 1.0);
      const Vector rho = locus_l2(c.spec, w, s, rep.selected);
      const DoubleRootCheck d = double_root_near(build_polynomials(c.spec, w, rho).r, s);
      t.add({chamber, s, rho[0], rho[1], d.gap});
    }
  c.write("locus", t);
  std::cout << "locus variant " << rep.selected.name() << '\n';
  return 0;
}

int cmd_convexity(const Context& c) {
  const int l = c.spec.ell();
  const double hstar = convexity_threshold(c.spec);
  std::vector<double> hs = c.cfg.experiment.h;
  if (hs.empty()) hs = {hstar + 1.0};

  std::vector<std::string> cols{"h", "sample"};
  for (int k = 1; k <= l; ++k) cols.push_back(indexed("s", k));
  for (int k = 0; k <= l; ++k) cols.push_back(indexed("j", k));
  for (int k = 0; k <= l; ++k) cols.push_back(indexed("omega", k));
  cols.insert(cols.end(), {"P", "P_symmetric", "O", "gradient_error", "hessian_mismatch", "second_eigenvalue_ratio",
                           "eigenvector_error"});
  Table samples = c.table(cols);
  Table summary = c.table({"h", "threshold", "margin", "verdict", "samples", "pairs", "worst_midpoint_excess"});
  samples.meta("threshold", format_double(hstar));
  summary.meta("threshold", format_double(hstar));

  for (double h : hs) {
    const BoundaryReport rep =
        convexity_check(c.spec, h, c.cfg.experiment.samples, c.cfg.experiment.pairs, c.seed(), c.opt.workers);
    std::string verdict;
    if (!rep.threshold_met)
      verdict = "threshold not met";
    else
      verdict = rep.midpoint_convex && rep.p_positive() ? "convex" : "not convex";
    summary.add({h, hstar, h - hstar, verdict, static_cast<int>(rep.samples.size()), rep.pairs,
                 rep.threshold_met ? rep.worst_midpoint_excess : std::nan("")});
    for (std::size_t k = 0; k < rep.samples.size(); ++k) {
      const BoundarySample& b = rep.samples[k];
      std::vector<Cell> row{h, static_cast<int>(k)};
      for (int i = 0; i < l; ++i) row.emplace_back(b.s[i]);
      for (int i = 0; i <= l; ++i) row.emplace_back(b.j[i]);
      for (int i = 0; i <= l; ++i) row.emplace_back(b.omega[i]);
      for (double v : {b.p_roots, b.p_symmetric, b.o, b.gradient_error, b.hessian_mismatch, b.second_eigenvalue,
                       b.eigenvector_error})
        row.emplace_back(v);
      samples.add(std::move(row));
    }
    std::cout << "h = " << format_double(h) << ": " << verdict << " (h* = " << format_double(hstar) << ")\n";
  }
  c.write("convexity", samples);
  c.write("convexity_summary", summary);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neumann and Rosochatius systems on spheres: simulation, separation, actions and atlas"};
  app.require_subcommand(1);
  Options opt;
  std::string format = "csv";
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory (created if missing)");
    sub->add_option("--seed", opt.seed, "random seed, overrides the config");
    sub->add_option("--workers", opt.workers, "worker threads for atlas sampling")->check(CLI::Range(1, 256));
    sub->add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));
  };
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "integrate the full flow and report drift of the conserved quantities"},
      {"reduce", "integrate the reduced flow in regular coordinates"},
      {"separate", "separated coordinates, constants and curve of a point"},
      {"actions", "actions, trivial actions and frequencies of a torus"},
      {"equilibria", "relative equilibria for given momenta"},
      {"locus", "genus-two discriminant locus"},
      {"convexity", "boundary of the energy-Casimir image and its convexity"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  opt.format = format == "json" ? Format::json : Format::csv;

  try {
    Context c;
    c.command = app.get_subcommands().front()->get_name();
    c.opt = opt;
    c.cfg = load_config(opt.config);
    c.spec = c.cfg.spectrum();
    std::filesystem::create_directories(opt.out);
    log(LogLevel::debug, "config " + opt.config + " hash " + c.cfg.hash());
    if (c.command == "simulate") return cmd_simulate(c);
    if (c.command == "reduce") return cmd_reduce(c);
    if (c.command == "separate") return cmd_separate(c);
    if (c.command == "actions") return cmd_actions(c);
    if (c.command == "equilibria") return cmd_equilibria(c);
    if (c.command == "locus") return cmd_locus(c);
    return cmd_convexity(c);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition violated: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
