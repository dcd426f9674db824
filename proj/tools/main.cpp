// Command-line surface: problem files in, versioned JSON reports out.
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "jetlab/builtins.hpp"
#include "jetlab/cones.hpp"
#include "jetlab/dirichlet.hpp"
#include "jetlab/errors.hpp"
#include "jetlab/expression.hpp"
#include "jetlab/verifier.hpp"
#include "jetlab/viscosity.hpp"

namespace {

using nlohmann::ordered_json;
using namespace jetlab;

constexpr const char* kVersion = "0.1.0";
constexpr const char* kSchema = "1";

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Flags {
  std::string problem;
  std::uint64_t seed = 1;
  int samples = 0;  // 0 = command default
  double h = 0.0;   // 0 = take the problem file's step
  double tol = 0.0; // 0 = default shell tolerance
  std::string out;
  std::string format = "json";
};

struct Problem {
  ordered_json doc;
  std::string path;
  std::string hash;
  std::string op;
  int dim = 0;
  Domain domain{{0.0}, {1.0}, 0.5};
  nlohmann::json params;
};

Problem load_problem(const Flags& fl) {
  std::ifstream in(fl.problem);
  if (!in) throw InvalidInput("cannot open problem file " + fl.problem);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();

  Problem p;
  p.doc = ordered_json::parse(bytes);
  p.path = fl.problem;
  p.hash = hex64(fnv1a(bytes));
  if (!p.doc.contains("operator") && !p.doc.contains("cone"))
    throw InvalidInput("problem file needs an \"operator\" or \"cone\" field");
  p.op = p.doc.value("operator", "");
  p.dim = p.doc.value("dimension", 0);
  if (p.dim < 1) throw InvalidInput("problem file needs \"dimension\" >= 1");
  if (!p.doc.contains("domain"))
    throw InvalidInput("problem file needs a \"domain\" object");
  const auto& d = p.doc.at("domain");
  const auto lo = d.at("lo").get<std::vector<double>>();
  const auto hi = d.at("hi").get<std::vector<double>>();
  const double h = fl.h > 0.0 ? fl.h : d.at("h").get<double>();
  p.domain = Domain(lo, hi, h);
  if (p.domain.dim() != p.dim)
    throw InvalidInput("domain extents do not match \"dimension\"");
  p.params = p.doc.value("params", nlohmann::json::object());
  return p;
}

Tolerances tolerances_of(const Flags& fl) {
  Tolerances tol;
  if (fl.tol > 0.0) tol.shell = fl.tol;
  return tol;
}

ordered_json manifest_of(const std::string& command, const Problem& p,
                         const Flags& fl, int samples_used) {
  ordered_json m;
  m["command"] = command;
  m["problem"] = p.path;
  m["problem_hash"] = p.hash;
  m["seed"] = fl.seed;
  m["samples"] = samples_used;
  m["h"] = p.domain.h();
  m["tolerances"] = tolerances_to_json(tolerances_of(fl));
  m["version"] = kVersion;
  m["timestamp"] = utc_now();
  return m;
}

GridFunction grid_field(const Problem& p, const std::string& key) {
  if (p.doc.contains(key + "_grid")) {
    GridFunction g =
        GridFunction::load_csv(p.doc.at(key + "_grid").get<std::string>());
    if (!(g.domain() == p.domain))
      throw InvalidInput("grid in \"" + key +
                         "_grid\" does not match the problem domain");
    return g;
  }
  if (p.doc.contains(key))
    return GridFunction::from_expression(
        p.domain, Expression::parse(p.doc.at(key).get<std::string>()));
  throw InvalidInput("problem file needs \"" + key + "\" (expression) or \"" +
                     key + "_grid\" (CSV path)");
}

ScalarField scalar_field(const nlohmann::json& params, const std::string& key) {
  if (params.contains(key + "_grid"))
    return ScalarField::of_grid(
        GridFunction::load_csv(params.at(key + "_grid").get<std::string>()));
  if (!params.contains(key))
    throw InvalidInput("solve: missing param \"" + key + "\"");
  const auto& v = params.at(key);
  if (v.is_number()) return ScalarField::of_constant(v.get<double>());
  if (v.is_string())
    return ScalarField::of_expression(Expression::parse(v.get<std::string>()));
  throw InvalidInput("solve: param \"" + key +
                     "\" must be a number or an expression string");
}

void summarize(const CheckReport& rep) {
  std::cout << (rep.pass ? "[PASS] " : "[FAIL] ") << rep.check << ": "
            << rep.subject << " samples=" << rep.samples
            << " seed=" << rep.seed << "\n";
  if (!rep.pass && !rep.counterexamples.empty()) {
    const Counterexample& ce = rep.counterexamples.front();
    std::cout << "  witness:";
    if (!ce.x.empty()) {
      std::cout << " x=(";
      for (std::size_t i = 0; i < ce.x.size(); ++i)
        std::cout << (i ? ", " : "") << ce.x[i];
      std::cout << ")";
    }
    if (ce.jet.dim() > 0) {
      std::cout << " r=" << ce.jet.r << " A=[";
      for (int i = 0; i < ce.jet.dim(); ++i)
        for (int j = i; j < ce.jet.dim(); ++j)
          std::cout << ((i | j) ? " " : "") << ce.jet.a.at(i, j);
      std::cout << "]";
    }
    for (const auto& [name, value] : ce.margins)
      std::cout << " " << name << "=" << value;
    if (!ce.note.empty()) std::cout << " (" << ce.note << ")";
    std::cout << "\n";
  }
}

void write_report(const Flags& fl, const ordered_json& manifest,
                  const std::vector<CheckReport>& reports, bool pass) {
  for (const CheckReport& rep : reports) summarize(rep);
  if (fl.out.empty()) return;
  std::ofstream out(fl.out);
  if (!out) throw InvalidInput("cannot write " + fl.out);
  if (fl.format == "csv") {
    out << "check,subject,pass,samples,seed\n";
    for (const CheckReport& rep : reports)
      out << rep.check << "," << rep.subject << ","
          << (rep.pass ? "PASS" : "FAIL") << "," << rep.samples << ","
          << rep.seed << "\n";
    return;
  }
  ordered_json doc;
  doc["schema"] = kSchema;
  doc["manifest"] = manifest;
  doc["reports"] = ordered_json::array();
  for (const CheckReport& rep : reports) doc["reports"].push_back(rep.to_json());
  doc["pass"] = pass;
  out << doc.dump(2) << "\n";
}

int exit_of(const std::vector<CheckReport>& reports) {
  for (const CheckReport& rep : reports)
    if (!rep.pass) return 1;
  return 0;
}

int cmd_verify_axioms(const Flags& fl) {
  const Problem p = load_problem(fl);
  const int samples = fl.samples > 0 ? fl.samples : 10000;
  const ProperEllipticPair pair = builtin_pair(p.op, p.params, p.dim, p.domain);
  const std::vector<CheckReport> reports =
      verify_battery(pair, samples, fl.seed, tolerances_of(fl));
  const int code = exit_of(reports);
  write_report(fl, manifest_of("verify-axioms", p, fl, samples), reports,
               code == 0);
  return code;
}

int cmd_dual_check(const Flags& fl) {
  const Problem p = load_problem(fl);
  const int samples = fl.samples > 0 ? fl.samples : 100000;
  const ProperEllipticPair pair = builtin_pair(p.op, p.params, p.dim, p.domain);
  const CheckReport rep =
      check_biduality(induce(pair), samples, fl.seed, tolerances_of(fl));
  write_report(fl, manifest_of("dual-check", p, fl, samples), {rep}, rep.pass);
  return rep.pass ? 0 : 1;
}

int cmd_check_compatibility(const Flags& fl) {
  const Problem p = load_problem(fl);
  const int samples = fl.samples > 0 ? fl.samples : 10000;
  const ProperEllipticPair pair = builtin_pair(p.op, p.params, p.dim, p.domain);
  const CheckReport rep =
      check_compatibility(pair, samples, fl.seed, tolerances_of(fl));
  write_report(fl, manifest_of("check-compatibility", p, fl, samples), {rep},
               rep.pass);
  return rep.pass ? 0 : 1;
}

int cmd_fiber_modulus(const Flags& fl) {
  const Problem p = load_problem(fl);
  const ProperEllipticPair pair = builtin_pair(p.op, p.params, p.dim, p.domain);
  const std::vector<double> etas = {0.05, 0.1, 0.2};
  const FiberModulusTable table = fiber_modulus(
      induce(pair), p.domain, etas, fl.seed, tolerances_of(fl));
  bool pass = true;
  for (const FiberModulusRow& row : table.rows) {
    std::cout << "eta=" << row.eta << " delta=";
    if (row.infinite)
      std::cout << "inf (constant fibers)";
    else
      std::cout << row.delta;
    std::cout << "\n";
    if (!row.infinite && !(row.delta > 0.0)) pass = false;
  }
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << "fiber-modulus: "
            << table.subject << "\n";
  if (!fl.out.empty()) {
    std::ofstream out(fl.out);
    if (!out) throw InvalidInput("cannot write " + fl.out);
    if (fl.format == "csv") {
      out << "eta,delta,infinite\n";
      for (const FiberModulusRow& row : table.rows)
        out << row.eta << "," << row.delta << "," << (row.infinite ? 1 : 0)
            << "\n";
    } else {
      ordered_json doc;
      doc["schema"] = kSchema;
      doc["manifest"] = manifest_of("fiber-modulus", p, fl, 0);
      doc["fiber_modulus"] = table.to_json();
      doc["pass"] = pass;
      out << doc.dump(2) << "\n";
    }
  }
  return pass ? 0 : 1;
}

int cmd_check_correspondence(const Flags& fl) {
  const Problem p = load_problem(fl);
  const int samples = fl.samples > 0 ? fl.samples : 10000;
  const ProperEllipticPair pair = builtin_pair(p.op, p.params, p.dim, p.domain);
  const GridFunction u = grid_field(p, "u");
  const Tolerances tol = tolerances_of(fl);

  std::vector<CheckReport> reports;
  reports.push_back(check_compatibility(pair, samples, fl.seed, tol));
  const bool hv = reports.front().pass;
  const std::string side = p.doc.value("side", "both");
  if (side != "sub" && side != "super" && side != "both")
    throw InvalidInput("\"side\" must be sub, super, or both");
  if (side != "super")
    reports.push_back(
        check_correspondence(pair, u, SolutionSide::Sub, hv, tol));
  if (side != "sub")
    reports.push_back(
        check_correspondence(pair, u, SolutionSide::Super, hv, tol));
  const int code = exit_of(reports);
  write_report(fl, manifest_of("check-correspondence", p, fl, samples),
               reports, code == 0);
  return code;
}

int cmd_solve(const Flags& fl) {
  const Problem p = load_problem(fl);
  SolveResult res = [&] {
    if (p.op == "laplace")
      return solve_laplace(p.domain,
                           BoundaryData::from_grid(grid_field(p, "boundary")));
    if (p.op == "monge_ampere")
      return solve_monge_ampere(
          p.domain, scalar_field(p.params, "f"),
          BoundaryData::from_grid(grid_field(p, "boundary")));
    if (p.op == "perturbed_monge_ampere") {
      std::vector<Expression> entries;
      for (const auto& e : p.params.at("m")) {
        if (e.is_number())
          entries.push_back(Expression::constant(e.get<double>()));
        else
          entries.push_back(Expression::parse(e.get<std::string>()));
      }
      const MatrixField m =
          MatrixField::of_expressions(p.dim, std::move(entries));
      return solve_monge_ampere(
          p.domain, scalar_field(p.params, "f"),
          BoundaryData::from_grid(grid_field(p, "boundary")), &m);
    }
    if (p.op == "convex_envelope") {
      std::optional<GridFunction> obstacle;
      if (p.doc.contains("obstacle") || p.doc.contains("obstacle_grid"))
        obstacle = grid_field(p, "obstacle");
      const BoundaryData g =
          (p.doc.contains("boundary") || p.doc.contains("boundary_grid"))
              ? BoundaryData::from_grid(grid_field(p, "boundary"))
              : BoundaryData::from_grid(*obstacle);
      return solve_convex_envelope(p.domain, g,
                                   obstacle ? &*obstacle : nullptr);
    }
    throw InvalidInput("no solver for operator \"" + p.op + "\"");
  }();

  const std::string out = fl.out.empty() ? "solution.csv" : fl.out;
  res.u.save_csv(out);
  std::string meta_path = out;
  if (meta_path.size() > 4 && meta_path.ends_with(".csv"))
    meta_path.resize(meta_path.size() - 4);
  meta_path += ".meta.json";
  {
    ordered_json doc;
    doc["schema"] = kSchema;
    doc["manifest"] = manifest_of("solve", p, fl, 0);
    doc["metadata"] = res.metadata();
    std::ofstream mout(meta_path);
    if (!mout) throw InvalidInput("cannot write " + meta_path);
    mout << doc.dump(2) << "\n";
  }
  std::cout << "[PASS] solve: " << res.scheme
            << " iterations=" << res.iterations
            << " residual=" << res.residual << " -> " << out << " + "
            << meta_path << "\n";
  return 0;
}

int cmd_compare(const Flags& fl) {
  const Problem p = load_problem(fl);
  const ProperEllipticPair pair = builtin_pair(p.op, p.params, p.dim, p.domain);
  const GridFunction u = grid_field(p, "u");
  const GridFunction w = grid_field(p, "w");
  const CheckReport rep =
      check_comparison(induce(pair), u, w, tolerances_of(fl));
  write_report(fl, manifest_of("compare", p, fl, rep.samples), {rep}, rep.pass);
  return rep.pass ? 0 : 1;
}

int cmd_zmp(const Flags& fl) {
  const Problem p = load_problem(fl);
  const std::string cone = p.doc.value("cone", "");
  const MonotonicityCone m = [&] {
    if (cone == "convexity") return MonotonicityCone::convexity(p.dim);
    if (cone == "negativity_convexity")
      return MonotonicityCone::negativity_convexity(p.dim);
    if (cone == "minimal") return MonotonicityCone::minimal(p.dim);
    throw InvalidInput(
        "zmp: \"cone\" must be convexity, negativity_convexity, or minimal");
  }();
  const GridFunction z = grid_field(p, "z");
  const CheckReport rep = check_zmp(m, z, tolerances_of(fl));
  write_report(fl, manifest_of("zmp", p, fl, rep.samples), {rep}, rep.pass);
  return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "jetlab: constraint sets in 2-jet space, their duals, axiom checks, "
      "grid-level subharmonicity, and monotone Dirichlet solvers"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.footer(
      "Problem files name a builtin operator plus its params, dimension and "
      "box.\nJETLAB_THREADS caps the worker count; exit codes: 0 all PASS, 1 "
      "any FAIL, 2 usage or input error.");

  // --h is a real flag here, so help answers only to --help.
  app.set_help_flag("--help", "print help and exit");

  Flags fl;
  const auto add_common = [&fl](CLI::App* sub) {
    sub->set_help_flag("--help", "print help and exit");
    sub->add_option("--problem", fl.problem, "problem file (JSON)")
        ->required();
    sub->add_option("--seed", fl.seed, "seed for all randomized probing");
    sub->add_option("--samples", fl.samples,
                    "sample count override (0 = command default)");
    sub->add_option("--h", fl.h, "grid step override for the problem box");
    sub->add_option("--tol", fl.tol,
                    "membership shell tolerance override (default 1e-8)");
    sub->add_option("--out", fl.out, "report path (JSON or CSV)");
    sub->add_option("--format", fl.format, "report format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
  };

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Flags&);
    CLI::App* sub = nullptr;
  };
  Command commands[] = {
      {"verify-axioms",
       "structural battery: positivity, negativity, stability, monotonicity, "
       "biduality, compatibility",
       &cmd_verify_axioms},
      {"dual-check", "double dual returns the original set on random jets",
       &cmd_dual_check},
      {"check-compatibility",
       "interior of the induced set equals the positive operator locus",
       &cmd_check_compatibility},
      {"fiber-modulus",
       "uniform fiber continuity modulus delta(eta) over the problem box",
       &cmd_fiber_modulus},
      {"check-correspondence",
       "grid subharmonicity versus admissible sub/supersolution verdicts "
       "(needs \"u\" or \"u_grid\")",
       &cmd_check_correspondence},
      {"solve",
       "monotone Dirichlet solve; writes the grid CSV plus a metadata "
       "sidecar",
       &cmd_solve},
      {"compare",
       "interior ordering of a subharmonic u under a superharmonic w (needs "
       "\"u\"/\"w\" inputs)",
       &cmd_compare},
      {"zmp",
       "dual-cone subharmonic z with nonpositive boundary stays below tau "
       "(needs \"cone\" and \"z\" inputs)",
       &cmd_zmp},
  };
  for (Command& c : commands) {
    c.sub = app.add_subcommand(c.name, c.help);
    add_common(c.sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    for (const Command& c : commands)
      if (c.sub->parsed()) return c.run(fl);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
