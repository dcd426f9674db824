#include "jetlab/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>

#include "jetlab/errors.hpp"
#include "jetlab/parallel.hpp"
#include "jetlab/rng.hpp"

namespace jetlab {

namespace {

constexpr int kStreams = 64;
constexpr int kMaxCesPerStream = 3;
constexpr std::size_t kMaxCesTotal = 8;

/// Per-stream accumulator.  Streams are merged by index, so reports are
/// independent of the worker count.
struct StreamResult {
  int tested = 0;
  int violations = 0;
  int aux_a = 0;
  int aux_b = 0;
  int brackets = 0;
  std::vector<Counterexample> ces;
  std::vector<EquationBoundary::Entry> gamma;
};

template <typename Body>
std::vector<StreamResult> run_streams(int samples, std::uint64_t seed,
                                      const Body& body) {
  if (samples < 1) throw InvalidInput("sample count must be positive");
  const int per = (samples + kStreams - 1) / kStreams;
  std::vector<StreamResult> out(kStreams);
  parallel_for(kStreams, [&](std::size_t s) {
    CounterRng rng(seed, s);
    try {
      body(rng, static_cast<int>(s), per, out[s]);
    } catch (const std::exception& e) {
      ++out[s].violations;
      Counterexample ce;
      ce.note = std::string("check body threw: ") + e.what();
      out[s].ces.push_back(std::move(ce));
    }
  });
  return out;
}

void merge_streams(CheckReport& rep, const std::vector<StreamResult>& rs) {
  int tested = 0;
  int violations = 0;
  for (const auto& r : rs) {
    tested += r.tested;
    violations += r.violations;
    for (const auto& ce : r.ces) {
      if (rep.counterexamples.size() < kMaxCesTotal)
        rep.counterexamples.push_back(ce);
    }
  }
  rep.samples = tested;
  rep.pass = violations == 0;
  rep.details["violations"] = violations;
}

void add_ce(StreamResult& res, std::span<const double> x, const Jet& j,
            std::initializer_list<std::pair<const char*, double>> margins,
            const char* note) {
  ++res.violations;
  if (static_cast<int>(res.ces.size()) >= kMaxCesPerStream) return;
  Counterexample ce;
  ce.x.assign(x.begin(), x.end());
  ce.jet = j;
  for (const auto& [k, v] : margins) ce.margins.emplace_back(k, v);
  ce.note = note;
  res.ces.push_back(std::move(ce));
}

std::vector<double> sample_base_point(const std::optional<Domain>& dom, int dim,
                                      CounterRng& rng) {
  if (dom) return dom->sample_point(rng);
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

std::vector<double> set_base_point(const Subequation& f, CounterRng& rng) {
  return sample_base_point(f.x_domain(), f.dim(), rng);
}

/// Membership with a float-noise allowance on the defining margin.
bool member_with_slack(const Subequation& f, std::span<const double> x,
                       const Jet& j, double slack) {
  if (f.has_defining()) return f.defining(x, j) >= -slack;
  return f.contains(x, j);
}

double margin_of(const Subequation& f, std::span<const double> x, const Jet& j,
                 const Tolerances& tol) {
  if (f.has_defining()) return f.defining(x, j);
  return f.member(x, j, tol).margin;
}

/// Members of F_x: rejection from the jet ball, a probe-ray base with pulled
/// jitter when the ball misses, and near-boundary jets from bisecting each
/// kept member against an exterior point along -J0.  Everything returned
/// passes contains().
std::vector<Jet> sample_fiber_members(const Subequation& f,
                                      std::span<const double> x, int want,
                                      CounterRng& rng, const Tolerances& tol) {
  std::vector<Jet> out;
  if (want < 1) return out;
  const int n = f.dim();
  const int tries = want * 30;
  for (int t = 0; t < tries && static_cast<int>(out.size()) < want; ++t) {
    Jet j = sample_jet(n, rng, tol.jet_radius / 3.0);
    if (f.contains(x, j)) out.push_back(std::move(j));
  }
  if (static_cast<int>(out.size()) < want && f.has_probe()) {
    const Jet& j0 = f.probe();
    std::optional<Jet> base;
    for (double t : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0}) {
      Jet j = t * j0;
      if (f.contains(x, j)) {
        base = std::move(j);
        break;
      }
    }
    if (base) {
      out.push_back(*base);
      while (static_cast<int>(out.size()) < want) {
        Jet j = *base + sample_jet(n, rng, 0.5);
        for (int h = 0; h < 40 && !f.contains(x, j); ++h)
          j = jet_combine(0.5, j, 0.5, *base);
        out.push_back(f.contains(x, j) ? std::move(j) : *base);
      }
    }
  }
  if (!out.empty() && f.has_probe()) {
    const Jet& j0 = f.probe();
    const double j0n = jet_norm(j0);
    const int extra = std::max(want / 3, 1);
    const std::size_t kept = out.size();
    for (int k = 0; k < extra; ++k) {
      const Jet src = out[static_cast<std::size_t>(k) % kept];
      const double cap = 8.0 * (tol.jet_radius + jet_norm(src)) / j0n;
      std::optional<Jet> outside;
      for (double t = 1.0; t <= cap; t *= 2.0) {
        Jet cand = jet_combine(1.0, src, -t, j0);
        if (!f.contains(x, cand)) {
          outside = std::move(cand);
          break;
        }
      }
      if (!outside) continue;
      out.push_back(boundary_probe(f, x, src, *outside, 50));
    }
  }
  return out;
}

/// A cone member built from the factor structure: psd Hessian part, sign
/// and cone constraints on the value and gradient parts.  Generic cones
/// fall back to rejection with the apex as last resort.
Jet cone_sample(const MonotonicityCone& m, CounterRng& rng) {
  const int n = m.dim();
  using Kind = MonotonicityCone::Kind;
  if (m.kind() == Kind::Generic) {
    for (int t = 0; t < 200; ++t) {
      Jet c = sample_jet(n, rng, 2.0);
      if (m.margin(c) >= 0.0) return c;
    }
    return Jet::zero(n);
  }
  Jet k = Jet::zero(n);
  k.a = sample_psd(n, rng, 1.0);
  switch (m.kind()) {
    case Kind::Minimal:
      k.r = -std::abs(rng.normal(1.0));
      break;
    case Kind::NegConv:
      k.r = -std::abs(rng.normal(1.0));
      for (auto& v : k.p) v = rng.normal(1.0);
      break;
    case Kind::Conv:
      k.r = rng.normal(1.0);
      for (auto& v : k.p) v = rng.normal(1.0);
      break;
    case Kind::DirConv:
    case Kind::NegDirConv: {
      k.r = m.kind() == Kind::DirConv ? rng.normal(1.0)
                                      : -std::abs(rng.normal(1.0));
      const auto qbar = m.directions().interior_direction();
      std::vector<double> noise(static_cast<std::size_t>(n));
      for (auto& v : noise) v = rng.normal(1.0);
      const double alpha = std::abs(rng.normal(1.0)) + 0.2;
      double beta = 1.0;
      for (int t = 0; t < 60; ++t) {
        for (int i = 0; i < n; ++i) k.p[i] = alpha * qbar[i] + beta * noise[i];
        if (m.directions().margin(k.p) >= 0.0) break;
        beta *= 0.5;
      }
      if (m.directions().margin(k.p) < 0.0)
        for (int i = 0; i < n; ++i) k.p[i] = alpha * qbar[i];
      break;
    }
    case Kind::Generic:
      break;
  }
  return k;
}

std::vector<double> clamp_into(const std::optional<Domain>& dom,
                               std::vector<double> x) {
  if (dom) {
    for (int i = 0; i < dom->dim(); ++i)
      x[i] = std::min(std::max(x[i], dom->lo()[i]), dom->hi()[i]);
  }
  return x;
}

nlohmann::ordered_json doubles_to_json(std::span<const double> v) {
  auto a = nlohmann::ordered_json::array();
  for (double d : v) a.push_back(d);
  return a;
}

}  // namespace

nlohmann::ordered_json jet_to_json(const Jet& j) {
  nlohmann::ordered_json o;
  o["r"] = j.r;
  o["p"] = doubles_to_json(j.p);
  auto rows = nlohmann::ordered_json::array();
  for (int i = 0; i < j.a.dim(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (int k = 0; k < j.a.dim(); ++k) row.push_back(j.a.at(i, k));
    rows.push_back(std::move(row));
  }
  o["a"] = rows;
  return o;
}

nlohmann::ordered_json tolerances_to_json(const Tolerances& t) {
  nlohmann::ordered_json o;
  o["interior_eps_scale"] = t.interior_eps_scale;
  o["shell"] = t.shell;
  o["contact_slack"] = t.contact_slack;
  o["jet_radius"] = t.jet_radius;
  return o;
}

nlohmann::ordered_json Counterexample::to_json() const {
  nlohmann::ordered_json o;
  o["x"] = doubles_to_json(x);
  o["jet"] = jet_to_json(jet);
  auto ms = nlohmann::ordered_json::object();
  for (const auto& [k, v] : margins) ms[k] = v;
  o["margins"] = ms;
  o["note"] = note;
  return o;
}

nlohmann::ordered_json CheckReport::to_json() const {
  nlohmann::ordered_json o;
  o["schema_version"] = "1";
  o["check"] = check;
  o["subject"] = subject;
  o["seed"] = seed;
  o["samples"] = samples;
  o["verdict"] = pass ? "PASS" : "FAIL";
  o["tolerances"] = tolerances_to_json(tol);
  o["details"] = details;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& ce : counterexamples) arr.push_back(ce.to_json());
  o["counterexamples"] = arr;
  return o;
}

CheckReport check_P(const Subequation& f, int samples, std::uint64_t seed,
                    const Tolerances& tol) {
  CheckReport rep;
  rep.check = "P";
  rep.subject = f.name();
  rep.seed = seed;
  rep.tol = tol;
  const int n = f.dim();
  auto rs = run_streams(
      samples, seed,
      [&](CounterRng& rng, int, int count, StreamResult& res) {
        int done = 0;
        while (done < count) {
          const auto x = set_base_point(f, rng);
          const int batch = std::min(count - done, 16);
          const auto members = sample_fiber_members(
              f, x, std::max(batch / 2, 1), rng, tol);
          if (members.empty()) {
            done += batch;
            res.tested += batch;
            continue;
          }
          for (int i = 0; i < batch; ++i, ++done) {
            const Jet& j = members[static_cast<std::size_t>(i) %
                                   members.size()];
            // Identity first so a broken set fails on the simplest witness.
            const SymMatrix p = i % 4 == 0 ? SymMatrix::identity(n)
                                           : sample_psd(n, rng, 1.5);
            Jet shifted = j;
            shifted.a += p;
            ++res.tested;
            const double slack =
                tol.interior_eps_scale * (1.0 + jet_norm(shifted));
            if (!member_with_slack(f, x, shifted, slack)) {
              add_ce(res, x, shifted,
                     {{"margin_before", margin_of(f, x, j, tol)},
                      {"margin_after", margin_of(f, x, shifted, tol)}},
                     "member left the fiber after a psd addition to the "
                     "Hessian slot");
            }
          }
        }
      });
  merge_streams(rep, rs);
  return rep;
}

CheckReport check_N(const Subequation& f, int samples, std::uint64_t seed,
                    const Tolerances& tol) {
  CheckReport rep;
  rep.check = "N";
  rep.subject = f.name();
  rep.seed = seed;
  rep.tol = tol;
  auto rs = run_streams(
      samples, seed,
      [&](CounterRng& rng, int, int count, StreamResult& res) {
        int done = 0;
        while (done < count) {
          const auto x = set_base_point(f, rng);
          const int batch = std::min(count - done, 16);
          const auto members = sample_fiber_members(
              f, x, std::max(batch / 2, 1), rng, tol);
          if (members.empty()) {
            done += batch;
            res.tested += batch;
            continue;
          }
          for (int i = 0; i < batch; ++i, ++done) {
            const Jet& j = members[static_cast<std::size_t>(i) %
                                   members.size()];
            const double s = i % 4 == 0 ? -1.0 : -std::abs(rng.normal(1.0));
            Jet shifted = j;
            shifted.r += s;
            ++res.tested;
            const double slack =
                tol.interior_eps_scale * (1.0 + jet_norm(shifted));
            if (!member_with_slack(f, x, shifted, slack)) {
              add_ce(res, x, shifted,
                     {{"margin_before", margin_of(f, x, j, tol)},
                      {"margin_after", margin_of(f, x, shifted, tol)},
                      {"value_shift", s}},
                     "member left the fiber after decreasing the value slot");
            }
          }
        }
      });
  merge_streams(rep, rs);
  return rep;
}

CheckReport check_T(const Subequation& f, int samples, std::uint64_t seed,
                    const Tolerances& tol, std::span<const Jet> extra_jets) {
  if (!f.has_probe())
    throw Unsupported(
        "T check probes along a cone interior direction; none is available "
        "for " +
        f.name());
  CheckReport rep;
  rep.check = "T";
  rep.subject = f.name();
  rep.seed = seed;
  rep.tol = tol;
  const Jet j0 = f.probe();
  const double j0n = jet_norm(j0);
  constexpr double kLadderTop = 1e-3;
  constexpr int kLadderLevels = 7;
  rep.details["ladder"] = {{"top", kLadderTop},
                           {"levels", kLadderLevels},
                           {"decay", 4.0}};

  // Every push t*J0 with t in the ladder must land in the interior; the
  // ladder reaching 0 certifies members are interior limits, the top rungs
  // certify pushed points are interior at every scale.
  auto ladder_ok = [&](std::span<const double> x, const Jet& j,
                       StreamResult& res) {
    double t = kLadderTop * (1.0 + jet_norm(j)) / j0n;
    for (int k = 0; k < kLadderLevels; ++k, t /= 4.0) {
      const Jet pushed = jet_combine(1.0, j, t, j0);
      if (f.classify(x, pushed, tol) != Region::Interior) {
        add_ce(res, x, j,
               {{"push_scale", t},
                {"pushed_margin", margin_of(f, x, pushed, tol)}},
               "probe push along the cone interior did not reach the fiber "
               "interior");
        return false;
      }
    }
    return true;
  };

  auto rs = run_streams(
      samples, seed,
      [&](CounterRng& rng, int stream, int count, StreamResult& res) {
        if (stream == 0) {
          for (const Jet& j : extra_jets) {
            const auto x = set_base_point(f, rng);
            ++res.tested;
            ladder_ok(x, j, res);
          }
        }
        int done = 0;
        while (done < count) {
          const auto x = set_base_point(f, rng);
          const int batch = std::min(count - done, 12);
          const auto members = sample_fiber_members(
              f, x, std::max(batch / 2, 1), rng, tol);
          if (members.empty()) {
            done += batch;
            res.tested += batch;
            continue;
          }
          for (int i = 0; i < batch; ++i, ++done) {
            const Jet& j = members[static_cast<std::size_t>(i) %
                                   members.size()];
            ++res.tested;
            if (!ladder_ok(x, j, res)) continue;
            if (i % 4 != 0) continue;

            // Stability leg: an interior verdict must survive a joint
            // (x, J) perturbation at some probed radius.
            const Membership m = f.member(x, j, tol);
            if (m.region != Region::Interior) continue;
            ++res.aux_a;
            const double delta = 1e-4 * (1.0 + jet_norm(j));
            double slope = 1e-6;
            std::vector<Jet> dirs;
            for (int d = 0; d < 3; ++d) {
              Jet dir = sample_jet(f.dim(), rng, 1.0);
              const double dn = jet_norm(dir);
              if (dn < 1e-12) continue;
              dir = (1.0 / dn) * dir;
              const Jet probe_pt = jet_combine(1.0, j, delta, dir);
              slope = std::max(slope, std::abs(margin_of(f, x, probe_pt, tol) -
                                               m.margin) /
                                          delta);
              dirs.push_back(std::move(dir));
            }
            std::vector<double> xdir(x.size(), 0.0);
            if (!f.constant_fibers()) {
              for (auto& v : xdir) v = rng.normal(1.0);
              double xn = 0.0;
              for (double v : xdir) xn += v * v;
              xn = std::sqrt(xn);
              if (xn > 1e-12)
                for (auto& v : xdir) v /= xn;
              std::vector<double> xs(x.begin(), x.end());
              for (std::size_t i2 = 0; i2 < xs.size(); ++i2)
                xs[i2] += delta * xdir[i2];
              xs = clamp_into(f.x_domain(), std::move(xs));
              slope = std::max(
                  slope, std::abs(margin_of(f, xs, j, tol) - m.margin) / delta);
            }
            double rho = std::min(0.5 * std::abs(m.margin) / slope,
                                  0.1 * (1.0 + jet_norm(j)));
            bool stable = false;
            for (int k = 0; k < 5 && !stable && rho > 0.0; ++k, rho *= 0.25) {
              bool ok = true;
              for (const Jet& dir : dirs) {
                const Jet jp = jet_combine(1.0, j, rho, dir);
                std::vector<double> xs(x.begin(), x.end());
                for (std::size_t i2 = 0; i2 < xs.size(); ++i2)
                  xs[i2] += rho * xdir[i2];
                xs = clamp_into(f.x_domain(), std::move(xs));
                if (f.classify(xs, jp, tol) != Region::Interior) {
                  ok = false;
                  break;
                }
              }
              stable = ok;
            }
            if (!stable) {
              add_ce(res, x, j, {{"interior_margin", m.margin}},
                     "no probed radius kept the interior verdict under joint "
                     "base and jet perturbations");
            }
          }
        }
      });
  merge_streams(rep, rs);
  int stability = 0;
  for (const auto& r : rs) stability += r.aux_a;
  rep.details["stability_samples"] = stability;
  return rep;
}

CheckReport check_monotonicity(const Subequation& f, const MonotonicityCone& m,
                               int samples, std::uint64_t seed,
                               const Tolerances& tol) {
  if (f.dim() != m.dim())
    throw InvalidInput("monotonicity check: cone dimension " +
                       std::to_string(m.dim()) + " vs set dimension " +
                       std::to_string(f.dim()));
  CheckReport rep;
  rep.check = "monotonicity";
  rep.subject = f.name() + " vs " + m.name();
  rep.seed = seed;
  rep.tol = tol;

  // Direct form: F_x + M stays inside F_x.
  auto direct = run_streams(
      samples, seed,
      [&](CounterRng& rng, int, int count, StreamResult& res) {
        int done = 0;
        while (done < count) {
          const auto x = set_base_point(f, rng);
          const int batch = std::min(count - done, 16);
          const auto members = sample_fiber_members(
              f, x, std::max(batch / 2, 1), rng, tol);
          if (members.empty()) {
            done += batch;
            res.tested += batch;
            continue;
          }
          for (int i = 0; i < batch; ++i, ++done) {
            const Jet& j = members[static_cast<std::size_t>(i) %
                                   members.size()];
            const Jet k = cone_sample(m, rng);
            const Jet shifted = j + k;
            ++res.tested;
            const double slack =
                tol.interior_eps_scale * (1.0 + jet_norm(shifted));
            if (!member_with_slack(f, x, shifted, slack)) {
              add_ce(res, x, shifted,
                     {{"margin_before", margin_of(f, x, j, tol)},
                      {"margin_after", margin_of(f, x, shifted, tol)},
                      {"cone_margin", m.margin(k)}},
                     "member left the fiber after adding a cone direction");
            }
          }
        }
      });

  // Jet addition form: F_x + dual(F)_x lands in the dual cone.
  const Subequation fd = f.dual();
  const MonotonicityConeDual md = m.dual();
  auto addition = run_streams(
      samples, seed,
      [&](CounterRng& rng, int, int count, StreamResult& res) {
        int done = 0;
        while (done < count) {
          const auto x = set_base_point(f, rng);
          const int batch = std::min(count - done, 16);
          const auto members = sample_fiber_members(
              f, x, std::max(batch / 4, 1), rng, tol);
          const auto duals = sample_fiber_members(
              fd, x, std::max(batch / 4, 1), rng, tol);
          if (members.empty() || duals.empty()) {
            done += batch;
            res.tested += batch;
            continue;
          }
          for (int i = 0; i < batch; ++i, ++done) {
            const Jet& j = members[static_cast<std::size_t>(i) %
                                   members.size()];
            const Jet& k = duals[static_cast<std::size_t>(i) % duals.size()];
            const Jet sum = j + k;
            ++res.tested;
            const double slack =
                tol.interior_eps_scale * (1.0 + jet_norm(sum));
            if (md.margin(sum) < -slack) {
              add_ce(res, x, sum,
                     {{"dual_cone_margin", md.margin(sum)},
                      {"member_margin", margin_of(f, x, j, tol)},
                      {"dual_member_margin", margin_of(fd, x, k, tol)}},
                     "sum of a member and a dual member left the dual cone");
            }
          }
        }
      });

  int tested = 0;
  int direct_viol = 0;
  int addition_viol = 0;
  for (const auto& r : direct) {
    tested += r.tested;
    direct_viol += r.violations;
    for (const auto& ce : r.ces)
      if (rep.counterexamples.size() < kMaxCesTotal)
        rep.counterexamples.push_back(ce);
  }
  for (const auto& r : addition) {
    tested += r.tested;
    addition_viol += r.violations;
    for (const auto& ce : r.ces)
      if (rep.counterexamples.size() < kMaxCesTotal)
        rep.counterexamples.push_back(ce);
  }
  rep.samples = tested;
  rep.pass = direct_viol == 0 && addition_viol == 0;
  rep.details["violations"] = direct_viol + addition_viol;
  rep.details["direct"] = {{"verdict", direct_viol == 0 ? "PASS" : "FAIL"},
                           {"violations", direct_viol}};
  rep.details["jet_addition"] = {
      {"verdict", addition_viol == 0 ? "PASS" : "FAIL"},
      {"violations", addition_viol}};
  return rep;
}

CheckReport check_pair_monotonicity(const ProperEllipticPair& pair,
                                    int samples, std::uint64_t seed,
                                    const Tolerances& tol) {
  CheckReport rep;
  rep.check = "pair_monotonicity";
  rep.subject = pair.name;
  rep.seed = seed;
  rep.tol = tol;
  const int n = pair.cone.dim();
  auto rs = run_streams(
      samples, seed,
      [&](CounterRng& rng, int, int count, StreamResult& res) {
        int done = 0;
        while (done < count) {
          const auto x = sample_base_point(pair.x_domain, n, rng);
          const int batch = std::min(count - done, 16);
          std::vector<Jet> members;
          if (pair.constrained()) {
            members = sample_fiber_members(*pair.constraint, x,
                                           std::max(batch / 2, 1), rng, tol);
          } else {
            for (int i = 0; i < std::max(batch / 2, 1); ++i)
              members.push_back(sample_jet(n, rng, tol.jet_radius / 3.0));
          }
          if (members.empty()) {
            done += batch;
            res.tested += batch;
            continue;
          }
          for (int i = 0; i < batch; ++i, ++done) {
            const Jet& j = members[static_cast<std::size_t>(i) %
                                   members.size()];
            const Jet k = cone_sample(pair.cone, rng);
            const Jet shifted = j + k;
            ++res.tested;
            bool bad = false;
            if (pair.constrained()) {
              const double slack =
                  tol.interior_eps_scale * (1.0 + jet_norm(shifted));
              if (!member_with_slack(*pair.constraint, x, shifted, slack)) {
                ++res.aux_a;
                bad = true;
                add_ce(res, x, shifted,
                       {{"constraint_margin",
                         pair.constraint_margin(x, shifted)},
                        {"cone_margin", pair.cone.margin(k)}},
                       "constraint jet left the constraint after adding a "
                       "cone direction");
              }
            }
            if (!bad) {
              const double before = pair.op(x, j);
              const double after = pair.op(x, shifted);
              const double slack = 1e-9 * (1.0 + std::abs(before));
              if (after < before - slack) {
                ++res.aux_b;
                add_ce(res, x, shifted,
                       {{"op_before", before},
                        {"op_after", after},
                        {"cone_margin", pair.cone.margin(k)}},
                       "operator value decreased along a cone direction");
              }
            }
          }
        }
      });
  merge_streams(rep, rs);
  int cviol = 0;
  int oviol = 0;
  for (const auto& r : rs) {
    cviol += r.aux_a;
    oviol += r.aux_b;
  }
  rep.details["constraint_closed"] = cviol == 0;
  rep.details["operator_monotone"] = oviol == 0;
  return rep;
}

CheckReport check_compatibility(const ProperEllipticPair& pair, int samples,
                                std::uint64_t seed, const Tolerances& tol,
                                EquationBoundary* gamma) {
  CheckReport rep;
  rep.check = "compatibility";
  rep.subject = pair.name;
  rep.seed = seed;
  rep.tol = tol;
  const Subequation find = induce(pair);
  const int n = pair.cone.dim();
  constexpr double kOpEps = 1e-6;
  rep.details["operator_epsilon"] = kOpEps;
  constexpr double kStructuredR[] = {-1.0, -0.5, 0.5, 1.0};

  auto rs = run_streams(
      samples, seed,
      [&](CounterRng& rng, int stream, int count, StreamResult& res) {
        std::vector<Jet> members;
        std::vector<double> member_x;
        for (int i = 0; i < count; ++i) {
          ++res.tested;
          if (i % 4 == 0) {
            // Segment bisection: walk a fixed A-slot segment through a
            // structured (r, p) choice, bisect the membership crossing and
            // demand the operator vanishes there.  Stream 0 starts from
            // r = -1, p = 0, A0 = 0, which pins the witness exactly when
            // the constraint boundary meets {F > 0}.
            const long pick = i / 4 + static_cast<long>(stream) * 7919;
            const auto x = sample_base_point(pair.x_domain, n, rng);
            const double rr = pick % 8 < 4
                                  ? kStructuredR[pick % 4]
                                  : rng.normal(0.7);
            std::vector<double> p(static_cast<std::size_t>(n), 0.0);
            if (pick % 2 != 0)
              for (auto& v : p) v = rng.normal(0.4);
            SymMatrix a0 = pick % 3 == 0 ? SymMatrix(n)
                                         : sample_sym(n, rng, 0.4);
            const SymMatrix two_i = 2.0 * SymMatrix::identity(n);
            const Jet j_in{rr, p, a0 + two_i};
            const Jet j_out{rr, p, a0 - two_i};
            if (!find.contains(x, j_in) || find.contains(x, j_out)) continue;
            ++res.brackets;
            const Jet cross = boundary_probe(find, x, j_in, j_out, 60);
            const double fv = pair.op(x, cross);
            if (!pair.in_constraint(x, cross)) continue;
            if (fv > kOpEps) {
              ++res.aux_b;
              add_ce(res, x, cross,
                     {{"operator_value", fv},
                      {"constraint_margin", pair.constraint_margin(x, cross)},
                      {"induced_margin", margin_of(find, x, cross, tol)}},
                     "membership boundary jet carries an operator value "
                     "above epsilon");
            } else if (std::abs(fv) <= kOpEps) {
              res.gamma.push_back(
                  {std::vector<double>(x.begin(), x.end()), cross, fv});
            }
          } else {
            // Interior side: constraint jets with clearly positive operator
            // values must classify as interior points of the induced set.
            if (members.empty() || i % 16 == 1) {
              member_x = sample_base_point(pair.x_domain, n, rng);
              if (pair.constrained()) {
                members = sample_fiber_members(*pair.constraint, member_x, 8,
                                               rng, tol);
              } else {
                members.clear();
                for (int k = 0; k < 8; ++k)
                  members.push_back(
                      sample_jet(n, rng, tol.jet_radius / 3.0));
              }
              if (members.empty()) continue;
            }
            const Jet& j = members[static_cast<std::size_t>(i) %
                                   members.size()];
            const double fv = pair.op(member_x, j);
            if (fv <= kOpEps) continue;
            if (find.classify(member_x, j, tol) != Region::Interior) {
              ++res.aux_a;
              add_ce(res, member_x, j,
                     {{"operator_value", fv},
                      {"constraint_margin",
                       pair.constraint_margin(member_x, j)},
                      {"induced_margin", margin_of(find, member_x, j, tol)}},
                     "constraint jet with positive operator value is not "
                     "interior");
            }
          }
        }
      });
  merge_streams(rep, rs);
  int interior_viol = 0;
  int boundary_viol = 0;
  int brackets = 0;
  std::size_t entries = 0;
  for (const auto& r : rs) {
    interior_viol += r.aux_a;
    boundary_viol += r.aux_b;
    brackets += r.brackets;
    entries += r.gamma.size();
    if (gamma)
      gamma->entries.insert(gamma->entries.end(), r.gamma.begin(),
                            r.gamma.end());
  }
  rep.details["interior_violations"] = interior_viol;
  rep.details["boundary_violations"] = boundary_viol;
  rep.details["boundary_brackets"] = brackets;
  rep.details["gamma_entries"] = entries;
  rep.details["gamma_nonempty"] = entries > 0;
  return rep;
}

CheckReport check_biduality(const Subequation& f, int samples,
                            std::uint64_t seed, const Tolerances& tol) {
  CheckReport rep;
  rep.check = "biduality";
  rep.subject = f.name();
  rep.seed = seed;
  rep.tol = tol;
  // Oracle route: membership only, interiors decided by probing; taking the
  // dual twice through it cross-validates the closed-form margins.
  Subequation oracle_route = Subequation::from_oracle(
      f.name() + " (oracle route)", f.dim(),
      [f](std::span<const double> x, const Jet& j) { return f.contains(x, j); },
      f.cone());
  if (f.has_probe()) oracle_route = oracle_route.with_probe(f.probe());
  if (f.x_domain()) oracle_route = oracle_route.with_x_domain(*f.x_domain());
  oracle_route = oracle_route.with_constant_fibers(f.constant_fibers());
  const Subequation dd_oracle = oracle_route.dual().dual();
  std::optional<Subequation> dd_margin;
  if (f.has_defining()) dd_margin = f.dual().dual();

  auto rs = run_streams(
      samples, seed,
      [&](CounterRng& rng, int, int count, StreamResult& res) {
        for (int i = 0; i < count; ++i) {
          const auto x = set_base_point(f, rng);
          const Jet j = sample_jet(f.dim(), rng, tol.jet_radius / 3.0);
          ++res.tested;
          const double m = margin_of(f, x, j, tol);
          if (std::abs(m) <= tol.shell * (1.0 + jet_norm(j))) {
            ++res.aux_b;
            continue;
          }
          const bool in_f = f.contains(x, j);
          if (dd_oracle.contains(x, j) != in_f) {
            ++res.aux_a;
            add_ce(res, x, j, {{"margin", m}},
                   "oracle-route double dual disagrees with the set off the "
                   "shell");
          }
          if (dd_margin && (dd_margin->defining(x, j) >= 0.0) != in_f) {
            add_ce(res, x, j,
                   {{"margin", m},
                    {"bidual_margin", dd_margin->defining(x, j)}},
                   "margin-route double dual disagrees with the set off the "
                   "shell");
          }
        }
      });
  merge_streams(rep, rs);
  int oracle_dis = 0;
  int skipped = 0;
  for (const auto& r : rs) {
    oracle_dis += r.aux_a;
    skipped += r.aux_b;
  }
  rep.details["oracle_route_disagreements"] = oracle_dis;
  rep.details["shell_skipped"] = skipped;
  return rep;
}

namespace {

/// Shared scan for both modulus forms: fixed per-slot samples (identical
/// across eta rows, so each per-sample failure distance is monotone in eta
/// and the reported table is nondecreasing by construction), first-failure
/// search along rays with coarse steps plus bisection.
struct ModulusScan {
  int dim = 0;
  Jet j0;
  std::function<std::vector<Jet>(std::span<const double>, CounterRng&)>
      members_at;
  std::function<bool(std::span<const double>, std::span<const double>,
                     const Jet&, const Jet&)>
      holds;  // (x, y, shifted, base)
};

FiberModulusTable modulus_table(const std::string& subject,
                                const std::string& form, bool constant,
                                const Domain& omega,
                                std::span<const double> etas,
                                std::uint64_t seed, const Tolerances& tol,
                                const ModulusScan& scan) {
  FiberModulusTable table;
  table.subject = subject;
  table.form = form;
  table.seed = seed;
  table.tol = tol;
  for (double eta : etas)
    if (!(eta > 0.0))
      throw InvalidInput("fiber modulus shifts must be positive");
  if (constant) {
    for (double eta : etas)
      table.rows.push_back(
          {eta, std::numeric_limits<double>::infinity(), true});
    return table;
  }

  constexpr int kSlots = 48;
  constexpr int kCoarse = 24;
  const double diam = omega.diameter();
  const int n = scan.dim;

  struct SlotFinding {
    double fail = std::numeric_limits<double>::infinity();
    std::vector<double> x;
    std::vector<double> dir;
    Jet shifted;
    Jet base;
    double cap = 0.0;
  };

  for (double eta : etas) {
    std::vector<SlotFinding> finds(kSlots);
    parallel_for(kSlots, [&](std::size_t slot) {
      CounterRng rng(seed, slot);
      const auto x = omega.sample_point(rng);
      const auto members = scan.members_at(x, rng);
      std::vector<std::vector<double>> dirs;
      {
        std::vector<double> axis(static_cast<std::size_t>(n), 0.0);
        axis[slot % static_cast<std::size_t>(n)] = 1.0;
        dirs.push_back(axis);
        for (auto& v : axis) v = -v;
        dirs.push_back(axis);
        for (int d = 0; d < 2; ++d) {
          std::vector<double> u(static_cast<std::size_t>(n));
          double norm = 0.0;
          for (auto& v : u) {
            v = rng.normal(1.0);
            norm += v * v;
          }
          norm = std::sqrt(norm);
          if (norm < 1e-12) continue;
          for (auto& v : u) v /= norm;
          dirs.push_back(std::move(u));
        }
      }
      SlotFinding& best = finds[slot];
      for (const Jet& j : members) {
        const Jet shifted = jet_combine(1.0, j, eta, scan.j0);
        if (!scan.holds(x, x, shifted, j)) {
          best = {0.0, x, std::vector<double>(static_cast<std::size_t>(n), 0.0),
                  shifted, j, 0.0};
          return;
        }
        for (const auto& u : dirs) {
          double cap = diam;
          for (int i = 0; i < n; ++i) {
            if (u[i] > 1e-12)
              cap = std::min(cap, (omega.hi()[i] - x[i]) / u[i]);
            else if (u[i] < -1e-12)
              cap = std::min(cap, (omega.lo()[i] - x[i]) / u[i]);
          }
          if (cap <= 0.0) continue;
          auto at = [&](double d) {
            std::vector<double> y(x.begin(), x.end());
            for (int i = 0; i < n; ++i)
              y[i] = std::min(std::max(y[i] + d * u[i], omega.lo()[i]),
                              omega.hi()[i]);
            return y;
          };
          double lo = 0.0;
          double fail = std::numeric_limits<double>::infinity();
          for (int k = 1; k <= kCoarse; ++k) {
            const double d = cap * k / kCoarse;
            if (!scan.holds(x, at(d), shifted, j)) {
              double hi = d;
              for (int b = 0; b < 40; ++b) {
                const double mid = 0.5 * (lo + hi);
                (scan.holds(x, at(mid), shifted, j) ? lo : hi) = mid;
              }
              fail = hi;
              break;
            }
            lo = d;
          }
          if (fail < best.fail) best = {fail, x, u, shifted, j, cap};
        }
      }
    });

    double delta = std::numeric_limits<double>::infinity();
    const SlotFinding* argmin = nullptr;
    for (const auto& sf : finds) {
      if (sf.fail < delta) {
        delta = sf.fail;
        argmin = &sf;
      }
    }
    if (!argmin) {
      table.rows.push_back({eta, diam, false});
      continue;
    }
    table.rows.push_back({eta, delta, false});
    const double d_above = std::min(delta * 1.05 + 1e-12, argmin->cap);
    std::vector<double> y(argmin->x.begin(), argmin->x.end());
    for (int i = 0; i < n; ++i)
      y[i] = std::min(std::max(y[i] + d_above * argmin->dir[i], omega.lo()[i]),
                      omega.hi()[i]);
    if (!scan.holds(argmin->x, y, argmin->shifted, argmin->base) &&
        table.failures_above.size() < 3) {
      Counterexample ce;
      ce.x = y;
      ce.jet = argmin->shifted;
      ce.margins.emplace_back("eta", eta);
      ce.margins.emplace_back("distance", d_above);
      ce.note = "shifted jet fails at 1.05 times the reported distance";
      table.failures_above.push_back(std::move(ce));
    }
  }
  return table;
}

}  // namespace

nlohmann::ordered_json FiberModulusTable::to_json() const {
  nlohmann::ordered_json o;
  o["schema_version"] = "1";
  o["table"] = "fiber_modulus";
  o["subject"] = subject;
  o["form"] = form;
  o["seed"] = seed;
  o["tolerances"] = tolerances_to_json(tol);
  auto rs = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json r;
    r["eta"] = row.eta;
    if (row.infinite)
      r["delta"] = nullptr;
    else
      r["delta"] = row.delta;
    r["infinite"] = row.infinite;
    rs.push_back(std::move(r));
  }
  o["rows"] = rs;
  auto fs = nlohmann::ordered_json::array();
  for (const auto& ce : failures_above) fs.push_back(ce.to_json());
  o["failures_above"] = fs;
  return o;
}

FiberModulusTable fiber_modulus(const Subequation& f, const Domain& omega,
                                std::span<const double> etas,
                                std::uint64_t seed, const Tolerances& tol) {
  if (!f.has_probe())
    throw Unsupported("fiber modulus shifts along a probe jet; none for " +
                      f.name());
  if (omega.dim() != f.dim())
    throw InvalidInput("fiber modulus: domain dimension mismatch");
  ModulusScan scan;
  scan.dim = f.dim();
  scan.j0 = f.probe();
  scan.members_at = [&f, &tol](std::span<const double> x, CounterRng& rng) {
    return sample_fiber_members(f, x, 4, rng, tol);
  };
  scan.holds = [&f, &tol](std::span<const double>, std::span<const double> y,
                          const Jet& shifted, const Jet&) {
    return member_with_slack(f, y, shifted,
                             tol.interior_eps_scale *
                                 (1.0 + jet_norm(shifted)));
  };
  return modulus_table(f.name(), "set", f.constant_fibers(), omega, etas, seed,
                       tol, scan);
}

FiberModulusTable fiber_modulus(const ProperEllipticPair& pair,
                                const Domain& omega,
                                std::span<const double> etas,
                                std::uint64_t seed, const Tolerances& tol) {
  const Jet j0 = pair.probe_jet();
  const int n = pair.cone.dim();
  if (omega.dim() != n)
    throw InvalidInput("fiber modulus: domain dimension mismatch");
  ModulusScan scan;
  scan.dim = n;
  scan.j0 = j0;
  scan.members_at = [&pair, &tol, n](std::span<const double> x,
                                     CounterRng& rng) {
    if (pair.constrained())
      return sample_fiber_members(*pair.constraint, x, 4, rng, tol);
    std::vector<Jet> out;
    for (int i = 0; i < 4; ++i)
      out.push_back(sample_jet(n, rng, tol.jet_radius / 3.0));
    return out;
  };
  scan.holds = [&pair, &tol](std::span<const double> x,
                             std::span<const double> y, const Jet& shifted,
                             const Jet& base) {
    const double slack = tol.interior_eps_scale * (1.0 + jet_norm(shifted));
    if (pair.constrained() &&
        !member_with_slack(*pair.constraint, y, shifted, slack))
      return false;
    const double before = pair.op(x, base);
    return pair.op(y, shifted) >= before - 1e-9 * (1.0 + std::abs(before));
  };
  const bool constant = pair.constant_fibers() && pair.op.constant_coefficients;
  return modulus_table(pair.name, "operator", constant, omega, etas, seed, tol,
                       scan);
}

std::vector<CheckReport> verify_battery(const ProperEllipticPair& pair,
                                        int samples, std::uint64_t seed,
                                        const Tolerances& tol) {
  const Subequation find = induce(pair);
  std::vector<CheckReport> out;
  out.push_back(check_P(find, samples, seed, tol));
  out.push_back(check_N(find, samples, seed, tol));
  out.push_back(check_T(find, samples, seed, tol));
  out.push_back(check_monotonicity(find, pair.cone, samples, seed, tol));
  out.push_back(check_pair_monotonicity(pair, samples, seed, tol));
  out.push_back(check_biduality(find, samples, seed, tol));
  out.push_back(check_compatibility(pair, samples, seed, tol));
  return out;
}

}  // namespace jetlab
