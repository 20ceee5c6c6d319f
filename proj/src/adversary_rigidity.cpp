#include "ips/adversary_rigidity.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "ips/errors.hpp"
#include "ips/report.hpp"
#include "ips/rng.hpp"
#include "ips/shadowing.hpp"

namespace ips {

namespace {

long lmod(long k, long p) { return ((k % p) + p) % p; }

// Real unit eigenvector for the eigenvalue selected by `pick` (true keeps the
// candidate), with the largest-magnitude component made positive.  Returns
// false when no eligible real eigenvalue exists.
bool real_eigendirection(const Mat& b, bool largest, double& value, Vec& direction) {
  Eigen::EigenSolver<Mat> es(b);
  if (es.info() != Eigen::Success) return false;
  int best = -1;
  double best_mod = 0.0;
  for (int i = 0; i < b.rows(); ++i) {
    std::complex<double> ev = es.eigenvalues()(i);
    if (std::abs(ev.imag()) > 1e-9 * (1.0 + std::abs(ev))) continue;
    double mod = std::abs(ev);
    if (best < 0 || (largest ? mod > best_mod : mod < best_mod)) {
      best = i;
      best_mod = mod;
    }
  }
  if (best < 0) return false;
  value = es.eigenvalues()(best).real();
  Eigen::VectorXcd col = es.eigenvectors().col(best);
  // Strip the arbitrary complex phase: rotate the largest component onto the
  // positive real axis, then keep the real part.
  int arg = 0;
  for (int i = 1; i < col.size(); ++i)
    if (std::abs(col(i)) > std::abs(col(arg))) arg = i;
  std::complex<double> phase = col(arg) / std::abs(col(arg));
  col /= phase;
  direction = col.real();
  double norm = direction.norm();
  if (!(norm > 0.0)) return false;
  direction /= norm;
  return true;
}

}  // namespace

double RigiditySequence::max_w_norm() const {
  double worst = 0.0;
  for (const Vec& wk : w) worst = std::max(worst, wk.norm());
  return worst;
}

double RigiditySequence::expansion() const {
  double prod = 1.0;
  for (double li : lambda) prod *= li;
  return prod;
}

RigiditySequence build_rigidity_sequence(std::shared_ptr<const PeriodicOrbit> orbit,
                                         std::optional<Vec> e0) {
  if (!orbit) throw PreconditionError("rigidity: an orbit is required");
  if (orbit->period() != orbit->fundamental_period())
    throw PreconditionError("rigidity: the orbit must be given at its fundamental period (got " +
                            std::to_string(orbit->period()) + ", fundamental " +
                            std::to_string(orbit->fundamental_period()) + ")");
  HyperbolicityVerdict verdict = classify_periodic_point(*orbit);
  if (!verdict.hyperbolic)
    throw NonHyperbolicError("rigidity: the cycle matrix has an eigenvalue modulus within "
                             "1e-9 of 1; the drift chain needs a hyperbolic orbit",
                             verdict.witness_modulus.value_or(1.0));

  Mat b = orbit->cycle_matrix();
  double dominant_value = 0.0;
  Vec dominant;
  if (!real_eigendirection(b, /*largest=*/true, dominant_value, dominant))
    throw PreconditionError(
        "rigidity: the dominant eigenvalue of the cycle matrix must be real");
  if (!(std::abs(dominant_value) > 1.0))
    throw PreconditionError("rigidity: needs an expanding direction (dominant modulus " +
                            format_g17(std::abs(dominant_value)) + " <= 1)");

  RigiditySequence seq;
  seq.orbit = orbit;
  seq.e0 = dominant;
  if (e0) {
    Vec u = *e0;
    if (std::abs(u.norm() - 1.0) > 1e-12)
      throw PreconditionError("rigidity: the chain seed must be a unit vector");
    // Sine of the angle to the dominant line via the perpendicular residual,
    // which stays accurate near perfect alignment where 1 - (u . dom)^2
    // cancels catastrophically.
    double sine = Vec(u - u.dot(dominant) * dominant).norm();
    if (sine > 1e-8)
      throw PreconditionError("rigidity: the chain seed must align with the expanding "
                              "direction within angle 1e-8 (sine " +
                              format_g17(sine) + ")");
    seq.e0 = u;
  }

  int m = orbit->period();
  seq.e.push_back(seq.e0);
  for (int i = 0; i < m; ++i) {
    Vec img = orbit->jacobian(i) * seq.e[static_cast<std::size_t>(i)];
    double li = img.norm();
    if (!(li > 0.0))
      throw PreconditionError("rigidity: the chain hit a singular derivative at index " +
                              std::to_string(i));
    seq.lambda.push_back(li);
    seq.e.push_back(Vec(img / li));
  }

  double prod = seq.expansion();
  if (!(prod > 1.0))
    throw PreconditionError("rigidity: needs an expanding direction (chain expansion " +
                            format_g17(prod) + " <= 1)");

  // tau in closed form so that the recursion a_{i+1} = a_i lambda_i - 1
  // terminates at a_m = 0 exactly.
  double tail = 0.0;
  double partial = 1.0;
  for (int j = m - 1; j >= 1; --j) {
    partial *= seq.lambda[static_cast<std::size_t>(j)];
    tail += partial;
  }
  seq.tau = (1.0 + tail) / prod;

  seq.a.push_back(seq.tau);
  for (int i = 0; i < m; ++i)
    seq.a.push_back(seq.a[static_cast<std::size_t>(i)] * seq.lambda[static_cast<std::size_t>(i)] -
                    1.0);
  if (std::abs(seq.a.back()) > 1e-10 * std::max(1.0, seq.tau))
    throw PreconditionError("rigidity: chain closure failed, a_m = " +
                            format_g17(seq.a.back()));
  for (int j = 1; j < m; ++j)
    if (!(seq.a[static_cast<std::size_t>(j)] > 0.0))
      throw PreconditionError("rigidity: the drift chain left the positive cone at a_" +
                              std::to_string(j));

  // Minimal n >= 1 with |B^{-n} tau e_0| < 1.
  Mat binv = orbit->jacobian_power(0, -static_cast<long>(m));
  Vec vtail = Vec(seq.tau * seq.e0);
  int n = 0;
  do {
    vtail = binv * vtail;
    ++n;
    if (n > 200000)
      throw PreconditionError("rigidity: no backward power of the cycle matrix brings "
                              "tau e_0 inside the unit ball; the seed is not expanding");
  } while (vtail.norm() >= 1.0);
  seq.n = n;

  int period = m * (n + 1);
  seq.w.resize(static_cast<std::size_t>(period));
  for (int i = 0; i < m; ++i)
    seq.w[static_cast<std::size_t>(i)] =
        Vec(seq.a[static_cast<std::size_t>(i)] * seq.e[static_cast<std::size_t>(i)]);
  seq.w[static_cast<std::size_t>(m)] = vtail;
  for (int k = m; k + 1 <= period - 1; ++k)
    seq.w[static_cast<std::size_t>(k + 1)] =
        Vec(orbit->jacobian(k % m) * seq.w[static_cast<std::size_t>(k)]);

  // Whole-period stamps must follow the backward powers of the cycle matrix:
  // w_{km} = B^{k-1-n} tau e_0, closing at w_0 = tau e_0.
  Vec stamp = vtail;
  for (int k = 2; k <= n + 1; ++k) {
    stamp = b * stamp;
    const Vec& have = seq.w[static_cast<std::size_t>((k * m) % period)];
    if ((stamp - have).norm() > 1e-10 * std::max(1.0, seq.tau))
      throw PreconditionError("rigidity: the drift-free segment drifted off the cycle-matrix "
                              "powers at stamp " +
                              std::to_string(k));
  }

  return seq;
}

const Vec& RigidityAdversary::drift(long k) const {
  return drifts_[static_cast<std::size_t>(lmod(k, static_cast<long>(drifts_.size())))];
}

const GluedMap& RigidityAdversary::step(long k) const {
  return steps_[static_cast<std::size_t>(lmod(k, static_cast<long>(steps_.size())))];
}

Vec RigidityAdversary::designed_offset(long k) const {
  return Vec(d_ * seq_.w[static_cast<std::size_t>(lmod(k, static_cast<long>(seq_.w.size())))]);
}

PseudomethodS RigidityAdversary::as_pseudomethod() const {
  std::vector<MapFn> maps;
  maps.reserve(steps_.size());
  for (const GluedMap& g : steps_) maps.push_back(g.as_map_fn());
  return PseudomethodS(seq_.orbit->system_ptr(), std::move(maps), 4.0 * d_);
}

RigidityAdversary build_rigidity_adversary(const RigiditySequence& seq, int L, double d) {
  if (!seq.orbit || seq.w.empty())
    throw PreconditionError("rigidity: the drift chain must be built first");
  if (L < 1)
    throw PreconditionError("rigidity: the Lipschitz constant under test must be >= 1");
  auto orbit = seq.orbit;
  int m = orbit->period();
  int period = seq.period();

  RigidityAdversary adv;
  adv.seq_ = seq;
  adv.l_ = L;
  adv.big_n_ = std::max(1.0001 * seq.max_w_norm(), 20.0 * L + 1.0);
  adv.eps1_ = orbit->chart_radius();
  double max_a = 0.0;
  for (int k = 0; k < m; ++k) max_a = std::max(max_a, orbit->jacobian(k).operatorNorm());
  adv.eps2_ = 0.9 * adv.eps1_ / max_a;
  adv.d_max_ = admissible_defect_nonlinear(*orbit, adv.eps2_, 100.0 * adv.big_n_) / 4.0;
  if (d == 0.0) d = adv.d_max_ / 2.0;
  if (!(d > 0.0) || !(d < adv.d_max_))
    throw PreconditionError("rigidity: drift size d must lie in (0, " +
                            format_g17(adv.d_max_) + "), got " + format_g17(d));
  adv.d_ = d;

  Index dim = orbit->dim();
  for (int k = 0; k < period; ++k) {
    Vec delta = Vec::Zero(dim);
    if (k <= m - 2)
      delta = Vec(-d * seq.e[static_cast<std::size_t>(k + 1)]);
    else if (k == m - 1)
      delta = Vec(d * (seq.w[static_cast<std::size_t>(m)] - seq.e[static_cast<std::size_t>(m)]));
    adv.drifts_.push_back(delta);

    GluingSpec gs;
    gs.orbit = orbit;
    gs.local_maps.assign(static_cast<std::size_t>(m), MapFn{});
    Mat a = orbit->jacobian(k % m);
    gs.local_maps[static_cast<std::size_t>(k % m)] = [a, delta](const Vec& v) {
      return Vec(a * v + delta);
    };
    gs.b = adv.eps2_;
    gs.d = 4.0 * d;
    gs.mode = GluingMode::Nonlinear;
    gs.C = 25.0 * adv.big_n_;
    adv.steps_.push_back(glue_nonlinear(gs, 2026u + static_cast<std::uint64_t>(k)));
  }
  return adv;
}

namespace {

struct StampRow {
  long k = 0;
  double pr_norm = 0.0;
  double lower_bound = 0.0;
  bool in_region = true;
};

}  // namespace

RigidityReport verify_rigidity(const RigidityAdversary& adversary, std::uint64_t seed,
                               int samples) {
  const RigiditySequence& seq = adversary.sequence();
  const PeriodicOrbit& orbit = adversary.orbit();
  int m = orbit.period();
  int period = adversary.k_period();
  double d = adversary.d();
  double rho_in = adversary.step(0).rho_in();
  double rho_out = adversary.step(0).rho_out();
  double tube = 2.0 * adversary.N() * d;
  const double probe = 1e-8;

  RigidityReport report;
  report.d = d;
  report.d_max = adversary.d_max();
  report.N = adversary.N();
  report.L = adversary.L();
  report.m = m;
  report.n = seq.n;
  report.period = period;
  report.tau = seq.tau;
  report.expansion = seq.expansion();
  report.max_w = seq.max_w_norm();
  report.epsilon1 = adversary.epsilon1();
  report.epsilon2 = adversary.epsilon2();
  report.w_within_budget = 1.0001 * report.max_w <= 16.0 * report.L;
  report.designed_max_offset = d * report.max_w;

  std::vector<std::vector<StampRow>> rows(4);

  // Designed cycle through the glued maps, two periods.
  {
    Vec v = adversary.designed_offset(0);
    rows[0].push_back(StampRow{0, 0.0, 0.0, true});
    for (long k = 0; k < 2L * period; ++k) {
      v = adversary.step(k).tangent_eval(k % m, v);
      double dev = (v - adversary.designed_offset(k + 1)).norm();
      report.push_error = std::max(report.push_error, dev);
      if (k + 1 == period) report.closure_error = dev;
      rows[0].push_back(StampRow{k + 1, dev, 0.0, v.norm() < rho_in});
    }
    Vec h = adversary.step(m - 1).tangent_eval((m - 1) % m, adversary.designed_offset(m - 1));
    report.handoff_error = (h - adversary.designed_offset(m)).norm();
  }

  // Glued composition versus the affine normal form, seeded starts in the
  // 16 L d ball around the chart origin.
  {
    Index dim = orbit.dim();
    double radius = 16.0 * report.L * d;
    for (int s = 0; s < samples; ++s) {
      Rng rng(seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(s + 1)));
      Vec q = rng.in_ball(dim, radius);
      Vec direct = q;
      Mat accum = Mat::Identity(dim, dim);
      for (long k = 1; k <= 2L * period; ++k) {
        if (direct.norm() >= 0.9 * rho_in) break;
        direct = adversary.step(k - 1).tangent_eval((k - 1) % m, direct);
        accum = orbit.jacobian((k - 1) % m) * accum;
        Vec predicted =
            Vec(accum * (q - adversary.designed_offset(0)) + adversary.designed_offset(k));
        report.formula_error = std::max(report.formula_error, (direct - predicted).norm());
        ++report.formula_checked;
      }
    }
  }

  // Sampled defect against the system.
  {
    DefectSampler sampler = DefectSampler::orbit_focused(
        seq.orbit, {0.99 * rho_in, rho_in, 0.5 * (rho_in + rho_out), rho_out},
        seed ^ 0x52696769646974ull);
    report.measured_defect = measure_defect_s(adversary.as_pseudomethod(), sampler, 40);
  }

  // Escape probes along the expanding direction, both signs.
  auto forward_escape = [&](double offset, std::vector<StampRow>& out) {
    RigidityEscape esc;
    esc.offset = offset;
    esc.rate = seq.expansion();
    esc.predicted_stamp = static_cast<long>(
        std::ceil(std::log(tube / std::abs(offset)) / std::log(esc.rate)));
    Vec v = Vec(adversary.designed_offset(0) + offset * seq.e0);
    out.push_back(StampRow{0, (v - adversary.designed_offset(0)).norm(), std::abs(offset), true});
    bool region_ok = true;
    for (long j = 1; j <= esc.predicted_stamp + 3 && region_ok; ++j) {
      for (int i = 0; i < m; ++i) {
        long k = (j - 1) * m + i;
        if (v.norm() >= 0.9 * rho_in) {
          region_ok = false;
          break;
        }
        v = adversary.step(k).tangent_eval(k % m, v);
      }
      if (!region_ok) break;
      double dev = (v - adversary.designed_offset(j * m)).norm();
      out.push_back(StampRow{j * m, dev, std::abs(offset) * std::pow(esc.rate, j),
                             v.norm() < rho_in});
      if (dev > tube) {
        esc.observed_stamp = j;
        esc.escaped = true;
        break;
      }
    }
    esc.pass = esc.escaped && std::labs(esc.observed_stamp - esc.predicted_stamp) <= 1;
    return esc;
  };
  report.unstable_plus = forward_escape(probe, rows[1]);
  report.unstable_minus = forward_escape(-probe, rows[2]);

  // Backward escape along the contracting direction: extend the affine
  // dynamics backward, then replay the extension forward through the glued
  // maps to confirm it.
  {
    RigidityEscape esc;
    esc.offset = probe;
    double stable_value = 0.0;
    Vec sdir;
    bool found = real_eigendirection(orbit.cycle_matrix(), /*largest=*/false, stable_value, sdir);
    if (!found || !(std::abs(stable_value) < 1.0)) {
      esc.skipped = true;
      esc.pass = true;
    } else {
      esc.rate = 1.0 / std::abs(stable_value);
      esc.predicted_stamp =
          static_cast<long>(std::ceil(std::log(tube / probe) / std::log(esc.rate)));
      std::vector<Eigen::PartialPivLU<Mat>> lus;
      for (int r = 0; r < m; ++r) lus.emplace_back(orbit.jacobian(r));

      std::vector<Vec> path;  // path[t] = chart offset at step -t
      path.push_back(Vec(adversary.designed_offset(0) + probe * sdir));
      rows[3].push_back(
          StampRow{0, (path[0] - adversary.designed_offset(0)).norm(), probe, true});
      bool region_ok = true;
      for (long j = 1; j <= esc.predicted_stamp + 3 && region_ok; ++j) {
        for (int i = 0; i < m && region_ok; ++i) {
          long t = (j - 1) * m + i;
          long kidx = -(t + 1);
          int ball = static_cast<int>(lmod(kidx, m));
          Vec prev = lus[static_cast<std::size_t>(ball)].solve(
              Vec(path.back() - adversary.drift(kidx)));
          if (prev.norm() >= 0.9 * rho_in) {
            region_ok = false;
            break;
          }
          path.push_back(prev);
        }
        if (!region_ok) break;
        long t = j * m;
        double dev = (path.back() - adversary.designed_offset(-t)).norm();
        rows[3].push_back(StampRow{-t, dev, probe * std::pow(esc.rate, j), true});
        if (dev > tube) {
          esc.observed_stamp = j;
          esc.escaped = true;
          break;
        }
      }
      esc.pass = esc.escaped && std::labs(esc.observed_stamp - esc.predicted_stamp) <= 1;

      if (esc.escaped) {
        long K = esc.observed_stamp * m;
        Vec f = path[static_cast<std::size_t>(K)];
        for (long i = K; i >= 1; --i) {
          f = adversary.step(-i).tangent_eval(lmod(-i, m), f);
          report.backward_recheck_error = std::max(
              report.backward_recheck_error, (f - path[static_cast<std::size_t>(i - 1)]).norm());
        }
        esc.pass = esc.pass && report.backward_recheck_error <= 1e-10;
      }
    }
    report.stable_backward = esc;
  }

  report.pass = report.push_error <= 1e-10 && report.handoff_error <= 1e-10 &&
                report.closure_error <= 1e-10 &&
                report.designed_max_offset <= report.N * d * (1.0 + 1e-12) &&
                report.formula_error <= 1e-10 && report.formula_checked > 0 &&
                report.measured_defect <= 4.0 * d + 1e-12 && report.unstable_plus.pass &&
                report.unstable_minus.pass && report.stable_backward.pass;

  {
    CsvWriter csv;
    csv.comment("construction: rigidity");
    csv.comment("m=" + std::to_string(report.m) + " n=" + std::to_string(report.n) +
                " period=" + std::to_string(report.period) + " L=" + std::to_string(report.L) +
                " N=" + format_g17(report.N) + " tau=" + format_g17(report.tau));
    csv.comment("d=" + format_g17(report.d) + " d_max=" + format_g17(report.d_max) +
                " epsilon1=" + format_g17(report.epsilon1) +
                " epsilon2=" + format_g17(report.epsilon2) + " rho_in=" + format_g17(rho_in) +
                " tube=" + format_g17(tube));
    csv.comment("trials: 0 designed cycle, 1 +unstable probe, 2 -unstable probe, "
                "3 stable backward probe (negative k)");
    csv.comment("pr_norm: deviation from the designed offsets; lower_bound: geometric "
                "reference offset * rate^stamp");
    csv.header({"trial", "k", "pr_norm", "lower_bound", "in_region"});
    for (std::size_t t = 0; t < rows.size(); ++t) {
      for (const StampRow& row : rows[t]) {
        csv.begin_row();
        csv.cell(static_cast<long>(t));
        csv.cell(row.k);
        csv.cell(row.pr_norm);
        csv.cell(row.lower_bound);
        csv.cell(static_cast<long>(row.in_region ? 1 : 0));
        csv.end_row();
      }
    }
    report.csv_body_ = csv.body();
  }
  {
    std::ostringstream s;
    s << "rigidity: m=" << report.m << " n=" << report.n << " period=" << report.period
      << " tau=" << format_g17(report.tau) << " N=" << format_g17(report.N)
      << " L=" << report.L << " d=" << format_g17(report.d) << "\n";
    s << "designed cycle: push error " << format_g17(report.push_error) << ", handoff "
      << format_g17(report.handoff_error) << ", closure " << format_g17(report.closure_error)
      << ", max offset " << format_g17(report.designed_max_offset) << " (budget N d = "
      << format_g17(report.N * report.d) << ")\n";
    s << "normal form: max error " << format_g17(report.formula_error) << " over "
      << report.formula_checked << " checks; sampled defect "
      << format_g17(report.measured_defect) << " (budget 4 d = " << format_g17(4.0 * report.d)
      << ")\n";
    auto escape_line = [&s](const std::string& label, const RigidityEscape& esc) {
      s << label << ": ";
      if (esc.skipped)
        s << "skipped (no real contracting direction)";
      else if (esc.escaped)
        s << "escaped the 2 N d tube at stamp " << esc.observed_stamp << " (predicted "
          << esc.predicted_stamp << ", rate " << format_g17(esc.rate) << ")";
      else
        s << "no escape within the horizon";
      s << ", " << (esc.pass ? "pass" : "FAIL") << "\n";
    };
    escape_line("unstable +" + format_g17(probe), report.unstable_plus);
    escape_line("unstable -" + format_g17(probe), report.unstable_minus);
    escape_line("stable backward " + format_g17(probe), report.stable_backward);
    if (!report.stable_backward.skipped)
      s << "backward replay error " << format_g17(report.backward_recheck_error) << "\n";
    s << (report.pass ? "PASS" : "FAIL") << "\n";
    report.summary_ = s.str();
  }
  return report;
}

}  // namespace ips
