#include "ips/adversary_rotation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ips/errors.hpp"
#include "ips/report.hpp"
#include "ips/rng.hpp"

namespace ips {

namespace {

double spectral_norm(const Mat& a) {
  return a.jacobiSvd().singularValues()(0);
}

}  // namespace

double RotationDriftSpec::max_block_norm() const {
  double worst = 0.0;
  for (int j = 0; j < period; ++j) worst = std::max(worst, spectral_norm(block_matrix(j)));
  return worst;
}

double RotationDriftSpec::inner_radius() const { return ball_radius / (max_block_norm() + 1.0); }

double RotationDriftSpec::epsilon0() const { return inner_radius() / 3.0; }

double RotationDriftSpec::epsilon() const { return epsilon0() / 10.0; }

double RotationDriftSpec::R() const {
  double rmax = 0.0;
  for (double r : radii) rmax = std::max(rmax, r);
  return 2.0 * rmax;
}

double RotationDriftSpec::per_cycle_drift() const {
  return static_cast<double>(period) * nu * drift_scale / (2.0 * std::pow(R(), period));
}

Index RotationDriftSpec::dimension() const {
  return 2 + (bottom_blocks.empty() ? 0 : bottom_blocks.front().rows());
}

Mat RotationDriftSpec::block_matrix(int j) const {
  Index n = dimension();
  Mat a = Mat::Zero(n, n);
  double c = std::cos(chi), s = std::sin(chi);
  double r = radii[((j % period) + period) % period];
  a(0, 0) = r * c;
  a(0, 1) = -r * s;
  a(1, 0) = r * s;
  a(1, 1) = r * c;
  if (!bottom_blocks.empty()) {
    const Mat& b = bottom_blocks[((j % period) + period) % period];
    a.bottomRightCorner(b.rows(), b.cols()) = b;
  }
  return a;
}

void RotationDriftSpec::validate() const {
  if (period < 1) throw PreconditionError("rotation-drift: period must be >= 1");
  if (nu < 1) throw PreconditionError("rotation-drift: nu must be >= 1");
  if (static_cast<int>(radii.size()) != period)
    throw PreconditionError("rotation-drift: need one radial factor per cycle point");
  double product = 1.0;
  for (double r : radii) {
    if (!(r > 0.0)) throw PreconditionError("rotation-drift: radial factors must be positive");
    product *= r;
  }
  if (std::abs(product - 1.0) > 1e-14)
    throw PreconditionError("rotation-drift: radial factors must multiply to 1 (got " +
                            format_g17(product) + ")");
  if (std::abs(std::cos(nu * chi) - 1.0) > 1e-14)
    throw PreconditionError("rotation-drift: cos(nu * chi) must equal 1 (got " +
                            format_g17(std::cos(nu * chi)) + ")");
  if (!bottom_blocks.empty()) {
    if (static_cast<int>(bottom_blocks.size()) != period)
      throw PreconditionError("rotation-drift: need one bottom block per cycle point");
    Index rows = bottom_blocks.front().rows();
    if (rows < 1) throw PreconditionError("rotation-drift: bottom blocks must be nonempty");
    for (const Mat& b : bottom_blocks) {
      if (b.rows() != rows || b.cols() != rows)
        throw PreconditionError("rotation-drift: bottom blocks must be square and equal-sized");
      if (std::abs(b.determinant()) < 1e-12)
        throw PreconditionError("rotation-drift: bottom blocks must be invertible");
    }
  }
  if (!(drift_scale > 0.0))
    throw PreconditionError("rotation-drift: drift scale d must be positive");
  if (!(period * nu * drift_scale < epsilon() / 3.0))
    throw PreconditionError("rotation-drift: need m * nu * d < epsilon / 3 (epsilon = " +
                            format_g17(epsilon()) + ")");
}

RotationModel build_rotation_model(const RotationDriftSpec& spec) {
  spec.validate();
  Index n = spec.dimension();
  std::vector<Vec> points;
  std::vector<Mat> derivatives;
  for (int j = 0; j < spec.period; ++j) {
    Vec p = Vec::Zero(n);
    p[0] = static_cast<double>(j);  // cycle points spaced 1 apart along e_1
    points.push_back(p);
    derivatives.push_back(spec.block_matrix(j));
  }
  auto system = std::make_shared<CyclicAffineSystem>(points, derivatives,
                                                     RotationDriftSpec::ball_radius,
                                                     2.0 * RotationDriftSpec::ball_radius);
  auto orbit = std::make_shared<PeriodicOrbit>(PeriodicOrbit::from_base_point(
      system, points.front(), spec.period, RotationDriftSpec::ball_radius));
  return RotationModel{spec, system, orbit};
}

const Vec& RotationAdversary::drift(long k) const {
  long p = static_cast<long>(drifts_.size());
  return drifts_[static_cast<std::size_t>(((k % p) + p) % p)];
}

const GluedMap& RotationAdversary::step(long k) const {
  long p = static_cast<long>(steps_.size());
  return steps_[static_cast<std::size_t>(((k % p) + p) % p)];
}

PseudomethodS RotationAdversary::as_pseudomethod() const {
  std::vector<MapFn> maps;
  maps.reserve(steps_.size());
  for (const GluedMap& g : steps_) maps.push_back(g.as_map_fn());
  return PseudomethodS(model_.system, std::move(maps), d_);
}

RotationAdversary build_rotation_adversary(const RotationModel& model, double d) {
  const RotationDriftSpec& spec = model.spec;
  spec.validate();
  if (!(d > 0.0)) throw PreconditionError("rotation-drift: drift scale d must be positive");
  double eps = spec.epsilon();
  if (!(spec.period * spec.nu * d < eps / 3.0))
    throw PreconditionError("rotation-drift: need m * nu * d < epsilon / 3 = " +
                            format_g17(eps / 3.0) + ", got d = " + format_g17(d));
  double b = spec.inner_radius();
  double eps0 = spec.epsilon0();
  if (!(d < admissible_defect_linear(b, eps0)))
    throw PreconditionError("rotation-drift: d exceeds the linear gluing bound");

  int m = spec.period;
  int mnu = m * spec.nu;
  Index n = spec.dimension();
  double denom = 2.0 * std::pow(spec.R(), m);

  RotationAdversary adv;
  adv.model_ = model;
  adv.d_ = d;
  double partial = 1.0;
  for (int k = 0; k < mnu; ++k) {
    partial *= spec.radii[k % m];
    Vec delta = Vec::Zero(n);
    delta[0] = d * partial * std::cos((k + 1) * spec.chi) / denom;
    delta[1] = d * partial * std::sin((k + 1) * spec.chi) / denom;
    adv.drifts_.push_back(delta);

    GluingSpec gs;
    gs.orbit = model.orbit;
    gs.local_maps.assign(m, MapFn{});
    Mat a = model.orbit->jacobian(k % m);
    gs.local_maps[k % m] = [a, delta](const Vec& v) { return Vec(a * v + delta); };
    gs.b = b;
    gs.d = d;
    gs.mode = GluingMode::Linear;
    gs.epsilon = eps0;
    adv.steps_.push_back(glue_linear(gs, 2026u + static_cast<std::uint64_t>(k)));
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

struct TrialScratch {
  RotationTrial trial;
  std::vector<StampRow> stamps;
};

double pr12(const Vec& v) { return v.head(2).norm(); }

TrialScratch run_trial(const RotationAdversary& adv, const Mat& super, int trial_index,
                       const Vec& q0, double cdrift, double threshold, double rho_in) {
  const RotationDriftSpec& spec = adv.model().spec;
  int m = spec.period;
  int mnu = adv.k_period();

  TrialScratch out;
  RotationTrial& t = out.trial;
  t.trial = trial_index;
  t.q0 = q0;
  t.pr_q0 = pr12(q0);
  t.guaranteed_cycle =
      static_cast<long>(std::floor((threshold + t.pr_q0) / cdrift)) + 1;
  if (t.guaranteed_cycle > 1000000)
    throw PreconditionError(
        "rotation-drift: drift too small to certify divergence within a practical horizon");

  // Predicted crossing of the telescoped affine form S^j q + j c e_1.
  {
    Vec sq = q0;
    for (long j = 1; j <= t.guaranteed_cycle + 2; ++j) {
      sq = super * sq;
      Vec expected = sq;
      expected[0] += static_cast<double>(j) * cdrift;
      if (pr12(expected) > threshold) {
        t.predicted_cycle = j;
        break;
      }
    }
  }

  out.stamps.push_back(StampRow{0, t.pr_q0, -t.pr_q0, true});

  Vec v = q0;
  Vec sq = q0;
  long horizon = t.guaranteed_cycle + 8;
  bool in_region = true;
  for (long j = 1; j <= horizon; ++j) {
    for (int step = 0; step < mnu && in_region; ++step) {
      long k = (j - 1) * mnu + step;
      if (v.norm() >= rho_in) {
        in_region = false;
        t.early_exit = true;
        t.exit_step = k;
        break;
      }
      v = adv.step(k).tangent_eval(k % m, v);
    }
    if (!in_region) break;

    sq = super * sq;
    Vec expected = sq;
    expected[0] += static_cast<double>(j) * cdrift;
    double err = (v - expected).norm();
    t.max_telescope_error = std::max(t.max_telescope_error, err);

    double prn = pr12(v);
    out.stamps.push_back(
        StampRow{j * mnu, prn, static_cast<double>(j) * cdrift - t.pr_q0, true});
    if (prn > threshold) {
      t.observed_cycle = j;
      t.crossed = true;
      break;
    }
  }

  bool telescope_ok = t.max_telescope_error <= 1e-10;
  if (t.early_exit) {
    // Leaving the inner region means leaving the shadowing tube: divergence
    // is certified by escape rather than by the stamped crossing.
    t.pass = telescope_ok;
  } else {
    t.pass = t.crossed && telescope_ok &&
             std::labs(t.observed_cycle - t.predicted_cycle) <= 1 &&
             t.observed_cycle <= t.guaranteed_cycle + 1;
  }
  return out;
}

}  // namespace

RotationDivergenceReport verify_rotation_divergence(const RotationAdversary& adversary,
                                                    std::uint64_t seed, int trials) {
  const RotationDriftSpec& spec = adversary.model().spec;
  const PeriodicOrbit& orbit = *adversary.model().orbit;
  int mnu = adversary.k_period();
  Index n = spec.dimension();

  RotationDivergenceReport report;
  report.d = adversary.d();
  report.per_cycle_drift =
      static_cast<double>(mnu) * adversary.d() / (2.0 * std::pow(spec.R(), spec.period));
  report.threshold = 3.0 * spec.epsilon();
  report.rho_in = adversary.step(0).rho_in();

  Mat super = Mat::Identity(n, n);
  for (int k = 0; k < mnu; ++k) super = orbit.jacobian(k % spec.period) * super;

  std::vector<TrialScratch> scratch;
  for (int t = 0; t <= trials; ++t) {
    Vec q0 = Vec::Zero(n);
    if (t > 0) {
      Rng rng(seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(t)));
      q0 = rng.in_ball(n, 2.0 * spec.epsilon());
    }
    scratch.push_back(run_trial(adversary, super, t, q0, report.per_cycle_drift,
                                report.threshold, report.rho_in));
  }

  // Linear fit through the origin for the q = 0 trial: the stamped growth
  // |pr q^{m nu j}| should follow j * c to within 1%.
  {
    const TrialScratch& zero = scratch.front();
    double sjj = 0.0, sjy = 0.0;
    for (const StampRow& row : zero.stamps) {
      if (row.k == 0) continue;
      double j = static_cast<double>(row.k) / mnu;
      sjj += j * j;
      sjy += j * row.pr_norm;
    }
    double slope = sjj > 0.0 ? sjy / sjj : 0.0;
    report.slope_rel_error =
        std::abs(slope - report.per_cycle_drift) / report.per_cycle_drift;
  }

  report.pass = report.slope_rel_error <= 0.01;
  for (TrialScratch& s : scratch) {
    report.pass = report.pass && s.trial.pass;
    report.trials.push_back(s.trial);
  }

  // Stamp-level CSV and per-trial summary.
  {
    CsvWriter csv;
    csv.comment("construction: rotation-drift");
    csv.comment("m=" + std::to_string(spec.period) + " nu=" + std::to_string(spec.nu) +
                " chi=" + format_g17(spec.chi) + " d=" + format_g17(report.d));
    std::string rs = "radii:";
    for (double r : spec.radii) rs += " " + format_g17(r);
    csv.comment(rs);
    csv.comment("R=" + format_g17(spec.R()) + " epsilon=" + format_g17(spec.epsilon()) +
                " threshold=" + format_g17(report.threshold) +
                " per_cycle_drift=" + format_g17(report.per_cycle_drift) +
                " rho_in=" + format_g17(report.rho_in));
    csv.header({"trial", "k", "pr_norm", "lower_bound", "in_region"});
    for (const TrialScratch& s : scratch) {
      for (const StampRow& row : s.stamps) {
        csv.begin_row();
        csv.cell(static_cast<long>(s.trial.trial));
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
    s << "rotation-drift divergence: d=" << format_g17(report.d)
      << " per-cycle drift=" << format_g17(report.per_cycle_drift)
      << " threshold=" << format_g17(report.threshold) << "\n";
    for (const RotationTrial& t : report.trials) {
      s << "trial " << t.trial << ": ";
      if (t.crossed)
        s << "crossed at stamp " << t.observed_cycle << " (predicted " << t.predicted_cycle
          << ", guaranteed by " << t.guaranteed_cycle << ")";
      else if (t.early_exit)
        s << "left the inner region at step " << t.exit_step
          << " before crossing (divergence by escape)";
      else
        s << "no crossing within horizon";
      s << ", telescope error " << format_g17(t.max_telescope_error) << ", "
        << (t.pass ? "pass" : "FAIL") << "\n";
    }
    s << "slope fit error " << format_g17(report.slope_rel_error) << "\n";
    s << (report.pass ? "PASS" : "FAIL") << "\n";
    report.summary_ = s.str();
  }
  return report;
}

std::string RotationDivergenceReport::csv() const { return csv_body_; }

std::string RotationDivergenceReport::summary() const { return summary_; }

}  // namespace ips
