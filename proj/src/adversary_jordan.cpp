#include "ips/adversary_jordan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ips/errors.hpp"
#include "ips/report.hpp"
#include "ips/rng.hpp"

namespace ips {

Mat JordanDriftSpec::q_matrix() const {
  Mat q(2, 2);
  double c = std::cos(theta), s = std::sin(theta);
  q << c, s, -s, c;
  return q;
}

Mat JordanDriftSpec::block_matrix() const {
  Index n = dimension();
  Mat a = Mat::Zero(n, n);
  Mat q = q_matrix();
  for (int i = 0; i < l; ++i) {
    a.block(2 * i, 2 * i, 2, 2) = q;
    if (i + 1 < l) a.block(2 * i, 2 * (i + 1), 2, 2) = Mat::Identity(2, 2);
  }
  return a;
}

void JordanDriftSpec::validate() const {
  if (l < 1) throw PreconditionError("jordan-drift: need at least one rotation block");
  if (L < 1)
    throw PreconditionError("jordan-drift: the Lipschitz constant under test must be >= 1");
  if (!(r_bar > 0.0)) throw PreconditionError("jordan-drift: ball radius must be positive");
  if (w.size() != 2 || std::abs(w.norm() - 1.0) > 1e-14)
    throw PreconditionError("jordan-drift: w must be a unit 2-vector");
  Mat q = q_matrix();
  if ((q.transpose() * q - Mat::Identity(2, 2)).norm() > 1e-14)
    throw PreconditionError("jordan-drift: rotation block failed the isometry check");
  if (!(drift_scale > 0.0))
    throw PreconditionError("jordan-drift: drift scale d must be positive");
  if (!(C() * drift_scale < r_bar / 10.0))
    throw PreconditionError("jordan-drift: need 20 L d < r_bar / 10, got 20 L d = " +
                            format_g17(C() * drift_scale) + " with r_bar / 10 = " +
                            format_g17(r_bar / 10.0));
}

JordanModel build_jordan_model(const JordanDriftSpec& spec) {
  spec.validate();
  auto system = std::make_shared<LinearSystem>(spec.block_matrix());
  auto orbit = std::make_shared<PeriodicOrbit>(
      PeriodicOrbit::from_base_point(system, Vec::Zero(spec.dimension()), 1, spec.r_bar));
  return JordanModel{spec, system, orbit};
}

const Vec& JordanAdversary::drift(long k) const {
  long p = static_cast<long>(drifts_.size());
  return drifts_[static_cast<std::size_t>(((k % p) + p) % p)];
}

const GluedMap& JordanAdversary::step(long k) const {
  long p = static_cast<long>(steps_.size());
  return steps_[static_cast<std::size_t>(((k % p) + p) % p)];
}

PseudomethodS JordanAdversary::as_pseudomethod() const {
  std::vector<MapFn> maps;
  maps.reserve(steps_.size());
  for (const GluedMap& g : steps_) maps.push_back(g.as_map_fn());
  return PseudomethodS(model_.system, std::move(maps), d_);
}

JordanAdversary build_jordan_adversary(const JordanDriftSpec& spec, double d, int window) {
  JordanDriftSpec realized = spec;
  realized.drift_scale = d;
  realized.validate();
  if (window <= 0) window = 20 * realized.L + 2;

  JordanModel model = build_jordan_model(realized);
  JordanAdversary adv;
  adv.model_ = model;
  adv.d_ = d;

  Index n = realized.dimension();
  Mat a = realized.block_matrix();
  Mat q = realized.q_matrix();
  Vec qkw = realized.w;
  for (int k = 0; k < window; ++k) {
    Vec delta = Vec::Zero(n);
    delta.tail(2) = (d / 2.0) * qkw;
    adv.drifts_.push_back(delta);

    GluingSpec gs;
    gs.orbit = model.orbit;
    gs.local_maps.assign(1, MapFn{});
    gs.local_maps[0] = [a, delta](const Vec& v) { return Vec(a * v + delta); };
    gs.b = realized.r_bar;
    gs.d = d;
    gs.mode = GluingMode::Nonlinear;
    gs.C = realized.C();
    adv.steps_.push_back(glue_nonlinear(gs, 2026u + static_cast<std::uint64_t>(k)));

    qkw = q * qkw;
  }
  return adv;
}

namespace {

struct StepRow {
  long k = 0;
  double pr_norm = 0.0;
  double lower_bound = 0.0;
  bool in_region = true;
};

struct TrialScratch {
  JordanTrial trial;
  std::vector<StepRow> rows;
};

TrialScratch run_trial(const JordanAdversary& adv, int index, const Vec& q0, double threshold,
                       double rho_in, long horizon) {
  const JordanDriftSpec& spec = adv.model().spec;
  double d = adv.d();
  Mat q = spec.q_matrix();
  const double guard = threshold * (1.0 + 1e-12);

  TrialScratch out;
  JordanTrial& t = out.trial;
  t.trial = index;
  t.q0 = q0;
  t.pr_q0 = q0.tail(2).norm();
  t.min_lower_slack = std::numeric_limits<double>::infinity();

  out.rows.push_back(StepRow{0, t.pr_q0, -t.pr_q0, true});

  // Closed-form accumulator for the bottom block, advanced by the same
  // recursion the maps realize: e_{k+1} = Q e_k + (d/2) Q^k w.
  Vec expected = q0.tail(2);
  Vec qkw = spec.w;

  Vec v = q0;
  for (long k = 1; k <= horizon; ++k) {
    if (v.norm() >= rho_in) {
      // Defensive: the escape check below fires long before the gluing ring.
      t.left_inner_region = true;
      t.region_exit_step = k - 1;
      break;
    }
    v = adv.step(k - 1).tangent_eval(0, v);
    expected = q * expected + (d / 2.0) * qkw;
    qkw = q * qkw;

    double prn = v.tail(2).norm();
    double lower = static_cast<double>(k) * d / 2.0 - t.pr_q0;
    out.rows.push_back(StepRow{k, prn, lower, v.norm() < rho_in});

    t.max_identity_error = std::max(t.max_identity_error, (v.tail(2) - expected).norm());
    t.min_lower_slack = std::min(t.min_lower_slack, prn - lower);
    if (!t.pr_crossed && prn > guard) {
      t.pr_crossed = true;
      t.pr_cross_step = k;
    }
    if (v.norm() > guard) {
      t.exited = true;
      t.exit_step = k;
      break;
    }
  }

  t.pass = t.exited && !t.left_inner_region && t.max_identity_error <= 1e-12 &&
           t.min_lower_slack >= -1e-12;
  return out;
}

}  // namespace

JordanDivergenceReport verify_jordan_divergence(const JordanAdversary& adversary,
                                                std::uint64_t seed, int trials) {
  const JordanDriftSpec& spec = adversary.model().spec;
  Index n = spec.dimension();
  double d = adversary.d();

  JordanDivergenceReport report;
  report.d = d;
  report.threshold = 4.0 * spec.L * d;
  report.rho_in = adversary.step(0).rho_in();
  report.horizon = 20L * spec.L;

  std::vector<TrialScratch> scratch;
  for (int t = 0; t < trials + 2; ++t) {
    Vec q0 = Vec::Zero(n);
    if (t == 1) {
      // Bottom block anti-aligned with the drift at norm 4 L d: the drift
      // must first cancel the start before the norm can regrow past it.
      q0.tail(2) = -report.threshold * (spec.q_matrix().transpose() * spec.w);
    } else if (t > 1) {
      Rng rng(seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(t)));
      q0 = rng.in_ball(n, report.threshold);
    }
    scratch.push_back(
        run_trial(adversary, t, q0, report.threshold, report.rho_in, report.horizon));
  }

  report.pass = true;
  for (TrialScratch& s : scratch) {
    report.pass = report.pass && s.trial.pass;
    report.trials.push_back(s.trial);
  }

  {
    CsvWriter csv;
    csv.comment("construction: jordan-drift");
    csv.comment("l=" + std::to_string(spec.l) + " theta=" + format_g17(spec.theta) +
                " L=" + std::to_string(spec.L) + " d=" + format_g17(d));
    csv.comment("w: " + format_g17(spec.w[0]) + " " + format_g17(spec.w[1]));
    csv.comment("r_bar=" + format_g17(spec.r_bar) + " threshold=" + format_g17(report.threshold) +
                " rho_in=" + format_g17(report.rho_in) + " horizon=" +
                std::to_string(report.horizon));
    csv.header({"trial", "k", "pr_norm", "lower_bound", "in_region"});
    for (const TrialScratch& s : scratch) {
      for (const StepRow& row : s.rows) {
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
    s << "jordan-drift divergence: d=" << format_g17(d)
      << " threshold=" << format_g17(report.threshold) << " horizon=" << report.horizon << "\n";
    for (const JordanTrial& t : report.trials) {
      s << "trial " << t.trial << ": ";
      if (t.exited) {
        s << "left the threshold ball at step " << t.exit_step;
        if (t.pr_crossed)
          s << " (bottom projection crossed at step " << t.pr_cross_step << ")";
        else
          s << " (upper blocks escaped first)";
      } else if (t.left_inner_region) {
        s << "reached the gluing ring at step " << t.region_exit_step;
      } else {
        s << "no escape within horizon";
      }
      s << ", identity error " << format_g17(t.max_identity_error) << ", "
        << (t.pass ? "pass" : "FAIL") << "\n";
    }
    s << (report.pass ? "PASS" : "FAIL") << "\n";
    report.summary_ = s.str();
  }
  return report;
}

}  // namespace ips
