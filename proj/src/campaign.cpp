#include "ips/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>
#include <vector>

#include "ips/errors.hpp"
#include "ips/report.hpp"
#include "ips/rng.hpp"

namespace ips {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// One trigonometric field, 1-periodic in every coordinate.
struct TrigField {
  std::vector<Vec> freq;  // integer-valued frequency vectors
  std::vector<Vec> ca, cb;

  Vec eval(const Vec& x) const {
    Vec g = Vec::Zero(ca.empty() ? x.size() : ca[0].size());
    for (std::size_t i = 0; i < freq.size(); ++i) {
      double phase = kTwoPi * freq[i].dot(x);
      g += std::cos(phase) * ca[i] + std::sin(phase) * cb[i];
    }
    return g;
  }
};

// All integer frequency vectors with |nu|_inf <= max_freq, in a fixed
// lexicographic order so fields are reproducible.
std::vector<Vec> frequency_lattice(Index dim, int max_freq) {
  std::vector<Vec> out;
  std::vector<int> idx(static_cast<std::size_t>(dim), -max_freq);
  while (true) {
    Vec nu(dim);
    for (Index i = 0; i < dim; ++i) nu[i] = idx[static_cast<std::size_t>(i)];
    out.push_back(nu);
    Index carry = 0;
    while (carry < dim) {
      if (++idx[static_cast<std::size_t>(carry)] <= max_freq) break;
      idx[static_cast<std::size_t>(carry)] = -max_freq;
      ++carry;
    }
    if (carry == dim) break;
  }
  return out;
}

// Sup of |g| over [0, 1)^dim: a dense grid scan (the field is 1-periodic
// coordinatewise, so this window sees its full range on any model space)
// followed by axis-aligned pattern search from the best grid point.  The
// frequencies are bounded, so the grid is far past Nyquist density and the
// best grid point sits in the global maximum's basin; the local search then
// converges in value to machine accuracy.
double field_sup(const TrigField& g, Index dim, int per_axis) {
  double sup = 0.0;
  Vec best = Vec::Zero(dim);
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  while (true) {
    Vec x(dim);
    for (Index i = 0; i < dim; ++i)
      x[i] = static_cast<double>(idx[static_cast<std::size_t>(i)]) / per_axis;
    double val = g.eval(x).norm();
    if (val > sup) {
      sup = val;
      best = x;
    }
    Index carry = 0;
    while (carry < dim) {
      if (++idx[static_cast<std::size_t>(carry)] < per_axis) break;
      idx[static_cast<std::size_t>(carry)] = 0;
      ++carry;
    }
    if (carry == dim) break;
  }
  double h = 1.0 / per_axis;
  while (h > 1e-10) {
    bool improved = false;
    for (Index i = 0; i < dim; ++i) {
      for (double sgn : {1.0, -1.0}) {
        Vec x = best;
        x[i] += sgn * h;
        double val = g.eval(x).norm();
        if (val > sup) {
          sup = val;
          best = x;
          improved = true;
        }
      }
    }
    if (!improved) h *= 0.5;
  }
  return sup;
}

}  // namespace

PseudomethodS make_random_pseudomethod(SystemPtr system, int k_period, double d,
                                       std::uint64_t seed, int max_freq) {
  if (!system) throw PreconditionError("random pseudomethod: a base system is required");
  if (k_period < 1)
    throw PreconditionError("random pseudomethod: k-period must be >= 1");
  if (!(d >= 0.0))
    throw PreconditionError("random pseudomethod: defect must be >= 0");
  if (max_freq < 0)
    throw PreconditionError("random pseudomethod: max frequency must be >= 0");

  Index dim = system->dim();
  std::vector<Vec> lattice = frequency_lattice(dim, max_freq);
  int per_axis = std::max(8, static_cast<int>(std::ceil(
                                 std::pow(4096.0, 1.0 / static_cast<double>(dim)))));

  Rng rng(seed);
  std::vector<MapFn> maps;
  maps.reserve(static_cast<std::size_t>(k_period));
  for (int k = 0; k < k_period; ++k) {
    TrigField g;
    g.freq = lattice;
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      Vec a(dim), b(dim);
      for (Index c = 0; c < dim; ++c) a[c] = rng.normal();
      for (Index c = 0; c < dim; ++c) b[c] = rng.normal();
      g.ca.push_back(a);
      g.cb.push_back(b);
    }
    // Scale the raw shape so the grid maximum equals d.  The shape and its
    // grid sup never see d, so the stored coefficients are exactly linear in
    // d (and exactly halve when d halves).
    double raw_sup = field_sup(g, dim, per_axis);
    double scale = (d == 0.0 || raw_sup == 0.0) ? 0.0 : d / raw_sup;
    for (std::size_t i = 0; i < g.ca.size(); ++i) {
      g.ca[i] *= scale;
      g.cb[i] *= scale;
    }
    ModelSpace space = system->space();
    maps.push_back([system, space, g](const Vec& x) {
      return space.chart_to(system->eval(x), g.eval(x));
    });
  }
  return PseudomethodS(system, std::move(maps), d);
}

ShadowCampaignReport run_shadow_campaign(std::shared_ptr<const PeriodicOrbit> orbit,
                                         double d, int num_seeds,
                                         std::uint64_t master_seed, double ratio_bound) {
  if (!orbit) throw PreconditionError("shadow campaign: an orbit is required");
  if (num_seeds < 1)
    throw PreconditionError("shadow campaign: at least one seed is required");
  if (!(d >= 0.0)) throw PreconditionError("shadow campaign: defect must be >= 0");

  HyperbolicSplitting splitting = compute_splitting(orbit);
  ShadowingParams params = estimate_lipschitz_constant(splitting);

  ShadowCampaignReport report;
  report.params = params;
  report.ratio_bound = ratio_bound > 0.0 ? ratio_bound : params.L;
  report.rows.resize(static_cast<std::size_t>(num_seeds));

  const ModelSpace& space = orbit->system().space();
  auto solve_one = [&](int i) {
    ShadowCampaignRow row;
    row.seed = master_seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(i + 1));
    row.d = d;
    PseudomethodS psm =
        make_random_pseudomethod(orbit->system_ptr(), orbit->period(), d, row.seed);
    try {
      ShadowingSolveStats stats;
      Pseudotrajectory traj = find_shadowing_trajectory(psm, splitting, params, 1, &stats);
      double sup = 0.0;
      for (long k = traj.k_min(); k <= traj.k_max(); ++k)
        sup = std::max(sup, space.distance(traj.at(k), orbit->point(k)));
      double residual = traj.max_step_residual(psm);
      row.sup_distance = sup;
      row.ratio = d > 0.0 ? sup / d : 0.0;
      row.iterations = stats.iterations;
      row.converged = residual <= 1e-12;
      report.rows[static_cast<std::size_t>(i)] = row;
      return residual;
    } catch (const Error&) {
      row.sup_distance = 0.0;
      row.ratio = 0.0;
      row.iterations = params.max_iterations;
      row.converged = false;
      report.rows[static_cast<std::size_t>(i)] = row;
      return 0.0;
    }
  };

  // Fan the independent solves out over a fixed-stride thread pool; each
  // worker owns a disjoint set of row slots, so the merge is just index
  // order.
  unsigned workers = std::max(1u, std::min(std::thread::hardware_concurrency(),
                                           static_cast<unsigned>(num_seeds)));
  std::vector<double> worker_residual(workers, 0.0);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      double worst = 0.0;
      for (int i = static_cast<int>(w); i < num_seeds; i += static_cast<int>(workers))
        worst = std::max(worst, solve_one(i));
      worker_residual[w] = worst;
    });
  }
  for (std::thread& t : pool) t.join();

  report.all_converged = true;
  for (const ShadowCampaignRow& row : report.rows) {
    report.all_converged = report.all_converged && row.converged;
    report.max_ratio = std::max(report.max_ratio, row.ratio);
  }
  for (double r : worker_residual) report.max_residual = std::max(report.max_residual, r);
  report.pass = report.all_converged && report.max_ratio <= report.ratio_bound;

  {
    CsvWriter csv;
    csv.comment("construction: shadow-campaign");
    csv.comment("orbit period=" + std::to_string(orbit->period()) +
                " d=" + format_g17(d) + " seeds=" + std::to_string(num_seeds) +
                " master_seed=" + std::to_string(master_seed));
    csv.comment("L=" + format_g17(params.L) + " d0=" + format_g17(params.d0) +
                " ratio_bound=" + format_g17(report.ratio_bound));
    csv.header({"seed", "d", "sup_distance", "ratio", "iterations", "converged"});
    for (const ShadowCampaignRow& row : report.rows) {
      csv.begin_row();
      csv.cell(std::to_string(row.seed));
      csv.cell(row.d);
      csv.cell(row.sup_distance);
      csv.cell(row.ratio);
      csv.cell(static_cast<long>(row.iterations));
      csv.cell(static_cast<long>(row.converged ? 1 : 0));
      csv.end_row();
    }
    report.csv_body_ = csv.body();
  }
  {
    std::ostringstream s;
    s << "shadow campaign: period " << orbit->period() << ", d " << format_g17(d)
      << ", " << num_seeds << " seeds\n";
    s << "L " << format_g17(params.L) << ", d0 " << format_g17(params.d0)
      << ", ratio bound " << format_g17(report.ratio_bound) << "\n";
    s << "max ratio " << format_g17(report.max_ratio) << ", max residual "
      << format_g17(report.max_residual) << ", "
      << (report.all_converged ? "all converged" : "non-convergence reported") << "\n";
    s << (report.pass ? "PASS" : "FAIL") << "\n";
    report.summary_ = s.str();
  }
  return report;
}

}  // namespace ips
