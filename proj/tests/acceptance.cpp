// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Usage: mrb_acceptance [criterion ...]; no arguments runs all nine.
// Prints one PASS/FAIL line per criterion and exits nonzero if any failed.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <Eigen/Dense>
#include "mrb/bench.hpp"
#include "mrb/commands.hpp"
#include "mrb/gauge.hpp"
#include "mrb/io.hpp"

using namespace mrb;

namespace
{

// Tolerances and limits, pinned.
constexpr double zero_tol = 1e-8;              // |lambda| / max|lambda| counted as zero
constexpr double spectrum_tol = 1e-8;          // criterion 2
constexpr double identity_tol = 1e-10;         // criterion 3
constexpr double roundtrip_tol = 1e-8;         // criterion 4, B-norm
constexpr double consistency_tol = 1e-9;       // criterion 4, least-squares residual
constexpr double fem_tol = 0.05;               // criterion 5
constexpr double ratio_lo = 3.0, ratio_hi = 5.0;
constexpr double error_target = 1e-8;          // criterion 6
constexpr int trailing_window = 5;
constexpr double trailing_slack = 0.05;        // relative
constexpr double trailing_floor = 1e-13;       // absolute
constexpr int plateau_window = 5;
constexpr Index max_basis = 60;
constexpr double evp_speedup = 20.0;           // criterion 7
constexpr double tracking_speedup = 5.0;
constexpr double construction_slowdown = 2.0;
constexpr double correlation_min = 0.9;        // criterion 8
constexpr double endpoint_tol = 1e-6;

struct Outcome
{
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string &what)
  {
    if (!ok)
    {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

std::string sci(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

Vector dense_spectrum(const Matrix &A, const Matrix &B)
{
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(A, B, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

RunConfig mesh_config(const Point &dims0, Index n)
{
  RunConfig cfg;
  cfg.dims0 = dims0;
  cfg.resolution = {n, n, n};
  cfg.n_pod = 4;
  cfg.n_train = 8;
  cfg.n_init = 10;
  cfg.n_max = 20;
  cfg.tol = 1e-10;
  return cfg;
}

double first_eigenvalue(Index n, Vector *values = nullptr)
{
  RunConfig cfg = mesh_config({1, 1, 1}, n);
  cfg.dims1 = cfg.dims0;
  cfg.bulge = 0.0;
  Experiment ex(cfg);
  const EigenSolution sol = ex.problem().solve_full(0.0, 5);
  if (values)
  {
    *values = sol.values;
  }
  return sol.values[0];
}

void spurious_modes(Outcome &o)
{
  double worst_gap = std::numeric_limits<double>::infinity();
  int meshes = 0, reduced = 0;
  for (const Point &dims : {Point{1, 1, 1}, Point{1, 1.1, 1.2}})
  {
    for (Index n : {2, 3})
    {
      Experiment ex(mesh_config(dims, n));
      const RbProblem &problem = ex.problem();
      const double cut = problem.eigen_options().lambda_cut;
      for (double t : {0.0, 0.5, 1.0})
      {
        const SystemPair sys = problem.system_at(t);
        const Vector full = dense_spectrum(Matrix(sys.A), Matrix(sys.B));
        const double scale = full.cwiseAbs().maxCoeff();
        Index zeros = 0;
        for (Index i = 0; i < full.size(); i++)
        {
          zeros += std::abs(full[i]) <= zero_tol * scale;
        }
        o.require(zeros == ex.mesh().num_interior_vertices(),
                  "zero count " + std::to_string(zeros) + " != N_v");
        const CotreeSystem cot = build_cotree_system(problem.transform_at(t));
        const double low = dense_spectrum(cot.A_hat, cot.B_hat).minCoeff();
        o.require(low > cut, "cotree eigenvalue below lambda_cut");
        worst_gap = std::min(worst_gap, low / cut);
        meshes++;
      }
      // Reduced systems: pipeline bases of both gauges and random bases.
      const TrainingSets sets = make_training_sets(4, 8, 1);
      std::vector<std::pair<GaugeMode, Matrix>> bases;
      for (GaugeMode mode : {GaugeMode::mixed, GaugeMode::classical})
      {
        PipelineOptions opts;
        opts.K = 5;
        opts.n_init = std::min<Index>(10, problem.cotree_size());
        opts.n_max = std::min<Index>(20, problem.cotree_size());
        opts.tol = 1e-10;
        bases.emplace_back(mode, build_basis(problem, mode, sets, opts).greedy.basis.Z);
        for (Index cols : {Index(1), problem.cotree_size() / 2, problem.cotree_size()})
        {
          Eigen::HouseholderQR<Matrix> qr(Matrix::Random(problem.cotree_size(), cols));
          bases.emplace_back(mode, qr.householderQ() * Matrix::Identity(problem.cotree_size(), cols));
        }
      }
      for (const auto &[mode, Z] : bases)
      {
        auto evaluator = make_evaluator(problem, mode);
        evaluator->set_basis(Z);
        for (double t : {0.0, 0.3, 0.7, 1.0})
        {
          const ReducedSystem red = evaluator->reduce(t);
          const double low = dense_spectrum(red.A_tilde, red.B_tilde).minCoeff();
          o.require(low > cut, "reduced eigenvalue below lambda_cut");
          worst_gap = std::min(worst_gap, low / cut);
          reduced++;
        }
      }
    }
  }
  o.detail << meshes << " full/cotree pencils, " << reduced
           << " reduced pencils; min eigenvalue / lambda_cut = " << worst_gap;
}

void gauge_equivalence(Outcome &o)
{
  double worst = 0.0;
  for (Index n : {2, 3})
  {
    const CavityMesh mesh = build_mesh({1, 1, 1}, {n, n, n});
    const DiscreteGradient grad = discrete_gradient(mesh);
    const SystemPair sys = assemble(mesh);
    const GaugeDecomposition gauge = build_tree(mesh, grad);
    const Vector full = dense_spectrum(Matrix(sys.A), Matrix(sys.B));
    const double scale = full.cwiseAbs().maxCoeff();
    std::vector<double> nonzero;
    for (Index i = 0; i < full.size(); i++)
    {
      if (full[i] > zero_tol * scale)
      {
        nonzero.push_back(full[i]);
      }
    }
    const CotreeSystem cot = build_cotree_system(sys, gauge);
    const Vector gauged = dense_spectrum(cot.A_hat, cot.B_hat);
    o.require(static_cast<Index>(nonzero.size()) == gauged.size(), "spectrum sizes differ");
    for (Index i = 0; i < std::min<Index>(gauged.size(), nonzero.size()); i++)
    {
      worst = std::max(worst, std::abs(gauged[i] - nonzero[static_cast<std::size_t>(i)]) /
                                  nonzero[static_cast<std::size_t>(i)]);
    }
  }
  o.require(worst <= spectrum_tol, "relative deviation above tolerance");
  o.detail << "max relative deviation " << sci(worst) << " (tol " << sci(spectrum_tol) << ")";
}

void algebraic_identity(Outcome &o)
{
  RunConfig cfg = mesh_config({1, 1, 1}, 3);
  Experiment ex(cfg);
  const RbProblem &problem = ex.problem();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<Index> width(1, problem.cotree_size());
  double worst = 0.0;
  for (int trial = 0; trial < 20; trial++)
  {
    const double t = unit(rng);
    Matrix R(problem.cotree_size(), width(rng));
    std::normal_distribution<double> g;
    for (Index j = 0; j < R.cols(); j++)
    {
      for (Index i = 0; i < R.rows(); i++)
      {
        R(i, j) = g(rng);
      }
    }
    Eigen::HouseholderQR<Matrix> qr(R);
    const Matrix Z = qr.householderQ() * Matrix::Identity(R.rows(), R.cols());
    const ReducedSystem mixed = reduced_matrices_mixed(problem, Z, t);
    const CotreeSystem cot = build_cotree_system(problem.transform_at(t));
    const Matrix A = Z.transpose() * cot.A_hat * Z;
    const Matrix B = Z.transpose() * cot.B_hat * Z;
    worst = std::max({worst, (mixed.A_tilde - A).norm() / A.norm(),
                      (mixed.B_tilde - B).norm() / B.norm()});
  }
  o.require(worst <= identity_tol, "relative deviation above tolerance");
  o.detail << "20 random bases, max relative deviation " << sci(worst) << " (tol "
           << sci(identity_tol) << ")";
}

void projection_roundtrip(Outcome &o)
{
  RunConfig cfg = mesh_config({1, 1, 1}, 3);
  cfg.dims1 = cfg.dims0;
  cfg.bulge = 0.0;
  Experiment ex(cfg);
  const SystemPair sys = ex.problem().system_at(0.0);
  const CotreeTransform tr(sys, ex.problem().gauge());
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es{Matrix(sys.A), Matrix(sys.B)};
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  double worst_rt = 0.0, worst_res = 0.0;
  int count = 0;
  for (Index i = 0; i < es.eigenvalues().size(); i++)
  {
    if (es.eigenvalues()[i] <= zero_tol * scale)
    {
      continue;
    }
    const Vector v = es.eigenvectors().col(i);
    const CotreeProjection p = tr.project(v, 1.0);
    const Vector d = tr.upscale(p.v_hat).col(0) - v;
    worst_rt = std::max(worst_rt, std::sqrt(d.dot(sys.B * d) / v.dot(sys.B * v)));
    worst_res = std::max(worst_res, p.residuals[0]);
    count++;
  }
  o.require(worst_rt <= roundtrip_tol, "round-trip error above tolerance");
  o.require(worst_res <= consistency_tol, "consistency residual above tolerance");
  bool rejected = false;
  double gradient_residual = 0.0;
  try
  {
    tr.project(Matrix(ex.gradient().G).col(0));
  }
  catch (const ProjectionError &e)
  {
    rejected = true;
    gradient_residual = e.residual();
  }
  o.require(rejected, "gradient input accepted");
  o.detail << count << " eigenvectors, max B-norm round-trip error " << sci(worst_rt)
           << ", max consistency residual " << sci(worst_res) << ", gradient residual "
           << sci(gradient_residual) << (rejected ? " (rejected)" : "");
}

void fem_ground_truth(Outcome &o)
{
  const double exact = 2.0 * std::numbers::pi * std::numbers::pi;
  Vector values;
  const double l8 = first_eigenvalue(8, &values);
  const double l4 = first_eigenvalue(4);
  const double err8 = std::abs(l8 - exact) / exact;
  o.require(err8 <= fem_tol, "first eigenvalue off by more than 5%");
  int multiplicity = 0;
  for (Index i = 0; i < values.size(); i++)
  {
    multiplicity += std::abs(values[i] - exact) / exact <= fem_tol;
  }
  o.require(multiplicity == 3, "multiplicity " + std::to_string(multiplicity));
  const double ratio = (l4 - exact) / (l8 - exact);
  o.require(ratio >= ratio_lo && ratio <= ratio_hi, "error ratio outside [3, 5]");
  o.detail << "lambda_1(8^3) = " << l8 << " (rel. error " << sci(err8) << "), multiplicity "
           << multiplicity << ", error ratio 4^3/8^3 = " << ratio;
}

std::vector<double> error_curve(const Experiment &ex, GaugeMode mode,
                                const std::vector<double> &params, const Matrix &reference)
{
  const RunConfig &cfg = ex.config();
  const TrainingSets sets = make_training_sets(cfg.n_pod, cfg.n_train, cfg.seed);
  const PipelineResult res = build_basis(ex.problem(), mode, sets, pipeline_options(cfg));
  const Matrix &Z = res.greedy.basis.Z;
  std::vector<Index> sizes;
  for (Index n = 1; n <= Z.cols(); n++)
  {
    sizes.push_back(n);
  }
  auto evaluator = make_evaluator(ex.problem(), mode);
  const Matrix err = error_sweep(*evaluator, Z, sizes, params, reference, cfg.K);
  std::vector<double> curve;
  for (Index k = 0; k < err.rows(); k++)
  {
    curve.push_back(err.row(k).mean());
  }
  return curve;
}

double tail_mean(const std::vector<double> &v, int window)
{
  const std::size_t n = std::min<std::size_t>(v.size(), static_cast<std::size_t>(window));
  double s = 0.0;
  for (std::size_t i = v.size() - n; i < v.size(); i++)
  {
    s += v[i];
  }
  return s / static_cast<double>(n);
}

void convergence_study(Outcome &o)
{
  const RunConfig cfg;
  Experiment ex(cfg);
  const std::vector<double> params = random_parameters(cfg.eval_set_size, cfg.seed);
  const Matrix reference = reference_eigenvalues(ex.problem(), params, cfg.K);
  const auto mixed = error_curve(ex, GaugeMode::mixed, params, reference);
  const auto classical = error_curve(ex, GaugeMode::classical, params, reference);

  Index hit = 0;
  for (std::size_t k = 0; k < mixed.size() && static_cast<Index>(k) < max_basis; k++)
  {
    if (mixed[k] < error_target)
    {
      hit = static_cast<Index>(k + 1);
      break;
    }
  }
  o.require(hit > 0, "E_av never below 1e-8 for N_red <= 60");

  // Trailing average over the finite part of the curve.
  std::vector<double> finite;
  for (double e : mixed)
  {
    if (std::isfinite(e))
    {
      finite.push_back(e);
    }
  }
  std::vector<double> trailing;
  for (std::size_t k = trailing_window; k <= finite.size(); k++)
  {
    double s = 0.0;
    for (std::size_t i = k - trailing_window; i < k; i++)
    {
      s += finite[i];
    }
    trailing.push_back(s / trailing_window);
  }
  int violations = 0;
  for (std::size_t k = 1; k < trailing.size(); k++)
  {
    if (trailing[k] > trailing[k - 1] * (1.0 + trailing_slack) + trailing_floor)
    {
      violations++;
    }
  }
  o.require(violations == 0, std::to_string(violations) + " trailing-average increases");
  const double plateau_mixed = tail_mean(mixed, plateau_window);
  const double plateau_classical = tail_mean(classical, plateau_window);
  o.require(plateau_mixed <= plateau_classical, "mixed plateau above classical plateau");
  o.detail << "E_av < 1e-8 first at N_red = " << hit << ", N_red(mixed) = " << mixed.size()
           << ", N_red(classical) = " << classical.size() << ", plateau mixed "
           << sci(plateau_mixed) << " vs classical " << sci(plateau_classical);
}

void runtime_ratios(Outcome &o)
{
  const RunConfig cfg;
  Experiment ex(cfg);
  const BenchReport rep = run_bench(ex);
  o.require(rep.failures.empty(), "benchmark phases failed");
  for (const auto &name : bench_phase_names())
  {
    o.require(rep.phase(name) != nullptr, "missing phase row " + name);
  }
  const auto ratios = rep.to_json()["ratios"];
  auto value = [&](const char *key) {
    return ratios[key].is_number() ? ratios[key].get<double>() : 0.0;
  };
  const double evp = value("evp_full_over_rb");
  const double track = value("tracking_full_over_rb");
  const double build = value("construction_classical_over_mixed");
  o.require(evp >= evp_speedup, "EVP speedup below 20");
  o.require(track >= tracking_speedup, "tracking speedup below 5");
  o.require(build >= construction_slowdown, "classical construction less than 2x slower");
  o.detail << "median of " << rep.repetitions << ": EVP full/RB = " << evp
           << ", tracking full/RB = " << track << ", construction classical/mixed = " << build;
}

void tracking_integrity(Outcome &o)
{
  const RunConfig cfg;
  Experiment ex(cfg);
  const RbProblem &problem = ex.problem();
  const TrainingSets sets = make_training_sets(cfg.n_pod, cfg.n_train, cfg.seed);
  const PipelineResult res = build_basis(problem, GaugeMode::mixed, sets, pipeline_options(cfg));
  auto evaluator = make_evaluator(problem, GaugeMode::mixed);
  evaluator->set_basis(res.greedy.basis.Z);
  const TrackingOptions opts = tracking_options(cfg);
  const TrackingRun run = track_reduced(*evaluator, opts);
  o.require(run.min_correlation() >= correlation_min, "correlation below 0.9");
  o.require(run.permutation_valid(), "matching is not a permutation");

  double worst = 0.0;
  const Index last = run.lambda.rows() - 1;
  for (double t : {0.0, 1.0})
  {
    const EigenSolution direct = problem.solve_full(t, cfg.K + opts.guard);
    const Index row = t == 0.0 ? 0 : last;
    for (Index i = 0; i < run.lambda.cols(); i++)
    {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < direct.values.size(); j++)
      {
        best = std::min(best, std::abs(run.lambda(row, i) - direct.values[j]) / direct.values[j]);
      }
      worst = std::max(worst, best);
    }
  }
  o.require(worst <= endpoint_tol, "endpoint eigenvalues disagree with direct solves");

  RunConfig flat = cfg;
  flat.dims1 = flat.dims0;
  flat.bulge = 0.0;
  Experiment constant(flat);
  const TrackingRun still = track_full(constant.problem(), opts);
  auto ce = make_evaluator(constant.problem(), GaugeMode::mixed);
  ce->set_basis(res.greedy.basis.Z);
  const TrackingRun still_red = track_reduced(*ce, opts);
  o.require(still.stats.bisections == 0 && still_red.stats.bisections == 0,
            "constant morph bisected");
  o.detail << run.grid.size() << " grid points, " << run.stats.bisections
           << " bisections, min correlation " << run.min_correlation()
           << ", max endpoint deviation " << sci(worst) << ", constant-morph bisections "
           << still.stats.bisections + still_red.stats.bisections;
}

void determinism(Outcome &o)
{
  const auto root = std::filesystem::temp_directory_path() / "mrb_acceptance_determinism";
  std::filesystem::remove_all(root);
  std::ostringstream sink;
  std::map<std::string, std::string> first;
  for (const char *run : {"a", "b"})
  {
    RunConfig cfg;
    cfg.output = (root / run).string();
    cmd_build_basis(cfg, sink);
    for (const char *file : {"provenance.json", "convergence.csv"})
    {
      const std::string text = read_text(root / run / file);
      if (first.count(file))
      {
        o.require(first[file] == text, std::string(file) + " differs");
      }
      else
      {
        first[file] = text;
      }
    }
  }
  std::filesystem::remove_all(root);
  o.detail << "provenance.json (" << first["provenance.json"].size() << " bytes) and convergence.csv ("
           << first["convergence.csv"].size() << " bytes) compared byte by byte";
}

struct Criterion
{
  int id;
  const char *title;
  double limit_seconds;
  std::function<void(Outcome &)> check;
};

}  // namespace

int main(int argc, char **argv)
{
  const std::vector<Criterion> criteria{
    {1, "spurious-mode removal", 10, spurious_modes},
    {2, "gauge spectral equivalence", 5, gauge_equivalence},
    {3, "mixed/classical algebraic identity", 10, algebraic_identity},
    {4, "projection round-trip", 5, projection_roundtrip},
    {5, "FEM ground truth", 60, fem_ground_truth},
    {6, "RB convergence study", 600, convergence_study},
    {7, "runtime ratios", 900, runtime_ratios},
    {8, "tracking integrity", 120, tracking_integrity},
    {9, "determinism", 600, determinism},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; i++)
  {
    selected.push_back(std::atoi(argv[i]));
  }
  int failed = 0;
  for (const auto &c : criteria)
  {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end())
    {
      continue;
    }
    Outcome o;
    Stopwatch watch;
    try
    {
      c.check(o);
    }
    catch (const std::exception &e)
    {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    const double seconds = watch.seconds();
    if (seconds > c.limit_seconds)
    {
      o.pass = false;
      o.detail << " [over the " << c.limit_seconds << " s limit]";
    }
    std::printf("criterion %d: %s  %s: %s (%.2f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.title,
                o.detail.str().c_str(), seconds);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
