// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <cmath>
#include <numbers>
#include "mrb/tracking.hpp"
#include "support.hpp"

using namespace mrb;

namespace
{

// Diagonal family whose eigenvalues 1 + t and 2 - t cross at t = 0.5. The eigenvector
// of the first mode rotates towards the untracked fourth axis, so a fast rotation defeats
// coarse steps.
SpectrumSource crossing(double turns)
{
  return [turns](double t, int count) {
    const double theta = turns * std::numbers::pi * t;
    Matrix Q = Matrix::Identity(4, 4);
    Q(0, 0) = std::cos(theta);
    Q(3, 0) = std::sin(theta);
    Q(0, 3) = -std::sin(theta);
    Q(3, 3) = std::cos(theta);
    std::vector<std::pair<double, Index>> ev{{1 + t, 0}, {2 - t, 1}, {3.0, 2}, {4.0, 3}};
    std::stable_sort(ev.begin(), ev.end());
    SpectrumPoint p;
    p.t = t;
    p.values.resize(count);
    p.vectors.resize(4, count);
    for (int i = 0; i < count; i++)
    {
      p.values[i] = ev[static_cast<std::size_t>(i)].first;
      p.vectors.col(i) = Q.col(ev[static_cast<std::size_t>(i)].second);
    }
    p.apply_mass = [](const Matrix &X) { return X; };
    return p;
  };
}

SpectrumSource constant()
{
  return [](double t, int count) {
    SpectrumPoint p;
    p.t = t;
    p.values = Vector::LinSpaced(count, 1.0, static_cast<double>(count));
    p.vectors = Matrix::Identity(6, count);
    p.apply_mass = [](const Matrix &X) { return X; };
    return p;
  };
}

}  // namespace

TEST_CASE("crossing eigenvalues keep their identity")
{
  TrackingOptions opts;
  opts.K = 2;
  opts.initial_steps = 4;
  const TrackingRun run = track(crossing(0.0), opts);
  CHECK(run.grid.front() == 0.0);
  CHECK(run.grid.back() == 1.0);
  CHECK(std::is_sorted(run.grid.begin(), run.grid.end()));
  CHECK(run.permutation_valid());
  CHECK(run.min_correlation() >= opts.threshold);
  for (std::size_t r = 0; r < run.grid.size(); r++)
  {
    const double t = run.grid[r];
    CHECK(run.lambda(static_cast<Index>(r), 0) == doctest::Approx(1 + t));
    CHECK(run.lambda(static_cast<Index>(r), 1) == doctest::Approx(2 - t));
  }
}

TEST_CASE("fast eigenvector rotation triggers bisection")
{
  TrackingOptions opts;
  opts.K = 2;
  opts.initial_steps = 2;
  const TrackingRun run = track(crossing(0.5), opts);
  CHECK(run.stats.bisections > 0);
  CHECK(run.min_correlation() >= opts.threshold);
  for (std::size_t r = 1; r < run.grid.size(); r++)
  {
    CHECK(run.grid[r] > run.grid[r - 1]);
  }
  opts.max_depth = 0;
  CHECK_THROWS_AS(track(crossing(0.5), opts), TrackingError);
}

TEST_CASE("threshold zero is a single pass")
{
  TrackingOptions opts;
  opts.K = 2;
  opts.initial_steps = 3;
  opts.threshold = 0.0;
  const TrackingRun run = track(crossing(0.5), opts);
  CHECK(run.stats.bisections == 0);
  CHECK(run.grid.size() == 4);
}

TEST_CASE("constant family")
{
  TrackingOptions opts;
  opts.K = 3;
  const TrackingRun run = track(constant(), opts);
  CHECK(run.stats.bisections == 0);
  CHECK(run.grid.size() == static_cast<std::size_t>(opts.initial_steps + 1));
  CHECK(run.correlation.minCoeff() == doctest::Approx(1.0));
  for (Index r = 1; r < run.lambda.rows(); r++)
  {
    CHECK(run.lambda.row(r) == run.lambda.row(0));
  }
  const std::string csv = run.csv();
  CHECK(csv.rfind("t,lambda_1,lambda_2,lambda_3,corr_1,corr_2,corr_3\n", 0) == 0);
  CHECK(run.metadata()["bisections"] == 0);
}

TEST_CASE("optimal and greedy matching agree on well-separated problems")
{
  TrackingOptions opts;
  opts.K = 2;
  opts.matching = Matching::optimal;
  const TrackingRun a = track(crossing(0.1), opts);
  opts.matching = Matching::greedy;
  const TrackingRun b = track(crossing(0.1), opts);
  CHECK(a.mode_of == b.mode_of);
  CHECK(parse_matching("optimal") == Matching::optimal);
  CHECK_THROWS_AS(parse_matching("best"), UsageError);
}

TEST_CASE("full and reduced tracking on the morph")
{
  RunConfig cfg = test::small_config(3);
  cfg.tol = 1e-12;
  Experiment ex(cfg);
  const TrainingSets sets = make_training_sets(cfg.n_pod, cfg.n_train, cfg.seed);
  const PipelineResult res = build_basis(ex.problem(), GaugeMode::mixed, sets, pipeline_options(cfg));
  auto evaluator = make_evaluator(ex.problem(), GaugeMode::mixed);
  evaluator->set_basis(res.greedy.basis.Z);
  const TrackingOptions opts = tracking_options(cfg);
  const TrackingRun red = track_reduced(*evaluator, opts);
  const TrackingRun full = track_full(ex.problem(), opts);
  CHECK(red.permutation_valid());
  CHECK(full.permutation_valid());
  CHECK(red.min_correlation() >= 0.9);
  for (Index i = 0; i < cfg.K; i++)
  {
    CHECK(test::rel_diff(red.lambda(0, i), full.lambda(0, i)) <= 1e-6);
    CHECK(test::rel_diff(red.lambda(red.lambda.rows() - 1, i),
                         full.lambda(full.lambda.rows() - 1, i)) <= 1e-6);
  }
}

TEST_CASE("identical endpoints give constant trajectories")
{
  RunConfig cfg = test::small_config(3);
  cfg.dims1 = cfg.dims0;
  cfg.bulge = 0.0;
  Experiment ex(cfg);
  const TrackingRun run = track_full(ex.problem(), tracking_options(cfg));
  CHECK(run.stats.bisections == 0);
  for (Index r = 1; r < run.lambda.rows(); r++)
  {
    CHECK((run.lambda.row(r) - run.lambda.row(0)).norm() <= 1e-10 * run.lambda.row(0).norm());
  }
}
