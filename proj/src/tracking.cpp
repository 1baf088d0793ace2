// SPDX-License-Identifier: Apache-2.0

#include "mrb/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <Eigen/SVD>
#include "mrb/error.hpp"
#include "mrb/instrument.hpp"

namespace mrb
{

std::string to_string(Matching matching)
{
  return matching == Matching::optimal ? "optimal" : "greedy";
}

Matching parse_matching(const std::string &text)
{
  if (text == "greedy")
  {
    return Matching::greedy;
  }
  if (text == "optimal")
  {
    return Matching::optimal;
  }
  throw UsageError("unknown matching '" + text + "' (expected greedy or optimal)");
}

bool TrackingRun::permutation_valid() const
{
  for (const auto &row : mode_of)
  {
    std::vector<bool> seen(static_cast<std::size_t>(K), false);
    for (int j : row)
    {
      if (j < 0 || j >= K || seen[static_cast<std::size_t>(j)])
      {
        return false;
      }
      seen[static_cast<std::size_t>(j)] = true;
    }
  }
  return true;
}

double TrackingRun::min_correlation() const
{
  return correlation.size() == 0 ? 1.0 : correlation.minCoeff();
}

std::string TrackingRun::csv() const
{
  std::ostringstream out;
  out << "t";
  for (int m = 1; m <= K; m++)
  {
    out << ",lambda_" << m;
  }
  for (int m = 1; m <= K; m++)
  {
    out << ",corr_" << m;
  }
  out << '\n' << std::setprecision(17);
  for (std::size_t r = 0; r < grid.size(); r++)
  {
    out << grid[r];
    for (int m = 0; m < K; m++)
    {
      out << ',' << lambda(static_cast<Index>(r), m);
    }
    for (int m = 0; m < K; m++)
    {
      out << ',' << correlation(static_cast<Index>(r), m);
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json TrackingRun::metadata() const
{
  return {{"K", K},
          {"threshold", threshold},
          {"grid_points", grid.size()},
          {"bisections", stats.bisections},
          {"min_step", stats.min_step},
          {"total_seconds", stats.total_seconds},
          {"min_correlation", min_correlation()},
          {"permutation_valid", permutation_valid()},
          {"mode_of", mode_of}};
}

namespace
{

// Maximum-weight assignment of every row to a distinct column (rows <= columns) by the
// Hungarian method on the cost 1 - weight.
std::vector<int> optimal_assignment(const Matrix &weight)
{
  const int n = static_cast<int>(weight.rows());
  const int m = static_cast<int>(weight.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; i++)
  {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do
    {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; j++)
      {
        if (!used[j])
        {
          const double cur = (1.0 - weight(i0 - 1, j - 1)) - u[i0] - v[j];
          if (cur < minv[j])
          {
            minv[j] = cur;
            way[j] = j0;
          }
          if (minv[j] < delta)
          {
            delta = minv[j];
            j1 = j;
          }
        }
      }
      for (int j = 0; j <= m; j++)
      {
        if (used[j])
        {
          u[p[j]] += delta;
          v[j] -= delta;
        }
        else
        {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do
    {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; j++)
  {
    if (p[j] != 0)
    {
      row_to_col[static_cast<std::size_t>(p[j] - 1)] = j - 1;
    }
  }
  return row_to_col;
}

// Greedy assignment by descending weight; ties go to the smaller row, then column.
std::vector<int> greedy_assignment(const Matrix &weight)
{
  struct Entry
  {
    double w;
    int i, j;
  };
  std::vector<Entry> entries;
  for (int i = 0; i < weight.rows(); i++)
  {
    for (int j = 0; j < weight.cols(); j++)
    {
      entries.push_back({weight(i, j), i, j});
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry &a, const Entry &b) { return a.w > b.w; });
  std::vector<int> row_to_col(static_cast<std::size_t>(weight.rows()), -1);
  std::vector<bool> taken(static_cast<std::size_t>(weight.cols()), false);
  for (const auto &e : entries)
  {
    if (row_to_col[e.i] < 0 && !taken[e.j])
    {
      row_to_col[e.i] = e.j;
      taken[e.j] = true;
    }
  }
  return row_to_col;
}

// Groups of indices whose values agree to the relative tolerance (single linkage in
// sorted order).
std::vector<std::vector<Index>> clusters(const Vector &values, double tol)
{
  std::vector<std::vector<Index>> out;
  if (values.size() == 0)
  {
    return out;
  }
  std::vector<Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return values[a] < values[b]; });
  const double scale = values.cwiseAbs().maxCoeff();
  std::vector<Index> group{order[0]};
  for (std::size_t k = 1; k < order.size(); k++)
  {
    if (std::abs(values[order[k]] - values[order[k - 1]]) <= tol * scale)
    {
      group.push_back(order[k]);
    }
    else
    {
      if (group.size() > 1)
      {
        out.push_back(group);
      }
      group = {order[k]};
    }
  }
  if (group.size() > 1)
  {
    out.push_back(group);
  }
  return out;
}

Matrix select_columns(const Matrix &M, const std::vector<Index> &idx)
{
  Matrix out(M.rows(), static_cast<Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); c++)
  {
    out.col(static_cast<Index>(c)) = M.col(idx[c]);
  }
  return out;
}

// Indices of the `count` largest entries of `scores`, ascending.
std::vector<Index> largest(const Vector &scores, Index count)
{
  std::vector<Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores[a] > scores[b]; });
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());
  return order;
}

// Orthogonal Q maximizing trace(Q^T C) (the polar factor of C).
Matrix polar_factor(const Matrix &C)
{
  Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

struct Tracked
{
  double t = 0.0;
  Vector values;
  Matrix vectors;  // one column per tracked mode
  std::function<Matrix(const Matrix &)> apply_mass;
};

struct StepMatch
{
  std::vector<int> assignment;
  Vector correlation;
  Matrix dest_vectors;  // candidates after cluster alignment
};

StepMatch match_step(Tracked &cur, const SpectrumPoint &dest, const TrackingOptions &opts,
                     bool first_step)
{
  const Index K = cur.vectors.cols();
  Matrix W = dest.vectors;
  const Matrix incoming = cur.vectors;

  // Any basis of a degenerate eigenspace is valid; rotate clustered bases onto each other
  // before comparing, first on the tracked side, then on the candidate side.
  for (const auto &group : clusters(cur.values, opts.cluster_tol))
  {
    const Matrix VS = select_columns(cur.vectors, group);
    const Matrix C = cur.apply_mass(VS).transpose() * W;
    const auto cols = largest(C.colwise().norm().transpose(), static_cast<Index>(group.size()));
    const Matrix Q = polar_factor(select_columns(C, cols));
    const Matrix rotated = VS * Q;
    for (std::size_t c = 0; c < group.size(); c++)
    {
      cur.vectors.col(group[c]) = rotated.col(static_cast<Index>(c));
    }
  }
  const Matrix BV = cur.apply_mass(cur.vectors);
  for (const auto &group : clusters(dest.values, opts.cluster_tol))
  {
    const Matrix WS = select_columns(W, group);
    const Matrix C = BV.transpose() * WS;
    const auto rows = largest(C.rowwise().norm(), static_cast<Index>(group.size()));
    Matrix CR(static_cast<Index>(rows.size()), C.cols());
    for (std::size_t r = 0; r < rows.size(); r++)
    {
      CR.row(static_cast<Index>(r)) = C.row(rows[r]);
    }
    const Matrix Q = polar_factor(CR.transpose());
    const Matrix rotated = WS * Q;
    for (std::size_t c = 0; c < group.size(); c++)
    {
      W.col(group[c]) = rotated.col(static_cast<Index>(c));
    }
  }

  const Matrix BW = cur.apply_mass(W);
  const Vector nv = (cur.vectors.cwiseProduct(BV)).colwise().sum().cwiseSqrt().transpose();
  const Vector nw = (W.cwiseProduct(BW)).colwise().sum().cwiseSqrt().transpose();
  Matrix corr = (BV.transpose() * W).cwiseAbs();
  for (Index i = 0; i < corr.rows(); i++)
  {
    for (Index j = 0; j < corr.cols(); j++)
    {
      corr(i, j) /= nv[i] * nw[j];
    }
  }
  StepMatch out;
  out.assignment =
      opts.matching == Matching::optimal ? optimal_assignment(corr) : greedy_assignment(corr);
  out.correlation.resize(K);
  for (Index i = 0; i < K; i++)
  {
    out.correlation[i] = corr(i, out.assignment[static_cast<std::size_t>(i)]);
  }
  // Aligning a tracked cluster may permute it. Starting labels inside a degenerate cluster
  // are arbitrary and go out in ascending order of the destination eigenvalue so every
  // eigenpair source labels alike; later labels follow the overlap of the incoming vectors.
  const Matrix overlap = (cur.apply_mass(incoming).transpose() * W).cwiseAbs();
  for (auto group : clusters(cur.values, opts.cluster_tol))
  {
    std::sort(group.begin(), group.end());
    std::vector<std::size_t> held(group.size());
    std::iota(held.begin(), held.end(), std::size_t(0));
    auto target = [&](std::size_t c) {
      return out.assignment[static_cast<std::size_t>(group[c])];
    };
    if (first_step)
    {
      std::sort(held.begin(), held.end(), [&](std::size_t x, std::size_t y) {
        const double vx = dest.values[target(x)], vy = dest.values[target(y)];
        return vx != vy ? vx < vy : target(x) < target(y);
      });
    }
    else
    {
      std::vector<std::size_t> order = held;
      double best = -1.0;
      int budget = 40320;
      do
      {
        double score = 0.0;
        for (std::size_t c = 0; c < group.size(); c++)
        {
          score += overlap(group[c], target(order[c]));
        }
        if (score > best * (1.0 + 1e-12))
        {
          best = score;
          held = order;
        }
      } while (--budget > 0 && std::next_permutation(order.begin(), order.end()));
    }
    std::vector<int> assignment(group.size());
    std::vector<double> correlation(group.size());
    for (std::size_t c = 0; c < group.size(); c++)
    {
      assignment[c] = target(held[c]);
      correlation[c] = out.correlation[group[held[c]]];
    }
    for (std::size_t c = 0; c < group.size(); c++)
    {
      out.assignment[static_cast<std::size_t>(group[c])] = assignment[c];
      out.correlation[group[c]] = correlation[c];
    }
  }
  out.dest_vectors = std::move(W);
  return out;
}

class Tracker
{
public:
  Tracker(const SpectrumSource &source, const TrackingOptions &opts)
    : source_(source), opts_(opts)
  {
  }

  TrackingRun run()
  {
    Stopwatch total;
    run_.K = opts_.K;
    run_.threshold = opts_.threshold;
    run_.stats.min_step = 1.0;
    Stopwatch step;
    const SpectrumPoint &start = point(0.0);
    cur_.t = 0.0;
    cur_.values = start.values.head(opts_.K);
    cur_.vectors = start.vectors.leftCols(opts_.K);
    cur_.apply_mass = start.apply_mass;
    std::vector<int> identity(static_cast<std::size_t>(opts_.K));
    std::iota(identity.begin(), identity.end(), 0);
    rows_lambda_.push_back(cur_.values);
    rows_corr_.push_back(Vector::Ones(opts_.K));
    run_.grid.push_back(0.0);
    run_.mode_of.push_back(identity);
    run_.stats.step_seconds.push_back(step.seconds());
    for (int k = 0; k < opts_.initial_steps; k++)
    {
      const double a = static_cast<double>(k) / opts_.initial_steps;
      const double b = k + 1 == opts_.initial_steps
                           ? 1.0
                           : static_cast<double>(k + 1) / opts_.initial_steps;
      advance(a, b, 0);
    }
    run_.lambda.resize(static_cast<Index>(rows_lambda_.size()), opts_.K);
    run_.correlation.resize(static_cast<Index>(rows_corr_.size()), opts_.K);
    for (std::size_t r = 0; r < rows_lambda_.size(); r++)
    {
      run_.lambda.row(static_cast<Index>(r)) = rows_lambda_[r].transpose();
      run_.correlation.row(static_cast<Index>(r)) = rows_corr_[r].transpose();
    }
    run_.stats.total_seconds = total.seconds();
    return run_;
  }

private:
  const SpectrumPoint &point(double t)
  {
    auto it = cache_.find(t);
    if (it == cache_.end())
    {
      const int count = opts_.K + opts_.guard;
      SpectrumPoint p = source_(t, count);
      if (p.values.size() < opts_.K)
      {
        throw ConvergenceError("eigenpair source returned fewer than K modes");
      }
      it = cache_.emplace(t, std::move(p)).first;
    }
    return it->second;
  }

  void advance(double a, double b, int depth)
  {
    Stopwatch step;
    const SpectrumPoint &dest = point(b);
    Tracked trial = cur_;
    StepMatch m = match_step(trial, dest, opts_, run_.grid.size() == 1);
    const double worst = m.correlation.minCoeff();
    if (worst < opts_.threshold)
    {
      if (depth >= opts_.max_depth)
      {
        std::ostringstream msg;
        msg << "mode tracking failed on [" << a << ", " << b << "]: correlation " << worst
            << " below threshold " << opts_.threshold << " after " << depth << " bisections";
        throw TrackingError(msg.str(), a, b);
      }
      run_.stats.bisections++;
      const double mid = 0.5 * (a + b);
      advance(a, mid, depth + 1);
      advance(mid, b, depth + 1);
      return;
    }
    cur_.t = b;
    cur_.apply_mass = dest.apply_mass;
    std::vector<int> mode_of(static_cast<std::size_t>(opts_.K));
    Vector lambda(opts_.K);
    for (int i = 0; i < opts_.K; i++)
    {
      const int j = m.assignment[static_cast<std::size_t>(i)];
      mode_of[static_cast<std::size_t>(i)] = j;
      lambda[i] = dest.values[j];
      cur_.vectors.col(i) = m.dest_vectors.col(j);
    }
    cur_.values = lambda;
    rows_lambda_.push_back(lambda);
    rows_corr_.push_back(m.correlation);
    run_.grid.push_back(b);
    run_.mode_of.push_back(std::move(mode_of));
    run_.stats.min_step = std::min(run_.stats.min_step, b - a);
    run_.stats.step_seconds.push_back(step.seconds());
  }

  const SpectrumSource &source_;
  TrackingOptions opts_;
  std::map<double, SpectrumPoint> cache_;
  Tracked cur_;
  TrackingRun run_;
  std::vector<Vector> rows_lambda_, rows_corr_;
};

void validate(const TrackingOptions &opts)
{
  if (opts.K < 1)
  {
    throw UsageError("tracking needs K >= 1");
  }
  if (!(opts.threshold >= 0.0 && opts.threshold < 1.0))
  {
    throw UsageError("tracking threshold must lie in [0, 1)");
  }
  if (opts.initial_steps < 2)
  {
    throw UsageError("tracking needs at least 2 initial steps");
  }
  if (opts.max_depth < 0 || opts.guard < 0)
  {
    throw UsageError("max_depth and guard must be non-negative");
  }
}

}  // namespace

TrackingRun track(const SpectrumSource &source, const TrackingOptions &opts)
{
  validate(opts);
  Tracker tracker(source, opts);
  return tracker.run();
}

TrackingRun track_reduced(ReducedEvaluator &evaluator, const TrackingOptions &opts)
{
  const SpectrumSource source = [&evaluator](double t, int count) {
    auto red = std::make_shared<ReducedSystem>(evaluator.reduce(t));
    EigenSolution eig = solve_dense_gevp(red->A_tilde, red->B_tilde, count);
    SpectrumPoint p;
    p.t = t;
    p.values = std::move(eig.values);
    p.vectors = std::move(eig.vectors);
    p.apply_mass = [red](const Matrix &X) -> Matrix { return red->B_tilde * X; };
    return p;
  };
  return track(source, opts);
}

TrackingRun track_full(const RbProblem &problem, const TrackingOptions &opts)
{
  const SpectrumSource source = [&problem](double t, int count) {
    auto sys = std::make_shared<SystemPair>(problem.system_at(t));
    EigenSolution eig = solve_sparse_gevp(sys->A, sys->B, count, problem.eigen_options());
    SpectrumPoint p;
    p.t = t;
    p.values = std::move(eig.values);
    p.vectors = std::move(eig.vectors);
    p.apply_mass = [sys](const Matrix &X) -> Matrix { return sys->B * X; };
    return p;
  };
  return track(source, opts);
}

}  // namespace mrb
