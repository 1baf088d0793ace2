// SPDX-License-Identifier: Apache-2.0

#include "mrb/rb.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <Eigen/SVD>
#include "mrb/error.hpp"

namespace mrb
{

std::string to_string(GaugeMode mode)
{
  return mode == GaugeMode::classical ? "classical" : "mixed";
}

GaugeMode parse_gauge_mode(const std::string &text)
{
  if (text == "classical")
  {
    return GaugeMode::classical;
  }
  if (text == "mixed")
  {
    return GaugeMode::mixed;
  }
  throw UsageError("unknown gauge mode '" + text + "' (expected classical or mixed)");
}

RbProblem::RbProblem(ParametrizedSystem system, GaugeDecomposition gauge,
                     SparseEigenOptions eigen, bool freeze_cotree_operator)
  : system_(std::move(system)), gauge_(std::move(gauge)), eigen_(eigen),
    freeze_(freeze_cotree_operator)
{
  if (gauge_.num_dofs != system_.size())
  {
    throw UsageError("gauge decomposition does not match the system size");
  }
  if (freeze_)
  {
    H0_ = cotree_operator(system_.endpoint0(), gauge_);
  }
}

CotreeTransform RbProblem::transform_at(double t) const
{
  return CotreeTransform(system_at(t), gauge_, freeze_ ? &H0_ : nullptr);
}

EigenSolution RbProblem::solve_full(double t, int K) const
{
  const SystemPair sys = system_at(t);
  return solve_sparse_gevp(sys.A, sys.B, K, eigen_);
}

ReducedBasis ReducedBasis::prefix(Index n) const
{
  if (n < 0 || n > size())
  {
    throw UsageError("basis prefix larger than the basis");
  }
  ReducedBasis out;
  out.Z = Z.leftCols(n);
  out.provenance.assign(provenance.begin(), provenance.begin() + n);
  out.gauge_mode = gauge_mode;
  return out;
}

nlohmann::json ReducedBasis::provenance_json() const
{
  nlohmann::json cols = nlohmann::json::array();
  for (const auto &c : provenance)
  {
    nlohmann::json j;
    j["origin"] = c.origin == BasisColumn::Origin::pod ? "pod" : "greedy";
    j["t"] = c.t ? nlohmann::json(*c.t) : nlohmann::json(nullptr);
    j["mode"] = c.mode ? nlohmann::json(*c.mode) : nlohmann::json(nullptr);
    j["value"] = c.value;
    cols.push_back(j);
  }
  return {{"gauge_mode", to_string(gauge_mode)},
          {"rows", Z.rows()},
          {"n_red", Z.cols()},
          {"columns", cols}};
}

TrainingSets make_training_sets(int n_pod, int n_train, std::uint64_t seed)
{
  if (n_pod < 1 || n_train < 1)
  {
    throw UsageError("training set sizes must be positive");
  }
  TrainingSets sets;
  sets.seed = seed;
  for (int i = 0; i < n_pod; i++)
  {
    sets.pod_set.push_back(n_pod == 1 ? 0.0 : static_cast<double>(i) / (n_pod - 1));
  }
  for (int i = 0; i < n_train; i++)
  {
    sets.greedy_set.push_back((i + 0.5) / n_train);
  }
  return sets;
}

std::vector<double> random_parameters(int count, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(std::max(count, 0)));
  for (auto &t : out)
  {
    t = dist(rng);
  }
  return out;
}

namespace
{

void normalize_columns(Matrix &Y)
{
  for (Index j = 0; j < Y.cols(); j++)
  {
    const double nrm = Y.col(j).norm();
    if (nrm > 0.0)
    {
      Y.col(j) /= nrm;
    }
  }
}

Matrix symmetric_part(const Matrix &M) { return 0.5 * (M + M.transpose()); }


// A X for symmetric A, streaming contiguous rows of X: row j of A X gathers the rows of X
// selected by column j of A.
void symmetric_times(const SparseMatrix &A, const RowMatrix &X, RowMatrix &Y)
{
  Y.setZero(X.rows(), X.cols());
  for (Index j = 0; j < A.outerSize(); j++)
  {
    for (SparseMatrix::InnerIterator it(A, j); it; ++it)
    {
      Y.row(j) += it.value() * X.row(it.row());
    }
  }
}

// X^T Y for a product known to be symmetric; only the lower triangle is computed.
Matrix symmetric_gram(const RowMatrix &X, const RowMatrix &Y)
{
  Matrix G(X.cols(), X.cols());
  G.triangularView<Eigen::Lower>() = X.transpose() * Y;
  G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
  return G;
}

// Orthogonalize v against the orthonormal columns of Z by modified Gram-Schmidt with one
// re-orthogonalization pass.
double orthogonalize(const Matrix &Z, Vector &v)
{
  for (int pass = 0; pass < 2; pass++)
  {
    for (Index j = 0; j < Z.cols(); j++)
    {
      v -= Z.col(j).dot(v) * Z.col(j);
    }
  }
  return v.norm();
}

}  // namespace

Snapshots collect_snapshots(const RbProblem &problem, const std::vector<double> &pod_set,
                            int K, StorageMeter *meter)
{
  if (K < 1)
  {
    throw UsageError("snapshot collection needs K >= 1");
  }
  Snapshots snap;
  const Index nc = problem.cotree_size();
  StorageMeter::Lease lease(meter, static_cast<std::int64_t>(nc) * K * pod_set.size());
  snap.Y.resize(nc, static_cast<Index>(pod_set.size()) * K);
  for (std::size_t s = 0; s < pod_set.size(); s++)
  {
    const double t = pod_set[s];
    const EigenSolution sol = problem.solve_full(t, K);
    const CotreeTransform transform = problem.transform_at(t);
    CotreeProjection proj;
    try
    {
      proj = transform.project(sol.vectors);
    }
    catch (const ProjectionError &e)
    {
      throw ProjectionError("snapshot at t=" + std::to_string(t) + ": " + e.what(),
                            e.residual());
    }
    snap.Y.middleCols(static_cast<Index>(s) * K, K) = proj.v_hat;
    for (int i = 0; i < K; i++)
    {
      snap.origin.emplace_back(t, i);
    }
  }
  normalize_columns(snap.Y);
  return snap;
}

Snapshots collect_snapshots_classical(const RbProblem &problem,
                                      const std::vector<double> &pod_set, int K,
                                      StorageMeter *meter)
{
  if (K < 1)
  {
    throw UsageError("snapshot collection needs K >= 1");
  }
  Snapshots snap;
  const Index nc = problem.cotree_size();
  StorageMeter::Lease lease(meter, static_cast<std::int64_t>(nc) * K * pod_set.size());
  snap.Y.resize(nc, static_cast<Index>(pod_set.size()) * K);
  for (std::size_t s = 0; s < pod_set.size(); s++)
  {
    const double t = pod_set[s];
    const CotreeSystem cotree = build_cotree_system(problem.transform_at(t), meter);
    StorageMeter::Lease work(meter, 2 * static_cast<std::int64_t>(nc) * nc);
    const EigenSolution sol = solve_dense_gevp(cotree.A_hat, cotree.B_hat, K);
    if (sol.size() < K)
    {
      throw ConvergenceError("cotree system has fewer than K eigenpairs");
    }
    snap.Y.middleCols(static_cast<Index>(s) * K, K) = sol.vectors;
    for (int i = 0; i < K; i++)
    {
      snap.origin.emplace_back(t, i);
    }
  }
  normalize_columns(snap.Y);
  return snap;
}

ReducedBasis pod_init(const Matrix &Y, Index n_init, GaugeMode mode)
{
  if (n_init < 1 || n_init > Y.cols() || n_init > Y.rows())
  {
    throw UsageError("N_init must be between 1 and the number of snapshots");
  }
  Eigen::BDCSVD<Matrix> svd(Y, Eigen::ComputeThinU);
  const Vector &sigma = svd.singularValues();
  if (!(sigma[0] > 0.0) || sigma[n_init - 1] / sigma[0] < 1.0e-13)
  {
    throw UsageError("N_init = " + std::to_string(n_init) +
                     " exceeds the numerical rank of the snapshot matrix; lower N_init");
  }
  ReducedBasis basis;
  basis.gauge_mode = mode;
  basis.Z = svd.matrixU().leftCols(n_init);
  for (Index i = 0; i < n_init; i++)
  {
    basis.provenance.push_back({BasisColumn::Origin::pod, std::nullopt, std::nullopt,
                                sigma[i]});
  }
  return basis;
}

Matrix MixedEvaluation::B_tilde_direct(const SparseMatrix &B) const
{
  return symmetric_part(Zhat.transpose() * (B * Zhat));
}

MixedEvaluation evaluate_mixed(const CotreeTransform &transform, const Matrix &Z,
                               StorageMeter *meter)
{
  if (Z.rows() != transform.H().rows())
  {
    throw UsageError("basis rows do not match the cotree dimension");
  }
  MixedEvaluation ev;
  const Index n = static_cast<Index>(transform.H().cols());
  StorageMeter::Lease lease(meter, 3 * static_cast<std::int64_t>(n) * Z.cols());
  if (Z.cols() == 0)
  {
    ev.Zhat.resize(n, 0);
    ev.HtZ.resize(n, 0);
    ev.AZhat.resize(n, 0);
    ev.reduced.A_tilde.resize(0, 0);
    ev.reduced.B_tilde.resize(0, 0);
    return ev;
  }
  ev.HtZ = transform.H().transpose() * Z;
  ev.Zhat = ev.HtZ;
  transform.mass_factor().solve_in_place(ev.Zhat);
  ev.AZhat = transform.A() * ev.Zhat;
  ev.reduced.A_tilde = symmetric_part(ev.Zhat.transpose() * ev.AZhat);
  ev.reduced.B_tilde = symmetric_part(ev.Zhat.transpose() * ev.HtZ);
  return ev;
}

ReducedSystem reduced_matrices_mixed(const RbProblem &problem, const Matrix &Z, double t)
{
  return evaluate_mixed(problem.transform_at(t), Z).reduced;
}

ReducedSystem reduced_matrices_classical(const CotreeSystem &cotree, const Matrix &Z)
{
  if (Z.rows() != cotree.A_hat.rows())
  {
    throw UsageError("basis rows do not match the cotree dimension");
  }
  ReducedSystem red;
  red.A_tilde = symmetric_part(Z.transpose() * cotree.A_hat * Z);
  red.B_tilde = symmetric_part(Z.transpose() * cotree.B_hat * Z);
  return red;
}

std::vector<double> residuum(const MixedEvaluation &eval, const EigenSolution &reduced,
                             int count)
{
  count = std::min<int>(count, reduced.size());
  std::vector<double> res(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; i++)
  {
    const Vector &v = reduced.vectors.col(i);
    res[i] = (eval.AZhat * v - reduced.values[i] * (eval.HtZ * v)).norm();
  }
  return res;
}

std::vector<double> residuum_classical(const CotreeSystem &cotree, const Matrix &Z,
                                       const EigenSolution &reduced, int count)
{
  count = std::min<int>(count, reduced.size());
  std::vector<double> res(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; i++)
  {
    const Vector u = Z * reduced.vectors.col(i);
    res[i] = (cotree.A_hat * u - reduced.values[i] * (cotree.B_hat * u)).norm();
  }
  return res;
}

std::vector<EstimatorRow> error_estimator(double t, const Vector &reduced_values,
                                          const std::vector<double> &residuals, int K)
{
  const int count = std::min<int>({K, static_cast<int>(residuals.size()),
                                   static_cast<int>(reduced_values.size())});
  std::vector<EstimatorRow> rows;
  if (count <= 0)
  {
    return rows;
  }
  const int neighbours = std::min<int>(K + 1, static_cast<int>(reduced_values.size()));
  const double floor = 1.0e-8 * std::abs(reduced_values[count - 1]);
  for (int i = 0; i < count; i++)
  {
    EstimatorRow row;
    row.t = t;
    row.mode = i;
    row.lambda = reduced_values[i];
    row.residual = residuals[i];
    double gap = std::numeric_limits<double>::infinity();
    for (int j = 0; j < neighbours; j++)
    {
      if (j != i)
      {
        gap = std::min(gap, std::abs(reduced_values[j] - reduced_values[i]));
      }
    }
    // A lone reduced eigenvalue has no neighbour; measure against its own magnitude.
    if (!std::isfinite(gap))
    {
      gap = std::abs(row.lambda);
    }
    row.gap = std::max(gap, floor);
    const double scale = std::abs(row.lambda) * row.gap;
    row.eta = scale > 0.0 ? row.residual * row.residual / scale
                          : std::numeric_limits<double>::infinity();
    rows.push_back(row);
  }
  return rows;
}

MixedReducer::MixedReducer(const RbProblem &problem, Matrix Z, StorageMeter *meter)
  : problem_(problem), Z_(std::move(Z)),
    lease_(meter, 5 * static_cast<std::int64_t>(problem.num_dofs()) * Z_.cols())
{
  if (Z_.rows() != problem_.cotree_size())
  {
    throw UsageError("basis rows do not match the cotree dimension");
  }
  if (problem_.frozen_cotree_operator())
  {
    HtZ0_ = problem_.transform_at(0.0).H().transpose() * Z_;
  }
  else
  {
    HtZ0_ = cotree_operator(problem_.system().endpoint0(), problem_.gauge()).transpose() * Z_;
    HtZ1_ = cotree_operator(problem_.system().endpoint1(), problem_.gauge()).transpose() * Z_;
  }
}

const MixedEvaluation &MixedReducer::evaluate(double t)
{
  if (t_ && *t_ == t)
  {
    return eval_;
  }
  t_.reset();
  const SystemPair sys = problem_.system_at(t);
  if (problem_.frozen_cotree_operator())
  {
    eval_.HtZ = HtZ0_;
  }
  else
  {
    eval_.HtZ = (1.0 - t) * HtZ0_ + t * HtZ1_;
  }
  if (Z_.cols() == 0)
  {
    eval_.Zhat.resize(sys.size(), 0);
    eval_.AZhat.resize(sys.size(), 0);
    eval_.reduced.A_tilde.resize(0, 0);
    eval_.reduced.B_tilde.resize(0, 0);
  }
  else
  {
    factor_.factorize(sys.B);
    eval_.Zhat = eval_.HtZ;
    factor_.solve_in_place(eval_.Zhat);
    symmetric_times(sys.A, eval_.Zhat, eval_.AZhat);
    eval_.reduced.A_tilde = symmetric_gram(eval_.Zhat, eval_.AZhat);
    eval_.reduced.B_tilde = symmetric_gram(eval_.Zhat, eval_.HtZ);
  }
  t_ = t;
  return eval_;
}

namespace
{

class MixedEvaluator final : public ReducedEvaluator
{
public:
  MixedEvaluator(const RbProblem &problem, StorageMeter *meter)
    : problem_(problem), meter_(meter)
  {
  }

  GaugeMode mode() const override { return GaugeMode::mixed; }

  void set_basis(const Matrix &Z) override
  {
    reducer_.reset();
    reducer_ = std::make_unique<MixedReducer>(problem_, Z, meter_);
  }

  const Matrix &basis() const override { return bound().basis(); }

  ReducedSystem reduce(double t) override { return bound().evaluate(t).reduced; }

  std::vector<EstimatorRow> estimate(double t, int K) override
  {
    const MixedEvaluation &ev = bound().evaluate(t);
    const int count = std::min<int>(K + 1, static_cast<int>(ev.reduced.A_tilde.rows()));
    const EigenSolution eig =
        solve_dense_gevp(ev.reduced.A_tilde, ev.reduced.B_tilde, count);
    return error_estimator(t, eig.values, residuum(ev, eig, K), K);
  }

  Vector high_fidelity_mode(double t, int i, int K) override
  {
    auto it = cache_.find(t);
    if (it == cache_.end() || it->second.cols() < K)
    {
      const EigenSolution sol = problem_.solve_full(t, K);
      Matrix v_hat = problem_.transform_at(t).project(sol.vectors).v_hat;
      normalize_columns(v_hat);
      it = cache_.insert_or_assign(t, std::move(v_hat)).first;
    }
    return it->second.col(i);
  }

  Matrix upscale(double t, const Matrix &reduced_vectors) override
  {
    return bound().evaluate(t).Zhat * reduced_vectors;
  }

private:
  MixedReducer &bound() const
  {
    if (!reducer_)
    {
      throw UsageError("no reduced basis bound to the evaluator");
    }
    return *reducer_;
  }

  const RbProblem &problem_;
  StorageMeter *meter_;
  std::unique_ptr<MixedReducer> reducer_;
  std::map<double, Matrix> cache_;
};

class ClassicalEvaluator final : public ReducedEvaluator
{
public:
  ClassicalEvaluator(const RbProblem &problem, StorageMeter *meter)
    : problem_(problem), meter_(meter)
  {
  }

  GaugeMode mode() const override { return GaugeMode::classical; }

  void set_basis(const Matrix &Z) override
  {
    if (Z.rows() != problem_.cotree_size())
    {
      throw UsageError("basis rows do not match the cotree dimension");
    }
    Z_ = Z;
    bound_ = true;
  }

  const Matrix &basis() const override { return Z_; }

  ReducedSystem reduce(double t) override
  {
    return reduced_matrices_classical(cotree_at(t), bound_basis());
  }

  std::vector<EstimatorRow> estimate(double t, int K) override
  {
    const CotreeSystem &cotree = cotree_at(t);
    const Matrix &Z = bound_basis();
    const ReducedSystem red = reduced_matrices_classical(cotree, Z);
    const int count = std::min<int>(K + 1, static_cast<int>(Z.cols()));
    const EigenSolution eig = solve_dense_gevp(red.A_tilde, red.B_tilde, count);
    return error_estimator(t, eig.values, residuum_classical(cotree, Z, eig, K), K);
  }

  Vector high_fidelity_mode(double t, int i, int K) override
  {
    auto it = cache_.find(t);
    if (it == cache_.end() || it->second.cols() < K)
    {
      const CotreeSystem &cotree = cotree_at(t);
      Matrix v_hat = solve_dense_gevp(cotree.A_hat, cotree.B_hat, K).vectors;
      normalize_columns(v_hat);
      it = cache_.insert_or_assign(t, std::move(v_hat)).first;
    }
    return it->second.col(i);
  }

  Matrix upscale(double t, const Matrix &reduced_vectors) override
  {
    return problem_.transform_at(t).upscale(bound_basis() * reduced_vectors);
  }

private:
  const Matrix &bound_basis() const
  {
    if (!bound_)
    {
      throw UsageError("no reduced basis bound to the evaluator");
    }
    return Z_;
  }

  // Dense cotree system at t; only the most recent one is kept.
  const CotreeSystem &cotree_at(double t)
  {
    if (!cotree_t_ || *cotree_t_ != t)
    {
      cotree_lease_.reset();
      cotree_t_.reset();
      cotree_ = build_cotree_system(problem_.transform_at(t), meter_);
      cotree_lease_ = std::make_unique<StorageMeter::Lease>(
          meter_, 2 * static_cast<std::int64_t>(cotree_.A_hat.rows()) * cotree_.A_hat.cols());
      cotree_t_ = t;
    }
    return cotree_;
  }

  const RbProblem &problem_;
  StorageMeter *meter_;
  Matrix Z_;
  bool bound_ = false;
  CotreeSystem cotree_;
  std::optional<double> cotree_t_;
  std::unique_ptr<StorageMeter::Lease> cotree_lease_;
  std::map<double, Matrix> cache_;
};

bool candidate_before(const EstimatorRow &a, const EstimatorRow &b)
{
  if (a.eta != b.eta)
  {
    return a.eta > b.eta;
  }
  if (a.t != b.t)
  {
    return a.t < b.t;
  }
  return a.mode < b.mode;
}

}  // namespace

std::unique_ptr<ReducedEvaluator> make_evaluator(const RbProblem &problem, GaugeMode mode,
                                                 StorageMeter *meter)
{
  if (mode == GaugeMode::classical)
  {
    return std::make_unique<ClassicalEvaluator>(problem, meter);
  }
  return std::make_unique<MixedEvaluator>(problem, meter);
}

std::string GreedyResult::log_csv() const
{
  std::ostringstream out;
  out << "iteration,t_star,mode,max_eta,n_red,action\n";
  out << std::setprecision(17);
  for (const auto &e : log)
  {
    out << e.iteration << ',' << e.t << ',' << e.mode + 1 << ',' << e.max_eta << ','
        << e.n_red << ',' << e.action << '\n';
  }
  return out.str();
}

GreedyResult greedy_enrich(ReducedEvaluator &evaluator, ReducedBasis basis,
                           const std::vector<double> &greedy_set, const GreedyOptions &opts)
{
  if (!(opts.tol > 0.0))
  {
    throw UsageError("greedy tolerance must be positive");
  }
  if (basis.size() < 1)
  {
    throw UsageError("greedy enrichment needs an initialized basis");
  }
  if (greedy_set.empty())
  {
    throw UsageError("greedy training set is empty");
  }
  GreedyResult result;
  result.basis = std::move(basis);
  std::set<std::pair<double, int>> exhausted;
  evaluator.set_basis(result.basis.Z);

  for (;;)
  {
    std::vector<EstimatorRow> rows;
    for (double t : greedy_set)
    {
      const auto r = evaluator.estimate(t, opts.K);
      rows.insert(rows.end(), r.begin(), r.end());
    }
    std::sort(rows.begin(), rows.end(), candidate_before);
    const EstimatorRow &top = rows.front();
    result.final_max_eta = top.eta;
    GreedyLogEntry entry{result.iterations, top.t, top.mode, top.eta, result.basis.size(), ""};
    if (top.eta <= opts.tol)
    {
      entry.action = "converged";
      result.log.push_back(entry);
      break;
    }
    if (result.basis.size() >= opts.n_max)
    {
      entry.action = "saturated";
      result.log.push_back(entry);
      break;
    }
    bool appended = false;
    for (const auto &cand : rows)
    {
      if (exhausted.count({cand.t, cand.mode}))
      {
        continue;
      }
      Vector v = evaluator.high_fidelity_mode(cand.t, cand.mode, opts.K);
      const double nrm = orthogonalize(result.basis.Z, v);
      GreedyLogEntry e{result.iterations, cand.t, cand.mode, top.eta, result.basis.size(),
                       ""};
      if (nrm < 1.0e-10)
      {
        exhausted.insert({cand.t, cand.mode});
        e.action = "rejected";
        result.log.push_back(e);
        continue;
      }
      result.basis.Z.conservativeResize(Eigen::NoChange, result.basis.size() + 1);
      result.basis.Z.col(result.basis.size() - 1) = v / nrm;
      result.basis.provenance.push_back(
          {BasisColumn::Origin::greedy, cand.t, cand.mode, cand.eta});
      result.iterations++;
      evaluator.set_basis(result.basis.Z);
      e.n_red = result.basis.size();
      e.action = "appended";
      result.log.push_back(e);
      appended = true;
      break;
    }
    if (!appended)
    {
      result.exhausted = true;
      entry.action = "exhausted";
      result.log.push_back(entry);
      break;
    }
  }
  return result;
}

PipelineResult build_basis(const RbProblem &problem, GaugeMode mode,
                           const TrainingSets &sets, const PipelineOptions &opts)
{
  if (opts.n_init > opts.n_max)
  {
    throw UsageError("N_init must not exceed N_max");
  }
  PipelineResult out;
  StorageMeter meter;
  Stopwatch watch;
  const Snapshots snap = mode == GaugeMode::mixed
                             ? collect_snapshots(problem, sets.pod_set, opts.K, &meter)
                             : collect_snapshots_classical(problem, sets.pod_set, opts.K,
                                                           &meter);
  out.timings.projection = watch.seconds();
  watch.restart();
  ReducedBasis basis = pod_init(snap.Y, opts.n_init, mode);
  out.timings.pod = watch.seconds();
  watch.restart();
  auto evaluator = make_evaluator(problem, mode, &meter);
  out.greedy = greedy_enrich(*evaluator, std::move(basis), sets.greedy_set,
                             {opts.K, opts.tol, opts.n_max});
  out.timings.greedy = watch.seconds();
  out.peak_dense_entries = meter.peak();
  return out;
}

PipelineResult mixed_pipeline(const RbProblem &problem, const TrainingSets &sets,
                              const PipelineOptions &opts)
{
  return build_basis(problem, GaugeMode::mixed, sets, opts);
}

PipelineResult classical_pipeline(const RbProblem &problem, const TrainingSets &sets,
                                  const PipelineOptions &opts)
{
  return build_basis(problem, GaugeMode::classical, sets, opts);
}

Vector average_relative_errors(ReducedEvaluator &evaluator, const Matrix &Z,
                               const std::vector<double> &params, const Matrix &reference,
                               int K)
{
  if (reference.rows() != static_cast<Index>(params.size()) || reference.cols() < K)
  {
    throw UsageError("reference eigenvalue table has the wrong shape");
  }
  evaluator.set_basis(Z);
  Vector err = Vector::Zero(K);
  for (std::size_t s = 0; s < params.size(); s++)
  {
    const ReducedSystem red = evaluator.reduce(params[s]);
    const EigenSolution eig = solve_dense_gevp(red.A_tilde, red.B_tilde, K);
    for (int i = 0; i < K; i++)
    {
      const double exact = reference(static_cast<Index>(s), i);
      const double approx = i < eig.size() ? eig.values[i]
                                           : std::numeric_limits<double>::infinity();
      err[i] += std::abs(approx - exact) / exact;
    }
  }
  return err / static_cast<double>(params.size());
}

Matrix error_sweep(ReducedEvaluator &evaluator, const Matrix &Z, const std::vector<Index> &sizes,
                   const std::vector<double> &params, const Matrix &reference, int K)
{
  if (reference.rows() != static_cast<Index>(params.size()) || reference.cols() < K)
  {
    throw UsageError("reference eigenvalue table has the wrong shape");
  }
  for (Index n : sizes)
  {
    if (n < 1 || n > Z.cols())
    {
      throw UsageError("sweep size outside the basis");
    }
  }
  const double inf = std::numeric_limits<double>::infinity();
  evaluator.set_basis(Z);
  Matrix err = Matrix::Zero(static_cast<Index>(sizes.size()), K);
  for (std::size_t s = 0; s < params.size(); s++)
  {
    const ReducedSystem red = evaluator.reduce(params[s]);
    for (std::size_t k = 0; k < sizes.size(); k++)
    {
      const Index n = sizes[k];
      const EigenSolution eig = solve_dense_gevp(red.A_tilde.topLeftCorner(n, n),
                                                 red.B_tilde.topLeftCorner(n, n), K);
      for (int i = 0; i < K; i++)
      {
        const double exact = reference(static_cast<Index>(s), i);
        const double approx = i < eig.size() ? eig.values[i] : inf;
        err(static_cast<Index>(k), i) += std::abs(approx - exact) / exact;
      }
    }
  }
  return err / static_cast<double>(params.size());
}

Matrix reference_eigenvalues(const RbProblem &problem, const std::vector<double> &params,
                             int K)
{
  Matrix ref(static_cast<Index>(params.size()), K);
  for (std::size_t s = 0; s < params.size(); s++)
  {
    ref.row(static_cast<Index>(s)) = problem.solve_full(params[s], K).values.transpose();
  }
  return ref;
}

}  // namespace mrb
