// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_RB_HPP
#define MRB_RB_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>
#include <json.hpp>
#include "mrb/assembly.hpp"
#include "mrb/eigensolvers.hpp"
#include "mrb/gauge.hpp"
#include "mrb/instrument.hpp"

namespace mrb
{

enum class GaugeMode
{
  classical,
  mixed
};

std::string to_string(GaugeMode mode);
GaugeMode parse_gauge_mode(const std::string &text);

// A parametrized Maxwell pencil together with its tree-cotree split and the solver
// settings for the high-fidelity problem.
class RbProblem
{
public:
  RbProblem(ParametrizedSystem system, GaugeDecomposition gauge, SparseEigenOptions eigen,
            bool freeze_cotree_operator = false);

  const ParametrizedSystem &system() const { return system_; }
  const GaugeDecomposition &gauge() const { return gauge_; }
  const SparseEigenOptions &eigen_options() const { return eigen_; }
  bool frozen_cotree_operator() const { return freeze_; }

  SystemPair system_at(double t) const { return system_.interpolate(t); }
  // Transformation at t; uses H(0) for every t when the cotree operator is frozen.
  CotreeTransform transform_at(double t) const;
  // K physical modes of the sparse high-fidelity pencil at t.
  EigenSolution solve_full(double t, int K) const;

  Index num_dofs() const { return system_.size(); }
  Index cotree_size() const { return gauge_.cotree_size(); }

private:
  ParametrizedSystem system_;
  GaugeDecomposition gauge_;
  SparseEigenOptions eigen_;
  bool freeze_ = false;
  SparseMatrix H0_;
};

struct BasisColumn
{
  enum class Origin
  {
    pod,
    greedy
  };
  Origin origin = Origin::pod;
  std::optional<double> t;
  std::optional<int> mode;
  // Singular value for POD columns, estimator value for greedy columns.
  double value = 0.0;
};

struct ReducedBasis
{
  // |C| x N_red with orthonormal columns.
  Matrix Z;
  std::vector<BasisColumn> provenance;
  GaugeMode gauge_mode = GaugeMode::mixed;

  Index size() const { return static_cast<Index>(Z.cols()); }
  // Basis restricted to its first n columns (the nested bases of a greedy run).
  ReducedBasis prefix(Index n) const;
  nlohmann::json provenance_json() const;
};

struct ReducedSystem
{
  Matrix A_tilde, B_tilde;
};

struct TrainingSets
{
  std::vector<double> pod_set;
  std::vector<double> greedy_set;
  std::uint64_t seed = 0;
};

// Uniform grid on [0,1] for POD; the same spacing offset by half a step for the greedy
// set (which therefore stays inside (0,1)).
TrainingSets make_training_sets(int n_pod, int n_train, std::uint64_t seed);
// Seeded uniform random parameters on [0,1].
std::vector<double> random_parameters(int count, std::uint64_t seed);

struct Snapshots
{
  // |C| x (n_t * K), unit Euclidean columns.
  Matrix Y;
  std::vector<std::pair<double, int>> origin;
};

Snapshots collect_snapshots(const RbProblem &problem, const std::vector<double> &pod_set,
                            int K, StorageMeter *meter = nullptr);
Snapshots collect_snapshots_classical(const RbProblem &problem,
                                      const std::vector<double> &pod_set, int K,
                                      StorageMeter *meter = nullptr);

ReducedBasis pod_init(const Matrix &Y, Index n_init, GaugeMode mode = GaugeMode::mixed);

// Intermediate products of the mixed evaluation at one t, reused by the residual.
struct MixedEvaluation
{
  RowMatrix Zhat;   // B(t)^-1 H(t)^T Z, N x N_red
  RowMatrix HtZ;    // H(t)^T Z, N x N_red
  RowMatrix AZhat;  // A(t) Zhat
  ReducedSystem reduced;

  // Z^T H B^-1 B B^-1 H^T Z evaluated without the simplification B_tilde = Zhat^T H^T Z.
  Matrix B_tilde_direct(const SparseMatrix &B) const;
};

MixedEvaluation evaluate_mixed(const CotreeTransform &transform, const Matrix &Z,
                               StorageMeter *meter = nullptr);
ReducedSystem reduced_matrices_mixed(const RbProblem &problem, const Matrix &Z, double t);
ReducedSystem reduced_matrices_classical(const CotreeSystem &cotree, const Matrix &Z);

// Reduced eigenpairs at one t together with the high-fidelity residuals of the first K.
struct ReducedSolution
{
  EigenSolution eig;
  std::vector<double> residuals;
};

// r_i = A Zhat v_i - lambda_i H^T Z v_i for the given reduced eigenpairs.
std::vector<double> residuum(const MixedEvaluation &eval, const EigenSolution &reduced,
                             int count);
std::vector<double> residuum_classical(const CotreeSystem &cotree, const Matrix &Z,
                                       const EigenSolution &reduced, int count);

struct EstimatorRow
{
  double t = 0.0;
  int mode = 0;  // zero-based
  double lambda = 0.0;
  double residual = 0.0;
  double gap = 0.0;
  double eta = 0.0;
};

// eta_i = ||r_i||^2 / (lambda_i * d_i) where d_i is the distance from lambda_i to the
// nearest other reduced eigenvalue among the first K+1, floored at 1e-8 lambda_K.
std::vector<EstimatorRow> error_estimator(double t, const Vector &reduced_values,
                                          const std::vector<double> &residuals, int K);

// Mixed-gauge reduced matrices of one fixed basis at many parameter values. H(t)^T Z is
// affine in t and precomputed; the symbolic factorization of B(t) is shared across t.
class MixedReducer
{
public:
  MixedReducer(const RbProblem &problem, Matrix Z, StorageMeter *meter = nullptr);

  const Matrix &basis() const { return Z_; }
  // Products at t; the result stays valid until the next call.
  const MixedEvaluation &evaluate(double t);

private:
  const RbProblem &problem_;
  Matrix Z_;
  RowMatrix HtZ0_, HtZ1_;
  SpdFactor factor_;
  MixedEvaluation eval_;
  std::optional<double> t_;
  StorageMeter::Lease lease_;
};

// Reduced-order evaluation on a bound basis, shared by the greedy loop, the error studies
// and tracking.
class ReducedEvaluator
{
public:
  virtual ~ReducedEvaluator() = default;
  virtual GaugeMode mode() const = 0;
  virtual void set_basis(const Matrix &Z) = 0;
  virtual const Matrix &basis() const = 0;
  virtual ReducedSystem reduce(double t) = 0;
  // Reduced solve with K+1 eigenpairs (when available) and high-fidelity residuals of the
  // first K.
  virtual std::vector<EstimatorRow> estimate(double t, int K) = 0;
  // Unit-norm cotree representation of high-fidelity mode i (zero-based) at t.
  virtual Vector high_fidelity_mode(double t, int i, int K) = 0;
  // Full-space approximation B(t)^-1 H(t)^T Z y of reduced eigenvectors y.
  virtual Matrix upscale(double t, const Matrix &reduced_vectors) = 0;
};

std::unique_ptr<ReducedEvaluator> make_evaluator(const RbProblem &problem, GaugeMode mode,
                                                 StorageMeter *meter = nullptr);

struct GreedyLogEntry
{
  int iteration = 0;
  double t = 0.0;
  int mode = 0;  // zero-based
  double max_eta = 0.0;
  Index n_red = 0;
  std::string action;  // appended | rejected | converged | saturated | exhausted
};

struct GreedyOptions
{
  int K = 5;
  double tol = 1.0e-10;
  Index n_max = 75;
};

struct GreedyResult
{
  ReducedBasis basis;
  std::vector<GreedyLogEntry> log;
  int iterations = 0;
  double final_max_eta = 0.0;
  bool exhausted = false;

  std::string log_csv() const;
};

GreedyResult greedy_enrich(ReducedEvaluator &evaluator, ReducedBasis basis,
                           const std::vector<double> &greedy_set, const GreedyOptions &opts);

struct PipelineOptions
{
  int K = 5;
  Index n_init = 65;
  Index n_max = 75;
  double tol = 1.0e-10;
};

struct PipelineTimings
{
  double projection = 0.0;  // snapshot solves and condensation to cotree coordinates
  double pod = 0.0;
  double greedy = 0.0;
};

struct PipelineResult
{
  GreedyResult greedy;
  PipelineTimings timings;
  std::int64_t peak_dense_entries = 0;
};

// Snapshots -> POD -> greedy with the given gauge.
PipelineResult build_basis(const RbProblem &problem, GaugeMode mode,
                           const TrainingSets &sets, const PipelineOptions &opts);
PipelineResult mixed_pipeline(const RbProblem &problem, const TrainingSets &sets,
                              const PipelineOptions &opts);
PipelineResult classical_pipeline(const RbProblem &problem, const TrainingSets &sets,
                                  const PipelineOptions &opts);

// Average relative eigenvalue error of the first K modes over the given parameters,
// against reference eigenvalues (one row per parameter).
Vector average_relative_errors(ReducedEvaluator &evaluator, const Matrix &Z,
                               const std::vector<double> &params, const Matrix &reference,
                               int K);

// Average relative errors of the nested bases Z.leftCols(n) for each n in `sizes` (one row
// per size, one column per mode). A single reduction per parameter serves every size since
// the reduced matrices of a prefix are leading blocks. Modes a basis cannot resolve get an
// infinite error.
Matrix error_sweep(ReducedEvaluator &evaluator, const Matrix &Z, const std::vector<Index> &sizes,
                   const std::vector<double> &params, const Matrix &reference, int K);

// Reference eigenvalues (one row per parameter) from high-fidelity sparse solves.
Matrix reference_eigenvalues(const RbProblem &problem, const std::vector<double> &params,
                             int K);

}  // namespace mrb

#endif  // MRB_RB_HPP
