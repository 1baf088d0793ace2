// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_TRACKING_HPP
#define MRB_TRACKING_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>
#include <json.hpp>
#include "mrb/rb.hpp"
#include "mrb/types.hpp"

namespace mrb
{

enum class Matching
{
  greedy,
  optimal
};

std::string to_string(Matching matching);
Matching parse_matching(const std::string &text);

struct TrackingOptions
{
  int K = 5;
  double threshold = 0.9;
  int initial_steps = 10;
  int max_depth = 10;
  // Extra candidate modes solved beyond K so tracked modes may leave the lowest K.
  int guard = 1;
  Matching matching = Matching::greedy;
  // Eigenvalues closer than this (relative) form a cluster whose basis is aligned by an
  // orthogonal rotation before matching.
  double cluster_tol = 1.0e-8;
};

// Eigenpairs at one parameter value, with the mass inner product used for correlations.
struct SpectrumPoint
{
  double t = 0.0;
  Vector values;
  Matrix vectors;
  std::function<Matrix(const Matrix &)> apply_mass;
};

using SpectrumSource = std::function<SpectrumPoint(double t, int count)>;

struct TrackingStepStats
{
  int bisections = 0;
  double min_step = 0.0;
  std::vector<double> step_seconds;
  double total_seconds = 0.0;
};

struct TrackingRun
{
  std::vector<double> grid;
  // One row per grid point and one column per tracked mode.
  Matrix lambda;
  Matrix correlation;
  // Candidate index (zero-based, ascending order at that t) claimed by each tracked mode.
  std::vector<std::vector<int>> mode_of;
  TrackingStepStats stats;
  int K = 0;
  double threshold = 0.0;

  // True when every step assigns the tracked modes to distinct candidates among the K
  // lowest.
  bool permutation_valid() const;
  double min_correlation() const;
  std::string csv() const;
  nlohmann::json metadata() const;
};

// Core tracking loop over an arbitrary eigenpair source on [0,1].
TrackingRun track(const SpectrumSource &source, const TrackingOptions &opts);

// Tracks the reduced system built from the basis bound to `evaluator`.
TrackingRun track_reduced(ReducedEvaluator &evaluator, const TrackingOptions &opts);
// Tracks the high-fidelity sparse system.
TrackingRun track_full(const RbProblem &problem, const TrackingOptions &opts);

}  // namespace mrb

#endif  // MRB_TRACKING_HPP
