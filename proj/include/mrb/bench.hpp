// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_BENCH_HPP
#define MRB_BENCH_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>
#include <json.hpp>
#include "mrb/experiment.hpp"
#include "mrb/tracking.hpp"

namespace mrb
{

inline constexpr int bench_schema_version = 1;

// Phase row labels of the report, in order.
inline const std::vector<std::string> &bench_phase_names()
{
  static const std::vector<std::string> names{
    "Projection to Cotree DoFs", "POD", "Greedy", "Tracking (RB)",
    "EVP (full, cotree/sparse)", "EVP (RB)", "Tracking (full, sparse)"};
  return names;
}

// Median wall time in seconds of each phase. Columns: "mixed" and "classical" for the two
// gauges, "sparse" for gauge-independent high-fidelity work.
struct PhaseTiming
{
  std::string name;
  std::map<std::string, double> seconds;
  // Individual repetitions behind each median.
  std::map<std::string, std::vector<double>> samples;
};

struct TrackingSummary
{
  int grid_points = 0;
  int bisections = 0;
  double min_correlation = 0.0;
  bool permutation_valid = false;
  Vector lambda_start, lambda_end;
};

struct BenchReport
{
  nlohmann::json config;
  int K = 0;
  int repetitions = 0;
  Index N = 0;
  Index cotree = 0;
  std::map<std::string, Index> n_red;
  std::map<std::string, double> final_max_eta;
  std::map<std::string, std::int64_t> peak_dense_entries;
  std::vector<PhaseTiming> phases;
  // K rows of average relative eigenvalue errors, one column per gauge.
  std::map<std::string, Vector> errors;
  // Mean over the K modes of the average relative error for basis sizes 1..N_red.
  std::map<std::string, std::vector<double>> sweep;
  std::map<std::string, TrackingSummary> tracking;
  std::vector<std::string> failures;

  const PhaseTiming *phase(const std::string &name) const;
  std::optional<double> seconds(const std::string &phase, const std::string &column) const;

  // Throws NumericalError if an invariant of the report is violated (negative times, wrong
  // error-table shape, missing phase rows).
  void validate() const;

  nlohmann::json to_json() const;
  std::string table() const;
  std::string sweep_csv() const;
};

// Median of the samples; the vector must not be empty.
double median(std::vector<double> samples);

// Runs `fn` once untimed and then `repetitions` times, returning the wall times.
std::vector<double> time_repeated(const std::function<void()> &fn, int repetitions);

// Builds both gauges' bases, times every phase (one warm-up, median of the configured
// repetitions), evaluates the error tables against high-fidelity solves on eval_set_size
// random parameters and tracks with both the reduced and the full model. A failing phase
// is recorded in `failures` and the remaining phases still run.
BenchReport run_bench(const Experiment &experiment);

}  // namespace mrb

#endif  // MRB_BENCH_HPP
