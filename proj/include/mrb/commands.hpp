// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_COMMANDS_HPP
#define MRB_COMMANDS_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include "mrb/bench.hpp"
#include "mrb/config.hpp"
#include "mrb/tracking.hpp"

namespace mrb
{

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_numerical = 3;

struct SolveResult
{
  double t = 0.0;
  EigenSolution eig;
  std::vector<std::filesystem::path> written;
};

// K physical modes at t in [0,1]. With `export_files` writes A.mtx, B.mtx,
// eigenvectors.mtx and solve.json to the output directory.
SolveResult cmd_solve(const RunConfig &cfg, double t, bool export_files, std::ostream &out);

struct BuildResult
{
  PipelineResult pipeline;
  TrainingSets sets;
  std::vector<std::filesystem::path> written;
};

// Snapshots, POD and greedy; writes basis.mtx, provenance.json, convergence.csv and
// build_summary.json. Only build_summary.json carries timings.
BuildResult cmd_build_basis(const RunConfig &cfg, std::ostream &out);

// Loads <output>/basis.mtx when its provenance matches the configuration and gauge;
// otherwise builds the basis in memory.
Matrix load_or_build_basis(const Experiment &experiment, std::ostream &out);

struct TrackResult
{
  TrackingRun run;
  std::vector<std::filesystem::path> written;
};

TrackResult cmd_track(const RunConfig &cfg, bool reduced, std::ostream &out);

struct BenchResult
{
  BenchReport report;
  std::vector<std::filesystem::path> written;
};

BenchResult cmd_bench(const RunConfig &cfg, std::ostream &out);

// A and B (coordinate, symmetric), the dense cotree pencil (array), the tree/cotree split
// and a mesh summary at t.
std::vector<std::filesystem::path> cmd_export_matrices(const RunConfig &cfg, double t,
                                                       std::ostream &out);

// Command-line entry point; returns the process exit code.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace mrb

#endif  // MRB_COMMANDS_HPP
