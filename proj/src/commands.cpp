// SPDX-License-Identifier: Apache-2.0

#include "mrb/commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <set>
#include <Eigen/Core>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>
#include "mrb/gauge.hpp"
#include "mrb/io.hpp"

namespace mrb
{

namespace
{

std::shared_ptr<spdlog::logger> &logger()
{
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = std::make_shared<spdlog::logger>("maxwell_rb",
                                              std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_level(spdlog::level::warn);
    return l;
  }();
  return log;
}

void install_logger(std::ostream &err)
{
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto log = std::make_shared<spdlog::logger>("maxwell_rb", sink);
  log->set_pattern("[%l] %v");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char *env = std::getenv("MAXWELL_RB_LOG"))
  {
    level = spdlog::level::from_str(env);
    // from_str maps unknown names to off.
    if (level == spdlog::level::off && std::string(env) != "off")
    {
      level = spdlog::level::warn;
    }
  }
  log->set_level(level);
  logger() = log;
}

void check_t(double t)
{
  if (!(t >= 0.0 && t <= 1.0))
  {
    throw UsageError("--t must lie in [0, 1]");
  }
}

std::filesystem::path output_dir(const RunConfig &cfg) { return cfg.output; }

nlohmann::json values_json(const Vector &v)
{
  nlohmann::json j = nlohmann::json::array();
  for (Index i = 0; i < v.size(); i++)
  {
    j.push_back(v[i]);
  }
  return j;
}

std::size_t overlap_count(const TrainingSets &sets)
{
  std::set<double> pod(sets.pod_set.begin(), sets.pod_set.end());
  std::size_t n = 0;
  for (double t : sets.greedy_set)
  {
    n += pod.count(t);
  }
  return n;
}

nlohmann::json provenance(const RunConfig &cfg, const TrainingSets &sets,
                          const GreedyResult &greedy)
{
  nlohmann::json j = greedy.basis.provenance_json();
  j["schema_version"] = 1;
  j["config"] = cfg.basis_fingerprint();
  j["pod_set"] = sets.pod_set;
  j["greedy_set"] = sets.greedy_set;
  j["training_overlap"] = overlap_count(sets);
  j["iterations"] = greedy.iterations;
  j["final_max_eta"] = greedy.final_max_eta;
  j["exhausted"] = greedy.exhausted;
  return j;
}

std::string tree_json(const GaugeDecomposition &gauge)
{
  return json_text({{"num_dofs", gauge.num_dofs}, {"tree", gauge.tree}, {"cotree", gauge.cotree}});
}

}  // namespace

SolveResult cmd_solve(const RunConfig &cfg, double t, bool export_files, std::ostream &out)
{
  check_t(t);
  Experiment ex(cfg);
  SolveResult res;
  res.t = t;
  logger()->info("solving at t = {} with N = {}", t, ex.problem().num_dofs());
  res.eig = ex.problem().solve_full(t, cfg.K);
  out << "t = " << t << ", N = " << ex.problem().num_dofs() << "\n";
  out << std::setw(6) << "mode" << std::setw(26) << "eigenvalue" << std::setw(14)
      << "residual\n";
  out << std::setprecision(15);
  for (Index i = 0; i < res.eig.size(); i++)
  {
    out << std::setw(6) << i + 1 << std::setw(26) << res.eig.values[i] << std::setw(14)
        << std::setprecision(3) << std::scientific << res.eig.residual_norms[i]
        << std::defaultfloat << std::setprecision(15) << "\n";
  }
  if (export_files)
  {
    const SystemPair sys = ex.problem().system_at(t);
    OutputSet files(output_dir(cfg));
    files.add("A.mtx", matrix_market_coordinate(sys.A, true));
    files.add("B.mtx", matrix_market_coordinate(sys.B, true));
    files.add("eigenvectors.mtx", matrix_market_array(res.eig.vectors));
    files.add("solve.json", json_text({{"t", t},
                                       {"config", cfg.to_json()},
                                       {"problem", ex.summary()},
                                       {"eigenvalues", values_json(res.eig.values)},
                                       {"residual_norms", res.eig.residual_norms}}));
    res.written = files.commit();
  }
  return res;
}

BuildResult cmd_build_basis(const RunConfig &cfg, std::ostream &out)
{
  Experiment ex(cfg);
  BuildResult res;
  res.sets = make_training_sets(cfg.n_pod, cfg.n_train, cfg.seed);
  logger()->info("building the {} basis: N = {}, |C| = {}", to_string(cfg.gauge),
                 ex.problem().num_dofs(), ex.problem().cotree_size());
  res.pipeline = build_basis(ex.problem(), cfg.gauge, res.sets, pipeline_options(cfg));
  const GreedyResult &g = res.pipeline.greedy;
  const PipelineTimings &tm = res.pipeline.timings;

  OutputSet files(output_dir(cfg));
  files.add("basis.mtx", matrix_market_array(g.basis.Z));
  files.add("provenance.json", json_text(provenance(cfg, res.sets, g)));
  files.add("convergence.csv", g.log_csv());
  files.add("build_summary.json",
            json_text({{"config", cfg.to_json()},
                       {"problem", ex.summary()},
                       {"n_red", g.basis.size()},
                       {"final_max_eta", g.final_max_eta},
                       {"exhausted", g.exhausted},
                       {"peak_dense_entries", res.pipeline.peak_dense_entries},
                       {"seconds",
                        {{"projection", tm.projection}, {"pod", tm.pod}, {"greedy", tm.greedy}}}}));
  res.written = files.commit();

  out << "gauge = " << to_string(cfg.gauge) << ", N = " << ex.problem().num_dofs()
      << ", |C| = " << ex.problem().cotree_size() << "\n";
  out << "N_red = " << g.basis.size() << ", final max eta = " << std::scientific
      << std::setprecision(3) << g.final_max_eta << std::defaultfloat << "\n";
  if (g.exhausted)
  {
    logger()->warn("greedy stopped at N_max = {} with max eta {} above tol {}", cfg.n_max,
                   g.final_max_eta, cfg.tol);
  }
  return res;
}

Matrix load_or_build_basis(const Experiment &ex, std::ostream &out)
{
  const RunConfig &cfg = ex.config();
  const auto dir = output_dir(cfg);
  const auto basis_path = dir / "basis.mtx";
  const auto prov_path = dir / "provenance.json";
  if (std::filesystem::exists(basis_path) && std::filesystem::exists(prov_path))
  {
    try
    {
      const auto prov = nlohmann::json::parse(read_text(prov_path));
      if (prov.at("config") == cfg.basis_fingerprint())
      {
        Matrix Z = read_matrix_market_dense(basis_path);
        if (Z.rows() == ex.problem().cotree_size() && Z.cols() >= 1)
        {
          logger()->info("using the basis in {}", basis_path.string());
          return Z;
        }
      }
      logger()->info("{} belongs to a different configuration; rebuilding", basis_path.string());
    }
    catch (const std::exception &e)
    {
      logger()->warn("ignoring {}: {}", basis_path.string(), e.what());
    }
  }
  const TrainingSets sets = make_training_sets(cfg.n_pod, cfg.n_train, cfg.seed);
  PipelineResult res = build_basis(ex.problem(), cfg.gauge, sets, pipeline_options(cfg));
  out << "built a basis with N_red = " << res.greedy.basis.size() << "\n";
  return res.greedy.basis.Z;
}

TrackResult cmd_track(const RunConfig &cfg, bool reduced, std::ostream &out)
{
  Experiment ex(cfg);
  TrackResult res;
  const TrackingOptions opts = tracking_options(cfg);
  nlohmann::json meta;
  if (reduced)
  {
    const Matrix Z = load_or_build_basis(ex, out);
    auto evaluator = make_evaluator(ex.problem(), cfg.gauge);
    evaluator->set_basis(Z);
    res.run = track_reduced(*evaluator, opts);
    meta = res.run.metadata();
    meta["path"] = "reduced";
    meta["gauge"] = to_string(cfg.gauge);
    meta["n_red"] = Z.cols();
  }
  else
  {
    res.run = track_full(ex.problem(), opts);
    meta = res.run.metadata();
    meta["path"] = "full";
  }
  meta["config"] = cfg.to_json();
  const std::string stem = reduced ? "tracking_reduced" : "tracking_full";
  OutputSet files(output_dir(cfg));
  files.add(stem + ".csv", res.run.csv());
  files.add(stem + ".json", json_text(meta));
  res.written = files.commit();
  out << (reduced ? "reduced" : "full") << " tracking: " << res.run.grid.size()
      << " grid points, " << res.run.stats.bisections << " bisections, min correlation "
      << res.run.min_correlation() << "\n";
  out << "lambda(1) =";
  for (Index i = 0; i < res.run.lambda.cols(); i++)
  {
    out << " " << std::setprecision(12) << res.run.lambda(res.run.lambda.rows() - 1, i);
  }
  out << "\n";
  return res;
}

BenchResult cmd_bench(const RunConfig &cfg, std::ostream &out)
{
  Experiment ex(cfg);
  BenchResult res;
  res.report = run_bench(ex);
  for (const auto &f : res.report.failures)
  {
    logger()->error("{}", f);
  }
  OutputSet files(output_dir(cfg));
  files.add("bench.json", json_text(res.report.to_json()));
  files.add("error_sweep.csv", res.report.sweep_csv());
  res.written = files.commit();
  out << res.report.table();
  return res;
}

std::vector<std::filesystem::path> cmd_export_matrices(const RunConfig &cfg, double t,
                                                       std::ostream &out)
{
  check_t(t);
  Experiment ex(cfg);
  const SystemPair sys = ex.problem().system_at(t);
  const CotreeSystem cot = build_cotree_system(ex.problem().transform_at(t));
  OutputSet files(output_dir(cfg));
  files.add("A.mtx", matrix_market_coordinate(sys.A, true));
  files.add("B.mtx", matrix_market_coordinate(sys.B, true));
  files.add("A_hat.mtx", matrix_market_array(cot.A_hat));
  files.add("B_hat.mtx", matrix_market_array(cot.B_hat));
  files.add("tree_cotree.json", tree_json(ex.problem().gauge()));
  nlohmann::json summary = ex.summary();
  summary["t"] = t;
  files.add("mesh.json", json_text(summary));
  auto written = files.commit();
  out << "wrote " << written.size() << " files to " << output_dir(cfg).string() << "\n";
  return written;
}

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
  install_logger(err);
  CLI::App app{"Reduced-basis eigenvalue solver for morphing Maxwell cavities", "maxwell_rb"};
  app.require_subcommand(1);

  std::string config_path, gauge, output;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("--config", config_path, "configuration file (key = value lines)")
    ->check(CLI::ExistingFile);
  app.add_option("--gauge", gauge, "gauge for the reduced basis")
    ->check(CLI::IsMember({"classical", "mixed"}));
  app.add_option("--seed", seed, "random seed");
  app.add_option("--threads", threads, "upper bound on worker threads")->check(CLI::PositiveNumber);
  app.add_option("--output", output, "output directory");

  double t = 0.0;
  bool export_files = false;
  auto *solve = app.add_subcommand("solve", "solve the high-fidelity problem at one t");
  solve->add_option("--t", t, "parameter in [0,1]")->required();
  solve->add_flag("--export", export_files, "write matrices, eigenvectors and results");

  app.add_subcommand("build-basis", "build the reduced basis (snapshots, POD, greedy)");

  bool full = false, reduced = false;
  auto *track = app.add_subcommand("track", "track eigenvalues over t in [0,1]");
  auto *full_flag = track->add_flag("--full", full, "track the high-fidelity system");
  track->add_flag("--reduced", reduced, "track the reduced system (default)")->excludes(full_flag);

  app.add_subcommand("bench", "time all phases of both gauges and the full model");

  double export_t = 0.0;
  auto *exp = app.add_subcommand("export-matrices", "write system matrices and the gauge at t");
  exp->add_option("--t", export_t, "parameter in [0,1]");

  for (auto *sub : app.get_subcommands({}))
  {
    sub->fallthrough();
  }

  try
  {
    try
    {
      app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
      if (e.get_exit_code() == 0)
      {
        app.exit(e, out, err);
        return exit_ok;
      }
      err << "error: " << e.what() << "\n";
      return exit_usage;
    }

    RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    if (!gauge.empty())
    {
      cfg.gauge = parse_gauge_mode(gauge);
    }
    if (seed)
    {
      cfg.seed = *seed;
    }
    if (!output.empty())
    {
      cfg.output = output;
    }
    cfg.validate();
    if (threads)
    {
      Eigen::setNbThreads(*threads);
    }

    auto *sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "solve")
    {
      cmd_solve(cfg, t, export_files, out);
    }
    else if (name == "build-basis")
    {
      cmd_build_basis(cfg, out);
    }
    else if (name == "track")
    {
      cmd_track(cfg, !full, out);
    }
    else if (name == "bench")
    {
      const BenchResult res = cmd_bench(cfg, out);
      if (!res.report.failures.empty())
      {
        return exit_numerical;
      }
    }
    else
    {
      cmd_export_matrices(cfg, export_t, out);
    }
    return exit_ok;
  }
  catch (const UsageError &e)
  {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }
  catch (const NumericalError &e)
  {
    err << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  }
  catch (const std::exception &e)
  {
    err << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  }
}

}  // namespace mrb
