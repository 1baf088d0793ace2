// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <filesystem>
#include <numbers>
#include <sstream>
#include "mrb/commands.hpp"
#include "mrb/io.hpp"
#include "support.hpp"

using namespace mrb;

namespace
{

struct Run
{
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args)
{
  args.insert(args.begin(), "maxwell_rb");
  std::vector<const char *> argv;
  for (const auto &a : args)
  {
    argv.push_back(a.c_str());
  }
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string &name)
{
  const auto dir = std::filesystem::temp_directory_path() / ("mrb_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_config(const std::filesystem::path &dir, const std::string &text)
{
  const auto path = dir / "run.cfg";
  write_text_atomic(path, text);
  return path.string();
}

const char *small_cfg = "resolution = 3 3 3\nN_POD = 4\nN_train = 6\nN_init = 10\nN_max = 20\n"
                        "tol = 1e-10\ninitial_steps = 4\n";

}  // namespace

TEST_CASE("exit codes")
{
  CHECK(cli({"--help"}).code == exit_ok);
  CHECK(cli({}).code == exit_usage);
  CHECK(cli({"frobnicate"}).code == exit_usage);
  CHECK(cli({"solve"}).code == exit_usage);
  const Run bad_t = cli({"solve", "--t", "1.5"});
  CHECK(bad_t.code == exit_usage);
  CHECK(bad_t.err.find("[0, 1]") != std::string::npos);
  CHECK(cli({"solve", "--t", "0", "--gauge", "both"}).code == exit_usage);
  CHECK(cli({"track", "--full", "--reduced"}).code == exit_usage);

  const auto dir = scratch("codes");
  const std::string cfg = write_config(dir, "K = 3\nbogus = 2\n");
  const Run r = cli({"--config", cfg, "solve", "--t", "0"});
  CHECK(r.code == exit_usage);
  CHECK(r.err.find("run.cfg:2:") != std::string::npos);

  const std::string impossible = write_config(dir, "resolution = 3 3 3\nlambda_cut = 1e6\n");
  CHECK(cli({"--config", impossible, "solve", "--t", "0"}).code == exit_usage);
  std::filesystem::remove_all(dir);
}

TEST_CASE("solve prints the cube eigenvalues and exports matrices")
{
  const auto dir = scratch("solve");
  const std::string cfg =
    write_config(dir, "dims0 = 1 1 1\ndims1 = 1 1 1\nbulge = 0\nresolution = 8 8 8\nK = 3\n"
                      "N_init = 10\n");
  const Run r = cli({"--config", cfg, "--output", (dir / "out").string(), "solve", "--t", "0",
                     "--export"});
  REQUIRE(r.code == exit_ok);
  const auto j = nlohmann::json::parse(read_text(dir / "out" / "solve.json"));
  REQUIRE(j["eigenvalues"].size() == 3);
  const double exact = 2 * std::numbers::pi * std::numbers::pi;
  for (const auto &v : j["eigenvalues"])
  {
    CHECK(test::rel_diff(v.get<double>(), exact) < 0.05);
  }
  RunConfig rc = RunConfig::load(cfg);
  Experiment ex(rc);
  const SystemPair sys = ex.problem().system_at(0.0);
  CHECK(read_matrix_market_sparse(dir / "out" / "A.mtx").nonZeros() == sys.A.nonZeros());
  CHECK(read_matrix_market_sparse(dir / "out" / "B.mtx").nonZeros() == sys.B.nonZeros());
  CHECK(read_matrix_market_dense(dir / "out" / "eigenvectors.mtx").cols() == 3);
  std::filesystem::remove_all(dir);
}

TEST_CASE("build-basis, track and export-matrices")
{
  const auto dir = scratch("pipeline");
  const std::string cfg = write_config(dir, small_cfg);
  const std::string out = (dir / "out").string();
  const Run b = cli({"--config", cfg, "--output", out, "build-basis"});
  REQUIRE(b.code == exit_ok);
  CHECK(b.out.find("N_red = ") != std::string::npos);
  const std::string log1 = read_text(dir / "out" / "convergence.csv");
  const std::string prov1 = read_text(dir / "out" / "provenance.json");

  REQUIRE(cli({"--config", cfg, "--output", out, "build-basis"}).code == exit_ok);
  CHECK(read_text(dir / "out" / "convergence.csv") == log1);
  CHECK(read_text(dir / "out" / "provenance.json") == prov1);

  REQUIRE(cli({"--config", cfg, "--output", out, "track"}).code == exit_ok);
  REQUIRE(cli({"--config", cfg, "--output", out, "track", "--full"}).code == exit_ok);
  auto last_row = [](const std::string &csv) {
    std::istringstream in(csv);
    std::string line, last;
    int rows = -1;
    while (std::getline(in, line))
    {
      last = line;
      rows++;
    }
    std::vector<double> values;
    std::istringstream fields(last);
    std::string f;
    while (std::getline(fields, f, ','))
    {
      values.push_back(std::stod(f));
    }
    return std::make_pair(rows, values);
  };
  const auto [rows_r, red] = last_row(read_text(dir / "out" / "tracking_reduced.csv"));
  const auto [rows_f, full] = last_row(read_text(dir / "out" / "tracking_full.csv"));
  CHECK(rows_r >= 5);
  REQUIRE(red.size() == 11);
  for (std::size_t i = 1; i <= 5; i++)
  {
    CHECK(test::rel_diff(red[i], full[i]) <= 1e-6);
  }
  const auto meta = nlohmann::json::parse(read_text(dir / "out" / "tracking_reduced.json"));
  CHECK(meta["path"] == "reduced");

  REQUIRE(cli({"--config", cfg, "--output", out, "export-matrices", "--t", "0.5"}).code == exit_ok);
  const Matrix Ahat = read_matrix_market_dense(dir / "out" / "A_hat.mtx");
  const auto tree = nlohmann::json::parse(read_text(dir / "out" / "tree_cotree.json"));
  CHECK(Ahat.rows() == static_cast<Index>(tree["cotree"].size()));
  std::filesystem::remove_all(dir);
}

TEST_CASE("infinite tolerance keeps the POD basis")
{
  const auto dir = scratch("inf");
  const std::string cfg = write_config(dir, std::string(small_cfg) + "gauge = classical\n");
  RunConfig rc = RunConfig::load(cfg);
  rc.tol = std::numeric_limits<double>::infinity();
  rc.output = (dir / "out").string();
  std::ostringstream sink;
  const BuildResult r = cmd_build_basis(rc, sink);
  CHECK(r.pipeline.greedy.basis.size() == rc.n_init);
  CHECK(r.pipeline.greedy.iterations == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("constant morph gives identical rows")
{
  const auto dir = scratch("constant");
  const std::string cfg =
    write_config(dir, std::string(small_cfg) + "dims1 = 1 1.1 1.2\nbulge = 0\n");
  REQUIRE(cli({"--config", cfg, "--output", (dir / "out").string(), "track", "--full"}).code ==
          exit_ok);
  std::istringstream in(read_text(dir / "out" / "tracking_full.csv"));
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line))
  {
    std::istringstream fields(line);
    std::string f;
    std::vector<double> lambdas;
    for (int c = 0; std::getline(fields, f, ','); c++)
    {
      if (c >= 1 && c <= 5)
      {
        lambdas.push_back(std::stod(f));
      }
    }
    rows.push_back(lambdas);
  }
  REQUIRE(rows.size() == 5);
  for (const auto &row : rows)
  {
    for (std::size_t i = 0; i < row.size(); i++)
    {
      CHECK(test::rel_diff(row[i], rows[0][i]) <= 1e-10);
    }
  }
  std::filesystem::remove_all(dir);
}
