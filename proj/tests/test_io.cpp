// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <filesystem>
#include <random>
#include "mrb/assembly.hpp"
#include "mrb/io.hpp"
#include "support.hpp"

using namespace mrb;

namespace
{

std::filesystem::path scratch(const std::string &name)
{
  const auto dir = std::filesystem::temp_directory_path() / ("mrb_io_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("coordinate format round-trips")
{
  const SystemPair sys = assemble(build_mesh({1, 1.1, 1.2}, {3, 4, 3}));
  for (bool symmetric : {true, false})
  {
    const SparseMatrix back = parse_matrix_market_coordinate(matrix_market_coordinate(sys.A, symmetric));
    CHECK(back.nonZeros() == sys.A.nonZeros());
    CHECK(Matrix(back - sys.A).cwiseAbs().maxCoeff() == 0.0);
  }
  const std::string text = matrix_market_coordinate(sys.B, true);
  CHECK(text.rfind("%%MatrixMarket matrix coordinate real symmetric\n", 0) == 0);
}

TEST_CASE("array format round-trips exactly")
{
  std::mt19937_64 rng(1);
  const Matrix M = test::random_matrix(7, 3, rng) * 1e-7;
  CHECK(parse_matrix_market_array(matrix_market_array(M)) == M);
  const Matrix S = parse_matrix_market_array(
    "%%MatrixMarket matrix array real symmetric\n% comment\n2 2\n1\n2\n3\n");
  CHECK(S(0, 1) == 2.0);
  CHECK(S(1, 0) == 2.0);
  CHECK(S(1, 1) == 3.0);
}

TEST_CASE("reader details")
{
  const SparseMatrix dup = parse_matrix_market_coordinate(
    "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.5\n1 1 2.5\n2 1 -1\n");
  CHECK(dup.coeff(0, 0) == 4.0);
  CHECK(dup.coeff(1, 0) == -1.0);
  CHECK(dup.coeff(0, 1) == 0.0);
  const SparseMatrix ints = parse_matrix_market_coordinate(
    "%%MatrixMarket matrix coordinate integer symmetric\n2 2 1\n2 1 3\n");
  CHECK(ints.coeff(0, 1) == 3.0);
  const char *bad[] = {
    "",
    "%%MatrixMarket vector coordinate real general\n1 1 0\n",
    "%%MatrixMarket matrix coordinate complex general\n1 1 0\n",
    "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n",
    "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n",
    "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1\n",
    "%%MatrixMarket matrix coordinate real general\n2 x 1\n",
    "%%MatrixMarket matrix array real general\n2 2 1\n",
  };
  for (const char *text : bad)
  {
    CHECK_THROWS_AS(parse_matrix_market_coordinate(text), IoError);
  }
  CHECK_THROWS_AS(parse_matrix_market_array("%%MatrixMarket matrix array real general\n2 1\n1\n"),
                  IoError);
}

TEST_CASE("output sets are written atomically and rolled back on failure")
{
  const auto dir = scratch("commit");
  OutputSet ok(dir);
  ok.add("a.txt", "alpha");
  ok.add("b.txt", "beta");
  CHECK(ok.commit().size() == 2);
  CHECK(read_text(dir / "a.txt") == "alpha");
  for (const auto &entry : std::filesystem::directory_iterator(dir))
  {
    CHECK(entry.path().filename().string().find(".tmp.") == std::string::npos);
  }

  std::filesystem::create_directories(dir / "blocked");
  std::filesystem::create_directories(dir / "blocked" / "x");
  OutputSet failing(dir / "blocked");
  failing.add("first.txt", "1");
  failing.add("x", "2");
  CHECK_THROWS_AS(failing.commit(), IoError);
  CHECK(!std::filesystem::exists(dir / "blocked" / "first.txt"));
  CHECK_THROWS_AS(read_text(dir / "missing"), IoError);
  std::filesystem::remove_all(dir);
}
