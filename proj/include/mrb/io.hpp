// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_IO_HPP
#define MRB_IO_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>
#include <json.hpp>
#include "mrb/error.hpp"
#include "mrb/types.hpp"

namespace mrb
{

// Unreadable or unwritable files and malformed file contents.
class IoError : public UsageError
{
public:
  using UsageError::UsageError;
};

// Matrix Market coordinate text. With `symmetric` only the lower triangle is stored and
// the header says so; the matrix must then be numerically symmetric.
std::string matrix_market_coordinate(const SparseMatrix &M, bool symmetric);
// Matrix Market array text (column-major, general).
std::string matrix_market_array(const Matrix &M);

// Accepts coordinate (general or symmetric, real or integer) and returns the full matrix;
// symmetric files are mirrored. Duplicate entries are summed.
SparseMatrix parse_matrix_market_coordinate(const std::string &text);
Matrix parse_matrix_market_array(const std::string &text);

std::string read_text(const std::filesystem::path &path);
// Writes to a temporary sibling and renames it over `path`.
void write_text_atomic(const std::filesystem::path &path, const std::string &content);

SparseMatrix read_matrix_market_sparse(const std::filesystem::path &path);
Matrix read_matrix_market_dense(const std::filesystem::path &path);

std::string json_text(const nlohmann::json &j);

// A set of output files published together: nothing reaches the disk before commit(), and
// files already renamed into place are removed again if a later one fails.
class OutputSet
{
public:
  explicit OutputSet(std::filesystem::path directory);

  void add(const std::string &name, std::string content);
  // Returns the written paths.
  std::vector<std::filesystem::path> commit();

  const std::filesystem::path &directory() const { return dir_; }

private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace mrb

#endif  // MRB_IO_HPP
