// SPDX-License-Identifier: Apache-2.0

#include "mrb/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <tuple>
#include <unistd.h>

namespace mrb
{

namespace
{

void put_double(std::string &out, double v)
{
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

std::string lower(std::string s)
{
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct Header
{
  std::string format;  // coordinate | array
  std::string field;   // real | integer | ...
  std::string symmetry;
};

// Reads the banner and skips comments; `in` is left at the size line.
Header read_header(std::istringstream &in)
{
  std::string line;
  if (!std::getline(in, line))
  {
    throw IoError("Matrix Market: empty input");
  }
  std::istringstream banner(line);
  std::string tag, object;
  Header h;
  banner >> tag >> object >> h.format >> h.field >> h.symmetry;
  if (tag != "%%MatrixMarket" || lower(object) != "matrix")
  {
    throw IoError("Matrix Market: missing '%%MatrixMarket matrix' banner");
  }
  h.format = lower(h.format);
  h.field = lower(h.field);
  h.symmetry = lower(h.symmetry);
  if (h.field != "real" && h.field != "integer" && h.field != "double")
  {
    throw IoError("Matrix Market: unsupported field '" + h.field + "'");
  }
  if (h.symmetry != "general" && h.symmetry != "symmetric")
  {
    throw IoError("Matrix Market: unsupported symmetry '" + h.symmetry + "'");
  }
  return h;
}

std::string next_data_line(std::istringstream &in, const char *what)
{
  std::string line;
  while (std::getline(in, line))
  {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%')
    {
      continue;
    }
    return line;
  }
  throw IoError(std::string("Matrix Market: unexpected end of input while reading ") + what);
}

}  // namespace

std::string matrix_market_coordinate(const SparseMatrix &M, bool symmetric)
{
  if (symmetric && M.rows() != M.cols())
  {
    throw UsageError("symmetric Matrix Market output needs a square matrix");
  }
  std::string out = "%%MatrixMarket matrix coordinate real ";
  out += symmetric ? "symmetric\n" : "general\n";
  std::vector<std::tuple<Index, Index, double>> entries;
  for (Index j = 0; j < M.outerSize(); j++)
  {
    for (SparseMatrix::InnerIterator it(M, j); it; ++it)
    {
      if (!symmetric || it.row() >= it.col())
      {
        entries.emplace_back(static_cast<Index>(it.row()), static_cast<Index>(it.col()),
                             it.value());
      }
    }
  }
  out += std::to_string(M.rows()) + " " + std::to_string(M.cols()) + " " +
         std::to_string(entries.size()) + "\n";
  for (const auto &[r, c, v] : entries)
  {
    out += std::to_string(r + 1);
    out += ' ';
    out += std::to_string(c + 1);
    out += ' ';
    put_double(out, v);
    out += '\n';
  }
  return out;
}

std::string matrix_market_array(const Matrix &M)
{
  std::string out = "%%MatrixMarket matrix array real general\n";
  out += std::to_string(M.rows()) + " " + std::to_string(M.cols()) + "\n";
  for (Index j = 0; j < M.cols(); j++)
  {
    for (Index i = 0; i < M.rows(); i++)
    {
      put_double(out, M(i, j));
      out += '\n';
    }
  }
  return out;
}

SparseMatrix parse_matrix_market_coordinate(const std::string &text)
{
  std::istringstream in(text);
  const Header h = read_header(in);
  if (h.format != "coordinate")
  {
    throw IoError("Matrix Market: expected coordinate format, got '" + h.format + "'");
  }
  std::istringstream size(next_data_line(in, "the size line"));
  long long rows = -1, cols = -1, nnz = -1;
  if (!(size >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
  {
    throw IoError("Matrix Market: malformed size line");
  }
  const bool symmetric = h.symmetry == "symmetric";
  if (symmetric && rows != cols)
  {
    throw IoError("Matrix Market: symmetric matrix must be square");
  }
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  for (long long k = 0; k < nnz; k++)
  {
    std::istringstream entry(next_data_line(in, "entries"));
    long long r = 0, c = 0;
    double v = 0.0;
    if (!(entry >> r >> c >> v))
    {
      throw IoError("Matrix Market: malformed entry " + std::to_string(k + 1));
    }
    if (r < 1 || r > rows || c < 1 || c > cols)
    {
      throw IoError("Matrix Market: entry " + std::to_string(k + 1) + " out of range");
    }
    if (symmetric && r < c)
    {
      throw IoError("Matrix Market: symmetric entry " + std::to_string(k + 1) +
                    " lies above the diagonal");
    }
    trips.emplace_back(static_cast<Index>(r - 1), static_cast<Index>(c - 1), v);
    if (symmetric && r != c)
    {
      trips.emplace_back(static_cast<Index>(c - 1), static_cast<Index>(r - 1), v);
    }
  }
  SparseMatrix M(static_cast<Index>(rows), static_cast<Index>(cols));
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  return M;
}

Matrix parse_matrix_market_array(const std::string &text)
{
  std::istringstream in(text);
  const Header h = read_header(in);
  if (h.format != "array")
  {
    throw IoError("Matrix Market: expected array format, got '" + h.format + "'");
  }
  std::istringstream size(next_data_line(in, "the size line"));
  long long rows = -1, cols = -1;
  if (!(size >> rows >> cols) || rows < 0 || cols < 0)
  {
    throw IoError("Matrix Market: malformed size line");
  }
  const bool symmetric = h.symmetry == "symmetric";
  if (symmetric && rows != cols)
  {
    throw IoError("Matrix Market: symmetric matrix must be square");
  }
  Matrix M = Matrix::Zero(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index j = 0; j < M.cols(); j++)
  {
    for (Index i = symmetric ? j : 0; i < M.rows(); i++)
    {
      std::istringstream entry(next_data_line(in, "entries"));
      double v = 0.0;
      if (!(entry >> v))
      {
        throw IoError("Matrix Market: malformed array entry");
      }
      M(i, j) = v;
      if (symmetric)
      {
        M(j, i) = v;
      }
    }
  }
  return M;
}

std::string read_text(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw IoError("cannot open '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_atomic(const std::filesystem::path &path, const std::string &content)
{
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
    {
      throw IoError("cannot write '" + tmp.string() + "'");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out)
    {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
  {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

SparseMatrix read_matrix_market_sparse(const std::filesystem::path &path)
{
  try
  {
    return parse_matrix_market_coordinate(read_text(path));
  }
  catch (const IoError &e)
  {
    throw IoError(path.string() + ": " + e.what());
  }
}

Matrix read_matrix_market_dense(const std::filesystem::path &path)
{
  try
  {
    return parse_matrix_market_array(read_text(path));
  }
  catch (const IoError &e)
  {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string json_text(const nlohmann::json &j) { return j.dump(2) + "\n"; }

OutputSet::OutputSet(std::filesystem::path directory) : dir_(std::move(directory)) {}

void OutputSet::add(const std::string &name, std::string content)
{
  files_.emplace_back(name, std::move(content));
}

std::vector<std::filesystem::path> OutputSet::commit()
{
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec)
  {
    throw IoError("cannot create output directory '" + dir_.string() + "'");
  }
  std::vector<std::filesystem::path> written;
  try
  {
    for (const auto &[name, content] : files_)
    {
      const auto path = dir_ / name;
      write_text_atomic(path, content);
      written.push_back(path);
    }
  }
  catch (...)
  {
    for (const auto &p : written)
    {
      std::filesystem::remove(p, ec);
    }
    throw;
  }
  files_.clear();
  return written;
}

}  // namespace mrb
