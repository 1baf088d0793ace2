// SPDX-License-Identifier: Apache-2.0

#include "mrb/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string_view>

namespace mrb
{

namespace
{

std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos)
  {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> tokens(std::string_view s)
{
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size())
  {
    const auto begin = s.find_first_not_of(" \t", pos);
    if (begin == std::string_view::npos)
    {
      break;
    }
    auto end = s.find_first_of(" \t", begin);
    if (end == std::string_view::npos)
    {
      end = s.size();
    }
    out.push_back(s.substr(begin, end - begin));
    pos = end;
  }
  return out;
}

double to_double(std::string_view s, const std::string &key)
{
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || std::isnan(v))
  {
    throw ConfigError(key + ": expected a number, got '" + std::string(s) + "'", key);
  }
  return v;
}

template <typename Int>
Int to_integer(std::string_view s, const std::string &key)
{
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
  {
    throw ConfigError(key + ": expected an integer, got '" + std::string(s) + "'", key);
  }
  return v;
}

bool to_bool(std::string_view s, const std::string &key)
{
  if (s == "true" || s == "on" || s == "yes" || s == "1")
  {
    return true;
  }
  if (s == "false" || s == "off" || s == "no" || s == "0")
  {
    return false;
  }
  throw ConfigError(key + ": expected true or false, got '" + std::string(s) + "'", key);
}

std::vector<std::string_view> triple(std::string_view s, const std::string &key)
{
  auto parts = tokens(s);
  if (parts.size() != 3)
  {
    throw ConfigError(key + ": expected three values, got '" + std::string(s) + "'", key);
  }
  return parts;
}

// Shortest text that parses back to the same double.
std::string format_double(double v)
{
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

nlohmann::json json_double(double v)
{
  if (std::isfinite(v))
  {
    return v;
  }
  return v > 0 ? "inf" : "-inf";
}

struct Field
{
  std::string key;
  std::string help;
  bool basis;
  std::function<void(RunConfig &, std::string_view)> parse;
  std::function<std::string(const RunConfig &)> format;
  std::function<nlohmann::json(const RunConfig &)> json;
};

Field point_field(std::string key, std::string help, Point RunConfig::*member)
{
  return {key, std::move(help), true,
          [key, member](RunConfig &c, std::string_view v) {
            auto p = triple(v, key);
            for (int i = 0; i < 3; i++)
            {
              (c.*member)[i] = to_double(p[i], key);
            }
          },
          [member](const RunConfig &c) {
            const Point &p = c.*member;
            return format_double(p[0]) + " " + format_double(p[1]) + " " + format_double(p[2]);
          },
          [member](const RunConfig &c) {
            const Point &p = c.*member;
            return nlohmann::json::array({p[0], p[1], p[2]});
          }};
}

Field double_field(std::string key, std::string help, bool basis, double RunConfig::*member)
{
  return {key, std::move(help), basis,
          [key, member](RunConfig &c, std::string_view v) { c.*member = to_double(v, key); },
          [member](const RunConfig &c) { return format_double(c.*member); },
          [member](const RunConfig &c) { return json_double(c.*member); }};
}

template <typename Int>
Field int_field(std::string key, std::string help, bool basis, Int RunConfig::*member)
{
  return {key, std::move(help), basis,
          [key, member](RunConfig &c, std::string_view v) {
            c.*member = to_integer<Int>(v, key);
          },
          [member](const RunConfig &c) { return std::to_string(c.*member); },
          [member](const RunConfig &c) { return nlohmann::json(c.*member); }};
}

Field bool_field(std::string key, std::string help, bool basis, bool RunConfig::*member)
{
  return {key, std::move(help), basis,
          [key, member](RunConfig &c, std::string_view v) { c.*member = to_bool(v, key); },
          [member](const RunConfig &c) { return std::string(c.*member ? "true" : "false"); },
          [member](const RunConfig &c) { return nlohmann::json(c.*member); }};
}

const std::vector<Field> &schema()
{
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back(point_field("dims0", "edge lengths a b c of the cavity at t = 0",
                            &RunConfig::dims0));
    f.push_back(point_field("dims1", "edge lengths a b c of the cavity at t = 1",
                            &RunConfig::dims1));
    f.push_back(double_field("bulge", "lid bulge amplitude of the t = 1 cavity (> -1)", true,
                             &RunConfig::bulge));
    f.push_back({"resolution", "cells per direction nx ny nz", true,
                 [](RunConfig &c, std::string_view v) {
                   auto p = triple(v, "resolution");
                   for (int i = 0; i < 3; i++)
                   {
                     c.resolution[i] = to_integer<Index>(p[i], "resolution");
                   }
                 },
                 [](const RunConfig &c) {
                   return std::to_string(c.resolution[0]) + " " +
                          std::to_string(c.resolution[1]) + " " +
                          std::to_string(c.resolution[2]);
                 },
                 [](const RunConfig &c) {
                   return nlohmann::json::array(
                     {c.resolution[0], c.resolution[1], c.resolution[2]});
                 }});
    f.push_back(int_field("K", "number of tracked eigenpairs", true, &RunConfig::K));
    f.push_back(int_field("N_POD", "parameter samples of the POD training set", true,
                          &RunConfig::n_pod));
    f.push_back(int_field("N_train", "parameter samples of the greedy training set", true,
                          &RunConfig::n_train));
    f.push_back(int_field("N_init", "basis size after POD", true, &RunConfig::n_init));
    f.push_back(int_field("N_max", "maximum basis size", true, &RunConfig::n_max));
    f.push_back(double_field("tol", "greedy tolerance on the error estimator (inf: POD only)",
                             true, &RunConfig::tol));
    f.push_back({"lambda_cut", "spurious-mode cut: auto (0.1 x first brick eigenvalue) or a value",
                 true,
                 [](RunConfig &c, std::string_view v) {
                   if (v == "auto")
                   {
                     c.lambda_cut.reset();
                   }
                   else
                   {
                     c.lambda_cut = to_double(v, "lambda_cut");
                   }
                 },
                 [](const RunConfig &c) {
                   return c.lambda_cut ? format_double(*c.lambda_cut) : std::string("auto");
                 },
                 [](const RunConfig &c) {
                   return c.lambda_cut ? json_double(*c.lambda_cut) : nlohmann::json("auto");
                 }});
    f.push_back({"gauge", "gauge of the reduced basis: mixed or classical", true,
                 [](RunConfig &c, std::string_view v) {
                   try
                   {
                     c.gauge = parse_gauge_mode(std::string(v));
                   }
                   catch (const UsageError &e)
                   {
                     throw ConfigError(std::string("gauge: ") + e.what(), "gauge");
                   }
                 },
                 [](const RunConfig &c) { return to_string(c.gauge); },
                 [](const RunConfig &c) { return nlohmann::json(to_string(c.gauge)); }});
    f.push_back(double_field("threshold", "minimum mode correlation while tracking", false,
                             &RunConfig::threshold));
    f.push_back(int_field("initial_steps", "uniform tracking steps before bisection", false,
                          &RunConfig::initial_steps));
    f.push_back(int_field("max_depth", "maximum bisection depth per tracking step", false,
                          &RunConfig::max_depth));
    f.push_back(int_field("eval_set_size", "random parameters of the error study", false,
                          &RunConfig::eval_set_size));
    f.push_back(int_field("seed", "seed of every random choice", true, &RunConfig::seed));
    f.push_back({"output", "output directory", false,
                 [](RunConfig &c, std::string_view v) { c.output = std::string(v); },
                 [](const RunConfig &c) { return c.output; },
                 [](const RunConfig &c) { return nlohmann::json(c.output); }});
    f.push_back(bool_field("freeze_H", "use the t = 0 cotree operator for every t", true,
                           &RunConfig::freeze_H));
    f.push_back({"matching", "mode matching while tracking: greedy or optimal", false,
                 [](RunConfig &c, std::string_view v) {
                   try
                   {
                     c.matching = parse_matching(std::string(v));
                   }
                   catch (const UsageError &e)
                   {
                     throw ConfigError(std::string("matching: ") + e.what(), "matching");
                   }
                 },
                 [](const RunConfig &c) { return to_string(c.matching); },
                 [](const RunConfig &c) { return nlohmann::json(to_string(c.matching)); }});
    f.push_back(int_field("guard", "extra candidate modes solved while tracking", false,
                          &RunConfig::guard));
    f.push_back(bool_field("deflation", "project the gradient range out of the Krylov space",
                           true, &RunConfig::deflation));
    f.push_back(int_field("repetitions", "timed repetitions per benchmark phase", false,
                          &RunConfig::repetitions));
    return f;
  }();
  return fields;
}

const Field *find_field(std::string_view key)
{
  for (const Field &f : schema())
  {
    if (f.key == key)
    {
      return &f;
    }
  }
  return nullptr;
}

void require(bool ok, const std::string &key, const std::string &message)
{
  if (!ok)
  {
    throw ConfigError(key + ": " + message, key);
  }
}

}  // namespace

std::vector<std::string> config_keys()
{
  std::vector<std::string> keys;
  for (const Field &f : schema())
  {
    keys.push_back(f.key);
  }
  return keys;
}

void RunConfig::validate() const
{
  for (int i = 0; i < 3; i++)
  {
    require(std::isfinite(dims0[i]) && dims0[i] > 0.0, "dims0", "lengths must be positive");
    require(std::isfinite(dims1[i]) && dims1[i] > 0.0, "dims1", "lengths must be positive");
    require(resolution[i] >= 1, "resolution", "cell counts must be at least 1");
  }
  require(std::isfinite(bulge) && bulge > -1.0, "bulge", "must be finite and greater than -1");
  require(K >= 1, "K", "must be at least 1");
  require(n_pod >= 1, "N_POD", "must be positive");
  require(n_train >= 1, "N_train", "must be positive");
  require(n_init >= 1, "N_init", "must be positive");
  require(n_max >= 1, "N_max", "must be positive");
  require(static_cast<std::int64_t>(n_init) <= static_cast<std::int64_t>(n_pod) * K, "N_init",
          "N_init (" + std::to_string(n_init) + ") exceeds N_POD*K (" +
            std::to_string(static_cast<std::int64_t>(n_pod) * K) + ")");
  require(n_init <= n_max, "N_init",
          "N_init (" + std::to_string(n_init) + ") exceeds N_max (" + std::to_string(n_max) + ")");
  require(tol > 0.0, "tol", "must be positive");
  if (lambda_cut)
  {
    require(std::isfinite(*lambda_cut) && *lambda_cut > 0.0, "lambda_cut",
            "must be positive or auto");
  }
  require(threshold >= 0.0 && threshold < 1.0, "threshold", "must lie in [0, 1)");
  require(initial_steps >= 2, "initial_steps", "must be at least 2");
  require(max_depth >= 0, "max_depth", "must be non-negative");
  require(eval_set_size >= 1, "eval_set_size", "must be positive");
  require(!output.empty(), "output", "must not be empty");
  require(guard >= 0, "guard", "must be non-negative");
  require(repetitions >= 1, "repetitions", "must be positive");
}

std::string RunConfig::serialize() const
{
  std::ostringstream out;
  for (const Field &f : schema())
  {
    out << "# " << f.help << "\n" << f.key << " = " << f.format(*this) << "\n";
  }
  return out.str();
}

nlohmann::json RunConfig::to_json() const
{
  nlohmann::json j = nlohmann::json::object();
  for (const Field &f : schema())
  {
    j[f.key] = f.json(*this);
  }
  return j;
}

nlohmann::json RunConfig::basis_fingerprint() const
{
  nlohmann::json j = nlohmann::json::object();
  for (const Field &f : schema())
  {
    if (f.basis)
    {
      j[f.key] = f.json(*this);
    }
  }
  return j;
}

RunConfig RunConfig::parse(const std::string &text, const std::string &source)
{
  RunConfig cfg;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  auto where = [&](int l) { return source + ":" + std::to_string(l) + ": "; };
  while (std::getline(in, raw))
  {
    line++;
    std::string_view s(raw);
    if (const auto hash = s.find('#'); hash != std::string_view::npos)
    {
      s = s.substr(0, hash);
    }
    s = trim(s);
    if (s.empty())
    {
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
    {
      throw ConfigError(where(line) + "expected 'key = value'", "", line);
    }
    const std::string key(trim(s.substr(0, eq)));
    const std::string_view value = trim(s.substr(eq + 1));
    const Field *field = find_field(key);
    if (!field)
    {
      throw ConfigError(where(line) + "unknown key '" + key + "'", key, line);
    }
    if (auto it = seen.find(key); it != seen.end())
    {
      throw ConfigError(where(line) + "duplicate key '" + key + "' (first set on line " +
                          std::to_string(it->second) + ")",
                        key, line);
    }
    if (value.empty())
    {
      throw ConfigError(where(line) + key + ": missing value", key, line);
    }
    seen[key] = line;
    try
    {
      field->parse(cfg, value);
    }
    catch (const ConfigError &e)
    {
      throw ConfigError(where(line) + e.what(), key, line);
    }
  }
  try
  {
    cfg.validate();
  }
  catch (const ConfigError &e)
  {
    auto it = seen.find(e.key());
    if (it != seen.end())
    {
      throw ConfigError(where(it->second) + e.what(), e.key(), it->second);
    }
    throw ConfigError(source + ": " + e.what(), e.key());
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw UsageError("cannot open config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

TrackingOptions tracking_options(const RunConfig &cfg)
{
  TrackingOptions o;
  o.K = cfg.K;
  o.threshold = cfg.threshold;
  o.initial_steps = cfg.initial_steps;
  o.max_depth = cfg.max_depth;
  o.guard = cfg.guard;
  o.matching = cfg.matching;
  return o;
}

PipelineOptions pipeline_options(const RunConfig &cfg)
{
  PipelineOptions o;
  o.K = cfg.K;
  o.n_init = cfg.n_init;
  o.n_max = cfg.n_max;
  o.tol = cfg.tol;
  return o;
}

}  // namespace mrb
