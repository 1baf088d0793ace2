// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_CONFIG_HPP
#define MRB_CONFIG_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>
#include <json.hpp>
#include "mrb/error.hpp"
#include "mrb/mesh.hpp"
#include "mrb/rb.hpp"
#include "mrb/tracking.hpp"

namespace mrb
{

// Invalid configuration. `line` is the 1-based line of the offending key when known.
class ConfigError : public UsageError
{
public:
  ConfigError(const std::string &what, std::string key, int line = 0)
    : UsageError(what), key_(std::move(key)), line_(line)
  {
  }
  const std::string &key() const { return key_; }
  int line() const { return line_; }

private:
  std::string key_;
  int line_;
};

// Experiment settings. The text form is one `key = value` per line; `#` starts a comment,
// triples are whitespace separated and every key is optional (defaults below describe the
// desk-scale study). Unknown or repeated keys are rejected.
struct RunConfig
{
  Point dims0{1.0, 1.1, 1.2};
  Point dims1{1.0, 1.1, 0.6};
  // Lid bulge of the t = 1 cavity, see bulged_vertices(). 0 gives the plain brick morph.
  double bulge = 0.3;
  std::array<Index, 3> resolution{6, 6, 6};
  int K = 5;
  int n_pod = 20;
  int n_train = 50;
  Index n_init = 40;
  Index n_max = 60;
  double tol = 1.0e-12;
  // Unset: 0.1 times the first analytic eigenvalue of the t = 0 brick.
  std::optional<double> lambda_cut;
  GaugeMode gauge = GaugeMode::mixed;
  double threshold = 0.9;
  int initial_steps = 10;
  int max_depth = 10;
  int eval_set_size = 50;
  std::uint64_t seed = 1;
  std::string output = "maxwell_rb_out";
  bool freeze_H = false;
  Matching matching = Matching::greedy;
  int guard = 1;
  bool deflation = false;
  int repetitions = 5;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  std::string serialize() const;
  nlohmann::json to_json() const;
  // Keys that determine the reduced basis (everything except tracking, benchmark and
  // output settings).
  nlohmann::json basis_fingerprint() const;

  // Parses and validates; errors carry "<source>:<line>: " prefixes.
  static RunConfig parse(const std::string &text, const std::string &source = "<config>");
  static RunConfig load(const std::string &path);

  bool operator==(const RunConfig &) const = default;
};

// Keys in serialization order.
std::vector<std::string> config_keys();

TrackingOptions tracking_options(const RunConfig &cfg);
PipelineOptions pipeline_options(const RunConfig &cfg);

}  // namespace mrb

#endif  // MRB_CONFIG_HPP
