// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_EXPERIMENT_HPP
#define MRB_EXPERIMENT_HPP

#include <memory>
#include <json.hpp>
#include "mrb/config.hpp"
#include "mrb/mesh.hpp"
#include "mrb/rb.hpp"

namespace mrb
{

// The parametrized cavity problem a configuration describes: brick dims0 at t = 0, the
// (optionally bulged) brick dims1 at t = 1, one mesh topology and one gauge tree.
class Experiment
{
public:
  explicit Experiment(const RunConfig &cfg);
  Experiment(const Experiment &) = delete;
  Experiment &operator=(const Experiment &) = delete;

  const RunConfig &config() const { return cfg_; }
  const CavityMesh &mesh() const { return mesh_; }
  const DiscreteGradient &gradient() const { return grad_; }
  const RbProblem &problem() const { return *problem_; }
  // First analytic eigenvalue of the t = 0 brick; sets the shift and the default cut.
  double lambda_hat() const { return lambda_hat_; }

  nlohmann::json summary() const;

private:
  RunConfig cfg_;
  CavityMesh mesh_;
  DiscreteGradient grad_;
  double lambda_hat_ = 0.0;
  std::unique_ptr<RbProblem> problem_;
};

}  // namespace mrb

#endif  // MRB_EXPERIMENT_HPP
