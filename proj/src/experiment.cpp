// SPDX-License-Identifier: Apache-2.0

#include "mrb/experiment.hpp"

#include "mrb/assembly.hpp"
#include "mrb/gauge.hpp"

namespace mrb
{

Experiment::Experiment(const RunConfig &cfg)
  : cfg_(cfg), mesh_((cfg.validate(), build_mesh(cfg.dims0, cfg.resolution))),
    grad_(discrete_gradient(mesh_))
{
  if (mesh_.num_free_edges() < 1)
  {
    throw UsageError("the mesh has no interior edges; increase the resolution");
  }
  const CavityMesh mesh1 = build_mesh(cfg.dims1, cfg.resolution);
  const std::vector<Point> coords1 = bulged_vertices(mesh1, cfg.bulge);
  ParametrizedSystem system(assemble(mesh_), assemble(mesh1, coords1));
  lambda_hat_ = analytic_brick_eigenvalues(cfg.dims0, 1).front();
  SparseEigenOptions eigen;
  eigen.shift = 0.9 * lambda_hat_;
  eigen.lambda_cut = cfg.lambda_cut.value_or(0.1 * lambda_hat_);
  eigen.seed = cfg.seed;
  if (cfg.deflation)
  {
    eigen.deflation_gradient = &grad_.G;
  }
  if (!(eigen.shift > eigen.lambda_cut))
  {
    throw ConfigError("lambda_cut: must stay below the shift 0.9 x " +
                        std::to_string(lambda_hat_),
                      "lambda_cut");
  }
  problem_ = std::make_unique<RbProblem>(std::move(system), build_tree(mesh_, grad_), eigen,
                                         cfg.freeze_H);
}

nlohmann::json Experiment::summary() const
{
  return {{"mesh", mesh_.summary()},
          {"N", problem_->num_dofs()},
          {"cotree", problem_->cotree_size()},
          {"tree", problem_->gauge().tree_size()},
          {"lambda_hat", lambda_hat_},
          {"shift", problem_->eigen_options().shift},
          {"lambda_cut", problem_->eigen_options().lambda_cut}};
}

}  // namespace mrb
