// SPDX-License-Identifier: Apache-2.0

#include "mrb/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include "mrb/error.hpp"
#include "mrb/instrument.hpp"

namespace mrb
{

namespace
{

const char *const mixed_col = "mixed";
const char *const classical_col = "classical";
const char *const sparse_col = "sparse";

nlohmann::json number(double v)
{
  if (std::isfinite(v))
  {
    return v;
  }
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

nlohmann::json vector_json(const Vector &v)
{
  nlohmann::json j = nlohmann::json::array();
  for (Index i = 0; i < v.size(); i++)
  {
    j.push_back(number(v[i]));
  }
  return j;
}

std::string sci(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::optional<double> construction_seconds(const BenchReport &r, const std::string &col)
{
  double total = 0.0;
  for (const char *name : {"Projection to Cotree DoFs", "POD", "Greedy"})
  {
    const auto s = r.seconds(name, col);
    if (!s)
    {
      return std::nullopt;
    }
    total += *s;
  }
  return total;
}

std::optional<double> ratio(std::optional<double> num, std::optional<double> den)
{
  if (!num || !den || !(*den > 0.0))
  {
    return std::nullopt;
  }
  return *num / *den;
}

}  // namespace

double median(std::vector<double> samples)
{
  if (samples.empty())
  {
    throw UsageError("median of an empty sample");
  }
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  return n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

std::vector<double> time_repeated(const std::function<void()> &fn, int repetitions)
{
  fn();
  std::vector<double> out;
  for (int r = 0; r < repetitions; r++)
  {
    Stopwatch watch;
    fn();
    out.push_back(watch.seconds());
  }
  return out;
}

const PhaseTiming *BenchReport::phase(const std::string &name) const
{
  for (const auto &p : phases)
  {
    if (p.name == name)
    {
      return &p;
    }
  }
  return nullptr;
}

std::optional<double> BenchReport::seconds(const std::string &name,
                                           const std::string &column) const
{
  const PhaseTiming *p = phase(name);
  if (!p)
  {
    return std::nullopt;
  }
  auto it = p->seconds.find(column);
  if (it == p->seconds.end())
  {
    return std::nullopt;
  }
  return it->second;
}

void BenchReport::validate() const
{
  for (const auto &name : bench_phase_names())
  {
    if (!phase(name))
    {
      throw NumericalError("benchmark report lacks the phase row '" + name + "'");
    }
  }
  for (const auto &p : phases)
  {
    for (const auto &[col, s] : p.seconds)
    {
      if (!std::isfinite(s) || s < 0.0)
      {
        throw NumericalError("benchmark report has an invalid time in '" + p.name + "' (" +
                             col + ")");
      }
    }
  }
  for (const auto &[col, e] : errors)
  {
    if (e.size() != K)
    {
      throw NumericalError("error table for " + col + " does not have K rows");
    }
  }
}

nlohmann::json BenchReport::to_json() const
{
  nlohmann::json j;
  j["schema_version"] = bench_schema_version;
  j["config"] = config;
  j["K"] = K;
  j["repetitions"] = repetitions;
  j["dofs"] = {{"N", N}, {"cotree", cotree}, {"n_red", n_red}};
  nlohmann::json ph = nlohmann::json::array();
  for (const auto &p : phases)
  {
    nlohmann::json row{{"name", p.name}, {"seconds", nlohmann::json::object()},
                       {"samples", nlohmann::json::object()}};
    for (const auto &[col, s] : p.seconds)
    {
      row["seconds"][col] = s;
    }
    for (const auto &[col, s] : p.samples)
    {
      row["samples"][col] = s;
    }
    ph.push_back(row);
  }
  j["phases"] = ph;
  j["peak_dense_entries"] = peak_dense_entries;
  nlohmann::json eta = nlohmann::json::object();
  for (const auto &[col, v] : final_max_eta)
  {
    eta[col] = number(v);
  }
  j["final_max_eta"] = eta;
  nlohmann::json err = nlohmann::json::array();
  for (int i = 0; i < K; i++)
  {
    nlohmann::json row{{"mode", i + 1}};
    for (const auto &[col, e] : errors)
    {
      row[col] = number(e[i]);
    }
    err.push_back(row);
  }
  j["errors"] = err;
  nlohmann::json sw = nlohmann::json::object();
  for (const auto &[col, s] : sweep)
  {
    sw[col] = nlohmann::json::array();
    for (double v : s)
    {
      sw[col].push_back(number(v));
    }
  }
  j["sweep"] = sw;
  nlohmann::json tr = nlohmann::json::object();
  for (const auto &[col, t] : tracking)
  {
    tr[col] = {{"grid_points", t.grid_points},
               {"bisections", t.bisections},
               {"min_correlation", t.min_correlation},
               {"permutation_valid", t.permutation_valid},
               {"lambda_start", vector_json(t.lambda_start)},
               {"lambda_end", vector_json(t.lambda_end)}};
  }
  j["tracking"] = tr;
  nlohmann::json ratios = nlohmann::json::object();
  auto put = [&](const char *key, std::optional<double> v) {
    ratios[key] = v ? number(*v) : nlohmann::json(nullptr);
  };
  put("evp_full_over_rb",
      ratio(seconds("EVP (full, cotree/sparse)", sparse_col), seconds("EVP (RB)", mixed_col)));
  put("tracking_full_over_rb", ratio(seconds("Tracking (full, sparse)", sparse_col),
                                     seconds("Tracking (RB)", mixed_col)));
  put("construction_classical_over_mixed",
      ratio(construction_seconds(*this, classical_col), construction_seconds(*this, mixed_col)));
  j["ratios"] = ratios;
  j["failures"] = failures;
  return j;
}

std::string BenchReport::table() const
{
  std::ostringstream out;
  out << "N = " << N << ", |C| = " << cotree;
  for (const auto &[col, n] : n_red)
  {
    out << ", N_red(" << col << ") = " << n;
  }
  out << ", median of " << repetitions << " runs\n\n";
  const std::vector<std::string> cols{mixed_col, classical_col, sparse_col};
  out << std::left << std::setw(28) << "phase [s]";
  for (const auto &c : cols)
  {
    out << std::setw(12) << c;
  }
  out << "\n";
  for (const auto &p : phases)
  {
    out << std::setw(28) << p.name;
    for (const auto &c : cols)
    {
      auto it = p.seconds.find(c);
      out << std::setw(12) << (it == p.seconds.end() ? std::string("-") : sci(it->second));
    }
    out << "\n";
  }
  out << "\n" << std::setw(28) << "mode: avg rel. error";
  for (const auto &[col, e] : errors)
  {
    out << std::setw(12) << col;
  }
  out << "\n";
  for (int i = 0; i < K; i++)
  {
    out << std::setw(28) << i + 1;
    for (const auto &[col, e] : errors)
    {
      out << std::setw(12) << sci(e[i]);
    }
    out << "\n";
  }
  const nlohmann::json r = to_json()["ratios"];
  out << "\nratios: EVP full/RB = " << r["evp_full_over_rb"].dump()
      << ", tracking full/RB = " << r["tracking_full_over_rb"].dump()
      << ", construction classical/mixed = " << r["construction_classical_over_mixed"].dump()
      << "\n";
  for (const auto &f : failures)
  {
    out << "FAILED: " << f << "\n";
  }
  return out.str();
}

std::string BenchReport::sweep_csv() const
{
  std::ostringstream out;
  out << "n_red";
  std::size_t rows = 0;
  for (const auto &[col, s] : sweep)
  {
    out << ',' << col;
    rows = std::max(rows, s.size());
  }
  out << "\n" << std::setprecision(17);
  for (std::size_t k = 0; k < rows; k++)
  {
    out << k + 1;
    for (const auto &[col, s] : sweep)
    {
      out << ',';
      if (k < s.size())
      {
        out << s[k];
      }
    }
    out << "\n";
  }
  return out.str();
}

BenchReport run_bench(const Experiment &experiment)
{
  const RunConfig &cfg = experiment.config();
  const RbProblem &problem = experiment.problem();
  const int reps = cfg.repetitions;
  const int K = cfg.K;

  BenchReport rep;
  rep.config = cfg.to_json();
  rep.K = K;
  rep.repetitions = reps;
  rep.N = problem.num_dofs();
  rep.cotree = problem.cotree_size();
  for (const auto &name : bench_phase_names())
  {
    rep.phases.push_back({name, {}, {}});
  }
  auto record = [&](const std::string &name, const std::string &col,
                    std::vector<double> samples) {
    for (auto &p : rep.phases)
    {
      if (p.name == name)
      {
        p.seconds[col] = median(samples);
        p.samples[col] = std::move(samples);
      }
    }
  };
  auto guarded = [&](const std::string &what, const std::function<void()> &fn) {
    try
    {
      fn();
    }
    catch (const std::exception &e)
    {
      rep.failures.push_back(what + ": " + e.what());
    }
  };

  const TrainingSets sets = make_training_sets(cfg.n_pod, cfg.n_train, cfg.seed);
  const PipelineOptions popts = pipeline_options(cfg);
  std::map<std::string, Matrix> bases;
  for (GaugeMode mode : {GaugeMode::mixed, GaugeMode::classical})
  {
    const std::string col = to_string(mode);
    guarded("basis construction (" + col + ")", [&] {
      std::vector<double> proj, pod, greedy;
      PipelineResult last;
      for (int r = 0; r <= reps; r++)
      {
        PipelineResult res = build_basis(problem, mode, sets, popts);
        if (r > 0)
        {
          proj.push_back(res.timings.projection);
          pod.push_back(res.timings.pod);
          greedy.push_back(res.timings.greedy);
        }
        last = std::move(res);
      }
      record("Projection to Cotree DoFs", col, proj);
      record("POD", col, pod);
      record("Greedy", col, greedy);
      bases[col] = last.greedy.basis.Z;
      rep.n_red[col] = last.greedy.basis.size();
      rep.final_max_eta[col] = last.greedy.final_max_eta;
      rep.peak_dense_entries[col] = last.peak_dense_entries;
    });
  }

  const std::vector<double> params = random_parameters(cfg.eval_set_size, cfg.seed);
  const double count = static_cast<double>(params.size());
  Matrix reference(static_cast<Index>(params.size()), K);
  bool have_reference = false;
  guarded("EVP (full, sparse)", [&] {
    auto samples = time_repeated(
      [&] {
        for (std::size_t s = 0; s < params.size(); s++)
        {
          reference.row(static_cast<Index>(s)) =
            problem.solve_full(params[s], K).values.transpose();
        }
      },
      reps);
    for (double &v : samples)
    {
      v /= count;
    }
    record("EVP (full, cotree/sparse)", sparse_col, samples);
    have_reference = true;
  });
  guarded("EVP (full, cotree)", [&] {
    const std::size_t n = std::min<std::size_t>(params.size(), 10);
    std::vector<CotreeSystem> systems;
    for (std::size_t s = 0; s < n; s++)
    {
      systems.push_back(build_cotree_system(problem.transform_at(params[s])));
    }
    auto samples = time_repeated(
      [&] {
        for (const auto &c : systems)
        {
          solve_dense_gevp(c.A_hat, c.B_hat, K);
        }
      },
      reps);
    for (double &v : samples)
    {
      v /= static_cast<double>(n);
    }
    record("EVP (full, cotree/sparse)", classical_col, samples);
  });

  for (GaugeMode mode : {GaugeMode::mixed, GaugeMode::classical})
  {
    const std::string col = to_string(mode);
    if (!bases.count(col))
    {
      continue;
    }
    guarded("EVP (RB, " + col + ")", [&] {
      auto evaluator = make_evaluator(problem, mode);
      evaluator->set_basis(bases[col]);
      std::vector<ReducedSystem> reduced;
      for (double t : params)
      {
        reduced.push_back(evaluator->reduce(t));
      }
      auto samples = time_repeated(
        [&] {
          for (const auto &red : reduced)
          {
            solve_dense_gevp(red.A_tilde, red.B_tilde, K);
          }
        },
        reps);
      for (double &v : samples)
      {
        v /= count;
      }
      record("EVP (RB)", col, samples);
    });
    if (have_reference)
    {
      guarded("error study (" + col + ")", [&] {
        auto evaluator = make_evaluator(problem, mode);
        const Matrix &Z = bases[col];
        std::vector<Index> sizes(static_cast<std::size_t>(Z.cols()));
        std::iota(sizes.begin(), sizes.end(), Index(1));
        const Matrix err = error_sweep(*evaluator, Z, sizes, params, reference, K);
        rep.errors[col] = err.row(err.rows() - 1).transpose();
        std::vector<double> curve;
        for (Index k = 0; k < err.rows(); k++)
        {
          curve.push_back(err.row(k).mean());
        }
        rep.sweep[col] = std::move(curve);
      });
    }
  }

  const TrackingOptions topts = tracking_options(cfg);
  std::map<std::string, std::vector<double>> track_samples;
  std::map<std::string, bool> track_failed;
  auto summarize = [&](const std::string &col, const TrackingRun &run) {
    TrackingSummary s;
    s.grid_points = static_cast<int>(run.grid.size());
    s.bisections = run.stats.bisections;
    s.min_correlation = run.min_correlation();
    s.permutation_valid = run.permutation_valid();
    s.lambda_start = run.lambda.row(0).transpose();
    s.lambda_end = run.lambda.row(run.lambda.rows() - 1).transpose();
    rep.tracking[col] = s;
  };
  // Interleaved so that slow phases of a noisy machine hit all paths alike.
  for (int r = 0; r <= reps; r++)
  {
    std::vector<std::pair<std::string, std::function<TrackingRun()>>> jobs;
    jobs.emplace_back(sparse_col, [&] { return track_full(problem, topts); });
    for (GaugeMode mode : {GaugeMode::mixed, GaugeMode::classical})
    {
      const std::string col = to_string(mode);
      if (bases.count(col))
      {
        jobs.emplace_back(col, [&, mode, col] {
          auto evaluator = make_evaluator(problem, mode);
          evaluator->set_basis(bases[col]);
          return track_reduced(*evaluator, topts);
        });
      }
    }
    for (auto &[col, job] : jobs)
    {
      if (track_failed[col])
      {
        continue;
      }
      try
      {
        Stopwatch watch;
        TrackingRun run = job();
        const double s = watch.seconds();
        if (r > 0)
        {
          track_samples[col].push_back(s);
        }
        if (r == reps)
        {
          summarize(col, run);
        }
      }
      catch (const std::exception &e)
      {
        track_failed[col] = true;
        rep.failures.push_back("tracking (" + col + "): " + e.what());
      }
    }
  }
  for (const auto &[col, samples] : track_samples)
  {
    if (track_failed[col] || samples.empty())
    {
      continue;
    }
    record(col == sparse_col ? "Tracking (full, sparse)" : "Tracking (RB)", col, samples);
  }
  rep.validate();
  return rep;
}

}  // namespace mrb
