#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tikhonov/core.hpp"
#include "tikhonov/integrate.hpp"
#include "tikhonov/models.hpp"
#include "tikhonov/reduction.hpp"

namespace tikhonov::cli {

enum ExitCode : int { kOk = 0, kIntegrationFailure = 2, kHypothesisFailure = 3, kUsage = 64 };

class UsageError : public Error {
 public:
  using Error::Error;
};

/// Which built-in (or user) model a command runs, with its parameters.
struct ModelChoice {
  std::string kind = "predprey";  // predprey | allee | user-json
  models::PredPreyParams predprey;
  models::AlleeParams allee;
  nlohmann::json user;  // system description for user-json
  bool literal = false;

  FastSlowSystem build() const;
  /// (u, v) concatenated.
  Vector default_init() const;
  double default_eps() const;
  nlohmann::json params() const;
  std::vector<std::string> u_names() const;
  std::vector<std::string> v_names() const;

  /// Sets one parameter by its exact key; throws UsageError on unknown keys.
  void set_param(const std::string& key, double value);
};

/// Every series a run produces, sampled on one output grid.
struct RunData {
  std::vector<double> t;
  std::vector<Vector> u_full, v_full, u_reduced, v_qss, v_composite;
  ErrorCurves curves;
};

struct SimulationConfig {
  double eps = 0.05;
  double t_end = 100.0;
  double dt_out = 0.01;
  Method method = Method::rk45_adaptive;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double rho = 1e-3;
};

/// Full system, reduced system, initial layer and error curves from (u0, v0).
RunData simulate(const FastSlowSystem& sys, const Vector& u0, const Vector& v0, const SimulationConfig& cfg);

/// Fast-time horizon for the layer: long enough for ~50 e-folds at the
/// layer's own rate, never past t_end / eps.
double layer_horizon(const FastSlowSystem& sys, const Vector& u0, const Vector& phi0, double eps, double t_end);

std::string format_number(double x);
/// RFC-4180 field quoting.
std::string csv_field(const std::string& s);
std::uint64_t fnv1a(const std::string& s);

/// Columns: t, u_full, v_full, u_reduced, v_qss, u_composite, v_composite,
/// err_u, err_v, err_composite. `meta` lines are written first, each
/// prefixed with "# ".
void write_csv(std::ostream& os, const RunData& data, const std::vector<std::string>& u_names,
               const std::vector<std::string>& v_names, const std::vector<std::string>& meta);

struct SweepRow {
  double eps = 0.0;
  double sup_composite = 0.0;      // sup over all t of the composite v-error
  double sup_u_after_t_rho = 0.0;  // sup over t >= eps tau_rho
  double sup_v_after_t_rho = 0.0;
  double t_rho = 0.0;
  double final_err_u = 0.0;
  double final_err_v = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<double> order_u;
  std::optional<double> order_composite;
};

/// One simulation per eps, run concurrently; rows keep the order of
/// `eps_list`, which must be strictly decreasing.
SweepResult sweep(const FastSlowSystem& sys, const Vector& u0, const Vector& v0, const std::vector<double>& eps_list,
                  SimulationConfig cfg);

/// Slope of log err against log eps; empty for fewer than two points or a
/// nonpositive error.
std::optional<double> fit_order(const std::vector<double>& eps, const std::vector<double>& err);

nlohmann::json to_json(const SweepResult& result);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tikhonov::cli
