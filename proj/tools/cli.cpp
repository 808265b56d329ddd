#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>

#include "tikhonov/dichotomy.hpp"
#include "tikhonov/hypotheses.hpp"
#include "tikhonov/layer.hpp"
#include "tikhonov/smalldense.hpp"
#include "tikhonov/version.hpp"
#include "user_model.hpp"

namespace tikhonov::cli {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

FastSlowSystem ModelChoice::build() const {
  if (kind == "predprey") return models::predprey_system(predprey, literal);
  if (literal) throw UsageError("--literal-paper-eq7 only applies to --model predprey");
  if (kind == "allee") return models::allee_system(allee);
  if (kind == "user-json") {
    if (user.is_null()) throw UsageError("--model user-json needs a \"system\" entry in --config");
    return user_system(user);
  }
  throw UsageError("unknown model '" + kind + "' (expected predprey, allee or user-json)");
}

Vector ModelChoice::default_init() const {
  if (kind == "predprey") {
    const Vector s = models::predprey_default_init();  // (n, n2, p)
    return Vector{{s(0), s(2), s(1)}};
  }
  if (kind == "allee") return Vector{{0.2, 0.0}};
  return user_default_init(user);
}

double ModelChoice::default_eps() const {
  if (kind == "predprey") return 0.05;
  if (kind == "allee") return 0.018;
  return std::min(0.05, user.value("eps_max", 1.0));
}

json ModelChoice::params() const {
  if (kind == "predprey") {
    const auto& p = predprey;
    return {{"m1", p.m1}, {"m2", p.m2}, {"r1", p.r1}, {"r2", p.r2}, {"a", p.a}, {"b", p.b}, {"d", p.d}};
  }
  if (kind == "allee") {
    const auto& p = allee;
    return {{"beta", p.beta}, {"mu", p.mu}, {"lambda", p.lambda}, {"xiK", p.xiK}};
  }
  return user;
}

std::vector<std::string> ModelChoice::u_names() const {
  if (kind == "predprey") return {"n", "p"};
  if (kind == "allee") return {"z"};
  std::vector<std::string> out;
  for (int i = 0; i < user.at("n").get<int>(); ++i) out.push_back("u" + std::to_string(i));
  return out;
}

std::vector<std::string> ModelChoice::v_names() const {
  if (kind == "predprey") return {"n2"};
  if (kind == "allee") return {"y"};
  std::vector<std::string> out;
  for (int i = 0; i < user.at("m").get<int>(); ++i) out.push_back("v" + std::to_string(i));
  return out;
}

void ModelChoice::set_param(const std::string& key, double value) {
  std::map<std::string, double*> slots;
  if (kind == "predprey") {
    auto& p = predprey;
    slots = {{"m1", &p.m1}, {"m2", &p.m2}, {"r1", &p.r1}, {"r2", &p.r2}, {"a", &p.a}, {"b", &p.b}, {"d", &p.d}};
  } else if (kind == "allee") {
    auto& p = allee;
    slots = {{"beta", &p.beta}, {"mu", &p.mu}, {"lambda", &p.lambda}, {"xiK", &p.xiK}};
  } else {
    throw UsageError("model '" + kind + "' takes no parameters; edit its system description instead");
  }
  const auto it = slots.find(key);
  if (it == slots.end()) throw UsageError("unknown parameter '" + key + "' for model " + kind);
  *it->second = value;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

double layer_horizon(const FastSlowSystem& sys, const Vector& u0, const Vector& phi0, double eps, double t_end) {
  const Matrix gv = jacobian(sys, Partial::g_v, State{0.0, u0, phi0}, 0.0);
  double rate = -dense::spectral_bound<double>(gv);
  if (!(rate > 0.0) || !std::isfinite(rate)) rate = 0.1;
  return std::min(60.0 / rate, t_end / eps);
}

RunData simulate(const FastSlowSystem& sys, const Vector& u0, const Vector& v0, const SimulationConfig& cfg) {
  const std::vector<double> grid = uniform_grid(0.0, cfg.t_end, cfg.dt_out);
  IntegratorConfig base;
  base.method = cfg.method;
  base.rel_tol = cfg.rel_tol;
  base.abs_tol = cfg.abs_tol;
  const Trajectory full = integrate_full(sys, u0, v0, cfg.eps, grid, full_system_config(cfg.eps, base));

  ReducedConfig rc;
  rc.integrator.rel_tol = cfg.rel_tol;
  rc.integrator.abs_tol = cfg.abs_tol;
  rc.v_seed = default_qss_seed(sys, u0, 0.0);
  const SlowSolution slow = integrate_reduced(sys, u0, grid, rc);

  const Vector& phi0 = slow.vbar.front();
  const double tau_max = layer_horizon(sys, u0, phi0, cfg.eps, cfg.t_end);
  LayerConfig lc;
  lc.dtau = std::min(1e-3, tau_max / 1000.0);
  const LayerSolution layer = integrate_layer(sys, u0, v0, tau_max, lc, phi0);

  RunData data;
  data.curves = error_curves(full, slow, layer, cfg.eps, grid, cfg.rho);
  data.t = grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vector& y = full.value(i);
    data.u_full.push_back(y.head(sys.n));
    data.v_full.push_back(y.tail(sys.m));
    data.u_reduced.push_back(slow.traj.value(i));
    data.v_qss.push_back(slow.vbar[i]);
    data.v_composite.push_back(composite_v(slow, layer, cfg.eps, grid[i]));
  }
  return data;
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_csv(std::ostream& os, const RunData& data, const std::vector<std::string>& u_names,
               const std::vector<std::string>& v_names, const std::vector<std::string>& meta) {
  for (const auto& line : meta) os << "# " << line << "\n";
  std::vector<std::string> header{"t"};
  auto names = [&](const std::vector<std::string>& base, const char* suffix) {
    for (const auto& b : base) header.push_back(b + suffix);
  };
  names(u_names, "_full");
  names(v_names, "_full");
  names(u_names, "_reduced");
  names(v_names, "_qss");
  names(u_names, "_composite");
  names(v_names, "_composite");
  header.insert(header.end(), {"err_u", "err_v", "err_composite"});
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << csv_field(header[i]);
  os << "\r\n";

  for (std::size_t i = 0; i < data.t.size(); ++i) {
    os << format_number(data.t[i]);
    auto put = [&](const Vector& x) {
      for (Eigen::Index k = 0; k < x.size(); ++k) os << ',' << format_number(x(k));
    };
    put(data.u_full[i]);
    put(data.v_full[i]);
    put(data.u_reduced[i]);
    put(data.v_qss[i]);
    put(data.u_reduced[i]);  // the composite slow part carries no layer term
    put(data.v_composite[i]);
    os << ',' << format_number(data.curves.err_u[i]) << ',' << format_number(data.curves.err_v[i]) << ','
       << format_number(data.curves.err_composite[i]) << "\r\n";
  }
}

std::optional<double> fit_order(const std::vector<double>& eps, const std::vector<double>& err) {
  if (eps.size() < 2 || eps.size() != err.size()) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || !(err[i] > 0.0)) return std::nullopt;
    const double x = std::log(eps[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(eps.size());
  const double denom = n * sxx - sx * sx;
  if (!(denom > 0.0)) return std::nullopt;
  return (n * sxy - sx * sy) / denom;
}

SweepResult sweep(const FastSlowSystem& sys, const Vector& u0, const Vector& v0, const std::vector<double>& eps_list,
                  SimulationConfig cfg) {
  for (std::size_t i = 1; i < eps_list.size(); ++i) {
    if (!(eps_list[i] < eps_list[i - 1])) throw UsageError("sweep: eps list must be strictly decreasing");
  }
  std::vector<std::future<SweepRow>> jobs;
  for (double eps : eps_list) {
    jobs.push_back(std::async(std::launch::async, [&sys, &u0, &v0, cfg, eps]() mutable {
      cfg.eps = eps;
      const RunData data = simulate(sys, u0, v0, cfg);
      SweepRow row;
      row.eps = eps;
      row.sup_composite = data.curves.sup_composite;
      row.sup_u_after_t_rho = data.curves.sup_u_after_t_rho;
      row.sup_v_after_t_rho = data.curves.sup_v_after_t_rho;
      row.t_rho = data.curves.t_rho;
      row.final_err_u = data.curves.err_u.back();
      row.final_err_v = data.curves.err_v.back();
      return row;
    }));
  }
  SweepResult out;
  for (auto& job : jobs) out.rows.push_back(job.get());
  std::vector<double> e, su, sc;
  for (const auto& r : out.rows) {
    e.push_back(r.eps);
    su.push_back(r.sup_u_after_t_rho);
    sc.push_back(r.sup_composite);
  }
  out.order_u = fit_order(e, su);
  out.order_composite = fit_order(e, sc);
  return out;
}

json to_json(const SweepResult& result) {
  json rows = json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"eps", r.eps},
                    {"sup_composite", r.sup_composite},
                    {"sup_u_after_t_rho", r.sup_u_after_t_rho},
                    {"sup_v_after_t_rho", r.sup_v_after_t_rho},
                    {"t_rho", std::isfinite(r.t_rho) ? json(r.t_rho) : json(nullptr)},
                    {"final_err_u", r.final_err_u},
                    {"final_err_v", r.final_err_v}});
  }
  auto opt = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
  return {{"rows", rows}, {"order_u", opt(result.order_u)}, {"order_composite", opt(result.order_composite)}};
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

namespace {

struct Flags {
  std::string model;
  double eps = 0, t_end = 0, dt_out = 0, delta = 0, sigma = 0;
  std::string eps_list, init, config, out, method, matrix;
  std::vector<std::string> params;
  bool literal = false, require = false;
  int samples = 64;
  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    const auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_flags(CLI::App* app, Flags& f) {
  f.opts["model"] = app->add_option("--model", f.model, "predprey | allee | user-json");
  f.opts["eps"] = app->add_option("--eps", f.eps, "Singular perturbation parameter (eps0 for check)");
  f.opts["eps-list"] = app->add_option("--eps-list", f.eps_list, "Comma-separated, strictly decreasing");
  f.opts["t-end"] = app->add_option("--t-end,--horizon", f.t_end, "End of the time span (horizon for dichotomy)");
  f.opts["dt-out"] = app->add_option("--dt-out", f.dt_out, "Output spacing");
  f.opts["init"] = app->add_option("--init", f.init, "Initial state: slow components, then fast ones");
  f.opts["config"] = app->add_option("--config", f.config, "JSON configuration file");
  f.opts["literal"] = app->add_flag("--literal-paper-eq7", f.literal, "Uncorrected reduced predator-prey field");
  f.opts["require"] = app->add_flag("--require-hypotheses", f.require, "Refuse to run when an audit fails");
  f.opts["delta"] = app->add_option("--delta", f.delta, "Tube radius");
  f.opts["sigma"] = app->add_option("--sigma", f.sigma, "Dichotomy exponent");
  f.opts["out"] = app->add_option("--out", f.out, "Output path (stdout when omitted)");
  f.opts["param"] = app->add_option("--param", f.params, "Model parameter override key=value");
  f.opts["method"] = app->add_option("--method", f.method, "rk45 | rk4 | be");
  f.opts["matrix"] = app->add_option("--matrix", f.matrix, "Matrix function: JSON text or a path to it");
  f.opts["samples"] = app->add_option("--samples", f.samples, "Tube samples per grid point");
}

struct Settings {
  ModelChoice model;
  double eps = 0.0;
  bool eps_given = false;
  std::vector<double> eps_list;
  double t_end = 100.0;
  bool t_end_given = false;
  double dt_out = 0.01;
  bool dt_out_given = false;
  Vector init;
  bool init_default = true;
  Method method = Method::rk45_adaptive;
  double delta = 0.05;
  std::optional<double> sigma;
  std::string out;
  bool require = false;
  int samples = 64;
  json matrix;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (item.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("cannot parse ") + what + " entry '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError(std::string(what) + " is empty");
  return out;
}

json read_json_arg(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) return json::parse(text);
  std::ifstream in(text);
  if (!in) throw UsageError("cannot open '" + text + "'");
  return json::parse(in);
}

Settings resolve(const Flags& f) {
  Settings s;
  json cfg = json::object();
  if (f.given("config")) {
    cfg = read_json_arg(f.config);
    static const char* known[] = {"model",  "params", "eps",   "eps_list", "t_end",  "dt_out",
                                  "init",   "method", "delta", "sigma",    "system", "matrix",
                                  "samples", "literal_paper_eq7", "require_hypotheses"};
    for (const auto& [key, _] : cfg.items()) {
      if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
        throw UsageError("unknown config key '" + key + "'");
      }
    }
  }

  s.model.kind = f.given("model") ? f.model : cfg.value("model", std::string("predprey"));
  if (cfg.contains("system")) s.model.user = cfg.at("system");
  s.model.literal = f.literal || cfg.value("literal_paper_eq7", false);
  if (cfg.contains("params")) {
    for (const auto& [key, value] : cfg.at("params").items()) s.model.set_param(key, value.get<double>());
  }
  for (const auto& kv : f.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--param expects key=value, got '" + kv + "'");
    s.model.set_param(kv.substr(0, eq), parse_list(kv.substr(eq + 1), "--param").at(0));
  }
  FastSlowSystem sys;
  try {
    sys = s.model.build();
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  s.eps_given = f.given("eps") || cfg.contains("eps");
  s.eps = f.given("eps") ? f.eps : cfg.value("eps", s.model.default_eps());
  if (f.given("eps-list")) {
    s.eps_list = parse_list(f.eps_list, "--eps-list");
  } else if (cfg.contains("eps_list")) {
    s.eps_list = cfg.at("eps_list").get<std::vector<double>>();
  }
  s.t_end_given = f.given("t-end") || cfg.contains("t_end");
  s.t_end = f.given("t-end") ? f.t_end : cfg.value("t_end", 100.0);
  s.dt_out_given = f.given("dt-out") || cfg.contains("dt_out");
  s.dt_out = f.given("dt-out") ? f.dt_out : cfg.value("dt_out", 0.01);
  if (!(s.t_end > 0.0)) throw UsageError("--t-end must be positive");
  if (!(s.dt_out > 0.0)) throw UsageError("--dt-out must be positive");

  s.init = s.model.default_init();
  if (f.given("init")) {
    const auto v = parse_list(f.init, "--init");
    s.init = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    s.init_default = false;
  } else if (cfg.contains("init")) {
    const auto v = cfg.at("init").get<std::vector<double>>();
    s.init = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    s.init_default = false;
  }
  if (s.init.size() != sys.n + sys.m) {
    throw UsageError("--init needs " + std::to_string(sys.n + sys.m) + " values (slow, then fast)");
  }

  const std::string method = f.given("method") ? f.method : cfg.value("method", std::string("rk45"));
  try {
    s.method = parse_method(method);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  s.delta = f.given("delta") ? f.delta : cfg.value("delta", 0.05);
  if (f.given("sigma")) {
    s.sigma = f.sigma;
  } else if (cfg.contains("sigma")) {
    s.sigma = cfg.at("sigma").get<double>();
  }
  s.out = f.out;
  s.require = f.require || cfg.value("require_hypotheses", false);
  s.samples = f.given("samples") ? f.samples : cfg.value("samples", 64);
  if (f.given("matrix")) {
    s.matrix = read_json_arg(f.matrix);
  } else if (cfg.contains("matrix")) {
    s.matrix = cfg.at("matrix");
  }
  return s;
}

void check_eps(const FastSlowSystem& sys, double eps) {
  if (!(eps > 0.0) || eps > sys.eps_max) {
    throw UsageError("eps = " + format_number(eps) + " outside (0, " + format_number(sys.eps_max) + "] for model " +
                     sys.name);
  }
}

json effective_config(const Settings& s, const char* command) {
  std::vector<double> init(s.init.data(), s.init.data() + s.init.size());
  return {{"command", command},       {"model", s.model.kind},   {"params", s.model.params()},
          {"literal", s.model.literal}, {"eps", s.eps},          {"eps_list", s.eps_list},
          {"t_end", s.t_end},          {"dt_out", s.dt_out},     {"init", init},
          {"method", to_string(s.method)}};
}

std::string hash_hex(const json& cfg) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(cfg.dump())));
  return buf;
}

// Writes to --out when given, else to `out`.
template <typename Fn>
void emit(const std::string& path, std::ostream& out, Fn&& fn) {
  if (path.empty()) {
    fn(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw UsageError("cannot write '" + path + "'");
  fn(file);
}

std::uint64_t tube_seed() {
  if (const char* env = std::getenv("TIKHONOV_SEED")) {
    try {
      return std::stoull(env, nullptr, 0);
    } catch (const std::exception&) {
      throw UsageError(std::string("TIKHONOV_SEED is not an integer: ") + env);
    }
  }
  return ReportConfig{}.seed;
}

ReportConfig report_config(const Settings& s, const FastSlowSystem& sys) {
  ReportConfig rc;
  rc.t_end = s.t_end;
  rc.dt = s.dt_out_given ? s.dt_out : std::max(0.1, s.t_end / 4000.0);
  rc.delta = s.delta;
  if (s.eps_given) {
    if (!(s.eps >= 0.0) || s.eps > sys.eps_max) throw UsageError("eps0 outside [0, eps_max]");
    rc.eps0 = s.eps;
  }
  rc.tube_samples = s.samples;
  rc.seed = tube_seed();
  return rc;
}

std::string joined(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& x : items) out += (out.empty() ? "" : ", ") + x;
  return out;
}

SimulationConfig simulation_config(const Settings& s) {
  SimulationConfig c;
  c.eps = s.eps;
  c.t_end = s.t_end;
  c.dt_out = s.dt_out;
  c.method = s.method;
  return c;
}

int cmd_run(const Settings& s, std::ostream& out, std::ostream& err) {
  const FastSlowSystem sys = s.model.build();
  check_eps(sys, s.eps);
  const Vector u0 = s.init.head(sys.n);
  const Vector v0 = s.init.tail(sys.m);
  if (s.require) {
    const HypothesisReport report = full_report(sys, u0, v0, report_config(s, sys));
    if (!report.pass) {
      err << "hypothesis gate failed: " << joined(report.failing) << "\n";
      return kHypothesisFailure;
    }
  }
  const RunData data = simulate(sys, u0, v0, simulation_config(s));
  const json cfg = effective_config(s, "run");
  std::vector<std::string> meta{
      std::string("tikhonov ") + kVersion + " run",
      "model=" + s.model.kind,
      "params=" + s.model.params().dump(),
      "reduced=" + std::string(s.model.literal ? "literal" : "corrected"),
      "eps=" + format_number(s.eps),
      "t_end=" + format_number(s.t_end),
      "dt_out=" + format_number(s.dt_out),
      "init=" + cfg.at("init").dump() + (s.init_default ? " (default)" : ""),
      "method=" + std::string(to_string(s.method)) + " rel_tol=1e-10 abs_tol=1e-12 max_step=eps/2",
      "t_rho=" + format_number(data.curves.t_rho) + " rho=" + format_number(data.curves.rho),
      "config_hash=" + hash_hex(cfg),
  };
  emit(s.out, out, [&](std::ostream& os) { write_csv(os, data, s.model.u_names(), s.model.v_names(), meta); });
  return kOk;
}

int cmd_sweep(const Settings& s, std::ostream& out, std::ostream&) {
  const FastSlowSystem sys = s.model.build();
  if (s.eps_list.empty()) throw UsageError("sweep needs --eps-list");
  for (double eps : s.eps_list) check_eps(sys, eps);
  const Vector u0 = s.init.head(sys.n);
  const Vector v0 = s.init.tail(sys.m);
  const SweepResult result = sweep(sys, u0, v0, s.eps_list, simulation_config(s));
  const json cfg = effective_config(s, "sweep");
  json doc = to_json(result);
  doc["config"] = cfg;
  doc["config_hash"] = hash_hex(cfg);
  doc["tool"] = {{"name", "tikhonov"}, {"version", kVersion}};

  if (s.out.empty()) {
    out << doc.dump(2) << "\n";
    return kOk;
  }
  std::filesystem::path json_path(s.out), csv_path(s.out);
  if (json_path.extension() == ".csv") {
    json_path.replace_extension(".json");
  } else {
    csv_path.replace_extension(".csv");
  }
  emit(json_path.string(), out, [&](std::ostream& os) { os << doc.dump(2) << "\n"; });
  emit(csv_path.string(), out, [&](std::ostream& os) {
    os << "# config_hash=" << hash_hex(cfg) << "\n";
    os << "eps,sup_composite,sup_u_after_t_rho,sup_v_after_t_rho,t_rho,final_err_u,final_err_v\r\n";
    for (const auto& r : result.rows) {
      os << format_number(r.eps) << ',' << format_number(r.sup_composite) << ','
         << format_number(r.sup_u_after_t_rho) << ',' << format_number(r.sup_v_after_t_rho) << ','
         << format_number(r.t_rho) << ',' << format_number(r.final_err_u) << ',' << format_number(r.final_err_v)
         << "\r\n";
    }
  });
  return kOk;
}

int cmd_check(const Settings& s, std::ostream& out, std::ostream& err) {
  const FastSlowSystem sys = s.model.build();
  const Vector u0 = s.init.head(sys.n);
  const Vector v0 = s.init.tail(sys.m);
  const HypothesisReport report = full_report(sys, u0, v0, report_config(s, sys));
  json doc = to_json(report);
  doc["init"] = effective_config(s, "check").at("init");
  doc["params"] = s.model.params();
  emit(s.out, out, [&](std::ostream& os) { os << doc.dump(2) << "\n"; });
  if (!report.pass) {
    err << "FAIL: " << joined(report.failing) << "\n";
    return kHypothesisFailure;
  }
  return kOk;
}

int cmd_dichotomy(const Settings& s, std::ostream& out, std::ostream& err) {
  if (s.matrix.is_null()) throw UsageError("dichotomy needs --matrix (or \"matrix\" in --config)");
  const MatrixFunction D = matrix_function(s.matrix);
  const std::vector<double> eps_list = s.eps_list.empty() ? std::vector<double>{0.1, 0.05, 0.025} : s.eps_list;
  const double horizon = s.t_end_given ? s.t_end : 4.0 * M_PI;
  DichotomyConfig cfg;
  cfg.sigma = s.sigma;
  json fits = json::array();
  double c_min = std::numeric_limits<double>::infinity(), c_max = 0.0;
  try {
    for (double eps : eps_list) {
      if (!(eps > 0.0)) throw UsageError("eps must be positive");
      const DichotomyFit fit = fit_dichotomy(D, eps, horizon, cfg);
      c_min = std::min(c_min, fit.c);
      c_max = std::max(c_max, fit.c);
      fits.push_back({{"eps", fit.eps},
                      {"c", fit.c},
                      {"c_extended", fit.c_extended},
                      {"sigma", fit.sigma},
                      {"margin", fit.margin},
                      {"residual", fit.residual},
                      {"decay_rate", std::isfinite(fit.decay_rate) ? json(fit.decay_rate) : json(nullptr)},
                      {"pairs", fit.grid.size()},
                      {"pass", fit.pass}});
    }
  } catch (const HypothesisViolated& e) {
    err << e.what() << "\n";
    return kHypothesisFailure;
  }
  const double spread = c_max / c_min - 1.0;
  json doc = {{"horizon", horizon}, {"fits", fits}, {"c_spread", spread}, {"c_stable", spread < 0.05},
              {"tool", {{"name", "tikhonov"}, {"version", kVersion}}}};
  emit(s.out, out, [&](std::ostream& os) { os << doc.dump(2) << "\n"; });
  return kOk;
}

int cmd_plot_hints(const Settings& s, std::ostream& out) {
  const std::string csv = s.out.empty() ? "run.csv" : s.out;
  const auto un = s.model.u_names();
  const auto vn = s.model.v_names();
  const std::size_t n = un.size(), m = vn.size();
  // 1-based gnuplot columns matching write_csv.
  const std::size_t full_u = 2, full_v = full_u + n, red_u = full_v + m, qss_v = red_u + n;
  const std::size_t comp_v = qss_v + m + n, err0 = comp_v + m;
  out << "set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n";
  for (std::size_t i = 0; i < n; ++i) {
    out << "plot '" << csv << "' using 1:" << full_u + i << " with lines dt 2, '' using 1:" << red_u + i
        << " with lines\npause -1\n";
  }
  for (std::size_t j = 0; j < m; ++j) {
    out << "plot '" << csv << "' using 1:" << full_v + j << " with lines dt 2, '' using 1:" << qss_v + j
        << " with lines, '' using 1:" << comp_v + j << " with lines\npause -1\n";
  }
  out << "set logscale y\nplot '" << csv << "' using 1:" << err0 << " with lines, '' using 1:" << err0 + 1
      << " with lines, '' using 1:" << err0 + 2 << " with lines\npause -1\n";
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fast-slow reduction on infinite time intervals", "tikhonov"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Flags run_f, sweep_f, check_f, dich_f, hint_f;
  CLI::App* run = app.add_subcommand("run", "Full, reduced and composite solutions as CSV");
  CLI::App* sw = app.add_subcommand("sweep", "Sup-norm errors over a list of eps");
  CLI::App* check = app.add_subcommand("check", "Audit the assumptions; JSON report");
  CLI::App* dich = app.add_subcommand("dichotomy", "Fit dichotomy constants of eps Y' = D(t) Y");
  CLI::App* hints = app.add_subcommand("plot-hints", "gnuplot commands for a run CSV");
  add_flags(run, run_f);
  add_flags(sw, sweep_f);
  add_flags(check, check_f);
  add_flags(dich, dich_f);
  add_flags(hints, hint_f);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (run->parsed()) return cmd_run(resolve(run_f), out, err);
    if (sw->parsed()) return cmd_sweep(resolve(sweep_f), out, err);
    if (check->parsed()) return cmd_check(resolve(check_f), out, err);
    if (dich->parsed()) return cmd_dichotomy(resolve(dich_f), out, err);
    if (hints->parsed()) return cmd_plot_hints(resolve(hint_f), out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const json::exception& e) {
    err << "usage error: bad JSON: " << e.what() << "\n";
    return kUsage;
  } catch (const HypothesisViolated& e) {
    err << "hypothesis failure: " << e.what() << "\n";
    return kHypothesisFailure;
  } catch (const NoEquilibriumDeclared& e) {
    err << "hypothesis failure: " << e.what() << "\n";
    return kHypothesisFailure;
  } catch (const Error& e) {
    err << "integration failure: " << e.what() << "\n";
    return kIntegrationFailure;
  }
  return kUsage;
}

}  // namespace tikhonov::cli
