#include "user_model.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace tikhonov::cli {

namespace {

using nlohmann::json;

struct Monomial {
  double coef = 0.0;
  std::vector<int> a;  // exponents of u
  std::vector<int> b;  // exponents of v
  int k = 0;           // exponent of t
  int l = 0;           // exponent of eps
};

using Component = std::vector<Monomial>;

std::vector<int> exponents(const json& term, const char* key, int size) {
  std::vector<int> out(static_cast<std::size_t>(size), 0);
  if (!term.contains(key)) return out;
  const auto& arr = term.at(key);
  if (!arr.is_array() || static_cast<int>(arr.size()) != size) {
    throw Error(std::string("user model: '") + key + "' must list " + std::to_string(size) + " exponents");
  }
  for (int i = 0; i < size; ++i) {
    const int e = arr.at(static_cast<std::size_t>(i)).get<int>();
    if (e < 0) throw Error("user model: exponents must be nonnegative");
    out[static_cast<std::size_t>(i)] = e;
  }
  return out;
}

std::vector<Component> components(const json& spec, const char* key, int count, int n, int m) {
  if (!spec.contains(key) || !spec.at(key).is_array() || static_cast<int>(spec.at(key).size()) != count) {
    throw Error(std::string("user model: '") + key + "' must have " + std::to_string(count) + " components");
  }
  std::vector<Component> out;
  for (const auto& comp : spec.at(key)) {
    Component c;
    for (const auto& term : comp) {
      Monomial mono;
      mono.coef = term.at("coef").get<double>();
      mono.a = exponents(term, "u", n);
      mono.b = exponents(term, "v", m);
      mono.k = term.value("t", 0);
      mono.l = term.value("eps", 0);
      if (mono.k < 0 || mono.l < 0) throw Error("user model: exponents must be nonnegative");
      c.push_back(std::move(mono));
    }
    out.push_back(std::move(c));
  }
  return out;
}

double ipow(double x, int e) { return e == 0 ? 1.0 : std::pow(x, e); }

// Value of one monomial; with `du` / `dv` / `dt` >= 0 the partial derivative
// with respect to that variable instead.
double eval(const Monomial& mono, const Vector& u, const Vector& v, double t, double eps, int du = -1, int dv = -1,
            bool dt = false) {
  double out = mono.coef * ipow(eps, mono.l);
  for (std::size_t i = 0; i < mono.a.size(); ++i) {
    const int e = mono.a[i];
    if (static_cast<int>(i) == du) {
      if (e == 0) return 0.0;
      out *= e * ipow(u(static_cast<Eigen::Index>(i)), e - 1);
    } else {
      out *= ipow(u(static_cast<Eigen::Index>(i)), e);
    }
  }
  for (std::size_t j = 0; j < mono.b.size(); ++j) {
    const int e = mono.b[j];
    if (static_cast<int>(j) == dv) {
      if (e == 0) return 0.0;
      out *= e * ipow(v(static_cast<Eigen::Index>(j)), e - 1);
    } else {
      out *= ipow(v(static_cast<Eigen::Index>(j)), e);
    }
  }
  if (dt) {
    if (mono.k == 0) return 0.0;
    return out * mono.k * ipow(t, mono.k - 1);
  }
  return out * ipow(t, mono.k);
}

Field field(std::shared_ptr<const std::vector<Component>> comps) {
  return [comps](const Vector& u, const Vector& v, double t, double eps) {
    Vector out(static_cast<Eigen::Index>(comps->size()));
    for (std::size_t r = 0; r < comps->size(); ++r) {
      double s = 0.0;
      for (const auto& mono : (*comps)[r]) s += eval(mono, u, v, t, eps);
      out(static_cast<Eigen::Index>(r)) = s;
    }
    return out;
  };
}

enum class Wrt { u, v, t };

JacobianField partial(std::shared_ptr<const std::vector<Component>> comps, Wrt wrt, int cols) {
  return [comps, wrt, cols](const Vector& u, const Vector& v, double t, double eps) {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(comps->size()), cols);
    for (std::size_t r = 0; r < comps->size(); ++r) {
      for (int c = 0; c < cols; ++c) {
        double s = 0.0;
        for (const auto& mono : (*comps)[r]) {
          switch (wrt) {
            case Wrt::u: s += eval(mono, u, v, t, eps, c); break;
            case Wrt::v: s += eval(mono, u, v, t, eps, -1, c); break;
            case Wrt::t: s += eval(mono, u, v, t, eps, -1, -1, true); break;
          }
        }
        out(static_cast<Eigen::Index>(r), c) = s;
      }
    }
    return out;
  };
}

Vector vector_of(const json& arr, int size, const char* what) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != size) {
    throw Error(std::string("user model: '") + what + "' must have " + std::to_string(size) + " entries");
  }
  Vector out(size);
  for (int i = 0; i < size; ++i) out(i) = arr.at(static_cast<std::size_t>(i)).get<double>();
  return out;
}

}  // namespace

FastSlowSystem user_system(const json& spec) {
  try {
    FastSlowSystem sys;
    sys.name = spec.value("name", std::string("user-json"));
    sys.n = spec.at("n").get<int>();
    sys.m = spec.at("m").get<int>();
    if (sys.n < 1 || sys.m < 1) throw Error("user model: n and m must be positive");
    sys.eps_max = spec.value("eps_max", 1.0);
    sys.declared_smooth = true;
    auto f = std::make_shared<const std::vector<Component>>(components(spec, "f", sys.n, sys.n, sys.m));
    auto g = std::make_shared<const std::vector<Component>>(components(spec, "g", sys.m, sys.n, sys.m));
    sys.f = field(f);
    sys.g = field(g);
    sys.jacobians.f_u = partial(f, Wrt::u, sys.n);
    sys.jacobians.f_v = partial(f, Wrt::v, sys.m);
    sys.jacobians.g_u = partial(g, Wrt::u, sys.n);
    sys.jacobians.g_v = partial(g, Wrt::v, sys.m);
    sys.jacobians.g_t = partial(g, Wrt::t, 1);
    if (spec.contains("qss_seed")) {
      const Vector seed = vector_of(spec.at("qss_seed"), sys.m, "qss_seed");
      sys.qss_seed = [seed](const Vector&, double) { return seed; };
    }
    if (spec.contains("equilibria")) {
      for (const auto& eq : spec.at("equilibria")) sys.slow_equilibria.push_back(vector_of(eq, sys.n, "equilibria"));
    }
    sys.validate();
    return sys;
  } catch (const json::exception& e) {
    throw Error(std::string("user model: ") + e.what());
  }
}

Vector user_default_init(const json& spec) {
  const int n = spec.at("n").get<int>();
  const int m = spec.at("m").get<int>();
  if (!spec.contains("init")) return Vector::Zero(n + m);
  const auto& init = spec.at("init");
  return concat(vector_of(init.at("u"), n, "init.u"), vector_of(init.at("v"), m, "init.v"));
}

namespace {

std::function<double(double)> entry(const json& e) {
  if (e.is_number()) {
    const double c = e.get<double>();
    return [c](double) { return c; };
  }
  if (!e.is_object()) throw Error("matrix spec: entries must be numbers or objects");
  const double c = e.value("const", 0.0);
  std::vector<double> poly;
  if (e.contains("poly")) poly = e.at("poly").get<std::vector<double>>();
  struct Wave {
    double amp, freq, phase;
    bool is_sin;
  };
  std::vector<Wave> waves;
  for (const char* key : {"sin", "cos"}) {
    if (!e.contains(key)) continue;
    const json& list = e.at(key).is_array() ? e.at(key) : json::array({e.at(key)});
    for (const auto& w : list) {
      waves.push_back({w.value("amp", 1.0), w.value("freq", 1.0), w.value("phase", 0.0), key[0] == 's'});
    }
  }
  return [c, poly, waves](double t) {
    double out = c;
    double p = 0.0;
    for (auto it = poly.rbegin(); it != poly.rend(); ++it) p = p * t + *it;
    out += p;
    for (const auto& w : waves) {
      const double arg = w.freq * t + w.phase;
      out += w.amp * (w.is_sin ? std::sin(arg) : std::cos(arg));
    }
    return out;
  };
}

}  // namespace

MatrixFunction matrix_function(const json& spec) {
  try {
    const json& rows = spec.is_object() ? spec.at("D") : spec;
    if (!rows.is_array() || rows.empty()) throw Error("matrix spec: expected a nonempty array of rows");
    const std::size_t k = rows.size();
    std::vector<std::function<double(double)>> entries;
    for (const auto& row : rows) {
      if (!row.is_array() || row.size() != k) throw Error("matrix spec: matrix must be square");
      for (const auto& e : row) entries.push_back(entry(e));
    }
    return [entries, k](double t) {
      Matrix out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
      for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < k; ++c) {
          out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = entries[r * k + c](t);
        }
      }
      return out;
    };
  } catch (const json::exception& e) {
    throw Error(std::string("matrix spec: ") + e.what());
  }
}

}  // namespace tikhonov::cli
