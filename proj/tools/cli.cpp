#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include "thetakit/builders.hpp"
#include "thetakit/elliptic.hpp"
#include "thetakit/finite_gap.hpp"
#include "thetakit/hyperelliptic.hpp"
#include "thetakit/kirchhoff.hpp"
#include "thetakit/selftest.hpp"

namespace thetakit::cli {

namespace {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- config reading

class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }
  ~Obj() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError("unknown field " + sub(it.key()));
  }
  Obj(const Obj&) = delete;

  bool has(const std::string& k) const { return j_.contains(k); }
  const json& get(const std::string& k) {
    if (!j_.contains(k)) throw ConfigError("missing field " + sub(k));
    used_.insert(k);
    return j_.at(k);
  }
  const json* opt(const std::string& k) {
    if (!j_.contains(k)) return nullptr;
    used_.insert(k);
    return &j_.at(k);
  }
  std::string sub(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

double as_real(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + " must be a number");
  return j.get<double>();
}

long as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + " must be an integer");
  return j.get<long>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path + " must be a boolean");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + " must be a string");
  return j.get<std::string>();
}

cplx as_complex(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(path + " must be a complex number [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

const json& as_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + " must be an array");
  return j;
}

std::vector<cplx> as_complex_list(const json& j, const std::string& path) {
  std::vector<cplx> out;
  for (size_t i = 0; i < as_array(j, path).size(); ++i) out.push_back(as_complex(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

CVector as_cvector(const json& j, const std::string& path) {
  auto v = as_complex_list(j, path);
  return Eigen::Map<CVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

RVector as_rvector(const json& j, const std::string& path) {
  RVector v(static_cast<Eigen::Index>(as_array(j, path).size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_real(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Vec3 as_vec3(const json& j, const std::string& path) {
  RVector v = as_rvector(j, path);
  if (v.size() != 3) throw ConfigError(path + " must have 3 entries");
  return v;
}

CMatrix as_cmatrix(const json& j, const std::string& path) {
  const size_t n = as_array(j, path).size();
  if (n == 0) throw ConfigError(path + " must be non-empty");
  CMatrix m(n, n);
  for (size_t r = 0; r < n; ++r) {
    CVector row = as_cvector(j[r], path + "[" + std::to_string(r) + "]");
    if (static_cast<size_t>(row.size()) != n) throw ConfigError(path + " must be square");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

RiemannMatrix as_riemann(const json& j, const std::string& path) { return validate_riemann_matrix(as_cmatrix(j, path)); }

void require_size(Eigen::Index n, int g, const std::string& path) {
  if (n != g) throw ConfigError(path + " must have " + std::to_string(g) + " entries");
}

Characteristic as_characteristic(const json& j, const std::string& path, int g) {
  Obj o(j, path);
  Characteristic c{as_rvector(o.get("alpha"), o.sub("alpha")), as_rvector(o.get("beta"), o.sub("beta"))};
  require_size(c.alpha.size(), g, o.sub("alpha"));
  require_size(c.beta.size(), g, o.sub("beta"));
  return c;
}

CurvePoint as_point(const json& j, const std::string& path) {
  Obj o(j, path);
  CurvePoint p{as_complex(o.get("xi"), o.sub("xi")), Sheet::Plus};
  if (const json* s = o.opt("sheet")) {
    long v = as_int(*s, o.sub("sheet"));
    if (v != 1 && v != -1) throw ConfigError(o.sub("sheet") + " must be 1 or -1");
    p.sheet = static_cast<Sheet>(v);
  }
  return p;
}

std::vector<CurvePoint> as_point_list(const json& j, const std::string& path) {
  std::vector<CurvePoint> out;
  for (size_t i = 0; i < as_array(j, path).size(); ++i) out.push_back(as_point(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Divisor as_divisor(const json& j, const std::string& path) {
  Divisor d;
  for (const auto& p : as_point_list(j, path)) d.points.push_back({p, 1});
  return d;
}

std::vector<double> as_range(const json& j, const std::string& path) {
  Obj o(j, path);
  double a = as_real(o.get("start"), o.sub("start")), b = as_real(o.get("stop"), o.sub("stop"));
  long n = as_int(o.get("count"), o.sub("count"));
  if (n < 1 || n > 1000000) throw ConfigError(o.sub("count") + " must be in [1, 1e6]");
  std::vector<double> v(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * double(i) / double(n - 1);
  return v;
}

// ---------------------------------------------------------------- output

using Cell = std::variant<double, long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void header(std::initializer_list<std::string> names) { columns.assign(names); }
  void add_complex_columns(const std::string& name) {
    columns.push_back(name + "_re");
    columns.push_back(name + "_im");
  }
};

void push(std::vector<Cell>& row, cplx z) {
  row.emplace_back(z.real());
  row.emplace_back(z.imag());
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string render(const Table& t, bool as_json) {
  std::ostringstream os;
  if (as_json) {
    for (const auto& row : t.rows) {
      nlohmann::ordered_json o = nlohmann::ordered_json::object();
      for (size_t i = 0; i < row.size(); ++i)
        std::visit([&](const auto& v) { o[t.columns[i]] = v; }, row[i]);
      os << o.dump() << '\n';
    }
    return os.str();
  }
  for (size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_escape(t.columns[i]);
  os << '\n';
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      if (auto d = std::get_if<double>(&row[i]))
        os << format_double(*d);
      else if (auto n = std::get_if<long>(&row[i]))
        os << *n;
      else
        os << csv_escape(std::get<std::string>(row[i]));
    }
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------- execution context

struct Context {
  Tolerance tol;
  unsigned seed = 0;
  int threads = 1;
  // only set when given on the command line
  int genus = 0;
  std::vector<int> only;
};

int thread_cap() {
  const char* env = std::getenv("THETAKIT_THREADS");
  int hw = std::max(1u, std::thread::hardware_concurrency());
  if (!env || !*env) return hw;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (*end || v < 1) throw ConfigError("THETAKIT_THREADS must be a positive integer");
  return static_cast<int>(std::min<long>(v, 256));
}

// Rows are computed independently and stored by index, so output order never depends on scheduling.
void parallel_rows(int n, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  for (int k = 0; k < threads; ++k)
    pool.emplace_back([&] {
      for (int i; (i = next++) < n;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

using Handler = std::function<Table(Obj&, const Context&)>;

// ---------------------------------------------------------------- theta

Table theta_eval(Obj& p, const Context& ctx) {
  RiemannMatrix B = as_riemann(p.get("B"), "B");
  const int g = B.genus();
  Characteristic chr = Characteristic::zero(g);
  if (const json* c = p.opt("characteristic")) chr = as_characteristic(*c, "characteristic", g);
  std::vector<CVector> zs;
  if (const json* z = p.opt("z")) zs.push_back(as_cvector(*z, "z"));
  if (const json* pts = p.opt("points"))
    for (size_t i = 0; i < as_array(*pts, "points").size(); ++i) zs.push_back(as_cvector((*pts)[i], "points[" + std::to_string(i) + "]"));
  if (zs.empty()) throw ConfigError("one of z or points is required");
  std::vector<int> deriv;
  if (const json* d = p.opt("derivative"))
    for (size_t i = 0; i < as_array(*d, "derivative").size(); ++i) {
      long k = as_int((*d)[i], "derivative");
      if (k < 0 || k >= g) throw ConfigError("derivative indices must lie in [0, genus)");
      deriv.push_back(static_cast<int>(k));
    }
  Table t;
  t.header({"point", "re", "im", "log_abs"});
  for (size_t i = 0; i < zs.size(); ++i) {
    require_size(zs[i].size(), g, "z");
    ScaledComplex v = deriv.empty() ? theta_char(chr, zs[i], B, ctx.tol) : theta_derivative(deriv, chr, zs[i], B, ctx.tol);
    std::vector<Cell> row{long(i)};
    push(row, v.value());
    row.emplace_back(v.log_abs());
    t.rows.push_back(row);
  }
  return t;
}

Table theta_grid(Obj& p, const Context& ctx) {
  RiemannMatrix B = as_riemann(p.get("B"), "B");
  const int g = B.genus();
  Characteristic chr = Characteristic::zero(g);
  if (const json* c = p.opt("characteristic")) chr = as_characteristic(*c, "characteristic", g);
  CVector origin = CVector::Zero(g), e1 = CVector::Zero(g), e2 = CVector::Zero(g);
  e1[0] = 1.0;
  e2[0] = kI;
  if (const json* o = p.opt("origin")) origin = as_cvector(*o, "origin");
  if (const json* o = p.opt("direction_x")) e1 = as_cvector(*o, "direction_x");
  if (const json* o = p.opt("direction_y")) e2 = as_cvector(*o, "direction_y");
  require_size(origin.size(), g, "origin");
  require_size(e1.size(), g, "direction_x");
  require_size(e2.size(), g, "direction_y");
  auto xs = as_range(p.get("x"), "x"), ys = as_range(p.get("y"), "y");
  Table t;
  t.header({"x", "y", "re", "im", "log_abs"});
  std::vector<std::vector<std::vector<Cell>>> rows(ys.size());
  parallel_rows(static_cast<int>(ys.size()), ctx.threads, [&](int i) {
    for (double x : xs) {
      ScaledComplex v = theta_char(chr, origin + x * e1 + ys[i] * e2, B, ctx.tol);
      std::vector<Cell> row{x, ys[i]};
      push(row, v.value());
      row.emplace_back(v.log_abs());
      rows[i].push_back(std::move(row));
    }
  });
  for (auto& r : rows)
    for (auto& row : r) t.rows.push_back(std::move(row));
  return t;
}

Table theta_halfperiods(Obj& p, const Context& ctx) {
  int g = ctx.genus;
  if (const json* j = p.opt("genus")) {
    long v = as_int(*j, "genus");
    if (g && g != v) throw ConfigError("--genus disagrees with the config");
    g = static_cast<int>(v);
  }
  if (g < 1 || g > 10) throw ConfigError("genus must be in [1, 10]");
  Table t;
  t.columns = {"index"};
  for (int i = 0; i < g; ++i) t.columns.push_back("alpha_" + std::to_string(i + 1));
  for (int i = 0; i < g; ++i) t.columns.push_back("beta_" + std::to_string(i + 1));
  t.columns.push_back("parity");
  long k = 0;
  for (const auto& h : enumerate_half_periods(g)) {
    std::vector<Cell> row{k++};
    for (int i = 0; i < g; ++i) row.emplace_back(h.chr.alpha[i]);
    for (int i = 0; i < g; ++i) row.emplace_back(h.chr.beta[i]);
    row.emplace_back(std::string(h.parity == Parity::Even ? "even" : "odd"));
    t.rows.push_back(row);
  }
  return t;
}

// ---------------------------------------------------------------- elliptic

Lattice as_lattice(Obj& p) { return Lattice(as_complex(p.get("omega1"), "omega1"), as_complex(p.get("omega2"), "omega2")); }

Table elliptic_wp(Obj& p, const Context& ctx) {
  Lattice lat = as_lattice(p);
  auto zs = as_complex_list(p.get("points"), "points");
  Table t;
  t.columns = {"point"};
  t.add_complex_columns("z");
  t.add_complex_columns("wp");
  t.add_complex_columns("wp_prime");
  for (size_t i = 0; i < zs.size(); ++i) {
    std::vector<Cell> row{long(i)};
    push(row, zs[i]);
    push(row, weierstrass_p(zs[i], lat, ctx.tol));
    push(row, weierstrass_p_prime(zs[i], lat, ctx.tol));
    t.rows.push_back(row);
  }
  return t;
}

Table elliptic_invariants(Obj& p, const Context& ctx) {
  Lattice lat = as_lattice(p);
  auto inv = wp_invariants(lat, ctx.tol);
  Table t;
  t.columns = {};
  t.add_complex_columns("g2");
  t.add_complex_columns("g3");
  std::vector<Cell> row;
  push(row, inv.g2);
  push(row, inv.g3);
  t.rows.push_back(row);
  return t;
}

Table elliptic_build(Obj& p, const Context& ctx) {
  EllipticModulus b(as_complex(p.get("b"), "b"));
  cplx c = 1.0;
  if (const json* j = p.opt("constant")) c = as_complex(*j, "constant");
  auto pts = as_complex_list(p.get("points"), "points");
  std::function<cplx(cplx)> f;
  std::string kind = as_string(p.get("kind"), "kind");
  if (kind == "divisor") {
    auto fn = elliptic_from_divisor(as_complex_list(p.get("zeros"), "zeros"), as_complex_list(p.get("poles"), "poles"), b, c, ctx.tol);
    f = fn;
  } else if (kind == "poles") {
    auto fn = elliptic_from_poles(as_complex_list(p.get("poles"), "poles"), as_complex_list(p.get("residues"), "residues"), c, b, ctx.tol);
    f = fn;
  } else {
    throw ConfigError("kind must be \"divisor\" or \"poles\"");
  }
  Table t;
  t.columns = {"point"};
  t.add_complex_columns("z");
  t.add_complex_columns("f");
  for (size_t i = 0; i < pts.size(); ++i) {
    std::vector<Cell> row{long(i)};
    push(row, pts[i]);
    push(row, f(pts[i]));
    t.rows.push_back(row);
  }
  return t;
}

// ---------------------------------------------------------------- curves

struct CurveJob {
  HyperellipticCurve curve;
  PeriodData pd;
};

CurveJob as_curve(Obj& p, const Context& ctx) {
  auto bp = as_complex_list(p.get("branch_points"), "branch_points");
  HyperellipticCurve c = build_curve(bp);
  return {c, period_matrix(c, ctx.tol)};
}

void push_matrix(Table& t, const std::string& name, const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::vector<Cell> row{name, long(i), long(j)};
      push(row, m(i, j));
      t.rows.push_back(row);
    }
}

Table curve_periods(Obj& p, const Context& ctx) {
  auto job = as_curve(p, ctx);
  Table t;
  t.header({"matrix", "row", "col", "re", "im"});
  push_matrix(t, "A", job.pd.A);
  push_matrix(t, "Bp", job.pd.Bp);
  push_matrix(t, "B", job.pd.riemann_matrix.matrix());
  return t;
}

Table curve_abelmap(Obj& p, const Context& ctx) {
  auto job = as_curve(p, ctx);
  auto pts = as_point_list(p.get("points"), "points");
  Table t;
  t.header({"point", "component", "re", "im"});
  for (size_t i = 0; i < pts.size(); ++i) {
    CVector v = abel_from_base(job.curve, job.pd, pts[i], ctx.tol);
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      std::vector<Cell> row{long(i), long(k)};
      push(row, v[k]);
      t.rows.push_back(row);
    }
  }
  return t;
}

Table curve_invert(Obj& p, const Context& ctx) {
  auto job = as_curve(p, ctx);
  const int g = job.curve.genus();
  CVector z;
  if (const json* j = p.opt("z")) {
    z = as_cvector(*j, "z");
    require_size(z.size(), g, "z");
  }
  if (const json* j = p.opt("divisor")) {
    if (z.size()) throw ConfigError("give either z or divisor, not both");
    z = CVector::Zero(g);
    for (const auto& pt : as_point_list(*j, "divisor")) z += abel_from_base(job.curve, job.pd, pt, ctx.tol);
  }
  if (!z.size()) throw ConfigError("one of z or divisor is required");
  InversionOptions opt;
  if (const json* j = p.opt("mesh")) opt.mesh = static_cast<int>(as_int(*j, "mesh"));
  opt.seed = ctx.seed;
  Divisor d = jacobi_inversion(job.curve, job.pd, z, ctx.tol, opt);
  Table t;
  t.columns = {"index"};
  t.add_complex_columns("xi");
  t.columns.push_back("sheet");
  t.columns.push_back("multiplicity");
  long k = 0;
  for (const auto& [pt, m] : d.points) {
    std::vector<Cell> row{k++};
    push(row, pt.xi);
    row.emplace_back(long(static_cast<int>(pt.sheet)));
    row.emplace_back(long(m));
    t.rows.push_back(row);
  }
  return t;
}

Table curve_constants(Obj& p, const Context& ctx) {
  auto job = as_curve(p, ctx);
  CVector d = riemann_constants(job.curve, job.pd).delta;
  Table t;
  t.header({"component", "re", "im"});
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    std::vector<Cell> row{long(k)};
    push(row, d[k]);
    t.rows.push_back(row);
  }
  return t;
}

// ---------------------------------------------------------------- builders

void push_labeled_vector(Table& t, const std::string& name, const CVector& v) {
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    std::vector<Cell> row{name, long(k)};
    push(row, v[k]);
    t.rows.push_back(row);
  }
}

Table builders_thirdkind(Obj& p, const Context& ctx) {
  auto job = as_curve(p, ctx);
  CurvePoint P = as_point(p.get("P"), "P"), Q = as_point(p.get("Q"), "Q");
  auto eta = third_kind(job.curve, job.pd, P, Q, ctx.tol);
  Table t;
  t.header({"quantity", "index", "re", "im"});
  push_labeled_vector(t, "b_period", eta.U);
  push_labeled_vector(t, "a_period", eta.a_periods);
  if (const json* j = p.opt("points")) {
    auto pts = as_point_list(*j, "points");
    CVector v(static_cast<Eigen::Index>(pts.size()));
    for (size_t i = 0; i < pts.size(); ++i) v[static_cast<Eigen::Index>(i)] = eta.form.value(job.curve, pts[i]);
    push_labeled_vector(t, "density", v);
  }
  return t;
}

Table builders_ba(Obj& p, const Context& ctx) {
  auto job = as_curve(p, ctx);
  BAData data;
  data.divisor = as_divisor(p.get("divisor"), "divisor");
  data.singular_points = as_point_list(p.get("singular_points"), "singular_points");
  const json& pp = as_array(p.get("principal_parts"), "principal_parts");
  for (size_t i = 0; i < pp.size(); ++i) data.principal_polynomials.push_back(as_complex_list(pp[i], "principal_parts[" + std::to_string(i) + "]"));
  if (data.principal_polynomials.size() != data.singular_points.size())
    throw ConfigError("principal_parts must match singular_points in length");
  auto pts = as_point_list(p.get("points"), "points");
  auto psi = baker_akhiezer(job.curve, job.pd, data, ctx.tol);
  Table t;
  t.columns = {"point"};
  t.add_complex_columns("xi");
  t.columns.push_back("sheet");
  t.columns.insert(t.columns.end(), {"re", "im", "log_abs"});
  for (size_t i = 0; i < pts.size(); ++i) {
    ScaledComplex v = psi.evaluate(pts[i]);
    std::vector<Cell> row{long(i)};
    push(row, pts[i].xi);
    row.emplace_back(long(static_cast<int>(pts[i].sheet)));
    push(row, v.value());
    row.emplace_back(v.log_abs());
    t.rows.push_back(row);
  }
  return t;
}

// ---------------------------------------------------------------- pde

WaveData as_wave(Obj& p, const RiemannMatrix& B) {
  const int g = B.genus();
  WaveData w;
  w.B = B;
  w.U = as_cvector(p.get("U"), p.sub("U"));
  w.V = as_cvector(p.get("V"), p.sub("V"));
  w.W = as_cvector(p.get("W"), p.sub("W"));
  w.characteristic = as_characteristic(p.get("characteristic"), p.sub("characteristic"), g);
  if (const json* j = p.opt("C_offset")) w.C_offset = as_real(*j, p.sub("C_offset"));
  if (const json* j = p.opt("branch_integer")) w.branch_integer = static_cast<int>(as_int(*j, p.sub("branch_integer")));
  require_size(w.U.size(), g, p.sub("U"));
  require_size(w.V.size(), g, p.sub("V"));
  require_size(w.W.size(), g, p.sub("W"));
  return w;
}

Table pde_sg_eval(Obj& p, const Context& ctx) {
  WaveData w = as_wave(p, as_riemann(p.get("B"), "B"));
  auto xs = as_range(p.get("x"), "x"), ts = as_range(p.get("t"), "t");
  CMatrix phi = sine_gordon_grid(xs, ts, w, ctx.tol);
  Table t;
  t.columns = {"x", "t"};
  t.add_complex_columns("phi");
  for (size_t i = 0; i < ts.size(); ++i)
    for (size_t j = 0; j < xs.size(); ++j) {
      std::vector<Cell> row{xs[j], ts[i]};
      push(row, phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      t.rows.push_back(row);
    }
  if (const json* j = p.opt("residual"); j && as_bool(*j, "residual")) {
    SampleGrid grid;
    for (double ti : ts)
      for (double xj : xs) grid.points.push_back({xj, ti});
    t.columns.push_back("mean_residual");
    double r = sine_gordon_residual(w, grid, 0.0, ctx.tol);
    for (auto& row : t.rows) row.emplace_back(r);
  }
  return t;
}

Table pde_sg_fit(Obj& p, const Context& ctx) {
  RiemannMatrix B = as_riemann(p.get("B"), "B");
  if (B.genus() != 1) throw ConfigError("sg-fit supports genus 1 only");
  Obj init(p.get("initial"), "initial");
  WaveData w = as_wave(init, B);
  Obj grid_cfg(p.get("grid"), "grid");
  auto xr = as_range(grid_cfg.get("x"), "grid.x"), tr = as_range(grid_cfg.get("t"), "grid.t");
  SampleGrid grid;
  for (double ti : tr)
    for (double xi : xr) grid.points.push_back({xi, ti});
  long budget = as_int(p.get("budget"), "budget");
  FitOptions opts;
  opts.seed = ctx.seed;
  opts.threads = ctx.threads;
  if (const json* j = p.opt("options")) {
    Obj o(*j, "options");
    if (const json* v = o.opt("starts")) opts.starts = static_cast<int>(as_int(*v, "options.starts"));
    if (const json* v = o.opt("box")) opts.box = as_real(*v, "options.box");
    if (const json* v = o.opt("min_wave")) opts.min_wave = as_real(*v, "options.min_wave");
    if (const json* v = o.opt("target")) opts.target = as_real(*v, "options.target");
  }
  FitResult r = fit_wave_vectors(B, w, grid, budget, opts);
  Table t;
  t.columns = {};
  t.add_complex_columns("U");
  t.add_complex_columns("V");
  t.add_complex_columns("W");
  t.columns.insert(t.columns.end(), {"C_offset", "residual", "success", "evaluations"});
  std::vector<Cell> row;
  push(row, r.data.U[0]);
  push(row, r.data.V[0]);
  push(row, r.data.W[0]);
  row.emplace_back(r.data.C_offset);
  row.emplace_back(r.residual);
  row.emplace_back(long(r.success));
  row.emplace_back(r.evaluations);
  t.rows.push_back(row);
  return t;
}

Table pde_ll_eval(Obj& p, const Context& ctx) {
  LLData ld;
  ld.B = as_riemann(p.get("B"), "B");
  const int g = ld.B.genus();
  ld.U = as_cvector(p.get("U"), "U");
  ld.V = as_cvector(p.get("V"), "V");
  ld.d = as_cvector(p.get("d"), "d");
  ld.m_shift = as_cvector(p.get("m"), "m");
  ld.r_shift = as_cvector(p.get("r"), "r");
  for (auto [v, name] : {std::pair{&ld.U, "U"}, {&ld.V, "V"}, {&ld.d, "d"}, {&ld.m_shift, "m"}, {&ld.r_shift, "r"}})
    require_size(v->size(), g, name);
  validate(ld);
  auto xs = as_range(p.get("x"), "x"), ts = as_range(p.get("t"), "t");
  Table t;
  t.columns = {"x", "t"};
  for (const char* s : {"S1", "S2", "S3"}) t.add_complex_columns(s);
  std::vector<std::vector<std::vector<Cell>>> rows(ts.size());
  parallel_rows(static_cast<int>(ts.size()), ctx.threads, [&](int i) {
    for (double x : xs) {
      auto S = landau_lifshitz_eval(x, ts[i], ld, ctx.tol);
      std::vector<Cell> row{x, ts[i]};
      for (cplx s : S) push(row, s);
      rows[i].push_back(std::move(row));
    }
  });
  for (auto& r : rows)
    for (auto& row : r) t.rows.push_back(std::move(row));
  return t;
}

// ---------------------------------------------------------------- kirchhoff

Table kirchhoff_integrate(Obj& p, const Context&) {
  std::string kind = as_string(p.get("case"), "case");
  KirchhoffSystem sys;
  if (kind == "clebsch") {
    sys = clebsch_system(make_clebsch(as_vec3(p.get("a"), "a"), as_vec3(p.get("b"), "b")));
  } else if (kind == "steklov") {
    sys = steklov_system(make_steklov(as_real(p.get("A"), "A"), as_real(p.get("B"), "B"), as_real(p.get("C"), "C"),
                                      as_vec3(p.get("b"), "b")));
  } else {
    throw ConfigError("case must be \"clebsch\" or \"steklov\"");
  }
  Obj init(p.get("initial"), "initial");
  RigidState s0{as_vec3(init.get("p"), "initial.p"), as_vec3(init.get("l"), "initial.l")};
  double t_end = as_real(p.get("t_end"), "t_end"), step = as_real(p.get("step"), "step");
  if (!(t_end > 0) || !(step > 0)) throw ConfigError("t_end and step must be positive");
  Integrator method = Integrator::RK4;
  if (const json* j = p.opt("method")) {
    std::string m = as_string(*j, "method");
    if (m == "rkf45")
      method = Integrator::RKF45;
    else if (m != "rk4")
      throw ConfigError("method must be \"rk4\" or \"rkf45\"");
  }
  double abs_tol = 1e-9;
  if (const json* j = p.opt("abs_tol")) abs_tol = as_real(*j, "abs_tol");
  long stride = 1;
  if (const json* j = p.opt("stride")) stride = as_int(*j, "stride");
  if (stride < 1) throw ConfigError("stride must be positive");
  Trajectory tr = integrate(s0, sys, t_end, step, method, abs_tol);
  Table t;
  t.header({"t", "p1", "p2", "p3", "l1", "l2", "l3", "H1", "H2", "H3", "H4"});
  for (size_t i = 0; i < tr.t.size(); ++i) {
    if (i % stride && i + 1 != tr.t.size()) continue;
    std::vector<Cell> row{tr.t[i]};
    for (int k = 0; k < 3; ++k) row.emplace_back(tr.states[i].p[k]);
    for (int k = 0; k < 3; ++k) row.emplace_back(tr.states[i].l[k]);
    for (double h : tr.H[i]) row.emplace_back(h);
    t.rows.push_back(row);
  }
  return t;
}

SpectralData as_spectrum(Obj& p) {
  return clebsch_spectrum(as_real(p.get("A"), "A"), as_real(p.get("B"), "B"), as_real(p.get("C"), "C"),
                          as_real(p.get("D"), "D"), as_vec3(p.get("b"), "b"));
}

Table kirchhoff_spectrum(Obj& p, const Context&) {
  SpectralData sp = as_spectrum(p);
  Table t;
  t.header({"quantity", "index", "re", "im"});
  auto add = [&](const std::string& name, const auto& arr) {
    for (size_t k = 0; k < arr.size(); ++k) {
      std::vector<Cell> row{name, long(k)};
      push(row, arr[k]);
      t.rows.push_back(row);
    }
  };
  add("z_root", sp.z_roots);
  add("nu", sp.nu);
  add("p5_coeff", sp.p5_coeffs);
  return t;
}

Table kirchhoff_sflow(Obj& p, const Context&) {
  SpectralData sp = as_spectrum(p);
  cplx a = as_complex(p.get("a_const"), "a_const"), b = as_complex(p.get("b_const"), "b_const");
  cplx s1 = as_complex(p.get("s1"), "s1"), s2 = as_complex(p.get("s2"), "s2");
  double t_end = as_real(p.get("t_end"), "t_end"), step = as_real(p.get("step"), "step");
  if (step == 0.0 || t_end * step < 0.0) throw ConfigError("step must be nonzero with the sign of t_end");
  std::array<int, 2> branch{1, 1};
  if (const json* j = p.opt("branch")) {
    RVector v = as_rvector(*j, "branch");
    if (v.size() != 2 || std::abs(v[0]) != 1.0 || std::abs(v[1]) != 1.0) throw ConfigError("branch must be two signs");
    branch = {int(v[0]), int(v[1])};
  }
  long stride = 1;
  if (const json* j = p.opt("stride")) stride = as_int(*j, "stride");
  if (stride < 1) throw ConfigError("stride must be positive");
  SFlowResult r = s_flow(sp, a, b, s1, s2, t_end, step, branch);
  Table t;
  t.columns = {"t"};
  for (const char* s : {"s1", "s2", "root1", "root2"}) t.add_complex_columns(s);
  t.columns.push_back("collided");
  for (size_t i = 0; i < r.samples.size(); ++i) {
    if (i % stride && i + 1 != r.samples.size()) continue;
    const auto& s = r.samples[i];
    std::vector<Cell> row{s.t};
    push(row, s.s1);
    push(row, s.s2);
    push(row, s.root1);
    push(row, s.root2);
    row.emplace_back(long(r.collided && i + 1 == r.samples.size()));
    t.rows.push_back(row);
  }
  return t;
}

// ---------------------------------------------------------------- dispatch

bool is_validation(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::NotSymmetric:
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::NotHalfPeriod:
    case ErrorCode::GenusTooLarge:
    case ErrorCode::BadConfiguration:
    case ErrorCode::MatrixValidation:
    case ErrorCode::OddCount:
    case ErrorCode::UnsupportedConfiguration:
      return true;
    default:
      return false;
  }
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Riemann theta functions and applications"};
  app.require_subcommand(1);

  std::string config_path, out_path, chosen;
  double eps = 1e-10;
  unsigned seed = 0;
  bool as_json = false;
  int genus = 0;
  std::vector<int> only;

  struct Leaf {
    CLI::App* app;
    Handler handler;
    std::string name;
  };
  std::vector<Leaf> leaves;

  auto leaf = [&](CLI::App* group, const std::string& name, const std::string& desc, Handler h) {
    CLI::App* sub = group->add_subcommand(name, desc);
    sub->add_option("-c,--config", config_path, "JSON job configuration")->check(CLI::ExistingFile);
    sub->add_option("--eps", eps, "truncation tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "seed for randomized steps");
    sub->add_option("-o,--out", out_path, "output file (default: standard output)");
    sub->add_flag("--json", as_json, "write NDJSON instead of CSV");
    leaves.push_back({sub, std::move(h), group->get_name() + " " + name});
    return sub;
  };
  auto group = [&](const std::string& name, const std::string& desc) {
    CLI::App* g = app.add_subcommand(name, desc);
    g->require_subcommand(1);
    return g;
  };

  CLI::App* theta_g = group("theta", "theta function evaluation");
  leaf(theta_g, "eval", "theta with characteristics at points", theta_eval);
  leaf(theta_g, "grid", "theta on a planar grid of arguments", theta_grid);
  leaf(theta_g, "halfperiods", "half-period characteristics with parities", theta_halfperiods)
      ->add_option("--genus", genus, "genus")
      ->check(CLI::Range(1, 10));

  CLI::App* ell = group("elliptic", "genus-1 machinery");
  leaf(ell, "wp", "Weierstrass p and p'", elliptic_wp);
  leaf(ell, "invariants", "g2 and g3 of a lattice", elliptic_invariants);
  leaf(ell, "build", "elliptic function from a divisor or principal parts", elliptic_build);

  CLI::App* curve = group("curve", "hyperelliptic curves");
  leaf(curve, "periods", "period matrices", curve_periods);
  leaf(curve, "abelmap", "Abel map from the first branch point", curve_abelmap);
  leaf(curve, "invert", "Jacobi inversion", curve_invert);
  leaf(curve, "constants", "Riemann constants", curve_constants);

  CLI::App* bld = group("builders", "meromorphic functions on curves");
  leaf(bld, "thirdkind", "normalized differential of the third kind", builders_thirdkind);
  leaf(bld, "ba", "Baker-Akhiezer function values", builders_ba);

  CLI::App* pde = group("pde", "finite-gap solutions");
  leaf(pde, "sg-eval", "sine-Gordon field on a grid", pde_sg_eval);
  leaf(pde, "sg-fit", "fit genus-1 sine-Gordon wave vectors", pde_sg_fit);
  leaf(pde, "ll-eval", "Landau-Lifshitz spin field on a grid", pde_ll_eval);

  CLI::App* kir = group("kirchhoff", "rigid body in a fluid");
  leaf(kir, "integrate", "integrate the Kirchhoff equations", kirchhoff_integrate);
  leaf(kir, "spectrum", "Clebsch spectral data", kirchhoff_spectrum);
  leaf(kir, "sflow", "separated (s1, s2) flow", kirchhoff_sflow);

  CLI::App* self = app.add_subcommand("selftest", "run the invariant suite");
  self->add_option("--seed", seed, "seed");
  self->add_option("--only", only, "criterion ids")->check(CLI::Range(1, kCriterionCount));
  self->add_option("-o,--out", out_path, "output file");
  self->add_flag("--json", as_json, "write NDJSON instead of CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  Table table;
  int status = 0;
  try {
    Context ctx;
    ctx.threads = thread_cap();
    ctx.seed = seed;
    ctx.genus = genus;
    if (self->parsed()) {
      SelftestOptions so;
      so.seed = seed ? seed : 1;
      so.only = only;
      table.header({"id", "name", "pass", "seconds", "detail"});
      for (const auto& r : run_selftest(so)) {
        table.rows.push_back({long(r.id), r.name, long(r.pass), r.seconds, r.detail});
        if (!r.pass) status = 3;
      }
    } else {
      const Leaf* active = nullptr;
      for (const auto& l : leaves)
        if (l.app->parsed()) active = &l;
      json cfg = load_config(config_path);
      Obj top(cfg, "");
      if (const json* c = top.opt("command"))
        if (as_string(*c, "command") != active->name)
          throw ConfigError("config command \"" + c->get<std::string>() + "\" does not match \"" + active->name + "\"");
      if (const json* tol = top.opt("tolerance")) {
        Obj o(*tol, "tolerance");
        if (const json* v = o.opt("eps")) ctx.tol.eps = as_real(*v, "tolerance.eps");
        if (const json* v = o.opt("max_radius")) ctx.tol.max_radius = as_real(*v, "tolerance.max_radius");
      }
      if (active->app->count("--eps")) ctx.tol.eps = eps;
      if (!(ctx.tol.eps > 0.0 && ctx.tol.eps < 1.0)) throw ConfigError("eps must lie in (0, 1)");
      if (const json* o = top.opt("output"))
        if (!active->app->count("--out")) out_path = as_string(*o, "output");
      static const json empty = json::object();
      const json* params = top.opt("params");
      Obj p(params ? *params : empty, "params");
      table = active->handler(p, ctx);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << (is_validation(e.code()) ? "validation error: " : "numerical error: ") << e.what() << '\n';
    return is_validation(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  }

  std::string text = render(table, as_json);
  if (out_path.empty()) {
    out << text;
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f || !(f << text)) {
      err << "cannot write " << out_path << '\n';
      return 2;
    }
  }
  return status;
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace thetakit::cli
