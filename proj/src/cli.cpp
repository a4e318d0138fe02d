#include "adscft/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include "adscft/axioms.hpp"
#include "adscft/functionals.hpp"
#include "adscft/geometry.hpp"
#include "adscft/gff.hpp"
#include "adscft/harmonic.hpp"
#include "adscft/parallel.hpp"
#include "adscft/propagators.hpp"
#include "adscft/regularization.hpp"

#ifndef ADSCFT_VERSION
#define ADSCFT_VERSION "unknown"
#endif

namespace adscft::cli {

ConfigError::ConfigError(std::string field, const std::string& reason)
    : std::runtime_error(field + ": " + reason), field_(std::move(field)) {}

const char* library_version() { return ADSCFT_VERSION; }

namespace {

// ---------------------------------------------------------------------------
// Experiment table

struct Experiment {
  std::string name;
  std::string summary;
  std::string columns;
  bool uses_params;
  bool needs_boundary_measure;  // nu < d/2
  std::function<Json()> options;
  std::function<Json()> tolerances;
};

Json unit_function() { return Json::array({{{"width", 1.0}, {"weight", 1.0}}}); }

Json small_region() {
  return {{"z", {1.0, 1.9}}, {"x", Json::array({{-0.45, 0.45}})}, {"points", {3, 1}}};
}

Json quartic() { return Json::array({0.0, 0.0, 0.1, 0.0, 0.5}); }

const std::vector<Experiment>& table() {
  static const std::vector<Experiment> t = {
      {"propagator",
       "G_+/G_- at random point pairs: isometry invariance and the bulk-to-boundary limit",
       "pair, u, g_plus, g_minus, invariance_residual, boundary_limit_residual",
       true, false,
       [] { return Json{{"pairs", 10}, {"isometry_factors", 4}, {"boundary_z", 1e-4}}; },
       [] { return Json{{"invariance", 1e-10}, {"boundary_limit", 1e-6}}; }},
      {"split-check",
       "splitting identity G_- = G_+ + c^2 H_+ alpha_- H_+ at random point pairs",
       "pair, u, g_minus, g_plus, boundary_term, residual, relative_residual",
       true, true,
       [] { return Json{{"pairs", 10}, {"rel_tol", 1e-11}}; },
       [] { return Json{{"residual", 1e-6}}; }},
      {"corr-limit",
       "corrected scaled pairing z^{-2 Delta_+}-limit against (f, alpha_+ f)",
       "z, raw, corr, corrected",
       true, false,
       [] { return Json{{"z", default_z_sequence()}, {"f", unit_function()}}; },
       [] { return Json{{"relative_gap", 1e-3}, {"slope", 0.05}}; }},
      {"cutoff-limit",
       "projected inverse pairing (f, (p_m alpha_-^n p_m)^{-1} f) against -c^2 (f, alpha_+ f)",
       "m, value, relative_gap, cauchy_difference, condition_number",
       true, true,
       [] {
         return Json{{"m", {4, 8, 16, 32, 64}}, {"n", 1000}, {"scale", 1.0}, {"f", unit_function()}};
       },
       [] { return Json{{"relative_gap", 1e-2}}; }},
      {"duality",
       "Z(f)/Z(0) against Zt(c f)/Zt(0) on a lattice region",
       "z_value, z_std_error, ztilde_value, ztilde_std_error, gap, combined_std_error",
       true, true,
       [] {
         return Json{{"region", small_region()},
                     {"V", quartic()},
                     {"f", Json::array({{{"width", 0.5}, {"weight", 1.0}}})},
                     {"method", "quadrature"},
                     {"samples", 100000},
                     {"gh_points", 40},
                     {"max_relative_error", 0.1}};
       },
       [] { return Json{{"exact", 1e-12}, {"quadrature", 1e-10}, {"mc_sigma", 3.0}}; }},
      {"rp-check",
       "reflection-positivity matrices M_ij = Zt(f_i + theta f_j) over random families",
       "family, min_eigenvalue, norm, noise, asymmetry, pass",
       true, false,
       [] {
         return Json{{"mode", "free"},
                     {"families", 20},
                     {"size", 5},
                     {"axis", 1},
                     {"region",
                      {{"z", {1.0, 2.2}}, {"x", Json::array({{-1.0, 1.0}})}, {"points", {4, 6}}}},
                     {"V", quartic()},
                     {"samples", 20000}};
       },
       [] { return Json{{"eigen", 1e-8}}; }},
      {"intertwine",
       "H_+(g p; x') against J^{Delta_+/d} H_+(p; g^{-1} x') for random isometries",
       "trial, residual, conformal_factor",
       true, false,
       [] {
         return Json{{"isometries", 100}, {"isometry_factors", 4}, {"max_conformal_factor", 1e3}};
       },
       [] { return Json{{"residual", 1e-8}}; }},
      {"conformal-2pt",
       "conformal covariance of alpha_+(x, y) under random isometries",
       "trial, residual, conformal_factor_x, conformal_factor_y",
       true, false,
       [] {
         return Json{{"isometries", 100}, {"isometry_factors", 4}, {"max_conformal_factor", 1e3}};
       },
       [] { return Json{{"residual", 1e-8}}; }},
      {"spherical",
       "spherical functions on H^2: normalization, two integral forms, eigen-equation, Plancherel",
       "lambda, r, phi, phi_theta, difference",
       false, false,
       [] {
         return Json{{"lambdas", {0.0, 0.5, 4.0, 20.0}},
                     {"radii", {0.05, 1.0, 5.0, 10.0}},
                     {"eigen_lambda", 1.3},
                     {"eigen_radii", {0.8, 2.0}},
                     {"h", 0.02},
                     {"gaussian_width", 0.5},
                     {"radius", 4.0}};
       },
       [] { return Json{{"forms", 1e-9}, {"order", 0.05}, {"plancherel", 1e-4}}; }},
      {"sobolev",
       "Sobolev norms on H^2: -Delta + m2 maps H^beta onto H^{beta-2} isometrically",
       "beta, norm_f, norm_lf, relative_difference",
       false, false,
       [] {
         return Json{{"gaussian_width", 0.6}, {"radius", 5.0}, {"m2", 0.9},
                     {"betas", {1.0, 2.0}},  {"panel", 1.0},   {"max_lambda", 200.0}};
       },
       [] { return Json{{"isomorphism", 1e-3}}; }},
  };
  return t;
}

const Experiment& lookup(const std::string& name) {
  for (const auto& e : table()) {
    if (e.name == name) {
      return e;
    }
  }
  throw ConfigError("experiment", "unknown experiment '" + name + "'");
}

// ---------------------------------------------------------------------------
// Typed access with field-level errors

std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

const Json& get(const Json& obj, const std::string& path) {
  const Json* cur = &obj;
  std::string done;
  std::stringstream ss(path);
  std::string key;
  while (std::getline(ss, key, '.')) {
    done = join(done, key);
    if (!cur->is_object() || !cur->contains(key)) {
      throw ConfigError(done, "required field missing");
    }
    cur = &(*cur)[key];
  }
  return *cur;
}

double number(const Json& j, const std::string& field) {
  if (!j.is_number()) {
    throw ConfigError(field, "expected a number");
  }
  const double v = j.get<double>();
  if (!std::isfinite(v)) {
    throw ConfigError(field, "expected a finite number");
  }
  return v;
}

double positive(const Json& j, const std::string& field) {
  const double v = number(j, field);
  if (!(v > 0.0)) {
    throw ConfigError(field, "expected a positive number");
  }
  return v;
}

long long integer(const Json& j, const std::string& field, long long lo, long long hi) {
  if (!j.is_number()) {
    throw ConfigError(field, "expected an integer");
  }
  const double v = j.get<double>();
  if (v != std::floor(v) || !(v >= static_cast<double>(lo)) || !(v <= static_cast<double>(hi))) {
    std::ostringstream os;
    os << "expected an integer in [" << lo << ", " << hi << "]";
    throw ConfigError(field, os.str());
  }
  return j.is_number_unsigned() ? static_cast<long long>(j.get<std::uint64_t>())
                                : static_cast<long long>(v);
}

std::vector<double> numbers(const Json& j, const std::string& field, std::size_t min_size = 1) {
  if (!j.is_array() || j.size() < min_size) {
    throw ConfigError(field, "expected an array of at least " + std::to_string(min_size) +
                                 " number(s)");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

// Structural check against the defaults: same keys, compatible scalar kinds.
void check_shape(const Json& value, const Json& def, const std::string& path) {
  if (def.is_object()) {
    if (!value.is_object()) {
      throw ConfigError(path, "expected an object");
    }
    for (auto it = value.begin(); it != value.end(); ++it) {
      if (!def.contains(it.key())) {
        throw ConfigError(join(path, it.key()), "unknown field");
      }
    }
    for (auto it = def.begin(); it != def.end(); ++it) {
      if (!value.contains(it.key())) {
        throw ConfigError(join(path, it.key()), "required field missing");
      }
      check_shape(value[it.key()], it.value(), join(path, it.key()));
    }
  } else if (def.is_number()) {
    if (!value.is_number()) {
      throw ConfigError(path, "expected a number");
    }
  } else if (def.is_array()) {
    if (!value.is_array()) {
      throw ConfigError(path, "expected an array");
    }
  } else if (def.is_string()) {
    if (!value.is_string()) {
      throw ConfigError(path, "expected a string");
    }
  }
}

// ---------------------------------------------------------------------------
// Domain objects from JSON

ModelParams parse_params(const Json& params, const Experiment& e) {
  const int d = static_cast<int>(integer(get(params, "d"), "params.d", 1, 8));
  const bool has_nu = params.contains("nu");
  const bool has_m2 = params.contains("m2");
  if (has_nu == has_m2) {
    throw ConfigError("params", "give exactly one of nu and m2");
  }
  double nu = 0.0;
  std::string field;
  if (has_nu) {
    field = "params.nu";
    nu = number(params["nu"], field);
    if (!(nu > 0.0)) {
      throw ConfigError(field, "ν must be positive");
    }
  } else {
    field = "params.m2";
    const double m2 = number(params["m2"], field);
    const double disc = static_cast<double>(d) * d + 4.0 * m2;
    if (!(disc > 0.0)) {
      throw ConfigError(field, "m2 must exceed -d^2/4");
    }
    nu = 0.5 * std::sqrt(disc);
  }
  if (std::abs(nu - std::round(nu)) < 1e-12) {
    std::ostringstream os;
    os << "integer ν excluded (ν = " << nu << ")";
    throw ConfigError(field, os.str());
  }
  ModelParams p = has_nu ? ModelParams::from_nu(d, nu) : ModelParams::from_mass(d, params["m2"].get<double>());
  if (e.needs_boundary_measure && !(p.nu < 0.5 * d)) {
    std::ostringstream os;
    os << e.name << " needs ν < d/2 (ν = " << p.nu << ", d = " << d << ")";
    throw ConfigError(field, os.str());
  }
  return p;
}

BoundaryFunction parse_function(const Json& j, int d, const std::string& field) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(field, "expected a non-empty array of bumps {center, width, weight}");
  }
  std::vector<GaussianBump> terms;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string f = field + "[" + std::to_string(i) + "]";
    const Json& b = j[i];
    if (!b.is_object()) {
      throw ConfigError(f, "expected an object {center, width, weight}");
    }
    for (auto it = b.begin(); it != b.end(); ++it) {
      if (it.key() != "center" && it.key() != "width" && it.key() != "weight") {
        throw ConfigError(f + "." + it.key(), "unknown field");
      }
    }
    GaussianBump t;
    t.center = Vector::Zero(d);
    if (b.contains("center")) {
      const auto c = numbers(b["center"], f + ".center");
      if (static_cast<int>(c.size()) != d) {
        throw ConfigError(f + ".center", "expected " + std::to_string(d) + " coordinate(s)");
      }
      for (int k = 0; k < d; ++k) {
        t.center(k) = c[static_cast<std::size_t>(k)];
      }
    }
    t.width = b.contains("width") ? positive(b["width"], f + ".width") : 1.0;
    t.weight = b.contains("weight") ? number(b["weight"], f + ".weight") : 1.0;
    terms.push_back(std::move(t));
  }
  return BoundaryFunction(std::move(terms));
}

LatticeRegion parse_region(const Json& r, int d, const std::string& field) {
  for (auto it = r.begin(); it != r.end(); ++it) {
    if (it.key() != "z" && it.key() != "x" && it.key() != "points") {
      throw ConfigError(field + "." + it.key(), "unknown field");
    }
  }
  const auto z = numbers(get(r, "z"), field + ".z", 2);
  if (z.size() != 2 || !(z[0] > 0.0 && z[1] > z[0])) {
    throw ConfigError(field + ".z", "expected [z_min, z_max] with 0 < z_min < z_max");
  }
  const Json& x = get(r, "x");
  if (!x.is_array() || static_cast<int>(x.size()) != d) {
    throw ConfigError(field + ".x", "expected " + std::to_string(d) + " interval(s) [lo, hi]");
  }
  std::vector<std::pair<double, double>> box;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::string f = field + ".x[" + std::to_string(i) + "]";
    const auto iv = numbers(x[i], f, 2);
    if (iv.size() != 2 || !(iv[1] > iv[0])) {
      throw ConfigError(f, "expected [lo, hi] with lo < hi");
    }
    box.emplace_back(iv[0], iv[1]);
  }
  const Json& pts = get(r, "points");
  if (!pts.is_array() || static_cast<int>(pts.size()) != d + 1) {
    throw ConfigError(field + ".points", "expected " + std::to_string(d + 1) + " point counts (z first)");
  }
  std::vector<int> points;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    points.push_back(static_cast<int>(
        integer(pts[i], field + ".points[" + std::to_string(i) + "]", 1, 4096)));
  }
  try {
    return LatticeRegion::uniform(d, {z[0], z[1]}, box, points);
  } catch (const DomainError& err) {
    throw ConfigError(field, err.what());
  }
}

Interaction parse_interaction(const Json& j, std::size_t sites, const std::string& field) {
  const auto a = numbers(j, field);
  try {
    auto V = Interaction::uniform(sites, a);
    V.validate();
    return V;
  } catch (const DomainError& err) {
    throw ConfigError(field, err.what());
  }
}

Method parse_method(const Json& j, const std::string& field) {
  const std::string m = j.get<std::string>();
  if (m == "exact") {
    return Method::exact;
  }
  if (m == "quadrature") {
    return Method::quadrature;
  }
  if (m == "monte_carlo") {
    return Method::monte_carlo;
  }
  throw ConfigError(field, "expected one of exact, quadrature, monte_carlo");
}

// Semantic checks of the options that the runner would otherwise hit late.
void validate_options(const Experiment& e, const Json& cfg, int d) {
  const Json& o = cfg["options"];
  const Json& t = cfg["tolerances"];
  for (auto it = t.begin(); it != t.end(); ++it) {
    positive(it.value(), "tolerances." + it.key());
  }
  const std::string& n = e.name;
  auto count = [&](const char* key, long long lo, long long hi) {
    integer(o[key], std::string("options.") + key, lo, hi);
  };
  if (n == "propagator" || n == "split-check") {
    count("pairs", 1, 100000);
  }
  if (n == "propagator") {
    count("isometry_factors", 1, 64);
    positive(o["boundary_z"], "options.boundary_z");
  }
  if (n == "split-check") {
    positive(o["rel_tol"], "options.rel_tol");
  }
  if (n == "corr-limit" || n == "cutoff-limit" || n == "duality") {
    parse_function(o["f"], d, "options.f");
  }
  if (n == "corr-limit") {
    const auto z = numbers(o["z"], "options.z", 2);
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!(z[i] > 0.0) || (i > 0 && !(z[i] < z[i - 1]))) {
        throw ConfigError("options.z", "expected a positive, strictly decreasing sequence");
      }
    }
  }
  if (n == "cutoff-limit") {
    if (d != 1) {
      throw ConfigError("params.d", "cutoff-limit supports d = 1 only");
    }
    const auto ms = numbers(o["m"], "options.m");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      integer(o["m"][i], "options.m[" + std::to_string(i) + "]", 1, 512);
      if (i > 0 && !(ms[i] > ms[i - 1])) {
        throw ConfigError("options.m", "expected a strictly increasing sequence");
      }
    }
    count("n", 1, 1000000000);
    positive(o["scale"], "options.scale");
  }
  if (n == "duality" || n == "rp-check") {
    const auto region = parse_region(o["region"], d, "options.region");
    parse_interaction(o["V"], region.size(), "options.V");
    count("samples", 2, 1000000000000LL);
  }
  if (n == "duality") {
    parse_method(o["method"], "options.method");
    count("gh_points", 2, 200);
    positive(o["max_relative_error"], "options.max_relative_error");
  }
  if (n == "rp-check") {
    const std::string mode = o["mode"].get<std::string>();
    if (mode != "free" && mode != "interacting") {
      throw ConfigError("options.mode", "expected free or interacting");
    }
    count("families", 1, 100000);
    count("size", 1, 64);
    const auto axis = integer(o["axis"], "options.axis", 1, d);
    (void)axis;
  }
  if (n == "intertwine" || n == "conformal-2pt") {
    count("isometries", 1, 1000000);
    count("isometry_factors", 1, 64);
    positive(o["max_conformal_factor"], "options.max_conformal_factor");
  }
  if (n == "spherical") {
    numbers(o["lambdas"], "options.lambdas");
    for (double r : numbers(o["radii"], "options.radii")) {
      if (r < 0.0) {
        throw ConfigError("options.radii", "expected radii >= 0");
      }
    }
    number(o["eigen_lambda"], "options.eigen_lambda");
    const double h = positive(o["h"], "options.h");
    for (double r : numbers(o["eigen_radii"], "options.eigen_radii")) {
      if (!(r > 2.0 * h)) {
        throw ConfigError("options.eigen_radii", "expected radii > 2 h");
      }
    }
    positive(o["gaussian_width"], "options.gaussian_width");
    positive(o["radius"], "options.radius");
  }
  if (n == "sobolev") {
    positive(o["gaussian_width"], "options.gaussian_width");
    positive(o["radius"], "options.radius");
    if (!(number(o["m2"], "options.m2") > -0.25)) {
      throw ConfigError("options.m2", "expected m2 > -1/4");
    }
    numbers(o["betas"], "options.betas");
    const double panel = positive(o["panel"], "options.panel");
    if (!(positive(o["max_lambda"], "options.max_lambda") > panel)) {
      throw ConfigError("options.max_lambda", "expected max_lambda > panel");
    }
  }
}

// ---------------------------------------------------------------------------
// Runners

struct Context {
  const Json& cfg;
  const Json& o;
  const Json& tol;
  ModelParams p;
  std::uint64_t seed;
  int workers;
  Json inputs = Json::object();
  Json outputs = Json::object();
  Json checks = Json::array();
  Table table;

  double t(const char* key) const { return tol[key].get<double>(); }
  int i(const char* key) const { return o[key].get<int>(); }
  double d(const char* key) const { return o[key].get<double>(); }

  void check(const std::string& name, double value, double tolerance, bool pass) {
    checks.push_back({{"name", name}, {"value", value}, {"tolerance", tolerance}, {"pass", pass}});
  }
  // value <= tolerance
  void bound(const std::string& name, double value, double tolerance) {
    check(name, value, tolerance, value <= tolerance);
  }
};

double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

Vector normal_vector(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(d);
  for (int k = 0; k < d; ++k) {
    v(k) = g(rng);
  }
  return v;
}

BulkPoint random_bulk_point(int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> z(0.3, 2.5);
  const double zz = z(rng);
  return BulkPoint(zz, normal_vector(d, rng));
}

void run_propagator(Context& c) {
  const int d = c.p.d;
  std::mt19937_64 rng(c.seed);
  const double zb = c.d("boundary_z");
  double worst_inv = 0.0;
  double worst_lim = 0.0;
  c.table.columns = {"pair", "u", "g_plus", "g_minus", "invariance_residual",
                     "boundary_limit_residual"};
  for (int k = 0; k < c.i("pairs"); ++k) {
    const BulkPoint a = random_bulk_point(d, rng);
    const BulkPoint b = random_bulk_point(d, rng);
    const auto g = Isometry::random(d, rng, c.i("isometry_factors"));
    const double gp = green(c.p, KernelSign::plus, a, b);
    const double gm = green(c.p, KernelSign::minus, a, b);
    const double moved = green(c.p, KernelSign::plus, apply_isometry(g, a), apply_isometry(g, b));
    const double inv = rel_diff(moved, gp);
    // z^{-Delta_+} G_+(a, (z, x')) -> H_+(a, x') with an O(z) correction;
    // one Richardson step leaves O(z^2).
    auto scaled = [&](double z) {
      return std::pow(z, -c.p.delta_plus) * green(c.p, KernelSign::plus, a, BulkPoint(z, b.x));
    };
    const double h = bulk_to_boundary(c.p, KernelSign::plus, a, b.x);
    const double lim = std::abs(2.0 * scaled(0.5 * zb) - scaled(zb) - h) / std::abs(h);
    worst_inv = std::max(worst_inv, inv);
    worst_lim = std::max(worst_lim, lim);
    c.table.rows.push_back({static_cast<double>(k), chordal_u(a, b), gp, gm, inv, lim});
  }
  c.outputs["max_invariance_residual"] = worst_inv;
  c.outputs["max_boundary_limit_residual"] = worst_lim;
  c.bound("invariance", worst_inv, c.t("invariance"));
  c.bound("boundary_limit", worst_lim, c.t("boundary_limit"));
}

void run_split_check(Context& c) {
  const int d = c.p.d;
  std::mt19937_64 rng(c.seed);
  const int n = c.i("pairs");
  std::vector<BulkPoint> as, bs;
  for (int k = 0; k < n; ++k) {
    as.push_back(random_bulk_point(d, rng));
    bs.push_back(random_bulk_point(d, rng));
  }
  std::vector<SplittingCheck> res(static_cast<std::size_t>(n));
  parallel_blocks(res.size(), c.workers, [&](std::size_t k) {
    res[k] = splitting_residual(c.p, as[k], bs[k], c.d("rel_tol"));
  });
  c.table.columns = {"pair", "u", "g_minus", "g_plus", "boundary_term", "residual",
                     "relative_residual"};
  double worst = 0.0;
  for (std::size_t k = 0; k < res.size(); ++k) {
    const auto& r = res[k];
    const double relres = std::abs(r.residual) / std::abs(r.g_minus - r.g_plus);
    worst = std::max(worst, relres);
    c.table.rows.push_back({static_cast<double>(k), chordal_u(as[k], bs[k]), r.g_minus, r.g_plus,
                            r.boundary_term, r.residual, relres});
  }
  c.outputs["max_relative_residual"] = worst;
  c.bound("relative_residual", worst, c.t("residual"));
}

void run_corr_limit(Context& c) {
  const auto f = parse_function(c.o["f"], c.p.d, "options.f");
  const auto r = regularized_limit_check(c.p, f, c.o["z"].get<std::vector<double>>());
  c.table.columns = {"z", "raw", "corr", "corrected"};
  for (const auto& row : r.rows) {
    c.table.rows.push_back({row.z, row.raw, row.corr, row.corrected});
  }
  const double target = -2.0 * c.p.nu;
  const double slope_dev = std::abs(r.raw_slope - target) / std::abs(target);
  c.outputs["limit"] = r.limit;
  c.outputs["limit_gap"] = r.limit_gap;
  c.outputs["relative_gap"] = r.relative_gap;
  c.outputs["raw_slope"] = r.raw_slope;
  c.outputs["expected_slope"] = target;
  c.bound("relative_gap", r.relative_gap, c.t("relative_gap"));
  c.bound("slope_relative_deviation", slope_dev, c.t("slope"));
}

void run_cutoff_limit(Context& c) {
  const auto f = parse_function(c.o["f"], c.p.d, "options.f");
  const CutoffSpec n(c.i("n"));
  const double scale = c.d("scale");
  const double target = -c.p.c * c.p.c * boundary_pairing(c.p, KernelSign::plus, f, f).value;
  const auto ms = c.o["m"].get<std::vector<int>>();
  std::vector<ProjectedPairing> res(ms.size());
  parallel_blocks(ms.size(), c.workers, [&](std::size_t k) {
    res[k] = projected_inverse_pairing(c.p, n, f, ms[k], scale);
  });
  c.table.columns = {"m", "value", "relative_gap", "cauchy_difference", "condition_number"};
  int non_monotone = 0;
  double prev_diff = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < res.size(); ++k) {
    const double diff = k == 0 ? std::nan("") : std::abs(res[k].value - res[k - 1].value);
    if (k > 0) {
      non_monotone += diff > prev_diff ? 1 : 0;
      prev_diff = diff;
    }
    c.table.rows.push_back({static_cast<double>(ms[k]), res[k].value,
                            std::abs(res[k].value - target) / std::abs(target), diff,
                            res[k].condition_number});
  }
  const double gap = std::abs(res.back().value - target) / std::abs(target);
  c.outputs["target"] = target;
  c.outputs["final_value"] = res.back().value;
  c.outputs["relative_gap"] = gap;
  c.outputs["non_monotone_steps"] = non_monotone;
  c.bound("relative_gap", gap, c.t("relative_gap"));
  c.check("cauchy_differences_monotone", non_monotone, 0.0, non_monotone == 0);
}

void run_duality(Context& c) {
  const int d = c.p.d;
  const auto region = parse_region(c.o["region"], d, "options.region");
  const auto V = parse_interaction(c.o["V"], region.size(), "options.V");
  const auto f = parse_function(c.o["f"], d, "options.f");
  const auto cov = build_covariance(region, c.p);
  EstimatorOptions opt;
  opt.method = parse_method(c.o["method"], "options.method");
  opt.samples = c.o["samples"].get<std::size_t>();
  opt.seed = c.seed;
  opt.workers = c.workers;
  opt.gh_points = c.i("gh_points");
  opt.max_relative_error = c.d("max_relative_error");
  const auto g = duality_gap(c.p, region, cov, V, f, opt);
  c.inputs["sites"] = region.size();
  c.outputs["method"] = to_string(g.z.method);
  c.outputs["z"] = {{"value", g.z.value}, {"std_error", g.z.std_error},
                    {"exponent", g.z.exponent}, {"expectation_ratio", g.z.expectation_ratio},
                    {"n_samples", g.z.n_samples}};
  c.outputs["ztilde"] = {{"value", g.ztilde.value}, {"std_error", g.ztilde.std_error},
                         {"exponent", g.ztilde.exponent},
                         {"expectation_ratio", g.ztilde.expectation_ratio},
                         {"n_samples", g.ztilde.n_samples}};
  c.outputs["gap"] = g.gap;
  c.outputs["combined_std_error"] = g.combined_se;
  c.table.columns = {"z_value", "z_std_error", "ztilde_value", "ztilde_std_error", "gap",
                     "combined_std_error"};
  c.table.rows.push_back(
      {g.z.value, g.z.std_error, g.ztilde.value, g.ztilde.std_error, g.gap, g.combined_se});
  switch (g.z.method) {
    case Method::exact:
      c.bound("relative_gap", std::abs(g.gap) / std::abs(g.z.value), c.t("exact"));
      break;
    case Method::quadrature:
      c.bound("relative_gap", std::abs(g.gap) / std::abs(g.z.value), c.t("quadrature"));
      break;
    case Method::monte_carlo:
      c.bound("gap_in_std_errors", std::abs(g.gap) / g.combined_se, c.t("mc_sigma"));
      break;
  }
}

// Bump supported in {x_axis > 0} up to kSupportMass: center / width >= 6.6.
BoundaryFunction positive_bump(int d, int axis, std::mt19937_64& rng, double c_lo, double c_hi,
                               double w_lo, double w_hi, double spread) {
  std::uniform_real_distribution<double> c1(c_lo, c_hi), cx(-spread, spread), w(w_lo, w_hi),
      a(0.2, 1.0);
  Vector center(d);
  for (int k = 0; k < d; ++k) {
    center(k) = cx(rng);
  }
  center(axis) = c1(rng);
  const double width = std::min(w(rng), center(axis) / 6.6);
  double weight = a(rng);
  if (std::bernoulli_distribution(0.5)(rng)) {
    weight = -weight;
  }
  return BoundaryFunction::bump(center, width, weight);
}

void run_rp_check(Context& c) {
  const int d = c.p.d;
  const ReflectionSpec spec{c.i("axis")};
  const bool free = c.o["mode"].get<std::string>() == "free";
  std::mt19937_64 rng(c.seed);
  RPFunctional functional;
  std::optional<LatticeRegion> region;
  std::optional<CovarianceMatrix> cov;
  std::optional<Interaction> V;
  EstimatorOptions opt;
  if (free) {
    functional = free_ztilde_functional(c.p);
  } else {
    region = parse_region(c.o["region"], d, "options.region");
    V = parse_interaction(c.o["V"], region->size(), "options.V");
    cov = build_covariance(*region, c.p);
    opt.samples = c.o["samples"].get<std::size_t>();
    opt.seed = c.seed;
    opt.workers = 1;
    functional = ztilde_functional(c.p, *region, *cov, *V, opt);
    c.inputs["sites"] = region->size();
  }
  c.table.columns = {"family", "min_eigenvalue", "norm", "noise", "asymmetry", "pass"};
  int failures = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int fam = 0; fam < c.i("families"); ++fam) {
    std::vector<BoundaryFunction> fs;
    for (int k = 0; k < c.i("size"); ++k) {
      fs.push_back(free ? positive_bump(d, spec.index(), rng, 1.2, 3.0, 0.1, 0.18, 1.0)
                        : positive_bump(d, spec.index(), rng, 0.4, 1.0, 0.05, 0.15, 0.5));
    }
    const auto m = rp_matrix(functional, fs, spec, free ? c.workers : 1);
    const bool pass = rp_passes(m, c.t("eigen"));
    failures += pass ? 0 : 1;
    // Scaled margin: min eigenvalue over the allowed slack (>= -1 passes).
    const double slack = std::max(c.t("eigen") * m.norm, 3.0 * m.noise);
    worst = std::min(worst, m.min_eigenvalue / slack);
    c.table.rows.push_back({static_cast<double>(fam), m.min_eigenvalue, m.norm, m.noise,
                            m.asymmetry, pass ? 1.0 : 0.0});
  }
  c.outputs["failures"] = failures;
  c.outputs["min_scaled_eigenvalue"] = worst;
  c.check("families_failing", failures, 0.0, failures == 0);
}

// Random isometry and points whose images stay away from the pole.
template <class Draw>
void isometry_trials(Context& c, const std::vector<std::string>& columns, Draw&& draw) {
  std::mt19937_64 rng(c.seed);
  c.table.columns = columns;
  double worst = 0.0;
  for (int k = 0; k < c.i("isometries"); ++k) {
    const auto g = Isometry::random(c.p.d, rng, c.i("isometry_factors"));
    std::vector<double> row = draw(g, rng);
    worst = std::max(worst, row.front());
    row.insert(row.begin(), static_cast<double>(k));
    c.table.rows.push_back(std::move(row));
  }
  c.outputs["max_residual"] = worst;
  c.bound("residual", worst, c.t("residual"));
}

void run_intertwine(Context& c) {
  const int d = c.p.d;
  const double cap = c.d("max_conformal_factor");
  isometry_trials(c, {"trial", "residual", "conformal_factor"},
                  [&](const Isometry& g, std::mt19937_64& rng) {
                    std::normal_distribution<double> n;
                    const auto inv = g.inverse();
                    BulkPoint q(std::exp(0.5 * n(rng)), normal_vector(d, rng));
                    Vector y = normal_vector(d, rng);
                    while (conformal_factor(inv, y) > cap) {
                      y = normal_vector(d, rng);
                    }
                    return std::vector<double>{intertwining_residual(c.p, g, q, y),
                                               conformal_factor(inv, y)};
                  });
}

void run_conformal_2pt(Context& c) {
  const int d = c.p.d;
  const double cap = c.d("max_conformal_factor");
  isometry_trials(c, {"trial", "residual", "conformal_factor_x", "conformal_factor_y"},
                  [&](const Isometry& g, std::mt19937_64& rng) {
                    Vector a = normal_vector(d, rng);
                    Vector b = normal_vector(d, rng);
                    while (conformal_factor(g, a) > cap || conformal_factor(g, b) > cap) {
                      a = normal_vector(d, rng);
                      b = normal_vector(d, rng);
                    }
                    return std::vector<double>{conformal_2pt_check(c.p, g, a, b),
                                               conformal_factor(g, a), conformal_factor(g, b)};
                  });
}

void run_spherical(Context& c) {
  const auto ls = c.o["lambdas"].get<std::vector<double>>();
  const auto rs = c.o["radii"].get<std::vector<double>>();
  c.table.columns = {"lambda", "r", "phi", "phi_theta", "difference"};
  double at_zero = 0.0;
  double forms = 0.0;
  for (double l : ls) {
    at_zero = std::max(at_zero, std::abs(spherical_function(l, 0.0) - 1.0));
    for (double r : rs) {
      const double a = spherical_function(l, r);
      const double b = spherical_function_theta(l, r);
      forms = std::max(forms, std::abs(a - b));
      c.table.rows.push_back({l, r, a, b, a - b});
    }
  }
  c.check("phi_at_zero_is_one", at_zero, 0.0, at_zero == 0.0);
  c.bound("forms_max_difference", forms, c.t("forms"));

  // Eigen-equation residual of the central second difference at h and h/2.
  const double l = c.d("eigen_lambda");
  const double h = c.d("h");
  auto residual = [&](double r, double step) {
    const double fm = spherical_function(l, r - step);
    const double f0 = spherical_function(l, r);
    const double fp = spherical_function(l, r + step);
    const double lap = (fp - 2.0 * f0 + fm) / (step * step) + (fp - fm) / (2.0 * step) / std::tanh(r);
    return lap + (l * l + 0.25) * f0;
  };
  Json ratios = Json::array();
  double worst_order = 0.0;
  for (double r : c.o["eigen_radii"].get<std::vector<double>>()) {
    const double ratio = residual(r, h) / residual(r, 0.5 * h);
    ratios.push_back({{"r", r}, {"ratio", ratio}});
    worst_order = std::max(worst_order, std::abs(ratio / 4.0 - 1.0));
  }
  c.outputs["eigen_residual_ratios"] = ratios;
  c.bound("second_order_ratio_deviation", worst_order, c.t("order"));

  const double s = c.d("gaussian_width");
  const auto f = RadialFunction::sample(
      [s](double r) { return std::exp(-r * r / (2.0 * s * s)); }, c.d("radius"));
  SobolevOptions opt;
  opt.workers = c.workers;
  const double l2 = l2_norm_squared(f);
  const double spectral = std::pow(sobolev_norm(f, 0.0, 0.0, opt), 2);
  c.outputs["l2_norm_squared"] = l2;
  c.outputs["spectral_norm_squared"] = spectral;
  c.bound("plancherel_relative", std::abs(spectral / l2 - 1.0), c.t("plancherel"));
}

void run_sobolev(Context& c) {
  const double s = c.d("gaussian_width");
  const double m2 = c.d("m2");
  const double R = c.d("radius");
  const auto f = RadialFunction::sample(
      [s](double r) { return std::exp(-r * r / (2.0 * s * s)); }, R);
  // (-Delta + m2) f for the Gaussian, coth r f' -> f''(0) at r = 0.
  const auto lf = RadialFunction::sample(
      [s, m2](double r) {
        const double f0 = std::exp(-r * r / (2.0 * s * s));
        const double f1 = -r / (s * s) * f0;
        const double f2 = (r * r / (s * s) - 1.0) / (s * s) * f0;
        const double radial = r < 1e-8 ? 2.0 * f2 : f2 + f1 / std::tanh(r);
        return -radial + m2 * f0;
      },
      R);
  SobolevOptions opt;
  opt.panel = c.d("panel");
  opt.max_lambda = c.d("max_lambda");
  opt.workers = c.workers;
  c.table.columns = {"beta", "norm_f", "norm_lf", "relative_difference"};
  double worst = 0.0;
  for (double beta : c.o["betas"].get<std::vector<double>>()) {
    const double a = sobolev_norm(f, beta, m2, opt);
    const double b = sobolev_norm(lf, beta - 2.0, m2, opt);
    const double rd = std::abs(b / a - 1.0);
    worst = std::max(worst, rd);
    c.table.rows.push_back({beta, a, b, rd});
  }
  c.outputs["max_relative_difference"] = worst;
  c.bound("isomorphism", worst, c.t("isomorphism"));
}

using Runner = void (*)(Context&);

Runner runner(const std::string& name) {
  static const std::map<std::string, Runner> m = {
      {"propagator", run_propagator},       {"split-check", run_split_check},
      {"corr-limit", run_corr_limit},       {"cutoff-limit", run_cutoff_limit},
      {"duality", run_duality},             {"rp-check", run_rp_check},
      {"intertwine", run_intertwine},       {"conformal-2pt", run_conformal_2pt},
      {"spherical", run_spherical},         {"sobolev", run_sobolev},
  };
  return m.at(name);
}

std::string format_double(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

const std::vector<std::string>& experiments() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& e : table()) {
      n.push_back(e.name);
    }
    return n;
  }();
  return names;
}

std::string summary(const std::string& experiment) { return lookup(experiment).summary; }

std::string csv_columns(const std::string& experiment) { return lookup(experiment).columns; }

Json default_config(const std::string& experiment) {
  const auto& e = lookup(experiment);
  Json cfg = {{"seed", 1}, {"workers", 0}, {"options", e.options()}, {"tolerances", e.tolerances()}};
  if (e.uses_params) {
    cfg["params"] = {{"d", 1}, {"nu", 0.3}};
  }
  return cfg;
}

RunConfig resolve(const std::string& experiment, const Json& file, const Json& overrides) {
  const auto& e = lookup(experiment);
  if (!file.is_object()) {
    throw ConfigError("config", "expected a JSON object");
  }
  if (!overrides.is_object()) {
    throw ConfigError("overrides", "expected a JSON object");
  }
  Json cfg = default_config(experiment);
  Json src = file;
  if (src.contains("experiment")) {
    if (src["experiment"] != experiment) {
      throw ConfigError("experiment", "config file is for '" + src["experiment"].dump() +
                                          "', not '" + experiment + "'");
    }
    src.erase("experiment");
  }
  auto apply = [&](const Json& patch) {
    if (patch.contains("params") && patch["params"].is_object() && cfg.contains("params") &&
        (patch["params"].contains("nu") || patch["params"].contains("m2"))) {
      cfg["params"].erase("nu");
      cfg["params"].erase("m2");
    }
    cfg.merge_patch(patch);
  };
  apply(src);
  apply(overrides);

  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    if (it.key() != "seed" && it.key() != "workers" && it.key() != "options" &&
        it.key() != "tolerances" && !(e.uses_params && it.key() == "params")) {
      throw ConfigError(it.key(), e.uses_params ? "unknown field" : "unknown field (not used by " + experiment + ")");
    }
  }
  integer(get(cfg, "seed"), "seed", 0, std::numeric_limits<long long>::max());
  const long long w = integer(get(cfg, "workers"), "workers", 0, 4096);
  try {
    cfg["workers"] = resolve_workers(static_cast<int>(w));
  } catch (const DomainError& err) {
    throw ConfigError("workers", err.what());
  }
  const Json def = default_config(experiment);
  check_shape(get(cfg, "options"), def["options"], "options");
  check_shape(get(cfg, "tolerances"), def["tolerances"], "tolerances");

  int d = 1;
  if (e.uses_params) {
    const Json& params = get(cfg, "params");
    if (!params.is_object()) {
      throw ConfigError("params", "expected an object");
    }
    for (auto it = params.begin(); it != params.end(); ++it) {
      if (it.key() != "d" && it.key() != "nu" && it.key() != "m2") {
        throw ConfigError("params." + it.key(), "unknown field");
      }
    }
    const ModelParams p = parse_params(params, e);
    d = p.d;
    cfg["params"] = {{"d", p.d}, {"nu", p.nu}, {"m2", p.m2}};
  }
  validate_options(e, cfg, d);
  return RunConfig{experiment, cfg};
}

RunResult run(const RunConfig& rc) {
  const auto start = std::chrono::steady_clock::now();
  const auto& e = lookup(rc.experiment);
  const Json& cfg = rc.config;
  Context c{cfg, cfg["options"], cfg["tolerances"], ModelParams{}, cfg["seed"].get<std::uint64_t>(),
            cfg["workers"].get<int>(), Json::object(), Json::object(), Json::array(), Table{}};
  RunResult out;
  Json errors = Json::array();
  try {
    if (e.uses_params) {
      const Json& pr = cfg["params"];
      c.p = ModelParams::from_nu(pr["d"].get<int>(), pr["nu"].get<double>());
      c.inputs["model"] = {{"delta_plus", c.p.delta_plus}, {"delta_minus", c.p.delta_minus},
                           {"gamma_plus", c.p.gamma_plus}, {"gamma_minus", c.p.gamma_minus},
                           {"c", c.p.c}};
    }
    runner(rc.experiment)(c);
  } catch (const DomainError& err) {
    errors.push_back({{"type", "domain"}, {"message", err.what()}});
    out.exit_code = kExitUsage;
  } catch (const ConfigError& err) {
    errors.push_back({{"type", "config"}, {"field", err.field()}, {"message", err.what()}});
    out.exit_code = kExitUsage;
  } catch (const std::exception& err) {
    errors.push_back({{"type", "runtime"}, {"message", err.what()}});
    out.exit_code = kExitTolerance;
  }
  bool pass = errors.empty();
  for (const auto& ch : c.checks) {
    pass = pass && ch["pass"].get<bool>();
  }
  if (out.exit_code == kExitPass && !pass) {
    out.exit_code = kExitTolerance;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.record = {{"schema", kSchemaVersion},
                {"experiment", rc.experiment},
                {"version", library_version()},
                {"seed", c.seed},
                {"workers", c.workers},
                {"config", cfg},
                {"inputs", c.inputs},
                {"outputs", c.outputs},
                {"checks", c.checks},
                {"errors", errors},
                {"pass", pass},
                {"exit_code", out.exit_code},
                {"wall_time_s", wall}};
  out.table = std::move(c.table);
  return out;
}

std::string dump_record(const Json& record) { return record.dump(2) + "\n"; }

std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    os << (i ? "," : "") << t.columns[i];
  }
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << (i ? "," : "") << format_double(row[i]);
    }
    os << "\n";
  }
  return os.str();
}

void write_outputs(const RunResult& result, const std::string& experiment,
                   const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path base = fs::path(out_dir) / experiment;
  {
    std::ofstream js(base.string() + ".json");
    js << dump_record(result.record);
    if (!js) {
      throw std::runtime_error("cannot write " + base.string() + ".json");
    }
  }
  if (!result.table.rows.empty()) {
    std::ofstream csv(base.string() + ".csv");
    csv << to_csv(result.table);
    if (!csv) {
      throw std::runtime_error("cannot write " + base.string() + ".csv");
    }
  }
}

void set_path(Json& target, const std::string& path, const std::string& value) {
  if (path.empty()) {
    throw ConfigError("--set", "empty key");
  }
  Json parsed;
  try {
    parsed = Json::parse(value);
  } catch (const Json::parse_error&) {
    parsed = value;
  }
  Json* cur = &target;
  std::stringstream ss(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) {
    if (key.empty()) {
      throw ConfigError(path, "malformed key");
    }
    keys.push_back(key);
  }
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    Json& next = (*cur)[keys[i]];
    if (!next.is_object()) {
      next = Json::object();
    }
    cur = &next;
  }
  (*cur)[keys.back()] = parsed;
}

}  // namespace adscft::cli
