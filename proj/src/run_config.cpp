#include "viability/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "viability/errors.hpp"

namespace viability {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : obj.items())
    if (!keys.count(item.key())) fail(path + "." + item.key(), "unknown key");
}

double get_number(const json& obj, const char* key, double fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path + "." + key, "must be finite");
  return d;
}

std::uint64_t get_unsigned(const json& obj, const char* key, std::uint64_t fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    fail(path + "." + key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

bool get_bool(const json& obj, const char* key, bool fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) fail(path + "." + key, "expected a boolean");
  return obj.at(key).get<bool>();
}

std::vector<double> to_numbers(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
    if (!std::isfinite(out.back())) fail(path + "[" + std::to_string(i) + "]", "must be finite");
  }
  return out;
}

std::vector<double> get_numbers(const json& obj, const char* key, std::vector<double> fallback,
                                const std::string& path) {
  if (!obj.contains(key)) return fallback;
  return to_numbers(obj.at(key), path + "." + key);
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::vector<double> from_vec(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Mat to_matrix(const json& v, Eigen::Index n, const std::string& path) {
  if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != n) fail(path, "expected " + std::to_string(n) + " rows");
  Mat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = to_numbers(v[i], path + "[" + std::to_string(i) + "]");
    if (static_cast<Eigen::Index>(row.size()) != n) fail(path + "[" + std::to_string(i) + "]", "wrong row length");
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = row[j];
  }
  return m;
}

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

// Normalizes a domain declaration to its fully explicit form.
json normalize_domain(const json& decl) {
  const std::string path = "domain";
  if (!decl.is_object() || !decl.contains("kind") || !decl.at("kind").is_string()) fail(path, "needs a string 'kind'");
  const auto kind = decl.at("kind").get<std::string>();
  json out{{"kind", kind}};
  if (!decl.contains("center")) fail(path + ".center", "required");
  const auto center = to_numbers(decl.at("center"), path + ".center");
  if (center.empty()) fail(path + ".center", "must not be empty");
  out["center"] = center;
  if (kind == "ball") {
    check_keys(decl, path, {"kind", "center", "radius"});
    const double r = get_number(decl, "radius", 1.0, path);
    if (!(r > 0.0)) fail(path + ".radius", "must be positive");
    out["radius"] = r;
  } else if (kind == "ellipsoid") {
    check_keys(decl, path, {"kind", "center", "semiaxes"});
    if (!decl.contains("semiaxes")) fail(path + ".semiaxes", "required");
    const auto axes = to_numbers(decl.at("semiaxes"), path + ".semiaxes");
    if (axes.size() != center.size()) fail(path + ".semiaxes", "length must match center");
    for (const double a : axes)
      if (!(a > 0.0)) fail(path + ".semiaxes", "entries must be positive");
    out["semiaxes"] = axes;
  } else if (kind == "even_p_norm_ball") {
    check_keys(decl, path, {"kind", "center", "radius", "p"});
    const double r = get_number(decl, "radius", 1.0, path);
    if (!(r > 0.0)) fail(path + ".radius", "must be positive");
    const auto p = get_unsigned(decl, "p", 4, path);
    if (p < 2 || p % 2 != 0 || p > 64) fail(path + ".p", "must be an even integer in [2, 64]");
    out["radius"] = r;
    out["p"] = p;
  } else {
    fail(path + ".kind", "unknown domain kind '" + kind + "'");
  }
  return out;
}

json normalize_model(const json& decl, int dimension) {
  const std::string path = "model";
  if (!decl.is_object() || !decl.contains("family") || !decl.at("family").is_string())
    fail(path, "needs a string 'family'");
  const auto family = decl.at("family").get<std::string>();
  json out{{"family", family}};
  auto dim = [&] {
    const auto d = get_unsigned(decl, "dimension", static_cast<std::uint64_t>(dimension), path);
    if (d < 1) fail(path + ".dimension", "must be positive");
    return static_cast<int>(d);
  };
  if (family == "brownian") {
    check_keys(decl, path, {"family", "dimension", "scale"});
    out["dimension"] = dim();
    out["scale"] = get_number(decl, "scale", 1.0, path);
  } else if (family == "ou_inward") {
    check_keys(decl, path, {"family", "dimension", "rate"});
    out["dimension"] = dim();
    out["rate"] = get_number(decl, "rate", 1.0, path);
  } else if (family == "rotational") {
    check_keys(decl, path, {"family", "dimension", "spin", "inward_rate"});
    out["dimension"] = dim();
    if (out["dimension"].get<int>() < 2) fail(path + ".dimension", "rotational model needs dimension >= 2");
    out["spin"] = get_number(decl, "spin", 1.0, path);
    out["inward_rate"] = get_number(decl, "inward_rate", 1.0, path);
  } else if (family == "linear") {
    check_keys(decl, path, {"family", "dimension", "A", "c", "B", "d"});
    const Eigen::Index n = decl.contains("A") ? static_cast<Eigen::Index>(decl.at("A").size()) : dim();
    if (n < 1) fail(path + ".A", "must not be empty");
    if (decl.contains("dimension") && static_cast<Eigen::Index>(dim()) != n)
      fail(path + ".dimension", "does not match A");
    const Mat a = decl.contains("A") ? to_matrix(decl.at("A"), n, path + ".A") : Mat::Zero(n, n);
    const auto c = get_numbers(decl, "c", std::vector<double>(n, 0.0), path);
    if (static_cast<Eigen::Index>(c.size()) != n) fail(path + ".c", "wrong length");
    json b = json::array();
    json d = json::array();
    for (Eigen::Index k = 0; k < n; ++k) {
      const std::string kp = "[" + std::to_string(k) + "]";
      if (decl.contains("B")) {
        if (!decl.at("B").is_array() || static_cast<Eigen::Index>(decl.at("B").size()) != n)
          fail(path + ".B", "expected n matrices");
        b.push_back(matrix_json(to_matrix(decl.at("B")[k], n, path + ".B" + kp)));
      } else {
        b.push_back(matrix_json(Mat::Zero(n, n)));
      }
      if (decl.contains("d")) {
        if (!decl.at("d").is_array() || static_cast<Eigen::Index>(decl.at("d").size()) != n)
          fail(path + ".d", "expected n vectors");
        const auto dk = to_numbers(decl.at("d")[k], path + ".d" + kp);
        if (static_cast<Eigen::Index>(dk.size()) != n) fail(path + ".d" + kp, "wrong length");
        d.push_back(dk);
      } else {
        d.push_back(std::vector<double>(n, 0.0));
      }
    }
    out["dimension"] = n;
    out["A"] = matrix_json(a);
    out["c"] = c;
    out["B"] = b;
    out["d"] = d;
  } else {
    fail(path + ".family", "unknown model family '" + family + "'");
  }
  return out;
}

}  // namespace

ImplicitDomain build_domain(const json& decl) {
  const json d = normalize_domain(decl);
  const Vec center = to_vec(d.at("center").get<std::vector<double>>());
  const auto kind = d.at("kind").get<std::string>();
  if (kind == "ball") return ImplicitDomain::ball(center, d.at("radius").get<double>());
  if (kind == "ellipsoid") return ImplicitDomain::ellipsoid(center, to_vec(d.at("semiaxes").get<std::vector<double>>()));
  return ImplicitDomain::even_p_norm_ball(center, d.at("radius").get<double>(), d.at("p").get<int>());
}

SdeModel build_model(const json& decl) {
  const int fallback_dim = decl.contains("dimension") && decl.at("dimension").is_number_unsigned()
                               ? decl.at("dimension").get<int>()
                               : 0;
  const json m = normalize_model(decl, fallback_dim);
  const auto family = m.at("family").get<std::string>();
  const int n = m.at("dimension").get<int>();
  if (family == "brownian") return SdeModel::brownian(n, m.at("scale").get<double>());
  if (family == "ou_inward") return SdeModel::ou_inward(n, m.at("rate").get<double>());
  if (family == "rotational") return SdeModel::rotational(n, m.at("spin").get<double>(), m.at("inward_rate").get<double>());
  std::vector<Mat> bs;
  std::vector<Vec> ds;
  for (int k = 0; k < n; ++k) {
    bs.push_back(to_matrix(m.at("B")[k], n, "model.B"));
    ds.push_back(to_vec(m.at("d")[k].get<std::vector<double>>()));
  }
  return SdeModel::linear(to_matrix(m.at("A"), n, "model.A"), to_vec(m.at("c").get<std::vector<double>>()), bs, ds);
}

RunConfig parse_config(const json& doc) {
  check_keys(doc, "config", {"model", "domain", "check", "probe", "sim", "quad", "output"});
  if (!doc.contains("domain")) fail("domain", "required");
  if (!doc.contains("model")) fail("model", "required");

  RunConfig cfg;
  cfg.domain = normalize_domain(doc.at("domain"));
  const int n = static_cast<int>(cfg.domain.at("center").size());
  cfg.model = normalize_model(doc.at("model"), n);
  if (cfg.model.at("dimension").get<int>() != n) fail("model.dimension", "does not match the domain dimension");

  ImplicitDomain domain = build_domain(cfg.domain);
  try {
    (void)build_model(cfg.model);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail("model", e.what());
  }

  const json empty = json::object();
  {
    const json& c = doc.value("check", empty);
    const std::string p = "check";
    check_keys(c, p, {"eps_grid", "samples_per_eps", "delta_abs", "delta_margin", "p_min", "time_grid", "seed",
                      "refine_steps", "lipschitz_bound", "regularity_pairs"});
    auto& k = cfg.check;
    k.eps_grid = get_numbers(c, "eps_grid", k.eps_grid, p);
    k.time_grid = get_numbers(c, "time_grid", k.time_grid, p);
    k.samples_per_eps = get_unsigned(c, "samples_per_eps", k.samples_per_eps, p);
    k.delta_abs = get_number(c, "delta_abs", k.delta_abs, p);
    k.delta_margin = get_number(c, "delta_margin", k.delta_margin, p);
    k.p_min = get_number(c, "p_min", k.p_min, p);
    k.seed = get_unsigned(c, "seed", k.seed, p);
    k.refine_steps = static_cast<int>(get_unsigned(c, "refine_steps", static_cast<std::uint64_t>(k.refine_steps), p));
    k.lipschitz_bound = get_number(c, "lipschitz_bound", k.lipschitz_bound, p);
    k.regularity_pairs = get_unsigned(c, "regularity_pairs", k.regularity_pairs, p);
    if (k.eps_grid.size() < 3) fail(p + ".eps_grid", "needs at least 3 entries");
    for (const double e : k.eps_grid)
      if (!(e > 0.0)) fail(p + ".eps_grid", "entries must be positive");
    if (!strictly_decreasing(k.eps_grid)) fail(p + ".eps_grid", "must be strictly decreasing");
    if (k.time_grid.empty()) fail(p + ".time_grid", "must not be empty");
    for (const double t : k.time_grid)
      if (t < 0.0) fail(p + ".time_grid", "times must be >= 0");
    if (k.samples_per_eps < 1) fail(p + ".samples_per_eps", "must be >= 1");
    if (k.delta_abs < 0.0) fail(p + ".delta_abs", "must be >= 0");
    if (k.delta_margin < 0.0) fail(p + ".delta_margin", "must be >= 0");
    if (!(k.lipschitz_bound > 0.0)) fail(p + ".lipschitz_bound", "must be positive");
    if (k.regularity_pairs < 1) fail(p + ".regularity_pairs", "must be >= 1");
  }
  {
    const json& s = doc.value("sim", empty);
    const std::string p = "sim";
    check_keys(s, p, {"x0", "T", "dt", "n_paths", "seed", "dt_list", "observe_threshold"});
    auto& k = cfg.sim;
    k.x0 = s.contains("x0") ? to_vec(to_numbers(s.at("x0"), p + ".x0")) : domain.center();
    k.T = get_number(s, "T", k.T, p);
    k.dt = get_number(s, "dt", k.dt, p);
    k.n_paths = get_unsigned(s, "n_paths", k.n_paths, p);
    k.seed = get_unsigned(s, "seed", k.seed, p);
    k.dt_list = get_numbers(s, "dt_list", k.dt_list, p);
    k.observe_threshold = get_number(s, "observe_threshold", k.observe_threshold, p);
    if (k.x0.size() != n) fail(p + ".x0", "dimension does not match the domain");
    if (domain.signed_level(k.x0) > 0.0) fail(p + ".x0", "must lie in the domain");
    if (!(k.T > 0.0)) fail(p + ".T", "must be positive");
    if (!(k.dt > 0.0)) fail(p + ".dt", "must be positive");
    if (k.dt > k.T) fail(p + ".dt", "must not exceed T");
    if (k.n_paths < 1) fail(p + ".n_paths", "must be >= 1");
    for (const double dt : k.dt_list)
      if (!(dt > 0.0) || dt > k.T) fail(p + ".dt_list", "entries must be in (0, T]");
    if (!strictly_decreasing(k.dt_list)) fail(p + ".dt_list", "must be strictly decreasing");
    if (k.observe_threshold < 0.0 || k.observe_threshold > 1.0) fail(p + ".observe_threshold", "must be in [0, 1]");
  }
  {
    const json& q = doc.value("quad", empty);
    const std::string p = "quad";
    check_keys(q, p, {"nodes_per_axis", "qmc_points", "tol"});
    auto& k = cfg.quad;
    k.nodes_per_axis = static_cast<int>(get_unsigned(q, "nodes_per_axis", static_cast<std::uint64_t>(k.nodes_per_axis), p));
    k.qmc_points = static_cast<int>(get_unsigned(q, "qmc_points", static_cast<std::uint64_t>(k.qmc_points), p));
    k.tol = get_number(q, "tol", k.tol, p);
    if (k.nodes_per_axis < 2 || k.nodes_per_axis > 256 || k.nodes_per_axis % 2 != 0)
      fail(p + ".nodes_per_axis", "must be even and in [2, 256]");
    if (k.qmc_points < 1) fail(p + ".qmc_points", "must be >= 1");
    if (!(k.tol > 0.0)) fail(p + ".tol", "must be positive");
    if (n > 6) fail("domain", "dimension above 6 is not supported");
  }
  {
    const json& pr = doc.value("probe", empty);
    const std::string p = "probe";
    check_keys(pr, p, {"eps", "n_points", "tol_shell_factor", "time", "seed", "initial_cloud", "lemma_paths", "lemma_t",
                       "lemma_dt"});
    auto& k = cfg.probe;
    k.eps = get_number(pr, "eps", k.eps, p);
    k.n_points = get_unsigned(pr, "n_points", k.n_points, p);
    k.tol_shell_factor = get_number(pr, "tol_shell_factor", k.tol_shell_factor, p);
    k.time = get_number(pr, "time", k.time, p);
    k.seed = get_unsigned(pr, "seed", k.seed, p);
    k.lemma_paths = get_unsigned(pr, "lemma_paths", k.lemma_paths, p);
    k.lemma_t = get_number(pr, "lemma_t", k.lemma_t, p);
    k.lemma_dt = get_number(pr, "lemma_dt", k.lemma_dt, p);
    if (pr.contains("initial_cloud") && !pr.at("initial_cloud").is_null()) {
      const json& ic = pr.at("initial_cloud");
      check_keys(ic, p + ".initial_cloud", {"center", "radius"});
      InitialLaw law;
      law.center = ic.contains("center") ? to_vec(to_numbers(ic.at("center"), p + ".initial_cloud.center")) : cfg.sim.x0;
      law.radius = get_number(ic, "radius", 0.0, p + ".initial_cloud");
      if (law.center.size() != n) fail(p + ".initial_cloud.center", "dimension does not match the domain");
      if (law.radius < 0.0) fail(p + ".initial_cloud.radius", "must be >= 0");
      if (domain.signed_distance(law.center) > -law.radius)
        fail(p + ".initial_cloud", "cloud must lie inside the domain");
      k.initial_cloud = law;
    }
    if (!(k.eps > 0.0)) fail(p + ".eps", "must be positive");
    if (k.n_points < 1) fail(p + ".n_points", "must be >= 1");
    if (!(k.tol_shell_factor > 0.0)) fail(p + ".tol_shell_factor", "must be positive");
    if (k.time < 0.0) fail(p + ".time", "must be >= 0");
    if (!(k.lemma_t > 0.0)) fail(p + ".lemma_t", "must be positive");
    if (!(k.lemma_dt > 0.0) || k.lemma_dt > k.lemma_t) fail(p + ".lemma_dt", "must be in (0, lemma_t]");
  }
  {
    const json& o = doc.value("output", empty);
    check_keys(o, "output", {"dir", "plot_data"});
    if (o.contains("dir")) {
      if (!o.at("dir").is_string()) fail("output.dir", "expected a string");
      cfg.output.dir = o.at("dir").get<std::string>();
    }
    cfg.output.plot_data = get_bool(o, "plot_data", cfg.output.plot_data, "output");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  json probe{{"eps", c.probe.eps},
             {"n_points", c.probe.n_points},
             {"tol_shell_factor", c.probe.tol_shell_factor},
             {"time", c.probe.time},
             {"seed", c.probe.seed},
             {"lemma_paths", c.probe.lemma_paths},
             {"lemma_t", c.probe.lemma_t},
             {"lemma_dt", c.probe.lemma_dt}};
  probe["initial_cloud"] = c.probe.initial_cloud
                               ? json{{"center", from_vec(c.probe.initial_cloud->center)},
                                      {"radius", c.probe.initial_cloud->radius}}
                               : json(nullptr);
  return {
      {"model", c.model},
      {"domain", c.domain},
      {"check",
       {{"eps_grid", c.check.eps_grid},
        {"time_grid", c.check.time_grid},
        {"samples_per_eps", c.check.samples_per_eps},
        {"delta_abs", c.check.delta_abs},
        {"delta_margin", c.check.delta_margin},
        {"p_min", c.check.p_min},
        {"seed", c.check.seed},
        {"refine_steps", c.check.refine_steps},
        {"lipschitz_bound", c.check.lipschitz_bound},
        {"regularity_pairs", c.check.regularity_pairs}}},
      {"probe", probe},
      {"sim",
       {{"x0", from_vec(c.sim.x0)},
        {"T", c.sim.T},
        {"dt", c.sim.dt},
        {"n_paths", c.sim.n_paths},
        {"seed", c.sim.seed},
        {"dt_list", c.sim.dt_list},
        {"observe_threshold", c.sim.observe_threshold}}},
      {"quad", {{"nodes_per_axis", c.quad.nodes_per_axis}, {"qmc_points", c.quad.qmc_points}, {"tol", c.quad.tol}}},
      {"output", {{"dir", c.output.dir}, {"plot_data", c.output.plot_data}}},
  };
}

void override_seed(RunConfig& config, std::uint64_t seed) {
  config.check.seed = seed;
  config.probe.seed = seed;
  config.sim.seed = seed;
}

}  // namespace viability
