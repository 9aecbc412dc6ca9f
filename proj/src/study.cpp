#include "gcife/study.hpp"

#include "gcife/errors.hpp"
#include "gcife/polynomial.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

#ifndef GCIFE_VERSION
#define GCIFE_VERSION "0.0.0"
#endif

namespace gcife {

namespace {

constexpr double kExactTol = 1e-10;

// ---- config text ----

using Scalar = std::variant<double, std::string, bool>;
struct Value {
  std::vector<Scalar> items;
  bool is_array = false;
};

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

[[noreturn]] void config_error(int line, const std::string& what) {
  fail(ErrorKind::ConfigError, fmt::format("line {}: {}", line, what));
}

Scalar parse_scalar(const std::string& tok, int line) {
  if (tok.empty()) config_error(line, "empty value");
  if (tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"') config_error(line, "unterminated string");
    return tok.substr(1, tok.size() - 2);
  }
  if (tok == "true") return true;
  if (tok == "false") return false;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    config_error(line, fmt::format("cannot read '{}'", tok));
  }
  if (used != tok.size()) config_error(line, fmt::format("cannot read '{}'", tok));
  return v;
}

/// Splits on commas outside quotes.
std::vector<std::string> split_items(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

std::map<std::string, std::pair<Value, int>> parse_pairs(std::string_view text) {
  std::map<std::string, std::pair<Value, int>> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string rhs = trim(line.substr(eq + 1));
    const int start = lineno;
    if (key.empty()) config_error(lineno, "empty key");
    if (out.count(key)) config_error(lineno, fmt::format("duplicate key '{}'", key));
    Value v;
    if (!rhs.empty() && rhs.front() == '[') {
      while (rhs.find(']') == std::string::npos && std::getline(in, raw)) {
        ++lineno;
        rhs += " " + trim(strip_comment(raw));
      }
      if (rhs.back() != ']') config_error(start, "unterminated array");
      v.is_array = true;
      for (const std::string& item : split_items(std::string_view(rhs).substr(1, rhs.size() - 2)))
        v.items.push_back(parse_scalar(item, start));
    } else {
      v.items.push_back(parse_scalar(rhs, start));
    }
    out[key] = {v, start};
  }
  return out;
}

struct Reader {
  std::map<std::string, std::pair<Value, int>> pairs;

  const std::pair<Value, int>* find(const std::string& key) {
    auto it = pairs.find(key);
    if (it == pairs.end()) return nullptr;
    return &it->second;
  }

  template <class T>
  T scalar_as(const Scalar& s, const std::string& key, int line) {
    if (const T* v = std::get_if<T>(&s)) return *v;
    config_error(line, fmt::format("wrong type for '{}'", key));
  }

  template <class T>
  std::optional<T> one(const std::string& key) {
    const auto* p = find(key);
    if (!p) return std::nullopt;
    if (p->first.is_array || p->first.items.size() != 1) config_error(p->second, fmt::format("'{}' takes one value", key));
    return scalar_as<T>(p->first.items[0], key, p->second);
  }

  template <class T>
  std::vector<T> many(const std::string& key) {
    const auto* p = find(key);
    if (!p) return {};
    std::vector<T> out;
    for (const Scalar& s : p->first.items) out.push_back(scalar_as<T>(s, key, p->second));
    return out;
  }

  int integer(double v, const std::string& key) {
    if (v != std::floor(v)) fail(ErrorKind::ConfigError, fmt::format("'{}' must be an integer", key));
    return static_cast<int>(v);
  }
};

std::string csv_number(double v) { return fmt::format("{:.17g}", v); }
std::string csv_number(const std::optional<double>& v) { return v ? csv_number(*v) : std::string(); }

// ---- exact solutions ----

struct Exact {
  SideFunction u;
  SideGradient grad;
  SideFunction source;
};

Poly2 polynomial_solution(int m) {
  const int deg = std::min(m, 4);
  Poly2 p(deg);
  for (int a = 0; a <= deg; ++a)
    for (int b = 0; a + b <= deg; ++b) p.coef(a, b) = (b % 2 ? -1.0 : 1.0) / (1.0 + a + 2.0 * b);
  return p;
}

Exact exact_solution(const StudyConfig& cfg, int m, Coefficients beta) {
  if (cfg.exact == ExactSolution::Circle) {
    const CircleProblem pb{cfg.r0, beta};
    return {pb.u_fn(), pb.grad_fn(), pb.source_fn()};
  }
  const Poly2 p = polynomial_solution(m);
  return {[p](const Vec2& x, Side) { return p.eval(x.x(), x.y()); },
          [p](const Vec2& x, Side) { return Vec2(p.eval(x.x(), x.y(), 1, 0), p.eval(x.x(), x.y(), 0, 1)); },
          [p, beta](const Vec2& x, Side s) { return -beta[s] * (p.eval(x.x(), x.y(), 2, 0) + p.eval(x.x(), x.y(), 0, 2)); }};
}

struct GridCell {
  int m;
  double beta_plus;
  Construction construction;
};

std::vector<GridCell> grid(const StudyConfig& cfg) {
  std::vector<GridCell> out;
  for (Construction c : cfg.constructions)
    for (double bp : cfg.beta_plus)
      for (int m : cfg.degrees) out.push_back({m, bp, c});
  return out;
}

SpaceOptions space_options(const StudyConfig& cfg, const GridCell& cell) {
  SpaceOptions opt;
  opt.degree = cell.m;
  opt.beta = {cfg.beta_minus, cell.beta_plus};
  opt.construction = cell.construction;
  opt.volume_points = cfg.volume_points;
  opt.interface_points = cfg.interface_points;
  opt.threads = cfg.threads;
  return opt;
}

struct LoadedMesh {
  const MeshSource* source;
  std::optional<TriMesh> mesh;
  std::optional<Classification> cls;
  std::string status = "OK";  // a failed mesh marks every row that uses it
};

std::vector<LoadedMesh> load_meshes(const StudyConfig& cfg, const InterfaceCurve& curve) {
  std::vector<LoadedMesh> out;
  for (const MeshSource& src : cfg.meshes) {
    LoadedMesh lm;
    lm.source = &src;
    try {
      lm.mesh = src.load(cfg.domain);
      lm.cls = classify(*lm.mesh, curve);
    } catch (const Error& e) {
      fmt::print(stderr, "{}: {}\n", src.label, e.what());
      lm.status = std::string(to_string(e.kind()));
    }
    out.push_back(std::move(lm));
  }
  return out;
}

std::string failure_status(const Error& e, const std::string& where) {
  fmt::print(stderr, "{}: {}\n", where, e.what());
  return std::string(to_string(e.kind()));
}

template <class Solve>
std::vector<ErrorRow> run_errors(const StudyConfig& cfg, Solve&& solve_cell) {
  const InterfaceCurve curve = parse_curve(cfg.curve);
  const std::vector<LoadedMesh> meshes = load_meshes(cfg, curve);
  std::vector<ErrorRow> rows;
  for (const GridCell& cell : grid(cfg)) {
    const ErrorRow* prev = nullptr;
    for (const LoadedMesh& lm : meshes) {
      ErrorRow r;
      r.mesh = lm.source->label;
      r.m = cell.m;
      r.beta_plus = cell.beta_plus;
      r.construction = cell.construction;
      if (lm.status != "OK") {
        r.status = lm.status;
        rows.push_back(r);
        prev = &rows.back();
        continue;
      }
      r.h = lm.mesh->h_max();
      try {
        const IfeSpace space(*lm.mesh, curve, *lm.cls, space_options(cfg, cell));
        r.ndof = space.num_dofs();
        const Exact ex = exact_solution(cfg, cell.m, {cfg.beta_minus, cell.beta_plus});
        double cond = 0.0;
        const Eigen::VectorXd coefs = solve_cell(space, ex, cond);
        const ErrorNorms e = error_norms(space, coefs, ex.u, ex.grad);
        r.err_l2 = e.l2;
        r.err_h1 = e.h1;
        r.max_local_cond = cond;
        if (prev && prev->status == "OK" && prev->h != r.h) {
          r.rate_l2 = std::log(prev->err_l2 / r.err_l2) / std::log(prev->h / r.h);
          r.rate_h1 = std::log(prev->err_h1 / r.err_h1) / std::log(prev->h / r.h);
        }
      } catch (const Error& e) {
        r.status = failure_status(e, fmt::format("{} m={} beta+={} {}", r.mesh, r.m, r.beta_plus, to_string(r.construction)));
      }
      rows.push_back(r);
      prev = &rows.back();
    }
  }
  return rows;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string file_name(StudyKind k) {
  switch (k) {
    case StudyKind::Cond: return "cond";
    case StudyKind::Project: return "proj";
    case StudyKind::Solve: return "solve";
  }
  return "study";
}

}  // namespace

std::string_view to_string(StudyKind k) {
  switch (k) {
    case StudyKind::Cond: return "cond";
    case StudyKind::Project: return "project";
    case StudyKind::Solve: return "solve";
  }
  return "?";
}

StudyKind parse_study_kind(std::string_view s) {
  for (StudyKind k : {StudyKind::Cond, StudyKind::Project, StudyKind::Solve})
    if (to_string(k) == s) return k;
  fail(ErrorKind::ConfigError, fmt::format("unknown study '{}'", s));
}

TriMesh MeshSource::load(const DomainBox& domain) const {
  if (structured > 0) return generate_structured(structured, domain);
  return load_mesh(stem.string() + ".node", stem.string() + ".ele");
}

StudyConfig parse_study_config(std::string_view text, const std::filesystem::path& base_dir) {
  Reader rd{parse_pairs(text)};
  StudyConfig cfg;
  cfg.text = std::string(text);
  static const char* known[] = {"study", "curve", "domain", "meshes", "structured", "degrees", "beta_minus",
                                "beta_plus", "constructions", "volume_points", "interface_points", "exact",
                                "r0", "sigma0", "solver", "threads", "out"};
  for (const auto& [key, v] : rd.pairs)
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      config_error(v.second, fmt::format("unknown key '{}'", key));

  if (auto s = rd.one<std::string>("study")) cfg.kind = parse_study_kind(*s);
  if (auto s = rd.one<std::string>("curve")) cfg.curve = *s;
  parse_curve(cfg.curve);
  if (const auto d = rd.many<double>("domain"); !d.empty()) {
    if (d.size() != 4) fail(ErrorKind::ConfigError, "domain takes [x0, x1, y0, y1]");
    cfg.domain = {d[0], d[1], d[2], d[3]};
  }
  for (const std::string& m : rd.many<std::string>("meshes")) {
    std::filesystem::path p(m);
    if (p.is_relative()) p = base_dir / p;
    cfg.meshes.push_back({std::filesystem::path(m).filename().string(), p.lexically_normal(), 0});
  }
  for (double n : rd.many<double>("structured")) {
    const int k = rd.integer(n, "structured");
    if (k < 1) fail(ErrorKind::ConfigError, "structured sizes must be positive");
    cfg.meshes.push_back({fmt::format("structured_{}", k), {}, k});
  }
  for (double m : rd.many<double>("degrees")) cfg.degrees.push_back(rd.integer(m, "degrees"));
  if (auto b = rd.one<double>("beta_minus")) cfg.beta_minus = *b;
  cfg.beta_plus = rd.many<double>("beta_plus");
  for (const std::string& c : rd.many<std::string>("constructions")) cfg.constructions.push_back(parse_construction(c));
  if (auto v = rd.one<double>("volume_points")) cfg.volume_points = rd.integer(*v, "volume_points");
  if (auto v = rd.one<double>("interface_points")) cfg.interface_points = rd.integer(*v, "interface_points");
  if (auto s = rd.one<std::string>("exact")) {
    if (*s == "circle") cfg.exact = ExactSolution::Circle;
    else if (*s == "polynomial") cfg.exact = ExactSolution::Polynomial;
    else fail(ErrorKind::ConfigError, fmt::format("unknown exact solution '{}'", *s));
  }
  if (auto v = rd.one<double>("r0")) cfg.r0 = *v;
  if (auto v = rd.one<double>("sigma0")) cfg.sigma0 = *v;
  if (auto s = rd.one<std::string>("solver")) cfg.solver = parse_linear_solver(*s);
  if (auto v = rd.one<double>("threads")) cfg.threads = rd.integer(*v, "threads");
  if (auto s = rd.one<std::string>("out")) cfg.out_dir = *s;

  if (cfg.meshes.empty()) fail(ErrorKind::ConfigError, "no meshes given");
  if (cfg.degrees.empty()) fail(ErrorKind::ConfigError, "no degrees given");
  if (cfg.beta_plus.empty()) fail(ErrorKind::ConfigError, "no beta_plus values given");
  if (cfg.constructions.empty()) fail(ErrorKind::ConfigError, "no constructions given");
  for (int m : cfg.degrees)
    if (m < 1 || m > 9) fail(ErrorKind::ConfigError, fmt::format("degree {} outside 1..9", m));
  for (double b : cfg.beta_plus)
    if (!(b > 0)) fail(ErrorKind::ConfigError, "beta_plus values must be positive");
  if (!(cfg.beta_minus > 0)) fail(ErrorKind::ConfigError, "beta_minus must be positive");
  if (cfg.sigma0 < 0) fail(ErrorKind::ConfigError, "sigma0 must be positive");
  if (cfg.threads < 1) fail(ErrorKind::ConfigError, "threads must be at least 1");
  return cfg;
}

StudyConfig load_study_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::ConfigError, fmt::format("cannot open {}", file.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_study_config(ss.str(), file.parent_path());
}

std::string run_id(const StudyConfig& cfg) {
  return fmt::format("{:016x}", fnv1a(std::string(GCIFE_VERSION) + "\n" + cfg.text));
}

std::vector<CondRow> run_cond(const StudyConfig& cfg) {
  const InterfaceCurve curve = parse_curve(cfg.curve);
  const std::vector<LoadedMesh> meshes = load_meshes(cfg, curve);
  std::vector<CondRow> rows;
  for (const GridCell& cell : grid(cfg))
    for (const LoadedMesh& lm : meshes) {
      CondRow r;
      r.mesh = lm.source->label;
      r.m = cell.m;
      r.beta_plus = cell.beta_plus;
      r.construction = cell.construction;
      if (lm.status != "OK") {
        r.status = lm.status;
        rows.push_back(r);
        continue;
      }
      r.h = lm.mesh->h_max();
      try {
        const IfeSpace space(*lm.mesh, curve, *lm.cls, space_options(cfg, cell));
        const ConditionReport rep = condition_report(space);
        r.num_interface = rep.num_interface;
        if (rep.num_interface > 0) r.max_local_cond = rep.max_interface;
        r.max_noninterface_cond = rep.max_noninterface;
        r.global_cond = rep.global;
        r.spectral_cond = rep.spectral;
      } catch (const Error& e) {
        r.status = failure_status(e, fmt::format("{} m={} beta+={} {}", r.mesh, r.m, r.beta_plus, to_string(r.construction)));
      }
      rows.push_back(r);
    }
  return rows;
}

std::vector<ErrorRow> run_project(const StudyConfig& cfg) {
  return run_errors(cfg, [](const IfeSpace& space, const Exact& ex, double& cond) {
    const Projection p = l2_project(space, ex.u);
    cond = p.max_cond;
    return p.coefs;
  });
}

std::vector<ErrorRow> run_solve(const StudyConfig& cfg) {
  return run_errors(cfg, [&cfg](const IfeSpace& space, const Exact& ex, double& cond) {
    SipdgConfig sc;
    sc.sigma0 = cfg.sigma0;
    sc.source = ex.source;
    sc.boundary = ex.u;
    sc.solver = cfg.solver;
    sc.threads = cfg.threads;
    const DiscreteSolution sol = solve(space, sipdg_assemble(space, sc), sc);
    cond = 0.0;
    return sol.coefs;
  });
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) fail(ErrorKind::ConfigError, "slope needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<SlopeRow> fit_slopes(const std::vector<ErrorRow>& rows) {
  std::vector<SlopeRow> out;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].m == rows[i].m && rows[j].beta_plus == rows[i].beta_plus &&
           rows[j].construction == rows[i].construction)
      ++j;
    SlopeRow s;
    s.m = rows[i].m;
    s.beta_plus = rows[i].beta_plus;
    s.construction = rows[i].construction;
    std::vector<const ErrorRow*> ok;
    for (std::size_t k = i; k < j; ++k)
      if (rows[k].status == "OK") ok.push_back(&rows[k]);
    std::sort(ok.begin(), ok.end(), [](const ErrorRow* a, const ErrorRow* b) { return a->h > b->h; });
    s.meshes = static_cast<int>(ok.size());
    const bool exact = !ok.empty() && std::all_of(ok.begin(), ok.end(), [](const ErrorRow* r) {
      return r->err_l2 <= kExactTol && r->err_h1 <= kExactTol;
    });
    if (exact) {
      s.status = "EXACT";
    } else if (ok.size() < 2) {
      s.status = ok.size() < j - i ? "FAILED" : "SINGLE";
    } else {
      std::vector<double> h, l2, h1;
      for (const ErrorRow* r : ok) {
        h.push_back(r->h);
        l2.push_back(r->err_l2);
        h1.push_back(r->err_h1);
      }
      const std::size_t n = ok.size();
      s.slope_l2 = std::log(l2[n - 2] / l2[n - 1]) / std::log(h[n - 2] / h[n - 1]);
      s.slope_h1 = std::log(h1[n - 2] / h1[n - 1]) / std::log(h[n - 2] / h[n - 1]);
      s.fit_l2 = log_log_slope(h, l2);
      s.fit_h1 = log_log_slope(h, h1);
      if (ok.size() < j - i) s.status = "PARTIAL";
    }
    out.push_back(s);
    i = j;
  }
  return out;
}

void write_cond_csv(std::ostream& os, const std::vector<CondRow>& rows, const StudyConfig& cfg) {
  const std::string id = run_id(cfg);
  os << "run_id,mesh,m,beta_minus,beta_plus,construction,h,num_interface,max_local_cond,"
        "max_noninterface_cond,global_cond,spectral_cond,status\n";
  for (const CondRow& r : rows)
    fmt::print(os, "{},{},{},{},{},{},{},{},{},{},{},{},{}\n", id, r.mesh, r.m, csv_number(cfg.beta_minus),
               csv_number(r.beta_plus), to_string(r.construction), csv_number(r.h), r.num_interface,
               csv_number(r.max_local_cond), csv_number(r.max_noninterface_cond), csv_number(r.global_cond),
               csv_number(r.spectral_cond), r.status);
}

void write_error_csv(std::ostream& os, const std::vector<ErrorRow>& rows, const StudyConfig& cfg) {
  const std::string id = run_id(cfg);
  os << "run_id,study,mesh,m,beta_minus,beta_plus,construction,h,ndof,err_l2,err_h1,rate_l2,rate_h1,"
        "max_local_cond,status\n";
  for (const ErrorRow& r : rows)
    fmt::print(os, "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", id, to_string(cfg.kind), r.mesh, r.m,
               csv_number(cfg.beta_minus), csv_number(r.beta_plus), to_string(r.construction), csv_number(r.h),
               r.ndof, csv_number(r.err_l2), csv_number(r.err_h1), csv_number(r.rate_l2), csv_number(r.rate_h1),
               csv_number(r.max_local_cond), r.status);
}

void write_slopes_csv(std::ostream& os, const std::vector<SlopeRow>& rows, const StudyConfig& cfg) {
  const std::string id = run_id(cfg);
  os << "run_id,study,m,beta_minus,beta_plus,construction,meshes,slope_l2,slope_h1,fit_l2,fit_h1,status\n";
  for (const SlopeRow& r : rows)
    fmt::print(os, "{},{},{},{},{},{},{},{},{},{},{},{}\n", id, to_string(cfg.kind), r.m, csv_number(cfg.beta_minus),
               csv_number(r.beta_plus), to_string(r.construction), r.meshes, csv_number(r.slope_l2),
               csv_number(r.slope_h1), csv_number(r.fit_l2), csv_number(r.fit_h1), r.status);
}

StudyOutput run_study(const StudyConfig& cfg, const std::filesystem::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  StudyOutput out;
  const std::string stem = file_name(cfg.kind);
  auto open = [&](const std::string& name) {
    out.files.push_back(out_dir / name);
    std::ofstream f(out.files.back());
    if (!f) fail(ErrorKind::ConfigError, fmt::format("cannot write {}", out.files.back().string()));
    return f;
  };
  if (cfg.kind == StudyKind::Cond) {
    const auto rows = run_cond(cfg);
    auto f = open(stem + ".csv");
    write_cond_csv(f, rows, cfg);
  } else {
    const auto rows = cfg.kind == StudyKind::Project ? run_project(cfg) : run_solve(cfg);
    {
      auto f = open(stem + ".csv");
      write_error_csv(f, rows, cfg);
    }
    auto f = open(stem + "_slopes.csv");
    write_slopes_csv(f, fit_slopes(rows), cfg);
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json m;
  m["tool"] = "gcife";
  m["version"] = GCIFE_VERSION;
  m["run_id"] = run_id(cfg);
  m["study"] = std::string(to_string(cfg.kind));
  m["config_hash"] = fmt::format("{:016x}", fnv1a(cfg.text));
  m["wall_seconds"] = out.wall_seconds;
  m["threads"] = cfg.threads;
  std::vector<std::string> files;
  for (const auto& p : out.files) files.push_back(p.filename().string());
  m["outputs"] = files;
  std::vector<std::string> meshes;
  for (const MeshSource& s : cfg.meshes) meshes.push_back(s.structured > 0 ? s.label : s.stem.string());
  m["meshes"] = meshes;
  std::ofstream mf(out_dir / "manifest.json");
  mf << m.dump(2) << "\n";
  return out;
}

}  // namespace gcife
