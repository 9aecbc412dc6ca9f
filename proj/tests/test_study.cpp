#include "doctest.h"

#include "gcife/errors.hpp"
#include "gcife/study.hpp"

#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gcife;

namespace {

const std::filesystem::path kMeshes = GCIFE_MESH_DIR;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Header plus rows keyed by column name.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  explicit Csv(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    std::getline(ss, line);
    header = split(line);
    while (std::getline(ss, line)) rows.push_back(split(line));
  }

  int col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("gcife_test_study_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config parsing") {
  const StudyConfig cfg = parse_study_config(R"(
# comment
study = "solve"
curve = "ellipse 0.1 -0.05 0.6 0.4"   # trailing comment
domain = [-1, 1, -1, 1]
meshes = [
  "a/b",
  "c",
]
structured = [8]
degrees = [1, 3]
beta_minus = 2
beta_plus = [10, 1e3]
constructions = ["general", "recon2"]
exact = "polynomial"
sigma0 = 12.5
solver = "cg"
threads = 2
)",
                                             "/base");
  CHECK(cfg.kind == StudyKind::Solve);
  CHECK(cfg.curve == "ellipse 0.1 -0.05 0.6 0.4");
  REQUIRE(cfg.meshes.size() == 3);
  CHECK(cfg.meshes[0].stem == std::filesystem::path("/base/a/b"));
  CHECK(cfg.meshes[0].label == "b");
  CHECK(cfg.meshes[2].structured == 8);
  CHECK(cfg.degrees == std::vector<int>{1, 3});
  CHECK(cfg.beta_minus == 2.0);
  CHECK(cfg.beta_plus == std::vector<double>{10.0, 1000.0});
  CHECK(cfg.constructions == std::vector<Construction>{Construction::General, Construction::Recon2});
  CHECK(cfg.exact == ExactSolution::Polynomial);
  CHECK(cfg.sigma0 == 12.5);
  CHECK(cfg.solver == LinearSolver::CgBlockJacobi);
  CHECK(cfg.threads == 2);
}

TEST_CASE("config errors") {
  const std::string ok = "structured = [4]\ndegrees = [1]\nbeta_plus = [10]\nconstructions = [\"general\"]\n";
  CHECK_NOTHROW(parse_study_config(ok));
  for (const std::string bad : {
           ok + "colour = 3\n",
           ok + "degrees = [2]\n",
           ok + "threads = 0\n",
           ok + "sigma0 = \"big\"\n",
           ok + "study = \"plot\"\n",
           ok + "curve = \"spiral 1\"\n",
           ok + "nonsense\n",
           ok + "r0 = [1, 2]\n",
           ok + "beta_minus = -1\n",
           std::string("structured = [4]\ndegrees = [1]\nbeta_plus = [10]\n"),
           std::string("structured = [4]\ndegrees = [10]\nbeta_plus = [10]\nconstructions = [\"general\"]\n"),
           std::string("meshes = [\"a\"\ndegrees = [1]\n"),
       }) {
    try {
      parse_study_config(bad);
      FAIL("accepted: " << bad);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ConfigError);
    }
  }
}

TEST_CASE("run id depends on the config text") {
  const std::string a = "structured = [4]\ndegrees = [1]\nbeta_plus = [10]\nconstructions = [\"general\"]\n";
  const StudyConfig x = parse_study_config(a), y = parse_study_config(a), z = parse_study_config(a + "# x\n");
  CHECK(run_id(x) == run_id(y));
  CHECK(run_id(x) != run_id(z));
  CHECK(run_id(x).size() == 16);
}

TEST_CASE("conditioning study on the h = 1/10 mesh") {
  StudyConfig cfg = parse_study_config(
      "meshes = [\"square_h10\"]\ndegrees = [1, 3]\nbeta_plus = [10, 1000]\n"
      "constructions = [\"general\", \"recon2\"]\n",
      kMeshes);
  const auto rows = run_cond(cfg);
  REQUIRE(rows.size() == 8);
  for (const CondRow& r : rows) {
    CHECK(r.status == "OK");
    CHECK(r.num_interface > 0);
    REQUIRE(r.max_local_cond.has_value());
  }
  // grid order: construction, beta_plus, degree
  CHECK(rows[0].m == 1);
  CHECK(rows[0].beta_plus == 10.0);
  CHECK(rows[0].construction == Construction::General);
  CHECK(*rows[0].max_local_cond >= 1e1);
  CHECK(*rows[0].max_local_cond <= 1e3);
  CHECK(*rows[1].max_local_cond > *rows[0].max_local_cond);
  CHECK(*rows[2].max_local_cond > *rows[0].max_local_cond);
  const CondRow& rec = rows[7];
  CHECK(rec.construction == Construction::Recon2);
  CHECK(rec.m == 3);
  CHECK(rec.beta_plus == 1000.0);
  CHECK(std::abs(*rec.max_local_cond - 1.0) <= 1e-6);

  // csv round trip keeps full precision
  std::ostringstream os;
  write_cond_csv(os, rows, cfg);
  const Csv csv(os.str());
  REQUIRE(csv.rows.size() == 8);
  const int c = csv.col("max_local_cond");
  REQUIRE(c >= 0);
  CHECK(std::stod(csv.rows[0][c]) == *rows[0].max_local_cond);
  for (const auto& r : csv.rows) {
    CHECK(r.size() == csv.header.size());
    CHECK(r[csv.col("run_id")] == run_id(cfg));
    CHECK(r[csv.col("beta_minus")] == "1");
  }
}

TEST_CASE("a curve outside the domain leaves the interface columns empty") {
  StudyConfig cfg = parse_study_config(
      "curve = \"circle 5 5 0.5\"\nstructured = [4]\ndegrees = [2]\nbeta_plus = [10]\n"
      "constructions = [\"general\"]\n");
  const auto rows = run_cond(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].status == "OK");
  CHECK(rows[0].num_interface == 0);
  CHECK_FALSE(rows[0].max_local_cond.has_value());
  std::ostringstream os;
  write_cond_csv(os, rows, cfg);
  const Csv csv(os.str());
  REQUIRE(csv.rows.size() == 1);
  CHECK(csv.rows[0][csv.col("max_local_cond")].empty());
  CHECK(csv.rows[0][csv.col("status")] == "OK");
}

TEST_CASE("polynomials in the space give EXACT slopes") {
  // Frenet coordinates of a line are affine, so Cartesian polynomials lie in the space
  const std::string base =
      "exact = \"polynomial\"\ncurve = \"line 0.05 -0.03 0.6 0.8\"\ndomain = [-1.003, 0.997, -0.998, 1.002]\nstructured = [4, 6]\ndegrees = [1, 2]\nbeta_minus = 3\nbeta_plus = [3]\n"
      "constructions = [\"general\", \"recon2\"]\nsigma0 = 40\n";
  for (const char* kind : {"project", "solve"}) {
    const StudyConfig cfg = parse_study_config(fmt::format("study = \"{}\"\n", kind) + base);
    const auto rows = cfg.kind == StudyKind::Project ? run_project(cfg) : run_solve(cfg);
    REQUIRE(rows.size() == 8);
    for (const ErrorRow& r : rows) {
      CHECK(r.status == "OK");
      CHECK(r.err_l2 <= 1e-10);
      CHECK(r.err_h1 <= 1e-10);
    }
    const auto slopes = fit_slopes(rows);
    REQUIRE(slopes.size() == 4);
    for (const SlopeRow& s : slopes) {
      CHECK(s.status == "EXACT");
      CHECK_FALSE(s.slope_l2.has_value());
    }
  }
}

TEST_CASE("slopes") {
  CHECK(log_log_slope({0.1, 0.05, 0.025}, {1e-2, 2.5e-3, 6.25e-4}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(log_log_slope({0.1}, {1.0}), Error);
  std::vector<ErrorRow> rows(3);
  const double h[3] = {0.1, 0.05, 0.025};
  for (int i = 0; i < 3; ++i) {
    rows[i].m = 2;
    rows[i].h = h[i];
    rows[i].err_l2 = std::pow(h[i], 3) * (i == 0 ? 2.0 : 1.0);
    rows[i].err_h1 = std::pow(h[i], 2);
  }
  auto s = fit_slopes(rows);
  REQUIRE(s.size() == 1);
  CHECK(s[0].meshes == 3);
  CHECK(*s[0].slope_l2 == doctest::Approx(3.0));
  CHECK(*s[0].fit_l2 > 3.0);
  CHECK(*s[0].fit_h1 == doctest::Approx(2.0));
  rows[2].status = "SingularMatrix";
  s = fit_slopes(rows);
  CHECK(s[0].status == "PARTIAL");
  CHECK(s[0].meshes == 2);
  rows[1].status = "SingularMatrix";
  CHECK(fit_slopes(rows)[0].status == "FAILED");
}

TEST_CASE("projection study on the reference meshes") {
  const StudyConfig cfg = parse_study_config(
      "study = \"project\"\nmeshes = [\"square_h10\", \"square_h20\"]\ndegrees = [2]\nbeta_plus = [10]\n"
      "constructions = [\"recon2\"]\n",
      kMeshes);
  const auto rows = run_project(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].h > rows[1].h);
  CHECK_FALSE(rows[0].rate_l2.has_value());
  REQUIRE(rows[1].rate_l2.has_value());
  CHECK(*rows[1].rate_l2 == doctest::Approx(3.0).epsilon(0.05));
  CHECK(*rows[1].rate_h1 == doctest::Approx(2.0).epsilon(0.075));
  CHECK(std::abs(rows[1].max_local_cond - 1.0) < 1e-6);

  std::ostringstream os;
  write_error_csv(os, rows, cfg);
  const Csv csv(os.str());
  for (const char* name : {"run_id", "study", "mesh", "m", "beta_minus", "beta_plus", "construction", "h", "err_l2",
                           "err_h1", "status"})
    CHECK_MESSAGE(csv.col(name) >= 0, name);
  CHECK(csv.rows[1][csv.col("study")] == "project");
  CHECK(std::stod(csv.rows[1][csv.col("err_l2")]) == rows[1].err_l2);
}

TEST_CASE("study output is byte-identical across runs and thread counts") {
  const std::string text =
      "study = \"solve\"\ncurve = \"ellipse 0.1 -0.05 0.6 0.4\"\ndomain = [-1.003, 0.997, -0.998, 1.002]\n"
      "structured = [8, 12]\ndegrees = [1, 2]\nbeta_plus = [10]\nconstructions = [\"general\", \"recon2\"]\n";
  StudyConfig cfg = parse_study_config(text);
  const auto a = scratch("a"), b = scratch("b"), c = scratch("c");
  const StudyOutput ra = run_study(cfg, a);
  run_study(cfg, b);
  cfg.threads = 3;
  run_study(cfg, c);
  REQUIRE(ra.files.size() == 2);
  for (const auto& f : ra.files) {
    const std::string x = slurp(f);
    CHECK(!x.empty());
    CHECK(x == slurp(b / f.filename()));
    CHECK(x == slurp(c / f.filename()));
  }
  const std::string manifest = slurp(a / "manifest.json");
  CHECK(manifest.find("\"config_hash\"") != std::string::npos);
  CHECK(manifest.find("\"wall_seconds\"") != std::string::npos);
  CHECK(manifest.find("\"version\"") != std::string::npos);
  const Csv slopes(slurp(a / "solve_slopes.csv"));
  CHECK(slopes.rows.size() == 4);
  for (const auto& r : slopes.rows) CHECK(r[slopes.col("status")] == "OK");
  for (const auto& p : {a, b, c}) std::filesystem::remove_all(p);
}

TEST_CASE("failures are recorded as row status") {
  // sigma0 far below coercivity makes every factorization fail
  const StudyConfig cfg = parse_study_config(
      "study = \"solve\"\ncurve = \"circle 5 5 0.5\"\nstructured = [3, 4]\ndegrees = [2]\nbeta_plus = [1]\n"
      "constructions = [\"general\"]\nsigma0 = 0.001\nexact = \"polynomial\"\n");
  const auto rows = run_solve(cfg);
  REQUIRE(rows.size() == 2);
  for (const ErrorRow& r : rows) CHECK(r.status == "SingularMatrix");
  CHECK(fit_slopes(rows)[0].status == "FAILED");

  // a vertex at the centre of the circle fails classification of that mesh only
  const StudyConfig bad = parse_study_config(
      "meshes = [\"square_h10\"]\nstructured = [4]\ndegrees = [1]\nbeta_plus = [10]\n"
      "constructions = [\"general\"]\n",
      kMeshes);
  const auto cond = run_cond(bad);
  REQUIRE(cond.size() == 2);
  CHECK(cond[0].status == "OK");
  CHECK(cond[1].status == "TubeError");
}
