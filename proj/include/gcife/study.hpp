#pragma once

// Batch studies over a parameter grid: conditioning of the local mass
// matrices, L2 projection errors and SIPDG errors, written as CSV.

#include "gcife/dg_solver.hpp"
#include "gcife/ife_space.hpp"
#include "gcife/mesh.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gcife {

enum class StudyKind { Cond, Project, Solve };

std::string_view to_string(StudyKind k);
StudyKind parse_study_kind(std::string_view s);

/// A mesh file pair (stem.node, stem.ele) or an n x n structured mesh.
struct MeshSource {
  std::string label;
  std::filesystem::path stem;
  int structured = 0;

  TriMesh load(const DomainBox& domain) const;
};

enum class ExactSolution { Circle, Polynomial };

struct StudyConfig {
  StudyKind kind = StudyKind::Cond;
  std::string curve = "circle 0 0 0.57735026918962573";
  DomainBox domain;
  std::vector<MeshSource> meshes;
  std::vector<int> degrees;
  double beta_minus = 1.0;
  std::vector<double> beta_plus;
  std::vector<Construction> constructions;
  int volume_points = 0;
  int interface_points = 0;
  ExactSolution exact = ExactSolution::Circle;
  double r0 = 0.57735026918962573;  // radius used by the circle solution
  double sigma0 = 0.0;
  LinearSolver solver = LinearSolver::Direct;
  int threads = 1;
  std::filesystem::path out_dir = "results";
  std::string text;  // source text, hashed into the run id
};

/// TOML subset: `key = value` lines with strings, numbers, booleans and
/// arrays (which may span lines); `#` starts a comment. Relative mesh paths
/// resolve against base_dir.
StudyConfig parse_study_config(std::string_view text, const std::filesystem::path& base_dir = ".");
StudyConfig load_study_config(const std::filesystem::path& file);

/// 16 hex digits of the FNV-1a hash of the version and the config text.
std::string run_id(const StudyConfig& cfg);

struct CondRow {
  std::string mesh;
  int m = 0;
  double beta_plus = 0.0;
  Construction construction = Construction::General;
  double h = 0.0;
  int num_interface = 0;
  std::optional<double> max_local_cond;  // interface elements; empty without any
  double max_noninterface_cond = 0.0;
  double global_cond = 0.0;    // largest block condition
  double spectral_cond = 0.0;  // largest over smallest eigenvalue of the block diagonal mass
  std::string status = "OK";
};

struct ErrorRow {
  std::string mesh;
  int m = 0;
  double beta_plus = 0.0;
  Construction construction = Construction::General;
  double h = 0.0;
  int ndof = 0;
  double err_l2 = 0.0;
  double err_h1 = 0.0;
  double max_local_cond = 0.0;
  std::optional<double> rate_l2;  // against the previous mesh of the same series
  std::optional<double> rate_h1;
  std::string status = "OK";
};

/// Headline rates from the two finest meshes and least-squares fits over all.
struct SlopeRow {
  int m = 0;
  double beta_plus = 0.0;
  Construction construction = Construction::General;
  int meshes = 0;
  std::optional<double> slope_l2;
  std::optional<double> slope_h1;
  std::optional<double> fit_l2;
  std::optional<double> fit_h1;
  std::string status = "OK";  // EXACT when every error is below 1e-10
};

std::vector<CondRow> run_cond(const StudyConfig& cfg);
std::vector<ErrorRow> run_project(const StudyConfig& cfg);
std::vector<ErrorRow> run_solve(const StudyConfig& cfg);

std::vector<SlopeRow> fit_slopes(const std::vector<ErrorRow>& rows);

/// Least-squares slope of log y against log x.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

void write_cond_csv(std::ostream& os, const std::vector<CondRow>& rows, const StudyConfig& cfg);
void write_error_csv(std::ostream& os, const std::vector<ErrorRow>& rows, const StudyConfig& cfg);
void write_slopes_csv(std::ostream& os, const std::vector<SlopeRow>& rows, const StudyConfig& cfg);

struct StudyOutput {
  std::vector<std::filesystem::path> files;
  double wall_seconds = 0.0;
};

/// Runs the study and writes <kind>.csv (plus <kind>_slopes.csv for error
/// studies) and manifest.json into out_dir.
StudyOutput run_study(const StudyConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace gcife
