#pragma once

#include <string>
#include <vector>

#include "latdyn/force_field.hpp"
#include "latdyn/profile.hpp"
#include "latdyn/report.hpp"

namespace latdyn {

// The five named experiments.  Each binds samplers, the spectral propagator,
// estimators and the closed-form predictions into pass/fail verdicts with
// exported data tables:
//   homogeneous-convergence  relaxation of a non-equilibrium homogeneous
//                            ensemble onto the band-projected limit covariance
//   green-decay              dispersive decay and propagation cone of the
//                            smooth part of the lattice Green function
//   kinetic-wigner           measured Wigner matrix of a slowly modulated
//                            ensemble at kinetic times against free transport
//   local-stationarity       flow invariance of the limit covariance, exact
//                            and sampled
//   gaussianization          a non-Gaussian slow ensemble turning Gaussian at
//                            kinetic times, plus the local covariance match
enum class ExperimentKind {
  homogeneous_convergence,
  green_decay,
  kinetic_wigner,
  local_stationarity,
  gaussianization,
};

std::string experiment_name(ExperimentKind kind);
ExperimentKind experiment_kind(const std::string& name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::homogeneous_convergence;

  // model: interaction terms are reused across extents, so the lattice extent
  // stored inside force_field is a reference value; drivers rebuild at the
  // extent they need (kinetic ladders use several).
  ForceField force_field;
  std::string profile_json;  // slow-variation experiments only

  std::vector<double> eps_list;  // kinetic scales, strictly decreasing
  std::vector<double> times;     // lab times t, or kinetic times as noted
  Index samples = 0;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = "latdyn-out";
  bool reduced = false;          // cheap reseed-battery variant
  double memory_cap_gb = 4.0;

  // knobs (defaults are the calibrated acceptance values)
  int extent = 0;            // torus extent override; 0 = experiment default
  double temperature = 1.0;  // homogeneous ensemble temperature
  double modulation = 0.9;   // spectral tilt of the non-equilibrium input
  int max_offset = 8;        // covariance estimation offsets 0..max_offset
  int y_max = 8;             // Wigner window half-width (sites)
  int block_side = 0;        // sampler cube side (sites); 0: eps^-0.8 per rung
  double tau = 0.5;          // kinetic time
  double r_point = 32.0;     // macroscopic measurement point, axis 0
  double split_delta = 0.15; // dual-space dilation radius for the smooth cut
  double diff_sigma = 4.0;   // z cut for statistical verdicts
  NoiseKind noise = NoiseKind::gaussian;
};

// Fills every field for the named experiment with its acceptance defaults.
ExperimentConfig default_config(ExperimentKind kind);

// Single JSON document; unknown keys rejected, missing keys keep defaults.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

// Per-entry comparison of an empirical table against a theory table.
// Empirical value columns carry standard errors in sibling "<name>_se"
// columns; every remaining non-se column is a key column and must agree
// exactly between the two files.  Pass iff the fraction of entries beyond
// sigma stays below twice the two-sided Gaussian tail mass at sigma (the
// expected false-positive rate; the factor two absorbs sampling of the rate).
struct DiffReport {
  Index entries = 0;
  Index exceedances = 0;
  double sigma = 0.0;
  double max_z = 0.0;
  double allowed_fraction = 0.0;
  bool passed = false;
  std::vector<std::string> offenders;  // worst entries, "column[row]: z=..."
};

DiffReport diff_reports(const CsvTable& empirical, const CsvTable& theory,
                        double sigma);

struct ExperimentResult {
  bool passed = false;
  RunManifest manifest;
};

// Runs one experiment: validates the config, executes the driver, writes CSV
// data files and manifest.json under cfg.out_dir, and returns the verdicts.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace latdyn
