// Command-line driver: reproducible experiment runs from JSON configs, CSV
// table comparison, and standalone model/profile validation.

#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "latdyn/dispersion.hpp"
#include "latdyn/experiment.hpp"

namespace {

using namespace latdyn;

int cmd_run(const std::string& config_path, const CLI::Option* seed_opt, std::uint64_t seed,
            const CLI::Option* out_opt, const std::string& out_dir, const CLI::Option* thr_opt,
            int threads, bool reduced) {
  ExperimentConfig cfg = config_from_json(read_text_file(config_path));
  if (seed_opt->count()) cfg.seed = seed;
  if (out_opt->count()) cfg.out_dir = out_dir;
  if (thr_opt->count()) cfg.threads = threads;
  if (reduced) cfg.reduced = true;

  ExperimentResult res = run_experiment(cfg);
  for (const Verdict& v : res.manifest.verdicts)
    std::printf("%-26s %s  %s\n", v.name.c_str(), v.passed ? "pass" : "FAIL", v.detail.c_str());
  std::printf("%s: %zu data files, %.1f s, manifest %s/manifest.json\n",
              res.manifest.experiment.c_str(), res.manifest.data_files.size(),
              res.manifest.wall_seconds, cfg.out_dir.c_str());
  return res.passed ? 0 : 1;
}

int cmd_diff(const std::string& emp_path, const std::string& th_path, double sigma) {
  CsvTable emp = csv_from_string(read_text_file(emp_path));
  CsvTable th = csv_from_string(read_text_file(th_path));
  DiffReport rep = diff_reports(emp, th, sigma);
  std::printf("%lld entries, %lld beyond %.3g sigma (allowed fraction %.3g), max z = %.4g\n",
              static_cast<long long>(rep.entries), static_cast<long long>(rep.exceedances),
              rep.sigma, rep.allowed_fraction, rep.max_z);
  for (const std::string& s : rep.offenders) std::printf("  %s\n", s.c_str());
  std::printf("%s\n", rep.passed ? "pass" : "FAIL");
  return rep.passed ? 0 : 1;
}

int cmd_validate_model(const std::string& model_path, int refine_extent) {
  ForceField ff = force_field_from_json(read_text_file(model_path));
  ConditionReport rep = refine_extent > 0 ? validate_conditions_refined(ff, refine_extent)
                                          : validate_conditions(ff, dispersion_table(ff));
  std::printf("%s\n", condition_report_to_json(rep).c_str());
  return rep.all_passed() ? 0 : 1;
}

int cmd_validate_profile(const std::string& profile_path, const std::string& model_path,
                         int extent) {
  std::unique_ptr<SlowProfile> profile = profile_from_json(read_text_file(profile_path));

  ForceField ff;
  if (!model_path.empty()) {
    ff = force_field_from_json(read_text_file(model_path));
    ff.lattice.N = extent;
  } else {
    // default probe model: chain with unit couplings and unit pinning
    LatticeSpec spec{1, profile->components(), extent};
    ff = nn_force_field(spec, Eigen::VectorXd::Ones(spec.n), Eigen::VectorXd::Ones(spec.n));
  }
  validate(ff.lattice);
  DispersionTable table = dispersion_table(ff);

  // probe the profile on a short macroscopic grid along each axis
  std::vector<Eigen::VectorXd> r_samples;
  double box = profile->box();
  for (int i = 0; i < 9; ++i) {
    Eigen::VectorXd r = Eigen::VectorXd::Constant(ff.lattice.d, box * (i + 0.5) / 9.0);
    r_samples.push_back(r);
  }
  ProfileReport rep = validate_profile(*profile, table, r_samples);
  std::printf("%s\n", profile_report_to_json(rep).c_str());
  return rep.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for harmonic lattice dynamics with random initial data"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a named experiment from a JSON config");
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  bool reduced = false;
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  CLI::Option* seed_opt = run->add_option("--seed", seed, "override the config seed");
  CLI::Option* out_opt = run->add_option("--out", out_dir, "override the output directory");
  CLI::Option* thr_opt = run->add_option("--threads", threads, "override the thread count");
  run->add_flag("--reduced", reduced, "run the reduced (battery) preset");

  auto* diff = app.add_subcommand("diff", "compare an empirical CSV against a theory CSV");
  std::string emp_path, th_path;
  double sigma = 4.0;
  diff->add_option("empirical", emp_path, "empirical table with _se columns")->required();
  diff->add_option("theory", th_path, "theory table")->required();
  diff->add_option("--sigma", sigma, "z cut (default 4)");

  auto* vmodel = app.add_subcommand("validate-model", "check the spectral hypotheses of a model");
  std::string model_path;
  int refine_extent = 64;
  vmodel->add_option("--config", model_path, "model JSON")->required();
  vmodel->add_option("--refine", refine_extent,
                     "probe extent for the refinement pass (0: model extent only)");

  auto* vprof = app.add_subcommand("validate-profile", "check the admissibility of a profile");
  std::string profile_path, probe_model;
  int probe_extent = 256;
  vprof->add_option("--config", profile_path, "profile JSON")->required();
  vprof->add_option("--model", probe_model, "model JSON to probe against (default scalar chain)");
  vprof->add_option("--extent", probe_extent, "probe torus extent");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, seed_opt, seed, out_opt, out_dir, thr_opt, threads, reduced);
    if (diff->parsed()) return cmd_diff(emp_path, th_path, sigma);
    if (vmodel->parsed()) return cmd_validate_model(model_path, refine_extent);
    if (vprof->parsed()) return cmd_validate_profile(profile_path, probe_model, probe_extent);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
