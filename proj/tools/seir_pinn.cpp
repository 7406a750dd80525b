// seir-pinn: simulate, make-dataset, train, evaluate and export.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seir_pinn/config.hpp"
#include "seir_pinn/datagen.hpp"
#include "seir_pinn/io.hpp"
#include "seir_pinn/nsfd.hpp"
#include "seir_pinn/trainer.hpp"

namespace fs = std::filesystem;
using namespace seir;
using json = nlohmann::ordered_json;

namespace {

Trajectory simulate(const RunConfig& c) {
  const GridSpec g = c.grid();
  const CompartmentFields ic = build_initial_conditions(c.domain, g, c.ic);
  SolveOptions opt;
  opt.store_stride = c.store_stride;
  return solve(ic, c.params, g, opt);
}

void write_config_snapshot(const RunConfig& c, const fs::path& dir) {
  io::write_atomic(dir / "config.json", config_to_json(c).dump(2) + "\n");
}

int cmd_simulate(const RunConfig& c) {
  const fs::path out = c.output_dir;
  const Trajectory traj = simulate(c);
  const fs::path manifest = io::write_trajectory(out / "trajectory", traj, c.params);
  write_config_snapshot(c, out);
  std::printf("wrote %zu stored levels to %s\n", traj.states.size(), manifest.string().c_str());
  return 0;
}

int cmd_make_dataset(const RunConfig& c) {
  const fs::path out = c.output_dir;
  const Trajectory traj = simulate(c);
  SyntheticDataset ds =
      make_dataset(traj, c.dataset.n_d, c.dataset.observed, c.dataset.noise_rel, c.dataset.seed);
  ds.provenance.params = c.params;
  const fs::path path = out / "dataset.csv";
  io::write_dataset(path, ds);
  write_config_snapshot(c, out);
  std::printf("wrote %zu observations to %s\n", ds.observations.records.size(), path.string().c_str());
  return 0;
}

int cmd_train(RunConfig c, bool inverse_flag) {
  if (inverse_flag) c.training.mode = TrainMode::Inverse;
  const bool inverse = c.training.mode == TrainMode::Inverse;
  if (inverse && c.dataset.path.empty())
    throw InvalidInput("inverse mode needs dataset.path (run make-dataset first)");

  std::optional<SyntheticDataset> ds;
  if (!c.dataset.path.empty()) {
    ds = io::read_dataset(c.dataset.path);
    require(ds->provenance.grid.dim == 0 || ds->provenance.grid.dim == c.domain.dim,
            "dataset dimension differs from grid.dim");
  }

  PhysicsSetup ps;
  ps.params = c.params;
  ps.domain = c.domain;
  ps.ic = c.ic;
  ps.trainable_params = inverse;
  ps.bounded_params = true;

  const PinnModel init = xavier_init(c.network, c.seed);
  const RunArtifacts art = train(c.training, init, ps, ds ? &ds->observations : nullptr);

  const Trajectory truth = simulate(c);
  const ErrorReport rep = evaluate(art.model, truth);
  const std::array<double, 4> true_theta{c.params.beta, c.params.delta, c.params.gamma,
                                         c.params.lambda_diff};
  const ParamRecoveryReport prep = param_report(true_theta, effective_params(art.model, ps));

  const fs::path out = fs::path(c.output_dir) / "train";
  fs::create_directories(out);
  io::write_training_log(out / "training_log.csv", art.history);
  io::write_param_history(out / "theta_history.csv", art.history);
  io::write_checkpoint(out / "checkpoint.bin", art.model, c.seed);
  io::write_atomic(out / "metrics.csv", io::metrics_csv(rep));
  if (inverse) io::write_atomic(out / "params.csv", io::params_csv(prep));
  write_config_snapshot(c, out);

  json summary;
  summary["schema_version"] = io::kSchemaVersion;
  summary["mode"] = inverse ? "inverse" : "forward";
  summary["seed"] = c.seed;
  summary["adam_epochs_run"] = art.adam_epochs_run;
  summary["lbfgs_iterations_run"] = art.lbfgs_iterations_run;
  summary["lbfgs_stop_reason"] = art.lbfgs_stop_reason;
  summary["early_stopped"] = art.early_stopped;
  if (!art.history.empty()) {
    summary["initial_loss"] = io::to_json(art.history.front().loss);
    summary["final_loss"] = io::to_json(art.history.back().loss);
  }
  summary["metrics"] = io::to_json(rep);
  if (inverse) summary["parameters"] = io::to_json(prep);
  io::write_atomic(out / "summary.json", summary.dump(2) + "\n");

  std::cout << io::format_metrics_table(rep);
  if (inverse) std::cout << '\n' << io::format_params_table(prep);
  // Wall-clock times go to the console only; output files stay reproducible.
  std::printf("\nstage times: %.1fs / %.1fs / %.1fs (%ld Adam epochs, %d L-BFGS iterations)\n",
              art.stage_seconds[0], art.stage_seconds[1], art.stage_seconds[2], art.adam_epochs_run,
              art.lbfgs_iterations_run);
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& manifest, const std::string& out) {
  const io::LoadedCheckpoint ck = io::read_checkpoint(checkpoint);
  const io::LoadedTrajectory ref = io::read_trajectory(manifest);
  require(ck.model.config().dim == ref.traj.states.front().grid.dim,
          "checkpoint is " + std::to_string(ck.model.config().dim) + "D but the trajectory is " +
              std::to_string(ref.traj.states.front().grid.dim) + "D");
  const ErrorReport rep = evaluate(ck.model, ref.traj);
  std::cout << io::format_metrics_table(rep);
  if (!out.empty()) {
    json j;
    j["schema_version"] = io::kSchemaVersion;
    j["metrics"] = io::to_json(rep);
    io::write_atomic(fs::path(out) / "evaluation.json", j.dump(2) + "\n");
    io::write_atomic(fs::path(out) / "evaluation.csv", io::metrics_csv(rep));
  }
  return 0;
}

int cmd_export(const std::string& checkpoint, const std::string& manifest, const std::string& out) {
  const io::LoadedCheckpoint ck = io::read_checkpoint(checkpoint);
  const io::LoadedTrajectory ref = io::read_trajectory(manifest);
  require(ck.model.config().dim == ref.traj.states.front().grid.dim,
          "checkpoint and trajectory dimensions differ");
  const fs::path path = fs::path(out) / "plot.csv";
  io::write_atomic(path, io::plot_csv(ck.model, ref.traj));
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reaction-diffusion SEIR simulation and physics-informed network training"};
  app.require_subcommand(0, 1);
  bool version = false;
  int workers = 1;
  app.add_flag("--version", version, "Print the schema version and exit");
  app.add_option("--workers", workers, "Worker count (only 1 is supported)")->check(CLI::Range(1, 1));

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "Run configuration (JSON)")->required();
    sub->add_option("--set", overrides, "Override a leaf key, e.g. --set training.epochs=3000");
  };

  auto* sim = app.add_subcommand("simulate", "Run the finite-difference solver and write the trajectory");
  add_config(sim);
  auto* mk = app.add_subcommand("make-dataset", "Sample noisy observations from a simulated trajectory");
  add_config(mk);
  bool inverse = false;
  auto* tr = app.add_subcommand("train", "Train the network (forward, or inverse with --inverse)");
  add_config(tr);
  tr->add_flag("--inverse", inverse, "Learn beta, delta, gamma and lambda from the dataset");

  std::string checkpoint, manifest, out_dir;
  auto* ev = app.add_subcommand("evaluate", "Score a checkpoint against a stored trajectory");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  ev->add_option("--trajectory", manifest, "Trajectory manifest.json")->required();
  ev->add_option("--out", out_dir, "Directory for evaluation.json and evaluation.csv");

  bool for_plot = false;
  auto* ex = app.add_subcommand("export", "Write model and reference values for plotting");
  ex->add_flag("--for-plot", for_plot, "Long-format CSV of truth, prediction and error")->required();
  ex->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  ex->add_option("--trajectory", manifest, "Trajectory manifest.json")->required();
  ex->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (version) {
    std::cout << io::kSchemaVersion << '\n';
    return 0;
  }

  try {
    if (*sim) return cmd_simulate(load_config(config_path, overrides));
    if (*mk) return cmd_make_dataset(load_config(config_path, overrides));
    if (*tr) return cmd_train(load_config(config_path, overrides), inverse);
    if (*ev) return cmd_evaluate(checkpoint, manifest, out_dir);
    if (*ex) return cmd_export(checkpoint, manifest, out_dir);
    std::cerr << app.help();
    return 2;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
