// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. The desk-scale training runs go through the
// seir-pinn executable so the whole pipeline is exercised.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fd_oracle.hpp"
#include "seir_pinn/nsfd.hpp"
#include "seir_pinn/optim.hpp"

using namespace seir;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

EpidemicParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EpidemicParams q;
  q.Lambda = 5.0 * u(rng);
  q.mu = 0.001 + 0.999 * u(rng);
  q.beta = 2.0 * u(rng);
  q.p = u(rng);
  q.delta = u(rng);
  q.eta = u(rng);
  q.gamma = u(rng);
  q.lambda_diff = 0.5 * u(rng);
  return q;
}

CompartmentFields random_state(const GridSpec& g, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CompartmentFields f(g);
  for (auto& comp : f.u)
    for (double& v : comp) v = scale * u(rng) * (u(rng) < 0.2 ? 0.0 : 1.0);  // some exact zeros
  return f;
}

GridSpec trial_grid(int dim, double k, long steps) {
  return dim == 1 ? make_grid(1, 21, 1, 1.0, 1.0, k * steps, steps)
                  : make_grid(2, 11, 11, 1.0, 1.0, k * steps, steps);
}

void check_positivity() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  const double ks[] = {0.01, 0.1, 1.0};
  int bad = 0;
  double lowest = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = trial % 2 + 1;
    const EpidemicParams q = random_params(rng);
    const GridSpec g = trial_grid(dim, ks[trial % 3], 500);
    CompartmentFields s = random_state(g, rng, 10.0);
    bool ok = true;
    for (int step = 0; step < 500; ++step) {
      s = nsfd_step(s, q, g);
      for (const auto& comp : s.u)
        for (double v : comp) {
          lowest = std::min(lowest, v);
          ok &= v >= 0.0;
        }
    }
    bad += !ok;
  }
  const double secs = seconds_since(t0);
  report(bad == 0 && secs < 60.0, "nsfd positivity",
         fmt("%d/200 trials with a negative value, min %.3g, %.1fs", bad, lowest, secs));
}

void check_boundedness() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = -1e300;
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = trial % 2 + 1;
    const EpidemicParams q = random_params(rng);
    const double cap = carrying_capacity(q);
    const GridSpec g = trial_grid(dim, trial % 3 == 0 ? 1.0 : 0.05, 300);
    CompartmentFields s = random_state(g, rng, 1.0);
    // Rescale every node's total to at most the carrying capacity.
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      const double tot = s.total(n), want = cap * u(rng);
      if (tot > 0)
        for (auto& comp : s.u) comp[n] *= want / tot;
    }
    for (int step = 0; step < 300; ++step) {
      s = nsfd_step(s, q, g);
      for (std::size_t n = 0; n < g.node_count(); ++n) worst = std::max(worst, s.total(n) - cap);
    }
  }
  report(worst <= 1e-12, "nsfd boundedness", fmt("max N - Lambda/mu = %.3g over 50 trials", worst));
}

void check_population_identity() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = trial % 2 + 1;
    EpidemicParams q = random_params(rng);
    q.Lambda = std::max(q.Lambda, 0.1);
    const GridSpec g = trial_grid(dim, 0.05, 100);
    CompartmentFields s = random_state(g, rng, 5.0);
    for (int step = 0; step < 100; ++step) {
      CompartmentFields next = nsfd_step(s, q, g);
      worst = std::max(worst, population_identity_residual(s, next, q, g) / q.Lambda);
      s = std::move(next);
    }
  }
  report(worst <= 1e-10, "population identity", fmt("max residual / Lambda = %.3g over 20 solves", worst));
}

void check_convergence_order() {
  const auto t0 = std::chrono::steady_clock::now();
  EpidemicParams q;
  DomainSpec d;
  d.T = 1.0;
  auto s_at_T = [&](double h) {
    const int nx = static_cast<int>(std::lround(1.0 / h)) + 1;
    const long steps = std::lround(1.0 / (0.5 * h * h));
    const GridSpec g = make_grid(1, nx, 1, 1.0, 1.0, 1.0, steps);
    SolveOptions opt;
    opt.store_stride = steps;
    return solve(build_initial_conditions(d, g, {}), q, g, opt).states.back().S();
  };
  const auto ref = s_at_T(0.0025);
  const double hs[] = {0.04, 0.02, 0.01};
  double err[3];
  for (int i = 0; i < 3; ++i) {
    const auto s = s_at_T(hs[i]);
    const int stride = static_cast<int>(std::lround(hs[i] / 0.0025));
    double se = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) {
      const double e = s[n] - ref[n * stride];
      se += e * e;
    }
    err[i] = std::sqrt(se * hs[i]);
  }
  // Least-squares slope of log(err) against log(h).
  double mx = 0, my = 0;
  for (int i = 0; i < 3; ++i) {
    mx += std::log(hs[i]) / 3;
    my += std::log(err[i]) / 3;
  }
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (std::log(hs[i]) - mx) * (std::log(err[i]) - my);
    sxx += (std::log(hs[i]) - mx) * (std::log(hs[i]) - mx);
  }
  const double order = sxy / sxx, secs = seconds_since(t0);
  report(order >= 1.5 && order <= 2.5 && secs < 120.0, "nsfd convergence order",
         fmt("order %.3f (pairwise %.3f, %.3f; errors %.3g %.3g %.3g), %.1fs", order,
             std::log2(err[0] / err[1]), std::log2(err[1] / err[2]), err[0], err[1], err[2], secs));
}

void check_autodiff() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_jet = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const PinnModel m = oracle::random_model(rng, trial % 2 + 1);
    const auto& c = m.config();
    worst_jet = std::max(worst_jet, oracle::jet_fd_mismatch(m, c.T * u(rng), c.Lx * u(rng), c.Ly * u(rng)));
  }
  double worst_grad = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = trial % 2 + 1;
    const PinnModel m = oracle::random_model(rng, dim);
    PhysicsSetup ps;
    ps.domain.dim = dim;
    ps.domain.T = m.config().T;
    ps.domain.Lx = m.config().Lx;
    ps.domain.Ly = m.config().Ly;
    ps.trainable_params = trial % 3 != 0;
    const auto batch = oracle::small_batch(ps.domain, rng());
    const auto obs = oracle::small_observations(ps.domain, rng);
    const auto r = oracle::gradient_fd_mismatch(m, ps, batch, obs, LossWeights{});
    worst_grad = std::max(worst_grad, r.worst_rel);
    checked += r.checked;
  }
  const double secs = seconds_since(t0);
  report(worst_jet < 1e-6 && worst_grad < 1e-5 && secs < 120.0, "autodiff oracles",
         fmt("jets max rel %.3g (100 points), gradients max rel %.3g (%d coordinates), %.1fs", worst_jet,
             worst_grad, checked, secs));
}

void check_optimizers() {
  const CosineSchedule s{1e-3, 1e-5, 3000};
  const bool ends = cosine_lr(s, 0) == 1e-3 && cosine_lr(s, 3000) == 1e-5;

  std::mt19937_64 rng(505);
  std::normal_distribution<double> z;
  double worst_norm = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Vector g(50);
    const double scale = std::pow(10.0, 6.0 * std::uniform_real_distribution<double>(-1, 1)(rng));
    for (auto& v : g) v = scale * z(rng);
    worst_norm = std::max(worst_norm, clip_gradient(g).norm());
  }

  const Eigen::MatrixXd Q = Eigen::MatrixXd::NullaryExpr(10, 10, [&] { return z(rng); });
  const Eigen::MatrixXd U = Eigen::HouseholderQR<Eigen::MatrixXd>(Q).householderQ();
  Vector ev(10);
  for (int i = 0; i < 10; ++i) ev[i] = 1.0 + i;
  const Eigen::MatrixXd A = U * ev.asDiagonal() * U.transpose();
  Objective f = [&](const Vector& x, Vector& g) {
    g = A * x;
    return 0.5 * x.dot(g);
  };
  Vector x0(10);
  for (auto& v : x0) v = z(rng);
  LbfgsState st;
  st.options.grad_tol = 1e-12;
  st.options.rel_loss_tol = 0.0;
  st.options.max_iterations = 30;
  const LbfgsResult r = lbfgs_minimize(st, f, x0);

  report(ends && worst_norm <= 1 + 1e-12 && r.x.norm() < 1e-8 && r.iterations <= 30, "optimizer oracles",
         fmt("cosine ends %s, max clipped norm 1%+.2g, L-BFGS |x| = %.3g after %d iterations",
             ends ? "exact" : "wrong", worst_norm - 1.0, r.x.norm(), r.iterations));
}

// ---------------------------------------------------------------------------
// Pipeline checks through the executable.

struct Run {
  int code = -1;
  std::string output;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SEIR_PINN_EXE) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.output += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path write_config(const fs::path& dir, const json& j) {
  fs::create_directories(dir);
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

/// Runs simulate, make-dataset and train; returns the train summary or null.
json train_pipeline(const fs::path& dir, json cfg, bool inverse, double& seconds) {
  cfg["output_dir"] = (dir / "out").string();
  cfg["dataset"]["path"] = (dir / "out" / "dataset.csv").string();
  const fs::path c = write_config(dir, cfg);
  const auto t0 = std::chrono::steady_clock::now();
  for (const char* cmd : {"make-dataset", inverse ? "train --inverse" : "train"}) {
    const Run r = run(std::string(cmd) + " -c " + c.string());
    if (r.code != 0) {
      std::printf("  %s exited %d:\n%s", cmd, r.code, r.output.c_str());
      seconds = seconds_since(t0);
      return nullptr;
    }
  }
  seconds = seconds_since(t0);
  return json::parse(slurp(dir / "out" / "train" / "summary.json"));
}

json desk_config() {
  return json::parse(R"({"training": {"epochs": 3000}, "dataset": {"n_d": 2000, "seed": 7}})");
}

void check_forward_desk(const fs::path& work) {
  double secs = 0;
  const json s = train_pipeline(work / "forward", desk_config(), false, secs);
  if (s.is_null()) return report(false, "forward desk", "pipeline failed");
  const json& m = s["metrics"];
  const double S = m["S"]["rel_l2"], E = m["E"]["rel_l2"], I = m["I"]["rel_l2"], R = m["R"]["rel_l2"];
  report(S <= 5e-2 && E <= 1.5e-1 && I <= 1.5e-1 && R <= 1.5e-1 && secs < 900.0, "forward desk",
         fmt("rel L2 S %.4g E %.4g I %.4g R %.4g, final loss %.3g, %.0fs", S, E, I, R,
             s["final_loss"]["total"].get<double>(), secs));
}

void check_inverse_desk(const fs::path& work) {
  double secs = 0;
  const json s = train_pipeline(work / "inverse", desk_config(), true, secs);
  if (s.is_null()) return report(false, "inverse desk", "pipeline failed");
  const json& p = s["parameters"];
  const double beta = p["beta"]["rel_error"], gamma = p["gamma"]["rel_error"];
  report(beta <= 0.15 && gamma <= 0.30 && secs < 1200.0, "inverse desk",
         fmt("beta %.4g (%.1f%%), gamma %.4g (%.1f%%), delta %.4g (%.1f%%), lambda %.4g (%.1f%%), %.0fs",
             p["beta"]["estimated"].get<double>(), 100 * beta, p["gamma"]["estimated"].get<double>(),
             100 * gamma, p["delta"]["estimated"].get<double>(), 100 * p["delta"]["rel_error"].get<double>(),
             p["lambda"]["estimated"].get<double>(), 100 * p["lambda"]["rel_error"].get<double>(), secs));
}

void check_2d_smoke(const fs::path& work) {
  json cfg = json::parse(R"({"grid": {"dim": 2, "nx": 31, "ny": 31}, "training": {"epochs": 1500},
                             "dataset": {"n_d": 2000}})");
  double secs = 0;
  const json s = train_pipeline(work / "smoke2d", cfg, false, secs);
  if (s.is_null()) return report(false, "2d smoke", "pipeline failed");
  bool finite = true;
  const std::string log = slurp(work / "smoke2d" / "out" / "train" / "training_log.csv");
  std::istringstream in(log);
  std::string line;
  std::getline(in, line);  // header
  long rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream cells(line);
    for (std::string v; std::getline(cells, v, ',');) finite &= std::isfinite(std::strtod(v.c_str(), nullptr));
  }
  bool well_formed = s["metrics"].size() == 4;
  for (const auto& [name, m] : s["metrics"].items())
    for (const char* key : {"rel_l2", "mae", "rmse", "max_error"})
      well_formed &= m.contains(key) && m[key].is_number() && std::isfinite(m[key].get<double>());
  const double first = s["initial_loss"]["total"], last = s["final_loss"]["total"];
  report(finite && well_formed && last * 10 <= first && secs < 1800.0, "2d smoke",
         fmt("%ld log rows %s, loss %.3g -> %.3g (x%.0f), report %s, %.0fs", rows,
             finite ? "finite" : "NOT finite", first, last, first / last,
             well_formed ? "well-formed" : "malformed", secs));
}

void check_determinism(const fs::path& work) {
  json cfg = json::parse(R"({
    "grid": {"nx": 41, "n_steps": 20000, "store_stride": 200},
    "network": {"depth": 2, "width": 16, "fourier_m": 8},
    "sampling": {"n_interior": 128, "n_initial": 32, "n_boundary": 16, "probe_t": 8, "probe_x": 8},
    "training": {"epochs": 60, "lbfgs_iterations": 10},
    "dataset": {"n_d": 300, "noise_rel": 0.05}
  })");
  const fs::path dir = work / "determinism", out = dir / "out";
  cfg["output_dir"] = out.string();
  cfg["dataset"]["path"] = (out / "dataset.csv").string();
  const fs::path p = write_config(dir, cfg);
  const fs::path ck = out / "train" / "checkpoint.bin", manifest = out / "trajectory" / "manifest.json";
  const std::vector<std::string> commands{
      "simulate -c " + p.string(),
      "make-dataset -c " + p.string(),
      "train -c " + p.string(),
      "train --inverse -c " + p.string() + " --set output_dir=" + (out / "inverse").string(),
      "evaluate --checkpoint " + ck.string() + " --trajectory " + manifest.string() + " --out " +
          (out / "eval").string(),
      "export --for-plot --checkpoint " + ck.string() + " --trajectory " + manifest.string() + " --out " +
          (out / "plot").string(),
  };
  // Same config, same directory, twice; keep a copy of the first outputs.
  int bad = 0;
  for (const auto& cmd : commands) bad += run(cmd).code != 0;
  const fs::path first = dir / "first";
  fs::copy(out, first, fs::copy_options::recursive);
  for (const auto& cmd : commands) bad += run(cmd).code != 0;

  int files = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(first)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), first);
    ++files;
    if (slurp(e.path()) != slurp(out / rel)) {
      ++differ;
      std::printf("  differs: %s\n", rel.string().c_str());
    }
  }
  report(bad == 0 && differ == 0 && files > 0, "determinism",
         fmt("%d output files compared across two runs of every command, %d differ, %d failed commands", files, differ,
             bad));
}

}  // namespace

int main(int argc, char** argv) {
  // Optional filter: run only criteria whose name contains argv[1].
  const std::string only = argc > 1 ? argv[1] : "";
  const fs::path work = fs::absolute("acceptance_work");
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<void()>>> checks{
      {"positivity", check_positivity},
      {"boundedness", check_boundedness},
      {"identity", check_population_identity},
      {"convergence", check_convergence_order},
      {"autodiff", check_autodiff},
      {"optimizer", check_optimizers},
      {"determinism", [&] { check_determinism(work); }},
      {"forward", [&] { check_forward_desk(work); }},
      {"inverse", [&] { check_inverse_desk(work); }},
      {"2d", [&] { check_2d_smoke(work); }},
  };
  for (const auto& [name, fn] : checks) {
    if (!only.empty() && name.find(only) == std::string::npos) continue;
    try {
      fn();
    } catch (const std::exception& e) {
      report(false, name, std::string("threw: ") + e.what());
    }
  }
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
