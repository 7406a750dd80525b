#pragma once

// JSON run configuration: one file per run, sections model, grid, network,
// loss_weights, sampling, training, dataset, output_dir, seed. Missing keys
// take the defaults for the chosen dimension; unknown keys are rejected with
// their JSON pointer.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "seir_pinn/errors.hpp"
#include "seir_pinn/grid.hpp"
#include "seir_pinn/io.hpp"
#include "seir_pinn/loss.hpp"
#include "seir_pinn/model.hpp"
#include "seir_pinn/network.hpp"
#include "seir_pinn/sampling.hpp"
#include "seir_pinn/trainer.hpp"

namespace seir {

struct DatasetConfig {
  std::size_t n_d = 2000;
  double noise_rel = 0.0;
  std::array<bool, 4> observed{true, true, true, true};
  std::uint64_t seed = 7;
  std::string path;  // empty: none
};

struct RunConfig {
  EpidemicParams params;
  InitialConditionSpec ic;
  DomainSpec domain;
  int nx = 101, ny = 1;
  // k = 5e-6 keeps lambda * k / h^2 small; the skew Laplacian otherwise
  // slows the simulated dynamics by 1 + 2 * dim * lambda * k / h^2.
  long n_steps = 1000000;
  Denominator denominator = Denominator::Identity;
  long store_stride = 1000;
  NetworkConfig network;
  TrainConfig training;
  DatasetConfig dataset;
  std::string output_dir = "out";
  std::uint64_t seed = 42;

  GridSpec grid() const {
    return make_grid(domain.dim, nx, ny, domain.Lx, domain.Ly, domain.T, n_steps, denominator,
                     params.mu);
  }

  void validate() const {
    params.validate();
    domain.validate();
    ic.validate(domain);
    grid().validate();
    require(store_stride > 0, "grid.store_stride must be > 0");
    network.validate();
    training.validate();
    require(dataset.noise_rel >= 0.0, "dataset.noise_rel must be >= 0");
    require(dataset.observed[0] || dataset.observed[1] || dataset.observed[2] || dataset.observed[3],
            "dataset.observed must name at least one compartment");
    require(!output_dir.empty(), "output_dir must not be empty");
  }
};

/// Defaults for a 1D or 2D run.
inline RunConfig default_config(int dim) {
  require(dim == 1 || dim == 2, "grid.dim must be 1 or 2");
  RunConfig c;
  c.domain.dim = dim;
  c.network.dim = dim;
  if (dim == 2) {
    c.nx = c.ny = 51;
    c.n_steps = 250000;
    c.store_stride = 2500;
    c.network.fourier_scale = 2.0;
    c.training.epochs_total = 10000;
    c.training.sampling.n_interior *= 2;
    c.training.sampling.n_initial *= 2;
    c.training.sampling.n_boundary *= 2;
  }
  return c;
}

namespace config_detail {

using json = nlohmann::ordered_json;

/// Reads keys out of one JSON object, remembering which were consumed so
/// the rest can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw InvalidInput(where_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.emplace_back(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw InvalidInput(where_ + "/" + key + ": wrong type (" + it->dump() + ")");
    }
  }

  const json* child(const char* key) {
    seen_.emplace_back(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return where_ + "/" + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const auto& s : seen_) known = known || s == it.key();
      if (!known) throw InvalidInput(where_ + "/" + it.key() + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::vector<std::string> seen_;
};

inline std::array<bool, 4> compartment_mask(const json& j, const std::string& where) {
  if (!j.is_array()) throw InvalidInput(where + ": expected an array of compartment names");
  std::array<bool, 4> m{false, false, false, false};
  for (const auto& e : j) {
    if (!e.is_string()) throw InvalidInput(where + ": expected compartment names");
    try {
      m[static_cast<int>(compartment_from_name(e.get<std::string>()))] = true;
    } catch (const InvalidInput& err) {
      throw InvalidInput(where + ": " + err.what());
    }
  }
  return m;
}

}  // namespace config_detail

/// Builds a RunConfig from a parsed document and validates it.
inline RunConfig parse_config(const nlohmann::ordered_json& doc) {
  using config_detail::Section;
  Section root(doc, "");
  int dim = 1;
  if (const auto* g = doc.is_object() ? &doc : nullptr; g && g->contains("grid") && (*g)["grid"].is_object() &&
                                                         (*g)["grid"].contains("dim")) {
    const auto& d = (*g)["grid"]["dim"];
    if (!d.is_number_integer()) throw InvalidInput("/grid/dim: expected an integer");
    dim = d.get<int>();
  }
  RunConfig c = default_config(dim);

  std::string schema;
  root.get("schema_version", schema);
  if (!schema.empty() && schema != io::kSchemaVersion)
    throw InvalidInput("/schema_version: unsupported '" + schema + "' (expected " +
                       io::kSchemaVersion + ")");

  if (const auto* m = root.child("model")) {
    Section model(*m, "/model");
    if (const auto* p = model.child("params")) {
      Section s(*p, "/model/params");
      s.get("Lambda", c.params.Lambda);
      s.get("mu", c.params.mu);
      s.get("beta", c.params.beta);
      s.get("p", c.params.p);
      s.get("delta", c.params.delta);
      s.get("eta", c.params.eta);
      s.get("gamma", c.params.gamma);
      s.get("lambda", c.params.lambda_diff);
      s.finish();
    }
    if (const auto* i = model.child("ic")) {
      Section s(*i, "/model/ic");
      s.get("s0_level", c.ic.s0_level);
      s.get("seed_amplitude_E", c.ic.seed_amplitude_E);
      s.get("seed_amplitude_I", c.ic.seed_amplitude_I);
      s.get("seed_width", c.ic.seed_width);
      s.get("r0_level", c.ic.r0_level);
      s.get("seed_center", c.ic.seed_center);
      s.finish();
    }
    model.finish();
  }

  if (const auto* g = root.child("grid")) {
    Section s(*g, "/grid");
    s.get("dim", c.domain.dim);
    s.get("nx", c.nx);
    s.get("ny", c.ny);
    s.get("Lx", c.domain.Lx);
    s.get("Ly", c.domain.Ly);
    s.get("T", c.domain.T);
    s.get("n_steps", c.n_steps);
    s.get("store_stride", c.store_stride);
    std::string denom = denominator_name(c.denominator);
    s.get("denominator", denom);
    try {
      c.denominator = denominator_from_name(denom);
    } catch (const InvalidInput& e) {
      throw InvalidInput(s.path("denominator") + ": " + e.what());
    }
    s.finish();
  }
  if (c.domain.dim == 1) c.ny = 1;

  if (const auto* n = root.child("network")) {
    Section s(*n, "/network");
    s.get("depth", c.network.depth);
    s.get("width", c.network.width);
    s.get("fourier_m", c.network.fourier_m);
    s.get("fourier_scale", c.network.fourier_scale);
    std::string act = activation_name(c.network.activation);
    s.get("activation", act);
    try {
      c.network.activation = activation_from_name(act);
    } catch (const InvalidInput& e) {
      throw InvalidInput(s.path("activation") + ": " + e.what());
    }
    s.get("param_bounds", c.network.transform.bounds);
    s.get("param_start_fraction", c.network.param_start_fraction);
    s.get("output_scale", c.network.output_scale);
    s.finish();
  }
  c.network.dim = c.domain.dim;
  c.network.T = c.domain.T;
  c.network.Lx = c.domain.Lx;
  c.network.Ly = c.domain.Ly;

  if (const auto* w = root.child("loss_weights")) {
    Section s(*w, "/loss_weights");
    s.get("pde", c.training.weights.pde);
    s.get("ic", c.training.weights.ic);
    s.get("bc", c.training.weights.bc);
    s.get("data", c.training.weights.data);
    s.get("constraints", c.training.weights.constraints);
    s.finish();
  }

  if (const auto* sm = root.child("sampling")) {
    Section s(*sm, "/sampling");
    auto& sc = c.training.sampling;
    s.get("n_interior", sc.n_interior);
    s.get("n_initial", sc.n_initial);
    s.get("n_boundary", sc.n_boundary);
    s.get("alpha", sc.alpha);
    s.get("rho", sc.rho);
    s.get("probe_t", sc.probe_t);
    s.get("probe_x", sc.probe_x);
    s.get("probe_y", sc.probe_y);
    s.finish();
  }

  if (const auto* t = root.child("training")) {
    Section s(*t, "/training");
    auto& tc = c.training;
    std::string mode = tc.mode == TrainMode::Inverse ? "inverse" : "forward";
    s.get("mode", mode);
    if (mode == "forward") tc.mode = TrainMode::Forward;
    else if (mode == "inverse") tc.mode = TrainMode::Inverse;
    else throw InvalidInput(s.path("mode") + ": expected forward or inverse");
    s.get("epochs", tc.epochs_total);
    s.get("stage1_fraction", tc.stage1_fraction);
    s.get("stage2_fraction", tc.stage2_fraction);
    s.get("lbfgs_iterations", tc.lbfgs_iterations);
    s.get("lr_max", tc.lr_max);
    s.get("lr_min", tc.lr_min);
    s.get("clip_norm", tc.clip_norm);
    if (const auto* es = s.child("early_stop")) {
      Section e(*es, "/training/early_stop");
      e.get("enabled", tc.early_stop.enabled);
      e.get("min_rel_improvement", tc.early_stop.min_rel_improvement);
      e.get("window", tc.early_stop.window);
      e.finish();
    }
    s.finish();
  }

  if (const auto* d = root.child("dataset")) {
    Section s(*d, "/dataset");
    s.get("n_d", c.dataset.n_d);
    s.get("noise_rel", c.dataset.noise_rel);
    s.get("seed", c.dataset.seed);
    s.get("path", c.dataset.path);
    if (const auto* o = s.child("observed")) c.dataset.observed = config_detail::compartment_mask(*o, "/dataset/observed");
    s.finish();
  }

  root.get("output_dir", c.output_dir);
  root.get("seed", c.seed);
  root.finish();
  c.training.seed = c.seed;

  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw InvalidInput(std::string("invalid config: ") + e.what());
  }
  return c;
}

/// Applies "a.b.c=value" overrides to a document. The value is read as JSON
/// when it parses, otherwise as a string.
inline void apply_override(nlohmann::ordered_json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw InvalidInput("override '" + assignment + "' must look like key.path=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::ordered_json value;
  try {
    value = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::ordered_json::exception&) {
    value = text;
  }
  nlohmann::ordered_json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw InvalidInput("override '" + assignment + "' has an empty path segment");
    if (!node->is_object()) {
      if (!node->is_null()) throw InvalidInput("override '" + key + "' descends into a non-object");
      *node = nlohmann::ordered_json::object();
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

inline RunConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {}) {
  if (!std::filesystem::exists(path)) throw InvalidInput("config file not found: " + path.string());
  nlohmann::ordered_json doc = io::parse_json_file(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

/// Effective configuration as a complete JSON document (stored with every
/// run so it can be replayed).
inline nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["schema_version"] = io::kSchemaVersion;
  j["model"]["params"] = io::to_json(c.params);
  j["model"]["ic"] = {{"s0_level", c.ic.s0_level},
                      {"seed_amplitude_E", c.ic.seed_amplitude_E},
                      {"seed_amplitude_I", c.ic.seed_amplitude_I},
                      {"seed_width", c.ic.seed_width},
                      {"r0_level", c.ic.r0_level},
                      {"seed_center", c.ic.seed_center}};
  j["grid"] = {{"dim", c.domain.dim},   {"nx", c.nx},           {"ny", c.ny},
               {"Lx", c.domain.Lx},     {"Ly", c.domain.Ly},    {"T", c.domain.T},
               {"n_steps", c.n_steps},  {"store_stride", c.store_stride},
               {"denominator", denominator_name(c.denominator)}};
  j["network"] = {{"depth", c.network.depth},
                  {"width", c.network.width},
                  {"fourier_m", c.network.fourier_m},
                  {"fourier_scale", c.network.fourier_scale},
                  {"activation", activation_name(c.network.activation)},
                  {"param_bounds", c.network.transform.bounds},
                  {"param_start_fraction", c.network.param_start_fraction},
                  {"output_scale", c.network.output_scale}};
  const auto& w = c.training.weights;
  j["loss_weights"] = {{"pde", w.pde}, {"ic", w.ic}, {"bc", w.bc}, {"data", w.data}, {"constraints", w.constraints}};
  const auto& s = c.training.sampling;
  j["sampling"] = {{"n_interior", s.n_interior}, {"n_initial", s.n_initial}, {"n_boundary", s.n_boundary},
                   {"alpha", s.alpha},           {"rho", s.rho},             {"probe_t", s.probe_t},
                   {"probe_x", s.probe_x},       {"probe_y", s.probe_y}};
  const auto& t = c.training;
  j["training"] = {{"mode", t.mode == TrainMode::Inverse ? "inverse" : "forward"},
                   {"epochs", t.epochs_total},
                   {"stage1_fraction", t.stage1_fraction},
                   {"stage2_fraction", t.stage2_fraction},
                   {"lbfgs_iterations", t.lbfgs_iterations},
                   {"lr_max", t.lr_max},
                   {"lr_min", t.lr_min},
                   {"clip_norm", t.clip_norm},
                   {"early_stop",
                    {{"enabled", t.early_stop.enabled},
                     {"min_rel_improvement", t.early_stop.min_rel_improvement},
                     {"window", t.early_stop.window}}}};
  nlohmann::ordered_json observed = nlohmann::ordered_json::array();
  for (int i = 0; i < 4; ++i)
    if (c.dataset.observed[i]) observed.push_back(kCompartmentNames[i]);
  j["dataset"] = {{"n_d", c.dataset.n_d},   {"noise_rel", c.dataset.noise_rel}, {"observed", observed},
                  {"seed", c.dataset.seed}, {"path", c.dataset.path}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  return j;
}

}  // namespace seir
