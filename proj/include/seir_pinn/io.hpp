#pragma once

// On-disk formats.
//
// Trajectory (1D): S.csv, E.csv, I.csv, R.csv with one row per stored time
//   level and one column per node; 2D: <C>_<level>.csv per compartment and
//   stored level with one row per y node. Both carry manifest.json (grid,
//   parameters, times, file list). Numbers use 17 significant digits.
// Dataset: CSV "t,x[,y],compartment,value" plus a JSON provenance sidecar.
// Checkpoint: see write_checkpoint.

#include <Eigen/Dense>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "seir_pinn/datagen.hpp"
#include "seir_pinn/errors.hpp"
#include "seir_pinn/network.hpp"
#include "seir_pinn/nsfd.hpp"
#include "seir_pinn/trainer.hpp"

namespace seir::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "seir-pinn/1";

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes `content` to `path` through a temporary file and a rename.
inline void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InvalidInput("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// JSON views of the value types.

inline json to_json(const EpidemicParams& q) {
  return {{"Lambda", q.Lambda}, {"mu", q.mu},       {"beta", q.beta},   {"p", q.p},
          {"delta", q.delta},   {"eta", q.eta},     {"gamma", q.gamma}, {"lambda", q.lambda_diff}};
}

inline EpidemicParams params_from_json(const json& j) {
  EpidemicParams q;
  q.Lambda = j.at("Lambda").get<double>();
  q.mu = j.at("mu").get<double>();
  q.beta = j.at("beta").get<double>();
  q.p = j.at("p").get<double>();
  q.delta = j.at("delta").get<double>();
  q.eta = j.at("eta").get<double>();
  q.gamma = j.at("gamma").get<double>();
  q.lambda_diff = j.at("lambda").get<double>();
  return q;
}

inline json to_json(const GridSpec& g) {
  return {{"dim", g.dim}, {"nx", g.nx}, {"ny", g.ny}, {"Lx", g.Lx},           {"Ly", g.Ly},
          {"h", g.h},     {"k", g.k},   {"phi", g.phi}, {"n_steps", g.n_steps}};
}

inline GridSpec grid_from_json(const json& j) {
  GridSpec g;
  g.dim = j.at("dim").get<int>();
  g.nx = j.at("nx").get<int>();
  g.ny = j.at("ny").get<int>();
  g.Lx = j.at("Lx").get<double>();
  g.Ly = j.at("Ly").get<double>();
  g.h = j.at("h").get<double>();
  g.k = j.at("k").get<double>();
  g.phi = j.at("phi").get<double>();
  g.n_steps = j.at("n_steps").get<long>();
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// Trajectories.

inline std::string csv_row(const double* v, std::size_t n) {
  std::string line;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) line += ',';
    line += fmt17(v[i]);
  }
  line += '\n';
  return line;
}

/// Writes the trajectory CSVs and manifest.json into `dir`; returns the
/// manifest path.
inline fs::path write_trajectory(const fs::path& dir, const Trajectory& traj,
                                 const EpidemicParams& params) {
  require(!traj.states.empty(), "write_trajectory: empty trajectory");
  fs::create_directories(dir);
  const GridSpec& g = traj.states.front().grid;
  json files = json::object();
  for (int c = 0; c < 4; ++c) {
    const std::string name = kCompartmentNames[c];
    json list = json::array();
    if (g.dim == 1) {
      std::string body;
      for (const auto& st : traj.states) body += csv_row(st.u[c].data(), st.u[c].size());
      write_atomic(dir / (name + ".csv"), body);
      list.push_back(name + ".csv");
    } else {
      for (std::size_t lvl = 0; lvl < traj.states.size(); ++lvl) {
        char fname[64];
        std::snprintf(fname, sizeof fname, "%s_%05zu.csv", name.c_str(), lvl);
        std::string body;
        const auto& f = traj.states[lvl].u[c];
        for (int iy = 0; iy < g.ny; ++iy)
          body += csv_row(f.data() + static_cast<std::size_t>(iy) * g.nx, static_cast<std::size_t>(g.nx));
        write_atomic(dir / fname, body);
        list.push_back(fname);
      }
    }
    files[name] = list;
  }
  json m;
  m["schema_version"] = kSchemaVersion;
  m["kind"] = "trajectory";
  m["grid"] = to_json(g);
  m["params"] = to_json(params);
  m["store_stride"] = traj.store_stride;
  m["times"] = traj.times;
  m["files"] = files;
  const fs::path manifest = dir / "manifest.json";
  write_atomic(manifest, m.dump(2) + "\n");
  return manifest;
}

inline std::vector<std::vector<double>> read_csv_matrix(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        require(used == cell.size() || cell.find_first_not_of(" \r", used) == std::string::npos,
                "bad number");
      } catch (const std::exception&) {
        throw InvalidInput(path.string() + ": malformed number '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

struct LoadedTrajectory {
  Trajectory traj;
  EpidemicParams params;
};

inline LoadedTrajectory read_trajectory(const fs::path& manifest_path) {
  const json m = parse_json_file(manifest_path);
  const fs::path dir = manifest_path.parent_path();
  LoadedTrajectory out;
  try {
    require(m.at("kind").get<std::string>() == "trajectory", "manifest is not a trajectory");
    const GridSpec g = grid_from_json(m.at("grid"));
    out.params = params_from_json(m.at("params"));
    out.traj.times = m.at("times").get<std::vector<double>>();
    out.traj.store_stride = m.at("store_stride").get<long>();
    const std::size_t levels = out.traj.times.size();
    out.traj.states.assign(levels, CompartmentFields(g));
    for (int c = 0; c < 4; ++c) {
      const auto list = m.at("files").at(kCompartmentNames[c]).get<std::vector<std::string>>();
      if (g.dim == 1) {
        require(list.size() == 1, "1D manifest must list one file per compartment");
        const auto rows = read_csv_matrix(dir / list[0]);
        require(rows.size() == levels, "trajectory CSV row count differs from times");
        for (std::size_t l = 0; l < levels; ++l) {
          require(rows[l].size() == g.node_count(), "trajectory CSV column count differs from grid");
          out.traj.states[l].u[c] = rows[l];
        }
      } else {
        require(list.size() == levels, "2D manifest must list one file per stored level");
        for (std::size_t l = 0; l < levels; ++l) {
          const auto rows = read_csv_matrix(dir / list[l]);
          require(rows.size() == static_cast<std::size_t>(g.ny), "2D trajectory CSV has wrong row count");
          auto& f = out.traj.states[l].u[c];
          for (int iy = 0; iy < g.ny; ++iy) {
            require(rows[iy].size() == static_cast<std::size_t>(g.nx),
                    "2D trajectory CSV has wrong column count");
            std::copy(rows[iy].begin(), rows[iy].end(), f.begin() + static_cast<std::ptrdiff_t>(iy) * g.nx);
          }
        }
      }
    }
  } catch (const json::exception& e) {
    throw InvalidInput(manifest_path.string() + ": " + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Datasets.

inline void write_dataset(const fs::path& csv_path, const SyntheticDataset& ds) {
  const int dim = ds.provenance.grid.dim;
  std::string body = dim == 2 ? "t,x,y,compartment,value\n" : "t,x,compartment,value\n";
  for (const auto& r : ds.observations.records) {
    body += fmt17(r.t) + ',' + fmt17(r.x) + ',';
    if (dim == 2) body += fmt17(r.y) + ',';
    body += std::string(kCompartmentNames[static_cast<int>(r.compartment)]) + ',' + fmt17(r.value) + '\n';
  }
  write_atomic(csv_path, body);

  json observed = json::array();
  for (int c = 0; c < 4; ++c)
    if (ds.observations.mask[c]) observed.push_back(kCompartmentNames[c]);
  json side;
  side["schema_version"] = kSchemaVersion;
  side["kind"] = "dataset";
  side["grid"] = to_json(ds.provenance.grid);
  side["params"] = to_json(ds.provenance.params);
  side["seed"] = ds.provenance.seed;
  side["noise_rel"] = ds.provenance.noise_rel;
  side["n_d"] = ds.provenance.n_d;
  side["observed"] = observed;
  side["split"] = "train";
  write_atomic(fs::path(csv_path.string() + ".json"), side.dump(2) + "\n");
}

inline SyntheticDataset read_dataset(const fs::path& csv_path) {
  SyntheticDataset ds;
  const fs::path side = csv_path.string() + ".json";
  int dim = 1;
  if (fs::exists(side)) {
    const json j = parse_json_file(side);
    try {
      ds.provenance.grid = grid_from_json(j.at("grid"));
      ds.provenance.params = params_from_json(j.at("params"));
      ds.provenance.seed = j.at("seed").get<std::uint64_t>();
      ds.provenance.noise_rel = j.at("noise_rel").get<double>();
      ds.provenance.n_d = j.at("n_d").get<std::size_t>();
      ds.observations.mask = {false, false, false, false};
      for (const auto& c : j.at("observed"))
        ds.observations.mask[static_cast<int>(compartment_from_name(c.get<std::string>()))] = true;
      dim = ds.provenance.grid.dim;
    } catch (const json::exception& e) {
      throw InvalidInput(side.string() + ": " + e.what());
    }
  }
  std::istringstream in(read_file(csv_path));
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), csv_path.string() + ": empty dataset file");
  const std::string expect = dim == 2 ? "t,x,y,compartment,value" : "t,x,compartment,value";
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == expect, csv_path.string() + ": unexpected header '" + line + "'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    require(cells.size() == static_cast<std::size_t>(dim == 2 ? 5 : 4),
            csv_path.string() + ": malformed row '" + line + "'");
    Observation o;
    try {
      o.t = std::stod(cells[0]);
      o.x = std::stod(cells[1]);
      if (dim == 2) o.y = std::stod(cells[2]);
      o.value = std::stod(cells.back());
    } catch (const std::exception&) {
      throw InvalidInput(csv_path.string() + ": malformed number in '" + line + "'");
    }
    o.compartment = compartment_from_name(cells[cells.size() - 2]);
    require(std::isfinite(o.value) && std::isfinite(o.t) && std::isfinite(o.x),
            csv_path.string() + ": non-finite value");
    ds.observations.records.push_back(o);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Checkpoints.
//
// Byte layout (all integers and floats little-endian):
//   [0, 8)        magic "SEIRPINN"
//   [8, 16)       uint64 H: length of the JSON header
//   [16, 16+H)    UTF-8 JSON header: schema_version, architecture, seed,
//                 parameter_count, fourier_rows, fourier_cols
//   then          parameter_count float64 values (flat parameter vector,
//                 canonical ordering of ParamLayout)
//   then          fourier_rows * fourier_cols float64 values (frequency
//                 matrix B, row-major)

inline constexpr char kCheckpointMagic[8] = {'S', 'E', 'I', 'R', 'P', 'I', 'N', 'N'};

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_f64(std::string& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }
inline std::uint64_t get_u64(const std::string& in, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[off + i])) << (8 * i);
  return v;
}
inline double get_f64(const std::string& in, std::size_t off) {
  return std::bit_cast<double>(get_u64(in, off));
}

}  // namespace detail

inline json architecture_json(const NetworkConfig& c) {
  return {{"dim", c.dim},
          {"depth", c.depth},
          {"width", c.width},
          {"fourier_m", c.fourier_m},
          {"fourier_scale", c.fourier_scale},
          {"activation", activation_name(c.activation)},
          {"T", c.T},
          {"Lx", c.Lx},
          {"Ly", c.Ly},
          {"param_bounds", c.transform.bounds},
          {"param_start_fraction", c.param_start_fraction},
          {"output_scale", c.output_scale}};
}

inline void write_checkpoint(const fs::path& path, const PinnModel& model, std::uint64_t seed) {
  json h;
  h["schema_version"] = kSchemaVersion;
  h["architecture"] = architecture_json(model.config());
  h["seed"] = seed;
  h["parameter_count"] = model.parameter_count();
  h["fourier_rows"] = model.features().B.rows();
  h["fourier_cols"] = model.features().B.cols();
  const std::string header = h.dump();
  std::string bytes(kCheckpointMagic, kCheckpointMagic + 8);
  detail::put_u64(bytes, header.size());
  bytes += header;
  const Vector& p = model.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) detail::put_f64(bytes, p[i]);
  const Matrix& B = model.features().B;
  for (Eigen::Index r = 0; r < B.rows(); ++r)
    for (Eigen::Index c = 0; c < B.cols(); ++c) detail::put_f64(bytes, B(r, c));
  write_atomic(path, bytes);
}

struct LoadedCheckpoint {
  PinnModel model;
  std::uint64_t seed = 0;
};

inline LoadedCheckpoint read_checkpoint(const fs::path& path) {
  const std::string bytes = read_file(path);
  auto corrupt = [&](const std::string& why) {
    return InvalidInput("corrupt checkpoint " + path.string() + ": " + why);
  };
  if (bytes.size() < 16 || bytes.compare(0, 8, std::string(kCheckpointMagic, 8)) != 0)
    throw corrupt("bad magic");
  const std::uint64_t hlen = detail::get_u64(bytes, 8);
  if (hlen > bytes.size() - 16) throw corrupt("header length out of range");
  json h;
  try {
    h = json::parse(bytes.substr(16, hlen));
  } catch (const json::exception& e) {
    throw corrupt(e.what());
  }
  LoadedCheckpoint out;
  try {
    const json& a = h.at("architecture");
    NetworkConfig c;
    c.dim = a.at("dim").get<int>();
    c.depth = a.at("depth").get<int>();
    c.width = a.at("width").get<int>();
    c.fourier_m = a.at("fourier_m").get<int>();
    c.fourier_scale = a.at("fourier_scale").get<double>();
    const std::string act = a.at("activation").get<std::string>();
    c.activation = act == "identity" ? Activation::Identity
                   : act == "square" ? Activation::Square
                                     : activation_from_name(act);
    c.T = a.at("T").get<double>();
    c.Lx = a.at("Lx").get<double>();
    c.Ly = a.at("Ly").get<double>();
    c.transform.bounds = a.at("param_bounds").get<std::array<double, 4>>();
    c.param_start_fraction = a.at("param_start_fraction").get<std::array<double, 4>>();
    c.output_scale = a.at("output_scale").get<std::array<double, 4>>();
    const auto count = h.at("parameter_count").get<std::uint64_t>();
    const auto rows = h.at("fourier_rows").get<std::uint64_t>();
    const auto cols = h.at("fourier_cols").get<std::uint64_t>();
    out.seed = h.at("seed").get<std::uint64_t>();
    const std::size_t need = 16 + hlen + 8 * (count + rows * cols);
    if (bytes.size() != need) throw corrupt("payload size mismatch");
    FourierFeatureMap fmap;
    fmap.B.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::size_t off = 16 + hlen + 8 * count;
    for (Eigen::Index r = 0; r < fmap.B.rows(); ++r)
      for (Eigen::Index cc = 0; cc < fmap.B.cols(); ++cc, off += 8)
        fmap.B(r, cc) = detail::get_f64(bytes, off);
    out.model = PinnModel(c, std::move(fmap));
    if (static_cast<std::uint64_t>(out.model.parameter_count()) != count)
      throw corrupt("parameter count does not match the architecture");
    off = 16 + hlen;
    for (Eigen::Index i = 0; i < out.model.parameters().size(); ++i, off += 8)
      out.model.parameters()[i] = detail::get_f64(bytes, off);
    if (!out.model.parameters().allFinite()) throw corrupt("non-finite parameters");
  } catch (const json::exception& e) {
    throw corrupt(e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training artifacts and reports.

inline void write_training_log(const fs::path& path, const std::vector<EpochRecord>& hist) {
  std::string body = "epoch,stage,lr,pde,ic,bc,data,nonneg,pop,param,total\n";
  for (const auto& r : hist) {
    const auto& l = r.loss;
    body += std::to_string(r.epoch) + ',' + std::to_string(r.stage) + ',' + fmt17(r.lr) + ',' +
            fmt17(l.pde) + ',' + fmt17(l.ic) + ',' + fmt17(l.bc) + ',' + fmt17(l.data) + ',' +
            fmt17(l.nonneg) + ',' + fmt17(l.pop) + ',' + fmt17(l.param) + ',' + fmt17(l.total) + '\n';
  }
  write_atomic(path, body);
}

inline void write_param_history(const fs::path& path, const std::vector<EpochRecord>& hist) {
  std::string body = "epoch,stage,beta,delta,gamma,lambda\n";
  for (const auto& r : hist)
    body += std::to_string(r.epoch) + ',' + std::to_string(r.stage) + ',' + fmt17(r.theta_p[0]) +
            ',' + fmt17(r.theta_p[1]) + ',' + fmt17(r.theta_p[2]) + ',' + fmt17(r.theta_p[3]) + '\n';
  write_atomic(path, body);
}

inline json to_json(const ErrorReport& rep) {
  json j = json::object();
  for (int c = 0; c < 4; ++c) {
    const auto& m = rep.per_compartment[c];
    j[kCompartmentNames[c]] = {{"rel_l2", m.rel_l2}, {"mae", m.mae}, {"rmse", m.rmse}, {"max_error", m.max_err}};
  }
  return j;
}

inline json to_json(const ParamRecoveryReport& rep) {
  json j = json::object();
  for (const auto& r : rep.rows)
    j[r.name] = {{"true", r.true_value},
                 {"estimated", r.estimate},
                 {"abs_error", r.abs_error},
                 {"rel_error", r.rel_error}};
  return j;
}

inline json to_json(const LossBreakdown& l) {
  return {{"pde", l.pde},       {"ic", l.ic},   {"bc", l.bc},       {"data", l.data},
          {"nonneg", l.nonneg}, {"pop", l.pop}, {"param", l.param}, {"total", l.total}};
}

inline std::string metrics_csv(const ErrorReport& rep) {
  std::string body = "compartment,rel_l2,mae,rmse,max_error\n";
  for (int c = 0; c < 4; ++c) {
    const auto& m = rep.per_compartment[c];
    body += std::string(kCompartmentNames[c]) + ',' + fmt17(m.rel_l2) + ',' + fmt17(m.mae) + ',' +
            fmt17(m.rmse) + ',' + fmt17(m.max_err) + '\n';
  }
  return body;
}

inline std::string params_csv(const ParamRecoveryReport& rep) {
  std::string body = "parameter,true,estimated,abs_error,rel_error\n";
  for (const auto& r : rep.rows)
    body += r.name + ',' + fmt17(r.true_value) + ',' + fmt17(r.estimate) + ',' + fmt17(r.abs_error) +
            ',' + fmt17(r.rel_error) + '\n';
  return body;
}

/// Aligned text table in the layout of the per-compartment metrics report.
inline std::string format_metrics_table(const ErrorReport& rep) {
  std::string s = "Compartment   Rel. L2 Error   MAE          RMSE         Max Error\n";
  char buf[160];
  for (int c = 0; c < 4; ++c) {
    const auto& m = rep.per_compartment[c];
    std::snprintf(buf, sizeof buf, "%-13s %-15.4e %-12.4e %-12.4e %.4e\n", kCompartmentNames[c],
                  m.rel_l2, m.mae, m.rmse, m.max_err);
    s += buf;
  }
  return s;
}

inline std::string format_params_table(const ParamRecoveryReport& rep) {
  std::string s = "Parameter   True     Estimated   Abs. Error    Rel. Error\n";
  char buf[160];
  for (const auto& r : rep.rows) {
    std::snprintf(buf, sizeof buf, "%-11s %-8.4f %-11.4f %-13.4e %.2f%%\n", r.name.c_str(),
                  r.true_value, r.estimate, r.abs_error, 100.0 * r.rel_error);
    s += buf;
  }
  return s;
}

/// Long-format rows (t, x[, y], compartment, source, value) with source in
/// {truth, pinn, abs_error}, one triple per stored level, node and
/// compartment.
inline std::string plot_csv(const PinnModel& model, const Trajectory& ref) {
  require(!ref.states.empty(), "plot export: empty trajectory");
  const GridSpec& g = ref.states.front().grid;
  std::string body = g.dim == 2 ? "t,x,y,compartment,source,value\n" : "t,x,compartment,source,value\n";
  for (std::size_t lvl = 0; lvl < ref.states.size(); ++lvl) {
    std::vector<SpaceTimePoint> pts;
    pts.reserve(g.node_count());
    for (std::size_t n = 0; n < g.node_count(); ++n)
      pts.push_back({ref.times[lvl], g.x(static_cast<int>(n % g.nx)),
                     g.dim == 2 ? g.y(static_cast<int>(n / g.nx)) : 0.0});
    const BatchJets j = forward_jets(model, pts, JetLayout::value_only());
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      std::string prefix = fmt17(pts[n].t) + ',' + fmt17(pts[n].x) + ',';
      if (g.dim == 2) prefix += fmt17(pts[n].y) + ',';
      for (int c = 0; c < 4; ++c) {
        const double truth = ref.states[lvl].u[c][n];
        const double pinn = j.value(c, static_cast<Eigen::Index>(n));
        const std::string pc = prefix + kCompartmentNames[c] + ',';
        body += pc + "truth," + fmt17(truth) + '\n';
        body += pc + "pinn," + fmt17(pinn) + '\n';
        body += pc + "abs_error," + fmt17(std::abs(pinn - truth)) + '\n';
      }
    }
  }
  return body;
}

}  // namespace seir::io
