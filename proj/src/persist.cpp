#include "pemfc/persist.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "pemfc/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pemfc {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError(tmp, "cannot open for writing");
    os << content;
    if (!os) throw IoError(tmp, "write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError(path, "atomic rename failed");
}

}  // namespace

void write_timeseries_csv(const SimulationResult& r, const std::string& path) {
  std::ostringstream os;
  os << "t";
  for (const auto& l : r.state_labels) os << "," << l;
  os << ",i_fc,i_fc_Acm2,U_cell,P_gc_a,P_gc_c,rh_a,rh_c"
     << ",n_h2_in,n_h2_out,n_o2_in,n_o2_out,n_h2o_in,n_h2o_out"
     << ",r_h2_cons,r_o2_cons,r_h2o_prod,flux_h2_acl,flux_o2_ccl\n";
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    os << fmt(r.times[k]);
    for (double v : r.states[k]) os << "," << fmt(v);
    const auto& d = r.derived[k];
    os << "," << fmt(d.i_fc) << "," << fmt(d.i_fc * 1e-4) << ","
       << fmt(d.U_cell) << "," << fmt(d.P_gc_a) << "," << fmt(d.P_gc_c) << ","
       << fmt(d.rh_a) << "," << fmt(d.rh_c) << "," << fmt(d.n_h2_in) << ","
       << fmt(d.n_h2_out) << "," << fmt(d.n_o2_in) << "," << fmt(d.n_o2_out)
       << "," << fmt(d.n_h2o_in) << "," << fmt(d.n_h2o_out) << ","
       << fmt(d.r_h2_consumed) << "," << fmt(d.r_o2_consumed) << ","
       << fmt(d.r_h2o_produced) << "," << fmt(d.flux_h2_acl) << ","
       << fmt(d.flux_o2_ccl) << "\n";
  }
  atomic_write(path, os.str());
}

void write_polarization_csv(const PolarizationCurve& c,
                            const std::string& path) {
  std::ostringstream os;
  os << "i_Acm2,i_Am2,U_cell\n";
  for (const auto& [i, u] : c.points)
    os << fmt(i * 1e-4) << "," << fmt(i) << "," << fmt(u) << "\n";
  atomic_write(path, os.str());
}

void write_impedance_csv(const ImpedanceSpectrum& s, const std::string& path) {
  std::ostringstream os;
  os << "f_Hz,Re_Z,Im_Z,thd\n";
  for (const auto& p : s.points)
    os << fmt(p.f) << "," << fmt(p.z_re) << "," << fmt(p.z_im) << ","
       << fmt(p.thd) << "\n";
  atomic_write(path, os.str());
}

void write_history_csv(const std::vector<GenerationStats>& h,
                       const std::string& path, bool append) {
  std::ostringstream os;
  if (!append || !fs::exists(path)) os << "generation,best,mean,wall_s\n";
  for (const auto& g : h)
    os << g.generation << "," << fmt(g.best) << "," << fmt(g.mean) << ","
       << fmt(g.wall_seconds) << "\n";
  if (append && fs::exists(path)) {
    std::ofstream f(path, std::ios::app | std::ios::binary);
    if (!f) throw IoError(path, "cannot append");
    f << os.str();
  } else {
    atomic_write(path, os.str());
  }
}

namespace {

json result_sidecar(const SimulationResult& r) {
  json j;
  j["config"] = r.config.serialize();
  j["status"] = r.collapsed ? "collapsed" : "completed";
  j["message"] = r.message;
  j["samples"] = r.times.size();
  j["wall_seconds"] = r.wall_seconds;
  j["diagnostics"] = {{"steps", r.diag.steps},
                      {"rejected_steps", r.diag.rejected_steps},
                      {"rhs_evals", r.diag.rhs_evals},
                      {"jacobian_evals", r.diag.jacobian_evals},
                      {"newton_iterations", r.diag.newton_iterations},
                      {"events_located", r.diag.events_located}};
  j["controller_saturations"] = r.controller_saturations;
  json purges = json::array();
  for (const auto& p : r.purges)
    purges.push_back({{"t_open", p.t_open}, {"t_close", p.t_close}});
  j["purges"] = purges;
  json events = json::array();
  for (const auto& e : r.events)
    events.push_back({{"t", e.t}, {"label", e.label}});
  j["events"] = events;
  return j;
}

}  // namespace

void write_sidecar_json(const SimulationResult& r, const std::string& path) {
  atomic_write(path, result_sidecar(r).dump(2) + "\n");
}

std::string library_version() { return "1.0.0"; }

std::string make_run_id(const std::string& config_text) {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%dT%H%M%S", std::gmtime(&t));
  const std::size_t h = std::hash<std::string>{}(config_text);
  char out[64];
  std::snprintf(out, sizeof(out), "%s-%06zx", stamp, h & 0xFFFFFF);
  return out;
}

void write_artifacts(const SimulationResult& r, const std::string& dir,
                     RunManifest& manifest) {
  fs::create_directories(dir);
  write_timeseries_csv(r, (fs::path(dir) / "timeseries.csv").string());
  write_sidecar_json(r, (fs::path(dir) / "run.json").string());
  manifest.artifacts = {"timeseries.csv", "run.json"};
}

void write_manifest(const RunManifest& m, const std::string& dir) {
  json j;
  j["run_id"] = m.run_id;
  j["command_line"] = m.command_line;
  j["config"] = m.config_text;
  j["artifacts"] = m.artifacts;
  j["version"] = m.version;
  j["wall_seconds"] = m.wall_seconds;
  j["status"] = m.status;
  atomic_write((fs::path(dir) / "manifest.json").string(), j.dump(2) + "\n");
}

RunManifest persist_result(const SimulationResult& r, const std::string& dir,
                           const std::string& command_line) {
  RunManifest m;
  m.config_text = r.config.serialize();
  m.run_id = make_run_id(m.config_text);
  m.command_line = command_line;
  m.version = library_version();
  m.wall_seconds = r.wall_seconds;
  m.status = r.collapsed ? "collapsed" : "completed";
  write_artifacts(r, dir, m);
  write_manifest(m, dir);  // manifest last: its presence marks completeness
  return m;
}

bool is_run_complete(const std::string& dir) {
  return fs::exists(fs::path(dir) / "manifest.json");
}

RunManifest read_manifest(const std::string& dir) {
  std::ifstream is(fs::path(dir) / "manifest.json");
  if (!is) throw IoError(dir, "missing manifest.json");
  json j = json::parse(is);
  RunManifest m;
  m.run_id = j.value("run_id", "");
  m.command_line = j.value("command_line", "");
  m.config_text = j.value("config", "");
  m.artifacts = j.value("artifacts", std::vector<std::string>{});
  m.version = j.value("version", "");
  m.wall_seconds = j.value("wall_seconds", 0.0);
  m.status = j.value("status", "");
  return m;
}

ExperimentCurve load_experiment(const std::string& csv_path,
                                const std::string& json_path) {
  ExperimentCurve e;
  e.name = fs::path(csv_path).stem().string();

  std::ifstream jf(json_path);
  if (!jf) throw IoError(json_path, "cannot open descriptor");
  json j = json::parse(jf);
  e.operating.T_fc = j.at("T_fc").get<double>();
  e.operating.P_des = j.at("P_des").get<double>();
  e.operating.S_a = j.value("S_a", 1.2);
  e.operating.S_c = j.value("S_c", 2.0);
  e.operating.Phi_a_des = j.at("Phi_a_des").get<double>();
  e.operating.Phi_c_des = j.at("Phi_c_des").get<double>();

  std::ifstream cf(csv_path);
  if (!cf) throw IoError(csv_path, "cannot open curve");
  std::string line;
  int lineno = 0;
  while (std::getline(cf, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.find_first_not_of(
                           "0123456789.,+-eE \t\r") != std::string::npos)
      continue;  // header row
    std::istringstream ls(line);
    std::string a, b;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ','))
      throw ParseError("expected `i,U`", lineno);
    const double i_acm2 = std::strtod(a.c_str(), nullptr);
    const double u = std::strtod(b.c_str(), nullptr);
    e.points.emplace_back(i_acm2 * 1e4, u);  // stored in A/m^2
  }
  std::sort(e.points.begin(), e.points.end());
  return e;
}

std::vector<ExperimentCurve> load_experiments_dir(const std::string& dir) {
  std::vector<ExperimentCurve> out;
  std::vector<fs::path> csvs;
  if (!fs::is_directory(dir)) throw IoError(dir, "not a directory");
  for (const auto& ent : fs::directory_iterator(dir))
    if (ent.path().extension() == ".csv") csvs.push_back(ent.path());
  std::sort(csvs.begin(), csvs.end());
  for (const auto& csv : csvs) {
    fs::path desc = csv;
    desc.replace_extension(".json");
    if (!fs::exists(desc))
      throw IoError(desc.string(), "missing descriptor for " + csv.string());
    out.push_back(load_experiment(csv.string(), desc.string()));
  }
  return out;
}

}  // namespace pemfc
