#include "nlsi/experiments.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nlsi {

namespace fs = std::filesystem;

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string x; std::getline(ss, x, ',');) out.push_back(x);
  return out;
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  Table t;
  std::string line;
  std::getline(in, line);
  t.header = split(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split(line));
  return t;
}

bool two_column(const std::string& csv, const std::string& x, const std::string& y, const std::string& dat) {
  const Table t = read_table(csv);
  const int i = t.column(x), j = t.column(y);
  if (i < 0 || j < 0) return false;
  auto out = open_out(dat);
  out << "# " << x << " " << y << "\n";
  for (const auto& r : t.rows) out << r[i] << " " << r[j] << "\n";
  return true;
}

void flatten(const nlohmann::json& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_number_float()) {
    out << "  " << prefix << ": " << num(j.get<double>()) << "\n";
  } else {
    out << "  " << prefix << ": " << (j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
  }
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
  return {{"tool", "nlsi"},
          {"version", kToolVersion},
          {"command", command},
          {"status", status},
          {"error", error},
          {"seed", config.experiment.seed},
          {"workers", config.experiment.workers},
          {"wall_seconds", wall_seconds},
          {"config", nlsi::to_json(config)},
          {"artifacts", artifacts},
          {"verdicts", verdicts}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.status = j.at("status").get<std::string>();
  m.error = j.value("error", "");
  m.config = config_from_json(j.at("config"));
  m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  m.verdicts = j.value("verdicts", nlohmann::json::object());
  m.wall_seconds = j.value("wall_seconds", 0.0);
  return m;
}

void write_manifest(const RunManifest& m, const std::string& dir) {
  fs::create_directories(dir);
  auto out = open_out((fs::path(dir) / "manifest.json").string());
  out << m.to_json().dump(2) << "\n";
}

RunManifest read_manifest(const std::string& dir) {
  const auto path = (fs::path(dir) / "manifest.json").string();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return RunManifest::from_json(nlohmann::json::parse(in));
}

void write_csv(const std::string& path, const std::string& header, const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  out << header << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << num(r[i]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::string> emit_report(const RunManifest& m, const std::string& dir) {
  std::vector<std::string> written;
  const fs::path d(dir);
  auto has = [&](const std::string& name) {
    for (const auto& a : m.artifacts)
      if (a == name) return fs::exists(d / name);
    return false;
  };
  auto plot = [&](const char* csv, const char* x, const char* y, const char* dat) {
    if (has(csv) && two_column((d / csv).string(), x, y, (d / dat).string())) written.push_back(dat);
  };
  plot("scaling_curve.csv", "lambda", "S", "scaling_curve.dat");
  plot("omega_scan.csv", "omega", "S2", "omega_scan.dat");
  plot("trace.csv", "t", "virial", "virial.dat");

  auto out = open_out((d / "summary.txt").string());
  out << "nlsi " << kToolVersion << "  " << m.command << "\n";
  out << "status: " << m.status << "\n";
  if (!m.error.empty()) out << "error: " << m.error << "\n";
  if (m.config.has_model) {
    const auto& p = m.config.model;
    out << "model: N=" << p.N << " potential=" << to_string(p.kind) << " gamma=" << num(p.gamma)
        << " alpha=" << num(p.alpha) << " p=" << num(p.p) << " omega=" << num(p.omega) << "\n";
  }
  out << "seed: " << m.config.experiment.seed << "\n";
  out << "verdicts:\n";
  flatten(m.verdicts, "", out);
  out << "files:\n";
  for (const auto& a : m.artifacts) out << "  " << a << "\n";
  for (const auto& w : written) out << "  " << w << "\n";
  written.push_back("summary.txt");
  return written;
}

int exit_code(const RunManifest& m) { return m.status == "ok" ? 0 : 1; }

}  // namespace nlsi
