#include "nlsi/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace nlsi {

namespace {

enum class Type { number, integer, boolean, text, list };

struct Field {
  const char* section;
  const char* key;
  Type type;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_number(const std::string& s) {
  const std::string t = trim(s);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

long long to_integer(const std::string& s) {
  const std::string t = trim(s);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) throw ConfigError("not an integer: '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("not a boolean: '" + s + "'");
}

std::vector<double> to_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!trim(item).empty()) out.push_back(to_number(item));
  return out;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s;
}

#define NUM(sec, name, member) \
  Field { sec, name, Type::number, [](Config& c, const std::string& v) { c.member = to_number(v); }, [](const Config& c) { return num(c.member); } }
#define INT(sec, name, member, T)                                                                        \
  Field {                                                                                               \
    sec, name, Type::integer, [](Config& c, const std::string& v) { c.member = static_cast<T>(to_integer(v)); }, \
        [](const Config& c) { return std::to_string(c.member); }                                        \
  }
#define BOOL(sec, name, member) \
  Field { sec, name, Type::boolean, [](Config& c, const std::string& v) { c.member = to_bool(v); }, [](const Config& c) { return std::string(c.member ? "true" : "false"); } }
#define LIST(sec, name, member) \
  Field { sec, name, Type::list, [](Config& c, const std::string& v) { c.member = to_list(v); }, [](const Config& c) { return list(c.member); } }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      INT("model", "N", model.N, int),
      NUM("model", "gamma", model.gamma),
      NUM("model", "alpha", model.alpha),
      NUM("model", "p", model.p),
      NUM("model", "omega", model.omega),
      Field{"model", "potential", Type::text,
            [](Config& c, const std::string& v) { c.model.kind = potential_kind_from_string(trim(v)); },
            [](const Config& c) { return to_string(c.model.kind); }},
      Field{"grid", "kind", Type::text, [](Config& c, const std::string& v) { c.grid.kind = grid_kind_from_string(trim(v)); },
            [](const Config& c) { return to_string(c.grid.kind); }},
      NUM("grid", "R", grid.R),
      INT("grid", "M", grid.M, std::size_t),
      INT("grid", "order", grid.order, int),
      NUM("grid", "grade", grid.grade),
      Field{"solver", "method", Type::text, [](Config& c, const std::string& v) { c.method = method_from_string(trim(v)); },
            [](const Config& c) { return to_string(c.method); }},
      NUM("solver", "tolerance", solver.tolerance),
      NUM("solver", "acceptable", solver.acceptable),
      INT("solver", "stagnation_window", solver.stagnation_window, int),
      INT("solver", "max_iterations", solver.max_iterations, int),
      NUM("solver", "flow_step", solver.flow_step),
      NUM("solver", "min_step", solver.min_step),
      BOOL("solver", "certify_omega0", solver.certify_omega0),
      Field{"dynamics", "scheme", Type::text,
            [](Config& c, const std::string& v) { c.dynamics.scheme = scheme_from_string(trim(v)); },
            [](const Config& c) { return to_string(c.dynamics.scheme); }},
      NUM("dynamics", "dt", dynamics.dt),
      NUM("dynamics", "t_max", dynamics.t_max),
      INT("dynamics", "sample_every", dynamics.sample_every, int),
      BOOL("dynamics", "adaptive", dynamics.adaptive),
      BOOL("dynamics", "potential_on", dynamics.potential_on),
      BOOL("dynamics", "nonlinearity_on", dynamics.nonlinearity_on),
      NUM("dynamics", "drift_tolerance", dynamics.drift_tolerance),
      NUM("dynamics", "blowup_factor", dynamics.blowup_factor),
      Field{"dynamics", "initial", Type::text,
            [](Config& c, const std::string& v) {
              const auto t = trim(v);
              if (t != "ground_state" && t != "cutoff" && t != "gaussian")
                throw ConfigError("dynamics.initial must be ground_state, cutoff or gaussian");
              c.dynamics.initial = t;
            },
            [](const Config& c) { return c.dynamics.initial; }},
      NUM("dynamics", "gaussian_width", dynamics.gaussian_width),
      NUM("dynamics", "gaussian_amplitude", dynamics.gaussian_amplitude),
      INT("experiment", "seed", experiment.seed, std::uint64_t),
      INT("experiment", "workers", experiment.workers, int),
      NUM("experiment", "lambda0", experiment.lambda0),
      NUM("experiment", "cutoff_M", experiment.cutoff_M),
      LIST("experiment", "omegas", experiment.omegas),
      INT("experiment", "refine", experiment.refine, int),
      NUM("experiment", "refine_width", experiment.refine_width),
      LIST("experiment", "lambdas", experiment.lambdas),
      INT("experiment", "key_samples", experiment.key_samples, int),
      INT("experiment", "competitor_samples", experiment.competitor_samples, int),
      NUM("experiment", "gchain_alpha", experiment.gchain_alpha),
      NUM("experiment", "gchain_beta", experiment.gchain_beta),
      INT("experiment", "gchain_pairs", experiment.gchain_pairs, int),
      INT("experiment", "gchain_points", experiment.gchain_points, std::size_t),
      NUM("experiment", "gchain_beta_max", experiment.gchain_beta_max),
  };
  return f;
}

#undef NUM
#undef INT
#undef BOOL
#undef LIST

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : fields())
    if (section == f.section && key == f.key) return &f;
  return nullptr;
}

void finish(Config& c, const std::set<std::string>& model_keys) {
  if (model_keys.empty()) return;
  std::vector<std::string> need{"N", "gamma", "p", "omega", "potential"};
  if (c.model.kind == PotentialKind::inverse_power) need.push_back("alpha");
  else if (!model_keys.count("alpha")) c.model.alpha = 1.0;
  for (const auto& k : need)
    if (!model_keys.count(k)) throw ConfigError("model." + k + " is required");
  c.has_model = true;
  try {
    c.model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

const ModelParams& Config::require_model() const {
  if (!has_model) throw ConfigError("this command needs a [model] section");
  return model;
}

SimulationOptions Config::simulation_options() const {
  SimulationOptions o;
  o.scheme = dynamics.scheme;
  o.dt = dynamics.dt;
  o.t_max = dynamics.t_max;
  o.sample_every = dynamics.sample_every;
  o.adaptive = dynamics.adaptive;
  o.potential_on = dynamics.potential_on;
  o.nonlinearity_on = dynamics.nonlinearity_on;
  o.drift_tolerance = dynamics.drift_tolerance;
  o.blowup_factor = dynamics.blowup_factor;
  return o;
}

Config parse_config(const std::string& text) {
  // '#' comments are accepted alongside the INI ';'
  std::stringstream in(text), clean;
  for (std::string line; std::getline(in, line);) {
    const auto t = trim(line);
    clean << (t.starts_with("#") ? ";" + t : line) << "\n";
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(clean, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  Config c;
  std::set<std::string> model_keys;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const Field* f = find_field(section, key);
      if (!f) throw ConfigError("unknown key " + section + "." + key);
      try {
        f->set(c, value.data());
      } catch (const ConfigError&) {
        throw;
      } catch (const std::invalid_argument& e) {
        throw ConfigError(section + "." + key + ": " + e.what());
      }
      if (section == "model") model_keys.insert(key);
    }
  }
  finish(c, model_keys);
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const Config& c) {
  std::string out, current;
  for (const auto& f : fields()) {
    if (std::string(f.section) == "model" && !c.has_model) continue;
    if (current != f.section) {
      current = f.section;
      out += (out.empty() ? "[" : "\n[") + current + "]\n";
    }
    out += std::string(f.key) + " = " + f.get(c) + "\n";
  }
  return out;
}

nlohmann::json to_json(const Config& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : fields()) {
    if (std::string(f.section) == "model" && !c.has_model) continue;
    const std::string v = f.get(c);
    auto& slot = j[f.section][f.key];
    switch (f.type) {
      case Type::number: slot = to_number(v); break;
      case Type::integer: slot = to_integer(v); break;
      case Type::boolean: slot = to_bool(v); break;
      case Type::text: slot = v; break;
      case Type::list: slot = to_list(v); break;
    }
  }
  return j;
}

Config config_from_json(const nlohmann::json& j) {
  std::string text;
  for (const auto& [section, body] : j.items()) {
    text += "[" + section + "]\n";
    for (const auto& [key, value] : body.items()) {
      std::string v;
      if (value.is_array()) {
        std::vector<double> xs;
        for (const auto& x : value) xs.push_back(x.get<double>());
        v = list(xs);
      } else if (value.is_number_float()) {
        v = num(value.get<double>());
      } else if (value.is_string()) {
        v = value.get<std::string>();
      } else {
        v = value.dump();
      }
      text += key + " = " + v + "\n";
    }
  }
  return parse_config(text);
}

}  // namespace nlsi
