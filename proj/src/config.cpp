#include "mdcompat/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mdcompat/error.hpp"

namespace mdcompat {

const std::vector<std::string>& grid_keys() {
  static const std::vector<std::string> keys = {"x1_type",   "missing_prop", "beta1_dev", "beta2_dev", "beta3_dev",
                                                "beta1_val", "beta2_val",    "beta3_val", "rho",       "gamma1",
                                                "gamma3",    "n_dev",        "n_val",     "iterations"};
  return keys;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_keys() {
  std::string out;
  for (const auto& k : grid_keys()) out += (out.empty() ? "" : ", ") + k;
  return out;
}

template <class T>
T parse_number(const std::string& text, const std::string& where) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError(where + ": '" + text + "' is not a valid number");
  }
  return v;
}

void assign(GridSpec& g, const std::string& key, const std::string& value, const std::string& where) {
  const auto items = split_list(value);
  if (items.empty()) throw ConfigError(where + ": key '" + key + "' has no values");
  auto doubles = [&]() {
    std::vector<double> out;
    for (const auto& s : items) out.push_back(parse_number<double>(s, where));
    return out;
  };
  auto counts = [&]() {
    std::vector<Index> out;
    for (const auto& s : items) {
      const Index v = parse_number<Index>(s, where);
      if (v < 1) throw ConfigError(where + ": '" + key + "' values must be positive");
      out.push_back(v);
    }
    return out;
  };
  if (key == "x1_type") {
    g.x1_type.clear();
    for (const auto& s : items) {
      try {
        g.x1_type.push_back(parse_x1_kind(s));
      } catch (const Error& e) {
        throw ConfigError(where + ": " + e.what());
      }
    }
  } else if (key == "missing_prop") {
    g.missing_prop = doubles();
    for (double v : g.missing_prop) {
      if (!(v >= 0.0 && v < 1.0)) throw ConfigError(where + ": missing_prop values must lie in [0, 1)");
    }
  } else if (key == "beta1_dev") {
    g.beta1_dev = doubles();
  } else if (key == "beta2_dev") {
    g.beta2_dev = doubles();
  } else if (key == "beta3_dev") {
    g.beta3_dev = doubles();
  } else if (key == "beta1_val") {
    g.beta1_val = doubles();
  } else if (key == "beta2_val") {
    g.beta2_val = doubles();
  } else if (key == "beta3_val") {
    g.beta3_val = doubles();
  } else if (key == "rho") {
    g.rho = doubles();
    for (double v : g.rho) {
      if (!(std::abs(v) <= 1.0)) throw ConfigError(where + ": rho values must lie in [-1, 1]");
    }
  } else if (key == "gamma1") {
    g.gamma1 = doubles();
  } else if (key == "gamma3") {
    g.gamma3 = doubles();
  } else if (key == "n_dev") {
    g.n_dev = counts();
  } else if (key == "n_val") {
    g.n_val = counts();
  } else if (key == "iterations") {
    g.iterations = counts();
  } else {
    throw ConfigError(where + ": unknown key '" + key + "' (valid keys: " + join_keys() + ")");
  }
}

}  // namespace

SimulationConfig parse_grid_config(std::string_view text, const std::string& source) {
  SimulationConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t ln = 0;
  bool in_run = false;
  bool have_grid = false;
  while (std::getline(in, line)) {
    ++ln;
    const std::string where = source + ":" + std::to_string(ln);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      in_run = name == "run";
      if (!in_run) {
        cfg.grids.emplace_back();
        have_grid = true;
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (in_run) {
      if (key == "seed") {
        cfg.seed = parse_number<std::uint64_t>(value, where);
      } else if (key == "workers") {
        cfg.workers = parse_number<int>(value, where);
        if (*cfg.workers < 1) throw ConfigError(where + ": workers must be positive");
      } else {
        throw ConfigError(where + ": unknown key '" + key + "' in [run] (valid keys: seed, workers)");
      }
      continue;
    }
    if (!have_grid) {
      cfg.grids.emplace_back();
      have_grid = true;
    }
    assign(cfg.grids.back(), key, value, where);
  }
  if (cfg.grids.empty()) cfg.grids.emplace_back();
  return cfg;
}

SimulationConfig load_grid_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open grid file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_grid_config(ss.str(), path.string());
}

std::vector<GridSpec> preset_grids(std::string_view name) {
  if (name == "paper") {
    GridSpec g;
    g.x1_type = {X1Kind::continuous, X1Kind::categorical};
    g.missing_prop = {0.1, 0.2, 0.5};
    g.beta1_dev = g.beta2_dev = g.beta3_dev = {0.0, 0.5};
    g.beta1_val = g.beta2_val = g.beta3_val = {0.0, 0.5};
    g.rho = {0.0, 0.75};
    g.gamma1 = {0.0, 0.5};
    g.gamma3 = {0.0, 0.5};
    g.n_dev = {50000};
    g.n_val = {50000};
    g.iterations = {100};
    return {g};
  }
  if (name == "desk") {
    auto scenario = [](double b1, double b2, double b3, double rho) {
      GridSpec g;
      g.beta1_dev = g.beta1_val = {b1};
      g.beta2_dev = g.beta2_val = {b2};
      g.beta3_dev = g.beta3_val = {b3};
      g.rho = {rho};
      return g;
    };
    return {scenario(0, 0, 0, 0.0),   scenario(0, 0.5, 0, 0.0), scenario(0, 0, 0, 0.75),
            scenario(0, 0.5, 0, 0.75), scenario(0, 0, 0.5, 0.0), scenario(0.5, 0, 0, 0.0)};
  }
  throw ArgumentError("unknown preset '" + std::string(name) + "' (expected paper or desk)");
}

std::string format_grid_config(const std::vector<GridSpec>& grids) {
  auto list = [](const auto& values, auto fmt) {
    std::string out;
    for (const auto& v : values) out += (out.empty() ? "" : ", ") + fmt(v);
    return out;
  };
  auto d = [](double v) { return format_double(v); };
  auto n = [](Index v) { return std::to_string(v); };
  std::string out;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    const GridSpec& g = grids[i];
    out += "[grid" + std::to_string(i + 1) + "]\n";
    out += "x1_type = " + list(g.x1_type, [](X1Kind k) { return to_string(k); }) + "\n";
    out += "missing_prop = " + list(g.missing_prop, d) + "\n";
    out += "beta1_dev = " + list(g.beta1_dev, d) + "\n";
    out += "beta2_dev = " + list(g.beta2_dev, d) + "\n";
    out += "beta3_dev = " + list(g.beta3_dev, d) + "\n";
    out += "beta1_val = " + list(g.beta1_val, d) + "\n";
    out += "beta2_val = " + list(g.beta2_val, d) + "\n";
    out += "beta3_val = " + list(g.beta3_val, d) + "\n";
    out += "rho = " + list(g.rho, d) + "\n";
    out += "gamma1 = " + list(g.gamma1, d) + "\n";
    out += "gamma3 = " + list(g.gamma3, d) + "\n";
    out += "n_dev = " + list(g.n_dev, n) + "\n";
    out += "n_val = " + list(g.n_val, n) + "\n";
    out += "iterations = " + list(g.iterations, n) + "\n";
  }
  return out;
}

}  // namespace mdcompat
