#include "qdkmc/config.hpp"

#include "qdkmc/csv.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace qdkmc {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Thrown by value parsers; the caller adds where the value came from.
struct BadValue {
  std::string why;
};

double number(const std::string& text)
{
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used == t.size() && std::isfinite(v))
      return v;
  } catch (const std::exception&) {
  }
  throw BadValue{"expected a finite number, got '" + t + "'"};
}

double rate(const std::string& text)
{
  const double v = number(text);
  if (v < 0)
    throw BadValue{"rates must be >= 0, got " + trim(text)};
  return v;
}

double positive(const std::string& text)
{
  const double v = number(text);
  if (!(v > 0))
    throw BadValue{"must be > 0, got " + trim(text)};
  return v;
}

std::uint64_t count(const std::string& text)
{
  const std::string t = trim(text);
  if (t.empty() || !std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); }))
    throw BadValue{"expected a non-negative integer, got '" + t + "'"};
  try {
    return std::stoull(t);
  } catch (const std::exception&) {
    throw BadValue{"integer out of range: '" + t + "'"};
  }
}

bool flag(const std::string& text)
{
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "on" || t == "yes" || t == "1")
    return true;
  if (t == "false" || t == "off" || t == "no" || t == "0")
    return false;
  throw BadValue{"expected true/false, got '" + trim(text) + "'"};
}

std::vector<double> axis(const std::string& text, bool strictly_positive)
{
  std::vector<double> v;
  try {
    v = parse_axis(text);
  } catch (const std::invalid_argument& e) {
    throw BadValue{e.what()};
  }
  for (double x : v)
    if (!std::isfinite(x) || (strictly_positive ? !(x > 0) : x < 0))
      throw BadValue{strictly_positive ? "axis values must be > 0" : "axis values must be >= 0"};
  return v;
}

std::string axis_text(const std::vector<double>& v)
{
  std::vector<std::string> parts;
  for (double x : v)
    parts.push_back(csv::format(x));
  return csv::join(parts);
}

std::string pol_text(Polarization p) { return p == Polarization::UpDn ? "up_dn" : "dn_up"; }

struct Key {
  const char* section;
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Key>& keys()
{
  using csv::format;
  static const std::vector<Key> table = {
      {"rates", "gamma_r_per_ns", [](RunConfig& c, const std::string& v) { c.rates.gamma_r = rate(v); },
       [](const RunConfig& c) { return format(c.rates.gamma_r); }},
      {"rates", "gamma_nr_per_ns", [](RunConfig& c, const std::string& v) { c.rates.gamma_nr = rate(v); },
       [](const RunConfig& c) { return format(c.rates.gamma_nr); }},
      {"rates", "gamma_sf_per_ns", [](RunConfig& c, const std::string& v) { c.rates.gamma_sf = rate(v); },
       [](const RunConfig& c) { return format(c.rates.gamma_sf); }},
      {"rates", "purcell", [](RunConfig& c, const std::string& v) { c.rates.purcell = rate(v); },
       [](const RunConfig& c) { return format(c.rates.purcell); }},

      {"schedule", "period_ns", [](RunConfig& c, const std::string& v) { c.period_ns = positive(v); },
       [](const RunConfig& c) { return format(c.period_ns); }},
      {"schedule", "n_cycles", [](RunConfig& c, const std::string& v) { c.n_cycles = count(v); },
       [](const RunConfig& c) { return format(c.n_cycles); }},
      {"schedule", "scheme",
       [](RunConfig& c, const std::string& v) {
         const std::string t = trim(v);
         if (t == "resonant")
           c.resonant = true;
         else if (t == "nonresonant")
           c.resonant = false;
         else
           throw BadValue{"expected resonant or nonresonant, got '" + t + "'"};
       },
       [](const RunConfig& c) { return std::string(c.resonant ? "resonant" : "nonresonant"); }},
      {"schedule", "p_in",
       [](RunConfig& c, const std::string& v) {
         c.p_in = number(v);
         if (c.p_in < 0)
           throw BadValue{"p_in must be >= 0"};
       },
       [](const RunConfig& c) { return format(c.p_in); }},
      {"schedule", "polarization",
       [](RunConfig& c, const std::string& v) {
         const std::string t = trim(v);
         if (t == "up_dn")
           c.polarization = Polarization::UpDn;
         else if (t == "dn_up")
           c.polarization = Polarization::DnUp;
         else
           throw BadValue{"expected up_dn or dn_up, got '" + t + "'"};
       },
       [](const RunConfig& c) { return pol_text(c.polarization); }},

      {"levels", "n_levels",
       [](RunConfig& c, const std::string& v) {
         const auto n = count(v);
         if (n < 1 || n > 255)
           throw BadValue{"n_levels must be in [1, 255]"};
         c.n_levels = static_cast<int>(n);
       },
       [](const RunConfig& c) { return std::to_string(c.n_levels); }},

      {"observables", "decay_bin_ns",
       [](RunConfig& c, const std::string& v) { c.observables.decay_bin_ns = positive(v); },
       [](const RunConfig& c) { return format(c.observables.decay_bin_ns); }},
      {"observables", "g2_bin_ns",
       [](RunConfig& c, const std::string& v) { c.observables.g2_bin_ns = positive(v); },
       [](const RunConfig& c) { return format(c.observables.g2_bin_ns); }},
      {"observables", "g2_max_lag_ns",
       [](RunConfig& c, const std::string& v) {
         c.observables.g2_max_lag_ns = number(v);
         if (c.observables.g2_max_lag_ns < 0)
           throw BadValue{"must be >= 0"};
       },
       [](const RunConfig& c) { return format(c.observables.g2_max_lag_ns); }},
      {"observables", "blinking",
       [](RunConfig& c, const std::string& v) { c.observables.track_blink = flag(v); },
       [](const RunConfig& c) { return std::string(c.observables.track_blink ? "true" : "false"); }},

      {"run", "seed", [](RunConfig& c, const std::string& v) { c.seed = count(v); },
       [](const RunConfig& c) { return format(c.seed); }},
      {"run", "output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = trim(v); },
       [](const RunConfig& c) { return c.output_dir.string(); }},

      {"grid", "gamma_nr_per_ns",
       [](RunConfig& c, const std::string& v) { c.grid_axes.gamma_nr = axis(v, false); },
       [](const RunConfig& c) { return axis_text(c.grid().axes.gamma_nr); }},
      {"grid", "gamma_sf_per_ns",
       [](RunConfig& c, const std::string& v) { c.grid_axes.gamma_sf = axis(v, false); },
       [](const RunConfig& c) { return axis_text(c.grid().axes.gamma_sf); }},
      {"grid", "purcell", [](RunConfig& c, const std::string& v) { c.grid_axes.purcell = axis(v, false); },
       [](const RunConfig& c) { return axis_text(c.grid().axes.purcell); }},
      {"grid", "period_ns",
       [](RunConfig& c, const std::string& v) { c.grid_axes.period_t = axis(v, true); },
       [](const RunConfig& c) { return axis_text(c.grid().axes.period_t); }},
      {"grid", "p_in", [](RunConfig& c, const std::string& v) { c.grid_axes.p_in = axis(v, false); },
       [](const RunConfig& c) { return axis_text(c.grid().axes.p_in); }},
      {"grid", "cycles_per_point", [](RunConfig& c, const std::string& v) { c.grid_cycles = count(v); },
       [](const RunConfig& c) { return format(c.grid_cycles); }},
      {"grid", "burn_in_cycles", [](RunConfig& c, const std::string& v) { c.grid_burn_in = count(v); },
       [](const RunConfig& c) { return format(c.grid_burn_in); }},
      {"grid", "seed_base", [](RunConfig& c, const std::string& v) { c.grid_seed_base = count(v); },
       [](const RunConfig& c) { return format(c.grid_seed_base.value_or(c.seed)); }},

      {"saturation", "p_in",
       [](RunConfig& c, const std::string& v) { c.saturation_p_in = axis(v, false); },
       [](const RunConfig& c) { return axis_text(c.saturation_p_in); }},
  };
  return table;
}

const Key* find_key(const std::string& section, const std::string& name)
{
  for (const auto& k : keys())
    if (section == k.section && name == k.name)
      return &k;
  return nullptr;
}

// Line of each "section.key" in the file, for diagnostics. Syntax is left to
// the ini parser; this only needs to agree on well-formed files.
std::map<std::string, int> key_lines(const std::filesystem::path& path)
{
  std::map<std::string, int> lines;
  std::ifstream in(path);
  std::string line, section;
  for (int n = 1; std::getline(in, line); ++n) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#')
      continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq != std::string::npos)
      lines.emplace(section + "." + trim(t.substr(0, eq)), n);
  }
  return lines;
}

void apply_file(RunConfig& config, const std::filesystem::path& path)
{
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  const auto lines = key_lines(path);
  auto where = [&](const std::string& section, const std::string& key) {
    const auto it = lines.find(section + "." + key);
    std::string w = path.string();
    if (it != lines.end())
      w += ":" + std::to_string(it->second);
    return w + ": [" + section + "] " + key;
  };

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config: " + path.string() + ": key '" + section +
                        "' must be inside a [section]");
    for (const auto& [key, value] : body) {
      const Key* k = find_key(section, key);
      if (!k)
        throw ConfigError("config: " + where(section, key) + ": unknown key");
      try {
        k->set(config, value.data());
      } catch (const BadValue& bad) {
        throw ConfigError("config: " + where(section, key) + ": " + bad.why);
      }
    }
  }
}

void apply_env(RunConfig& config, const EnvLookup& env)
{
  for (const auto& k : keys()) {
    const std::string name = env_name(k.section, k.name);
    const auto value = env(name);
    if (!value)
      continue;
    try {
      k.set(config, *value);
    } catch (const BadValue& bad) {
      throw ConfigError("config: environment " + name + " ([" + k.section + "] " + k.name +
                        "): " + bad.why);
    }
  }
}

}  // namespace

std::string env_name(const std::string& section, const std::string& key)
{
  std::string name = "QDKMC_" + section + "_" + key;
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return name;
}

EnvLookup process_env()
{
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str()))
      return std::string(v);
    return std::nullopt;
  };
}

Scheme RunConfig::scheme() const
{
  if (resonant)
    return Resonant{polarization};
  return NonResonant{p_in};
}

PulseSchedule RunConfig::schedule() const { return PulseSchedule{period_ns, n_cycles, scheme()}; }

ObservableSettings RunConfig::observable_settings() const
{
  ObservableSettings s = observables;
  s.period_t = period_ns;
  return s;
}

GridSpec RunConfig::grid() const
{
  GridSpec g;
  g.gamma_r = rates.gamma_r;
  g.n_levels = n_levels;
  g.axes.gamma_nr = grid_axes.gamma_nr.value_or(std::vector<double>{rates.gamma_nr});
  g.axes.gamma_sf = grid_axes.gamma_sf.value_or(std::vector<double>{rates.gamma_sf});
  g.axes.purcell = grid_axes.purcell.value_or(std::vector<double>{rates.purcell});
  g.axes.period_t = grid_axes.period_t.value_or(std::vector<double>{period_ns});
  g.axes.p_in = grid_axes.p_in.value_or(std::vector<double>{p_in});
  g.scheme = scheme();
  if (resonant)
    g.axes.p_in = {0.0};
  g.cycles_per_point = grid_cycles;
  g.burn_in = grid_burn_in;
  g.seed_base = grid_seed_base.value_or(seed);
  return g;
}

void RunConfig::validate() const
{
  try {
    rates.validate();
    schedule().validate();
    observable_settings().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::map<std::string, std::map<std::string, std::string>> RunConfig::echo() const
{
  std::map<std::string, std::map<std::string, std::string>> out;
  for (const auto& k : keys())
    out[k.section][k.name] = k.get(*this);
  return out;
}

RunConfig load_config(const std::vector<std::filesystem::path>& files, const EnvLookup& env)
{
  RunConfig config;
  for (const auto& path : files) {
    if (!std::filesystem::is_regular_file(path))
      throw ConfigError("config: cannot read " + path.string());
    apply_file(config, path);
  }
  apply_env(config, env);
  config.validate();
  return config;
}

}  // namespace qdkmc
