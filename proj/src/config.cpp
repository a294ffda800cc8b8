#include "exdf/config.hpp"

#include <Eigen/Core>
#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "exdf/error.hpp"

namespace exdf {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    if (line[k] == '"')
      quoted = !quoted;
    else if (line[k] == '#' && !quoted)
      return line.substr(0, k);
  }
  return line;
}

struct Value {
  std::string key;
  std::string text;
  std::size_t line = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line) + ": '" + key + "' " + what);
  }

  double number() const {
    try {
      std::size_t used = 0;
      double v = std::stod(text, &used);
      if (used != text.size() || !std::isfinite(v))
        fail("expects a number");
      return v;
    } catch (const std::logic_error&) {
      fail("expects a number");
    }
  }

  long integer() const {
    double v = number();
    if (v != std::floor(v) || std::abs(v) > 9e15)
      fail("expects an integer");
    return static_cast<long>(v);
  }

  std::uint64_t unsigned_integer() const {
    try {
      std::size_t used = 0;
      auto v = std::stoull(text, &used);
      if (used != text.size() || text.front() == '-')
        fail("expects a nonnegative integer");
      return v;
    } catch (const std::logic_error&) {
      fail("expects a nonnegative integer");
    }
  }

  bool boolean() const {
    if (text == "true")
      return true;
    if (text == "false")
      return false;
    fail("expects true or false");
  }

  std::string string() const {
    if (text.size() < 2 || text.front() != '"' || text.back() != '"')
      fail("expects a quoted string");
    return text.substr(1, text.size() - 2);
  }

  std::vector<double> numbers() const {
    if (text.size() < 2 || text.front() != '[' || text.back() != ']')
      return {number()};
    std::vector<double> out;
    std::stringstream in(text.substr(1, text.size() - 2));
    std::string item;
    while (std::getline(in, item, ',')) {
      Value v{key, trim(item), line};
      if (v.text.empty())
        fail("has an empty array entry");
      out.push_back(v.number());
    }
    return out;
  }

  std::array<double, 4> four() const {
    auto v = numbers();
    if (v.size() == 1)
      return {v[0], v[0], v[0], v[0]};
    if (v.size() != 4)
      fail("expects 1 or 4 numbers");
    return {v[0], v[1], v[2], v[3]};
  }
};

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty())
    return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quote(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k)
    s += (k ? ", " : "") + fmt(v[k]);
  return s + "]";
}

} // namespace

void RunConfig::validate() const {
  spec.validate();
  mcmc.validate();
  if (!(quantile > 0.0 && quantile < 1.0))
    throw ConfigError("quantile must lie in (0, 1)");
  if (!(coverage_min >= 0.0 && coverage_min <= 1.0))
    throw ConfigError("coverage_min must lie in [0, 1]");
  if (max_draws < 2)
    throw ConfigError("max_draws must be at least 2");
  if (!(cutoff > 0.0 && cutoff < 1.0))
    throw ConfigError("cutoff must lie in (0, 1)");
  if (!(rhat_max > 1.0))
    throw ConfigError("rhat_max must exceed 1");
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig c;
  using Setter = std::function<void(const Value&)>;
  const std::map<std::string, Setter> setters = {
      {"station_file", [&](const Value& v) { c.station_file = resolve(v.string(), base_dir); }},
      {"grid_file", [&](const Value& v) { c.grid_file = resolve(v.string(), base_dir); }},
      {"threshold_file", [&](const Value& v) { c.threshold_file = resolve(v.string(), base_dir); }},
      {"output_dir", [&](const Value& v) { c.output_dir = resolve(v.string(), base_dir); }},
      {"quantile", [&](const Value& v) { c.quantile = v.number(); }},
      {"coverage_min", [&](const Value& v) { c.coverage_min = v.number(); }},
      {"model", [&](const Value& v) { c.model = parse_model_kind(v.string()); }},
      {"m", [&](const Value& v) { c.spec.m = static_cast<int>(v.integer()); }},
      {"n_iter", [&](const Value& v) { c.mcmc.n_iter = v.integer(); }},
      {"burn_in", [&](const Value& v) { c.mcmc.burn_in = v.integer(); }},
      {"thin", [&](const Value& v) { c.mcmc.thin = v.integer(); }},
      {"n_chains", [&](const Value& v) { c.mcmc.n_chains = static_cast<int>(v.integer()); }},
      {"seed", [&](const Value& v) { c.mcmc.seed = v.unsigned_integer(); }},
      {"phi_alpha", [&](const Value& v) { c.spec.phi_alpha = v.number(); }},
      {"phi_beta", [&](const Value& v) { c.spec.phi_beta = v.number(); }},
      {"prefit_decay", [&](const Value& v) { c.prefit_decay = v.boolean(); }},
      {"mu_y", [&](const Value& v) { c.spec.shape_prior_y.location = v.number(); }},
      {"b_y", [&](const Value& v) { c.spec.shape_prior_y.scale = v.number(); }},
      {"mu_x", [&](const Value& v) { c.spec.shape_prior_x.location = v.number(); }},
      {"b_x", [&](const Value& v) { c.spec.shape_prior_x.scale = v.number(); }},
      {"a_alpha", [&](const Value& v) { c.spec.precision_alpha.shape = v.number(); }},
      {"b_alpha", [&](const Value& v) { c.spec.precision_alpha.rate = v.number(); }},
      {"a_beta", [&](const Value& v) { c.spec.precision_beta.shape = v.number(); }},
      {"b_beta", [&](const Value& v) { c.spec.precision_beta.rate = v.number(); }},
      {"a_c", [&](const Value& v) { c.spec.precision_c.shape = v.number(); }},
      {"b_c", [&](const Value& v) { c.spec.precision_c.rate = v.number(); }},
      {"a_obs_y", [&](const Value& v) { c.spec.precision_obs_y.shape = v.number(); }},
      {"b_obs_y", [&](const Value& v) { c.spec.precision_obs_y.rate = v.number(); }},
      {"a_obs_x", [&](const Value& v) { c.spec.precision_obs_x.shape = v.number(); }},
      {"b_obs_x", [&](const Value& v) { c.spec.precision_obs_x.rate = v.number(); }},
      {"mu_d", [&](const Value& v) { c.spec.mu_d = v.numbers(); }},
      {"kappa_d", [&](const Value& v) { c.spec.kappa_d = v.number(); }},
      {"mu_lambda", [&](const Value& v) { c.spec.mu_lambda = v.four(); }},
      {"sigma2_lambda", [&](const Value& v) { c.spec.sigma2_lambda = v.four(); }},
      {"max_draws", [&](const Value& v) { c.max_draws = static_cast<std::size_t>(v.unsigned_integer()); }},
      {"cutoff", [&](const Value& v) { c.cutoff = v.number(); }},
      {"rhat_max", [&](const Value& v) { c.rhat_max = v.number(); }},
  };
  std::set<std::string> seen;
  std::stringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(strip_comment(raw));
    if (line.empty())
      continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos)
      continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    Value v{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno};
    auto it = setters.find(v.key);
    if (it == setters.end())
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + v.key + "'");
    if (!seen.insert(v.key).second)
      throw ConfigError("config line " + std::to_string(lineno) + ": repeated key '" + v.key + "'");
    if (v.text.empty())
      v.fail("has no value");
    it->second(v);
  }
  if (!seen.count("output_dir"))
    c.output_dir = resolve(".", base_dir);
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto base = std::filesystem::absolute(path).parent_path();
  return parse_config(buf.str(), base);
}

std::string canonical_config(const RunConfig& c) {
  std::ostringstream o;
  const auto& s = c.spec;
  o << "station_file = " << quote(c.station_file) << '\n'
    << "grid_file = " << quote(c.grid_file) << '\n';
  if (!c.threshold_file.empty())
    o << "threshold_file = " << quote(c.threshold_file) << '\n';
  o << "output_dir = " << quote(c.output_dir) << '\n'
    << "quantile = " << fmt(c.quantile) << '\n'
    << "coverage_min = " << fmt(c.coverage_min) << '\n'
    << "model = \"" << to_string(c.model) << "\"\n"
    << "m = " << s.m << '\n'
    << "n_iter = " << c.mcmc.n_iter << '\n'
    << "burn_in = " << c.mcmc.burn_in << '\n'
    << "thin = " << c.mcmc.thin << '\n'
    << "n_chains = " << c.mcmc.n_chains << '\n'
    << "seed = " << c.mcmc.seed << '\n'
    << "phi_alpha = " << fmt(s.phi_alpha) << '\n'
    << "phi_beta = " << fmt(s.phi_beta) << '\n'
    << "prefit_decay = " << (c.prefit_decay ? "true" : "false") << '\n'
    << "mu_y = " << fmt(s.shape_prior_y.location) << '\n'
    << "b_y = " << fmt(s.shape_prior_y.scale) << '\n'
    << "mu_x = " << fmt(s.shape_prior_x.location) << '\n'
    << "b_x = " << fmt(s.shape_prior_x.scale) << '\n'
    << "a_alpha = " << fmt(s.precision_alpha.shape) << '\n'
    << "b_alpha = " << fmt(s.precision_alpha.rate) << '\n'
    << "a_beta = " << fmt(s.precision_beta.shape) << '\n'
    << "b_beta = " << fmt(s.precision_beta.rate) << '\n'
    << "a_c = " << fmt(s.precision_c.shape) << '\n'
    << "b_c = " << fmt(s.precision_c.rate) << '\n'
    << "a_obs_y = " << fmt(s.precision_obs_y.shape) << '\n'
    << "b_obs_y = " << fmt(s.precision_obs_y.rate) << '\n'
    << "a_obs_x = " << fmt(s.precision_obs_x.shape) << '\n'
    << "b_obs_x = " << fmt(s.precision_obs_x.rate) << '\n'
    << "mu_d = " << list(s.mu_d.empty() ? std::vector<double>{0.0} : s.mu_d) << '\n'
    << "kappa_d = " << fmt(s.kappa_d) << '\n'
    << "mu_lambda = " << list({s.mu_lambda.begin(), s.mu_lambda.end()}) << '\n'
    << "sigma2_lambda = " << list({s.sigma2_lambda.begin(), s.sigma2_lambda.end()}) << '\n'
    << "max_draws = " << c.max_draws << '\n'
    << "cutoff = " << fmt(c.cutoff) << '\n'
    << "rhat_max = " << fmt(c.rhat_max) << '\n';
  return o.str();
}

std::string text_checksum(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const RunConfig& config, const std::vector<ManifestOutput>& outputs) {
  nlohmann::ordered_json j;
  const std::string text = canonical_config(config);
  j["command"] = command;
  j["config_hash"] = text_checksum(text);
  j["seed"] = config.mcmc.seed;
  j["versions"] = {{"exdf", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__},
                   {"cxx_standard", __cplusplus}};
  j["config"] = text;
  nlohmann::ordered_json outs = nlohmann::ordered_json::array();
  for (const auto& o : outputs)
    outs.push_back({{"path", o.path.string()}, {"checksum", o.checksum}});
  j["outputs"] = outs;
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

RunConfig load_manifest_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open manifest " + path.string());
  try {
    auto j = nlohmann::json::parse(in);
    return parse_config(j.at("config").get<std::string>(),
                        std::filesystem::absolute(path).parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed manifest " + path.string() + ": " + e.what());
  }
}

} // namespace exdf
