#include "exdf/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "exdf/error.hpp"

namespace exdf {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'E', 'X', 'D', 'F', 'P', 'O', 'S', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T> void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T> T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in)
    throw InputError("truncated posterior archive");
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

json gamma_json(const GammaPrior& g) { return {{"shape", g.shape}, {"rate", g.rate}}; }
GammaPrior gamma_from(const json& j) { return {j.at("shape").get<double>(), j.at("rate").get<double>()}; }
json laplace_json(const LaplacePrior& p) { return {{"location", p.location}, {"scale", p.scale}}; }
LaplacePrior laplace_from(const json& j) {
  return {j.at("location").get<double>(), j.at("scale").get<double>()};
}

json spec_json(const ModelSpec& s) {
  return {{"m", s.m},
          {"phi_alpha", s.phi_alpha},
          {"phi_beta", s.phi_beta},
          {"shape_prior_y", laplace_json(s.shape_prior_y)},
          {"shape_prior_x", laplace_json(s.shape_prior_x)},
          {"precision_alpha", gamma_json(s.precision_alpha)},
          {"precision_beta", gamma_json(s.precision_beta)},
          {"precision_c", gamma_json(s.precision_c)},
          {"mu_d", s.mu_d},
          {"kappa_d", s.kappa_d},
          {"mu_lambda", s.mu_lambda},
          {"sigma2_lambda", s.sigma2_lambda},
          {"precision_obs_y", gamma_json(s.precision_obs_y)},
          {"precision_obs_x", gamma_json(s.precision_obs_x)}};
}

ModelSpec spec_from(const json& j) {
  ModelSpec s;
  s.m = j.at("m").get<int>();
  s.phi_alpha = j.at("phi_alpha").get<double>();
  s.phi_beta = j.at("phi_beta").get<double>();
  s.shape_prior_y = laplace_from(j.at("shape_prior_y"));
  s.shape_prior_x = laplace_from(j.at("shape_prior_x"));
  s.precision_alpha = gamma_from(j.at("precision_alpha"));
  s.precision_beta = gamma_from(j.at("precision_beta"));
  s.precision_c = gamma_from(j.at("precision_c"));
  s.mu_d = j.at("mu_d").get<std::vector<double>>();
  s.kappa_d = j.at("kappa_d").get<double>();
  s.mu_lambda = j.at("mu_lambda").get<std::array<double, 4>>();
  s.sigma2_lambda = j.at("sigma2_lambda").get<std::array<double, 4>>();
  s.precision_obs_y = gamma_from(j.at("precision_obs_y"));
  s.precision_obs_x = gamma_from(j.at("precision_obs_x"));
  return s;
}

} // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::exdf ? "exdf" : "gaussian"; }

ModelKind parse_model_kind(const std::string& text) {
  if (text == "exdf")
    return ModelKind::exdf;
  if (text == "gaussian")
    return ModelKind::gaussian;
  throw ConfigError("unknown model '" + text + "' (expected exdf or gaussian)");
}

void McmcSettings::validate() const {
  if (n_iter <= burn_in || burn_in < 0)
    throw ConfigError("n_iter must exceed burn_in");
  if (thin < 1)
    throw ConfigError("thin must be at least 1");
  if (n_chains < 1)
    throw ConfigError("n_chains must be at least 1");
  if (draws_per_chain() < 1)
    throw ConfigError("no draws retained: increase n_iter or decrease thin");
}

std::size_t PosteriorArchive::draws_per_chain() const {
  return chains.empty() ? 0 : static_cast<std::size_t>(chains.front().rows());
}

std::vector<double> PosteriorArchive::trace(std::size_t chain, std::size_t param) const {
  const auto& C = chains.at(chain);
  std::vector<double> out(static_cast<std::size_t>(C.rows()));
  for (Eigen::Index k = 0; k < C.rows(); ++k)
    out[static_cast<std::size_t>(k)] = C(k, static_cast<Eigen::Index>(param));
  return out;
}

std::vector<Eigen::VectorXd> PosteriorArchive::pooled_draws(std::size_t max_draws) const {
  std::size_t total = 0;
  for (const auto& C : chains)
    total += static_cast<std::size_t>(C.rows());
  std::size_t take = std::min(total, max_draws);
  std::vector<Eigen::VectorXd> out;
  out.reserve(take);
  for (std::size_t k = 0; k < take; ++k) {
    std::size_t g = take == total ? k : k * total / take;
    for (const auto& C : chains) {
      auto rows = static_cast<std::size_t>(C.rows());
      if (g < rows) {
        out.push_back(C.row(static_cast<Eigen::Index>(g)).transpose());
        break;
      }
      g -= rows;
    }
  }
  return out;
}

void write_archive(const PosteriorArchive& a, const std::filesystem::path& path) {
  json header;
  header["format"] = "exdf-posterior";
  header["model"] = to_string(a.model);
  header["spec"] = spec_json(a.spec);
  header["mcmc"] = {{"n_iter", a.settings.n_iter},
                    {"burn_in", a.settings.burn_in},
                    {"thin", a.settings.thin},
                    {"n_chains", a.settings.n_chains},
                    {"seed", a.settings.seed}};
  header["domain"] = {a.domain.t_min, a.domain.t_max};
  json sites = json::array();
  for (const auto& s : a.sites)
    sites.push_back({{"id", s.id},
                     {"easting_km", s.location.easting_km},
                     {"northing_km", s.location.northing_km},
                     {"cell_id", s.cell_id},
                     {"threshold_y", s.threshold_y},
                     {"threshold_x", s.threshold_x}});
  header["sites"] = sites;
  json groups = json::array();
  for (const auto& g : a.layout.groups)
    groups.push_back({{"name", g.name}, {"rows", g.rows}, {"cols", g.cols}});
  header["layout"] = groups;
  header["draws_per_chain"] = a.draws_per_chain();
  json blocks = json::array();
  for (const auto& chain : a.blocks) {
    json c = json::array();
    for (const auto& b : chain)
      c.push_back({{"name", b.name}, {"acceptance_rate", b.acceptance_rate},
                   {"step_scale", b.step_scale}});
    blocks.push_back(c);
  }
  header["acceptance"] = blocks;
  header["warnings"] = a.warnings;
  const std::string text = header.dump();

  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw InputError("cannot write " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& C : a.chains)
      for (Eigen::Index r = 0; r < C.rows(); ++r)
        for (Eigen::Index c = 0; c < C.cols(); ++c)
          put_le<double>(out, C(r, c));
    if (!out)
      throw InputError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

PosteriorArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open posterior archive " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw InputError(path.string() + " is not a posterior archive");
  if (get_le<std::uint32_t>(in) != kVersion)
    throw InputError("unsupported archive version in " + path.string());
  auto len = get_le<std::uint64_t>(in);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in)
    throw InputError("truncated archive header");

  PosteriorArchive a;
  try {
    json h = json::parse(text);
    a.model = parse_model_kind(h.at("model").get<std::string>());
    a.spec = spec_from(h.at("spec"));
    const auto& mc = h.at("mcmc");
    a.settings.n_iter = mc.at("n_iter").get<long>();
    a.settings.burn_in = mc.at("burn_in").get<long>();
    a.settings.thin = mc.at("thin").get<long>();
    a.settings.n_chains = mc.at("n_chains").get<int>();
    a.settings.seed = mc.at("seed").get<std::uint64_t>();
    a.domain = {h.at("domain").at(0).get<double>(), h.at("domain").at(1).get<double>()};
    for (const auto& s : h.at("sites"))
      a.sites.push_back({s.at("id").get<std::string>(),
                         {s.at("easting_km").get<double>(), s.at("northing_km").get<double>()},
                         s.at("cell_id").get<std::int64_t>(),
                         s.at("threshold_y").get<double>(),
                         s.at("threshold_x").get<double>()});
    const int n = a.n_sites();
    a.layout = a.model == ModelKind::exdf ? ParameterLayout::exdf(n, a.spec.m)
                                          : ParameterLayout::gaussian(n, a.spec.m);
    for (const auto& chain : h.at("acceptance")) {
      std::vector<BlockSummary> c;
      for (const auto& b : chain)
        c.push_back({b.at("name").get<std::string>(), b.at("acceptance_rate").get<double>(),
                     b.at("step_scale").get<double>()});
      a.blocks.push_back(std::move(c));
    }
    a.warnings = h.at("warnings").get<std::vector<std::string>>();
    auto draws = h.at("draws_per_chain").get<std::size_t>();
    const auto cols = static_cast<Eigen::Index>(a.layout.size());
    for (int c = 0; c < a.settings.n_chains; ++c) {
      Eigen::MatrixXd C(static_cast<Eigen::Index>(draws), cols);
      for (Eigen::Index r = 0; r < C.rows(); ++r)
        for (Eigen::Index k = 0; k < cols; ++k)
          C(r, k) = get_le<double>(in);
      a.chains.push_back(std::move(C));
    }
  } catch (const json::exception& e) {
    throw InputError("malformed archive header: " + std::string(e.what()));
  }
  return a;
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

} // namespace exdf
