#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "exdf/config.hpp"
#include "exdf/error.hpp"
#include "exdf/simulate.hpp"

using namespace exdf;
namespace fs = std::filesystem;

TEST_CASE("config parsing") {
  auto c = parse_config(R"(
# comment
[data]
station_file = "s.csv"   # trailing comment
grid_file = "/abs/g.csv"
quantile = 0.9
[model]
model = "gaussian"
m = 12
mu_d = [1.5]
mu_lambda = [-1, 0.5, 0.5, 0.5]
n_iter = 2000
burn_in = 500
thin = 5
n_chains = 3
seed = 99
prefit_decay = true
)",
                        "/base");
  CHECK(c.station_file == fs::path("/base/s.csv"));
  CHECK(c.grid_file == fs::path("/abs/g.csv"));
  CHECK(c.quantile == 0.9);
  CHECK(c.model == ModelKind::gaussian);
  CHECK(c.spec.m == 12);
  CHECK(c.spec.mu_d == std::vector<double>{1.5});
  CHECK(c.spec.mu_lambda[0] == -1.0);
  CHECK(c.mcmc.n_chains == 3);
  CHECK(c.mcmc.seed == 99);
  CHECK(c.mcmc.draws_per_chain() == 300);
  CHECK(c.prefit_decay);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("bogus = 1\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config("m = 10\nm = 12\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config("m = ten\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config("m = 2\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config("quantile = 1.5\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config("n_iter = 100\nburn_in = 200\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config("b_y = 0\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config("just text\n", "/"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.toml"), ConfigError);
}

TEST_CASE("canonical config and manifest round trip") {
  auto c = parse_config("station_file = \"a.csv\"\ngrid_file = \"b.csv\"\nm = 8\nphi_beta = 0.7\n"
                        "sigma2_lambda = [1, 2, 3, 4]\n",
                        "/data");
  auto text = canonical_config(c);
  auto again = parse_config(text, "/elsewhere");
  CHECK(canonical_config(again) == text);
  CHECK(again.station_file == fs::path("/data/a.csv"));
  CHECK(again.spec.phi_beta == 0.7);
  CHECK(again.spec.sigma2_lambda[3] == 4.0);

  auto dir = fs::temp_directory_path() / "exdf_test_manifest";
  fs::create_directories(dir);
  auto path = dir / "out.manifest.json";
  write_manifest(path, "exdf fit", c, {{dir / "out.bin", "0123456789abcdef"}});
  auto loaded = load_manifest_config(path);
  CHECK(canonical_config(loaded) == text);
  std::ifstream in(path);
  auto j = nlohmann::json::parse(in);
  CHECK(j["command"] == "exdf fit");
  CHECK(j["config_hash"] == text_checksum(text));
  CHECK(j["seed"] == 1);
  CHECK(j.contains("versions"));
  CHECK(text_checksum("a") != text_checksum("b"));
  CHECK(text_checksum("").size() == 16);
}

TEST_CASE("simulation is deterministic per seed") {
  SyntheticScenario sc;
  sc.n_days = 60;
  sc.seed = 5;
  auto a = simulate(sc);
  auto b = simulate(sc);
  CHECK(a.data.stations.size() == 6);
  CHECK(a.data.grid.size() == 16);
  CHECK(a.data.stations[3].values == b.data.stations[3].values);
  CHECK(a.data.grid[7].values == b.data.grid[7].values);
  CHECK(a.truth.c == b.truth.c);
  sc.seed = 6;
  auto c = simulate(sc);
  CHECK(c.truth.c != a.truth.c);
  for (double xi : {a.truth.xi_y, a.truth.xi_x}) {
    CHECK(xi > -0.5);
    CHECK(xi < 0.5);
  }

  sc.xi_y = 0.2;
  sc.missing_fraction = 0.1;
  auto d = simulate(sc);
  CHECK(d.truth.xi_y == 0.2);
  std::size_t missing = 0, total = 0;
  for (const auto& s : d.data.stations)
    for (double v : s.values) {
      missing += std::isnan(v);
      ++total;
    }
  CHECK(missing > 0);
  CHECK(missing < total / 4);

  auto dir = fs::temp_directory_path() / "exdf_test_sim";
  fs::remove_all(dir);
  auto files = write_simulation(d, sc, dir);
  CHECK(fs::exists(files.stations));
  CHECK(fs::exists(files.grid));
  auto data = load_dataset(files.stations, files.grid, {0.0, 0.8});
  CHECK(data.stations.size() == 6);
  auto table = load_thresholds(files.thresholds);
  CHECK(table.station.size() == 6);
  CHECK(table.cell.size() == 16);
}
