#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "exdf/data.hpp"
#include "exdf/error.hpp"
#include "exdf/rng.hpp"

using namespace exdf;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("exdf_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

GridSeries make_cell(std::int64_t id, Location loc, int first, std::vector<double> censored) {
  GridSeries g;
  g.cell_id = id;
  g.centroid = loc;
  for (std::size_t k = 0; k < censored.size(); ++k) {
    g.timestamps.push_back(first + static_cast<int>(k));
    g.values.push_back(censored[k]);
  }
  apply_threshold(g, 0.0);
  return g;
}

} // namespace

TEST_CASE("censoring") {
  std::vector<double> y{5.0, 12.0, 7.0};
  auto z = censor(y, 10.0);
  CHECK(z == std::vector<double>{0.0, 2.0, 0.0});
  std::vector<double> m{NAN, 11.0, 10.0};
  auto zm = censor(m, 10.0);
  CHECK(std::isnan(zm[0]));
  CHECK(zm[1] == 1.0);
  CHECK(zm[2] == 0.0);
}

TEST_CASE("threshold needs 20 values") {
  std::vector<double> v(19, 1.0);
  CHECK_THROWS_AS(compute_threshold(v, 0.8), InputError);
  v.push_back(2.0);
  CHECK(compute_threshold(v, 0.8) == 1.0);
}

TEST_CASE("indicator matrix uses calendar lags") {
  auto g = make_cell(1, {0, 0}, 100, {0.0, 3.0, 0.0, 1.0});
  std::vector<int> ts{100, 101, 102, 103};
  Eigen::MatrixXd W = build_indicator_matrix(ts, g);
  Eigen::MatrixXd expected(4, 4);
  expected << 1, 0, 0, 1, //
      1, 0, 1, 0,         //
      1, 1, 0, 1,         //
      1, 0, 1, 0;
  CHECK(W == expected);

  std::vector<int> gap{101, 103};
  Eigen::MatrixXd Wg = build_indicator_matrix(gap, g);
  CHECK(Wg.row(0) == expected.row(1));
  CHECK(Wg.row(1) == expected.row(3));

  std::vector<int> outside{104};
  CHECK_THROWS_AS(build_indicator_matrix(outside, g), InputError);
}

TEST_CASE("nearest centroid breaks ties by smallest id") {
  std::vector<GridSeries> cells{make_cell(7, {1, 0}, 0, {0}), make_cell(3, {-1, 0}, 0, {0}),
                                make_cell(5, {0, 3}, 0, {0})};
  CHECK(nearest_centroid({0, 0}, cells) == 3);
  CHECK(nearest_centroid({0.1, 0}, cells) == 7);
  CHECK(nearest_centroid({0, 2.5}, cells) == 5);
  CHECK(nearest_centroid_index({0, 0}, cells) == 1);
}

TEST_CASE("mean residual life") {
  Rng rng = make_rng(3);
  std::vector<double> expo, unif;
  for (int k = 0; k < 200000; ++k) {
    expo.push_back(-2.0 * std::log(1.0 - uniform01(rng)));
    unif.push_back(uniform01(rng));
  }
  std::vector<double> u{0.0, 1.0, 3.0};
  auto rows = mean_residual_life(expo, u);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.mean_excess == doctest::Approx(2.0).epsilon(0.03));
    CHECK(r.lower < r.mean_excess);
    CHECK(r.upper > r.mean_excess);
  }
  std::vector<double> half{0.5, 2.0};
  auto ur = mean_residual_life(unif, half);
  REQUIRE(ur.size() == 1); // no exceedances above 2
  CHECK(ur[0].mean_excess == doctest::Approx(0.25).epsilon(0.01));
  CHECK(ur[0].count == doctest::Approx(100000).epsilon(0.02));

  auto grid = mrl_grid(unif, 5, 0.5, 0.9);
  REQUIRE(grid.size() == 5);
  CHECK(grid.front() == doctest::Approx(0.5).epsilon(0.01));
  CHECK(grid.back() == doctest::Approx(0.9).epsilon(0.01));
}

TEST_CASE("iso dates") {
  CHECK(parse_iso_date("1970-01-01") == 0);
  CHECK(parse_iso_date("2019-01-01") == 17897);
  CHECK(format_iso_date(17897 + 59) == "2019-03-01");
  CHECK(parse_iso_date(format_iso_date(20000)) == 20000);
  CHECK_THROWS_AS(parse_iso_date("2019-13-01"), InputError);
}

TEST_CASE("load dataset, coverage filter and collocation") {
  auto dir = scratch_dir("load");
  {
    std::ofstream s(dir / "stations.csv");
    s << "id,easting_km,northing_km\nA,0.1,0.1\nB,1.9,0.1\n";
    s << "id,date,value\n";
    for (int k = 0; k < 50; ++k) {
      s << "A," << format_iso_date(17897 + k) << "," << (k % 2 ? "" : std::to_string(k)) << "\n";
      s << "B," << format_iso_date(17897 + k) << "," << k << "\n";
    }
    std::ofstream g(dir / "grid.csv");
    g << "cell_id,easting_km,northing_km,date,value\n";
    for (int c = 1; c <= 2; ++c)
      for (int k = 0; k < 50; ++k)
        g << c << "," << (c == 1 ? 0.0 : 2.0) << ",0," << format_iso_date(17897 + k) << ","
          << k * c << "\n";
  }
  auto data = load_dataset(dir / "stations.csv", dir / "grid.csv", {0.75, 0.8});
  CHECK(data.first_day == 17897);
  CHECK(data.last_day == 17897 + 49);
  REQUIRE(data.stations.size() == 1);
  CHECK(data.stations[0].id == "B");
  CHECK(data.dropped_stations == std::vector<std::string>{"A"});

  auto loose = load_dataset(dir / "stations.csv", dir / "grid.csv", {0.5, 0.8});
  REQUIRE(loose.stations.size() == 2);
  CHECK(std::isnan(loose.stations[0].values[1]));

  apply_quantile_thresholds(loose, 0.8);
  auto pairs = collocate(loose.stations, loose.grid);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].grid.cell_id == 1);
  CHECK(pairs[1].grid.cell_id == 2);
  CHECK(pairs[1].W.rows() == 50);
  CHECK(pairs[1].W.col(0).sum() == 50);
}

TEST_CASE("malformed input is rejected") {
  auto dir = scratch_dir("bad");
  {
    std::ofstream s(dir / "stations.csv");
    s << "id,easting_km,northing_km\nA,0,0\nid,date,value\nZ,2019-01-01,3\n";
    std::ofstream g(dir / "grid.csv");
    g << "cell_id,easting_km,northing_km,date,value\n1,0,0,2019-01-01,\n";
  }
  CHECK_THROWS_AS(load_dataset(dir / "stations.csv", dir / "grid.csv", {}), InputError);
  CHECK_THROWS_AS(load_dataset(dir / "missing.csv", dir / "grid.csv", {}), InputError);
}
