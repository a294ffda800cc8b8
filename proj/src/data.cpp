#include "exdf/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "exdf/error.hpp"
#include "exdf/numeric.hpp"

namespace exdf {

namespace {

constexpr double kEarthRadiusKm = 6371.0088;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ','))
    out.push_back(trim(field));
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

std::string where(const std::filesystem::path& file, std::size_t line) {
  return file.string() + ":" + std::to_string(line) + ": ";
}

double parse_double(const std::string& s, const std::filesystem::path& file, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw InputError(where(file, line) + "malformed number '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s, const std::filesystem::path& file, std::size_t line) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InputError(where(file, line) + "malformed integer '" + s + "'");
  return v;
}

enum class Coordinates { projected_km, lon_lat };

Coordinates coordinate_kind(const std::string& a, const std::string& b,
                            const std::filesystem::path& file) {
  if (a == "easting_km" && b == "northing_km")
    return Coordinates::projected_km;
  if (a == "lon" && b == "lat")
    return Coordinates::lon_lat;
  throw InputError(where(file, 1) + "expected easting_km,northing_km or lon,lat columns");
}

struct RawStation {
  std::string id;
  Location location;
  std::map<int, double> values;
};

struct RawCell {
  std::int64_t id = 0;
  Location location;
  std::map<int, double> values;
};

} // namespace

double distance_km(const Location& a, const Location& b) {
  return std::hypot(a.easting_km - b.easting_km, a.northing_km - b.northing_km);
}

std::size_t StationSeries::present_count() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](double v) { return !is_missing(v); }));
}

std::ptrdiff_t GridSeries::index_of(int t) const {
  auto it = std::lower_bound(timestamps.begin(), timestamps.end(), t);
  if (it == timestamps.end() || *it != t)
    return -1;
  return it - timestamps.begin();
}

int parse_iso_date(const std::string& text) {
  using namespace std::chrono;
  int y = 0;
  unsigned mo = 0, d = 0;
  char dash1 = 0, dash2 = 0;
  std::istringstream in(text);
  in >> y >> dash1 >> mo >> dash2 >> d;
  if (!in || dash1 != '-' || dash2 != '-' || in.peek() != std::char_traits<char>::eof())
    throw InputError("malformed ISO date '" + text + "'");
  year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok())
    throw InputError("invalid calendar date '" + text + "'");
  return static_cast<int>(sys_days(ymd).time_since_epoch().count());
}

std::string format_iso_date(int day_index) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{day_index}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Dataset load_dataset(const std::filesystem::path& station_file,
                     const std::filesystem::path& grid_file, const DataConfig& config) {
  if (!(config.coverage_min >= 0.0 && config.coverage_min <= 1.0))
    throw ConfigError("coverage_min must lie in [0, 1]");

  // Stations: metadata block, then long-format observations.
  std::ifstream sin(station_file);
  if (!sin)
    throw InputError("cannot open station file " + station_file.string());
  std::vector<RawStation> stations;
  std::map<std::string, std::size_t> station_index;
  Coordinates station_coords = Coordinates::projected_km;
  std::string line;
  std::size_t lineno = 0;
  bool in_metadata = true;
  bool saw_header = false;
  while (std::getline(sin, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    auto f = split_csv(line);
    if (!saw_header) {
      if (f.size() != 3 || f[0] != "id")
        throw InputError(where(station_file, lineno) + "expected station metadata header");
      station_coords = coordinate_kind(f[1], f[2], station_file);
      saw_header = true;
      continue;
    }
    if (in_metadata && f.size() == 3 && f[0] == "id" && f[1] == "date" && f[2] == "value") {
      in_metadata = false;
      continue;
    }
    if (f.size() != 3)
      throw InputError(where(station_file, lineno) + "expected 3 fields, found " +
                       std::to_string(f.size()));
    if (in_metadata) {
      if (f[0].empty() || station_index.count(f[0]))
        throw InputError(where(station_file, lineno) + "empty or duplicate station id '" +
                         f[0] + "'");
      station_index[f[0]] = stations.size();
      stations.push_back({f[0],
                          {parse_double(f[1], station_file, lineno),
                           parse_double(f[2], station_file, lineno)},
                          {}});
      continue;
    }
    auto it = station_index.find(f[0]);
    if (it == station_index.end())
      throw InputError(where(station_file, lineno) + "unknown station id '" + f[0] + "'");
    int day = 0;
    try {
      day = parse_iso_date(f[1]);
    } catch (const InputError& e) {
      throw InputError(where(station_file, lineno) + e.what());
    }
    double value = f[2].empty() ? kNaN : parse_double(f[2], station_file, lineno);
    auto& vals = stations[it->second].values;
    if (!vals.emplace(day, value).second)
      throw InputError(where(station_file, lineno) + "duplicate observation for station '" +
                       f[0] + "' on " + f[1]);
  }
  if (!saw_header)
    throw InputError(station_file.string() + ": empty station file");
  if (in_metadata)
    throw InputError(station_file.string() + ": missing 'id,date,value' observation block");

  // Grid: dense long format.
  std::ifstream gin(grid_file);
  if (!gin)
    throw InputError("cannot open grid file " + grid_file.string());
  std::vector<RawCell> cells;
  std::map<std::int64_t, std::size_t> cell_index;
  Coordinates grid_coords = Coordinates::projected_km;
  lineno = 0;
  saw_header = false;
  while (std::getline(gin, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    auto f = split_csv(line);
    if (!saw_header) {
      if (f.size() != 5 || f[0] != "cell_id" || f[3] != "date" || f[4] != "value")
        throw InputError(where(grid_file, lineno) +
                         "expected header cell_id,easting_km,northing_km,date,value");
      grid_coords = coordinate_kind(f[1], f[2], grid_file);
      saw_header = true;
      continue;
    }
    if (f.size() != 5)
      throw InputError(where(grid_file, lineno) + "expected 5 fields, found " +
                       std::to_string(f.size()));
    std::int64_t id = parse_int(f[0], grid_file, lineno);
    Location loc{parse_double(f[1], grid_file, lineno), parse_double(f[2], grid_file, lineno)};
    if (f[4].empty())
      throw InputError(where(grid_file, lineno) + "missing grid value (grid must be dense)");
    double value = parse_double(f[4], grid_file, lineno);
    int day = 0;
    try {
      day = parse_iso_date(f[3]);
    } catch (const InputError& e) {
      throw InputError(where(grid_file, lineno) + e.what());
    }
    auto [it, inserted] = cell_index.emplace(id, cells.size());
    if (inserted)
      cells.push_back({id, loc, {}});
    else if (cells[it->second].location.easting_km != loc.easting_km ||
             cells[it->second].location.northing_km != loc.northing_km)
      throw InputError(where(grid_file, lineno) + "inconsistent centroid for cell " + f[0]);
    if (!cells[it->second].values.emplace(day, value).second)
      throw InputError(where(grid_file, lineno) + "duplicate value for cell " + f[0] + " on " +
                       f[3]);
  }
  if (cells.empty())
    throw InputError(grid_file.string() + ": grid file contains no cells");
  if (station_coords != grid_coords)
    throw InputError("station and grid files use different coordinate systems");

  if (station_coords == Coordinates::lon_lat) {
    double lat_sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : stations) {
      lat_sum += s.location.northing_km;
      ++count;
    }
    for (const auto& c : cells) {
      lat_sum += c.location.northing_km;
      ++count;
    }
    double lat0 = lat_sum / static_cast<double>(count) * std::numbers::pi / 180.0;
    auto project = [&](Location& l) {
      double lon = l.easting_km * std::numbers::pi / 180.0;
      double lat = l.northing_km * std::numbers::pi / 180.0;
      l = {kEarthRadiusKm * lon * std::cos(lat0), kEarthRadiusKm * lat};
    };
    for (auto& s : stations)
      project(s.location);
    for (auto& c : cells)
      project(c.location);
  }

  Dataset out;
  out.first_day = std::numeric_limits<int>::max();
  out.last_day = std::numeric_limits<int>::min();
  for (auto& c : cells) {
    GridSeries g;
    g.cell_id = c.id;
    g.centroid = c.location;
    for (auto [day, v] : c.values) {
      g.timestamps.push_back(day);
      g.values.push_back(v);
    }
    out.first_day = std::min(out.first_day, g.timestamps.front());
    out.last_day = std::max(out.last_day, g.timestamps.back());
    out.grid.push_back(std::move(g));
  }
  std::sort(out.grid.begin(), out.grid.end(),
            [](const GridSeries& a, const GridSeries& b) { return a.cell_id < b.cell_id; });

  const double period = static_cast<double>(out.last_day - out.first_day + 1);
  for (auto& r : stations) {
    StationSeries s;
    s.id = r.id;
    s.location = r.location;
    std::size_t observed = 0;
    for (auto [day, v] : r.values) {
      s.timestamps.push_back(day);
      s.values.push_back(v);
      if (!is_missing(v) && day >= out.first_day && day <= out.last_day)
        ++observed;
    }
    if (static_cast<double>(observed) / period < config.coverage_min) {
      out.dropped_stations.push_back(s.id);
      continue;
    }
    out.stations.push_back(std::move(s));
  }
  return out;
}

ThresholdTable load_thresholds(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in)
    throw InputError("cannot open threshold file " + file.string());
  ThresholdTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    auto f = split_csv(line);
    if (lineno == 1 && f.size() == 3 && f[0] == "kind")
      continue;
    if (f.size() != 3)
      throw InputError(where(file, lineno) + "expected kind,id,threshold");
    double u = parse_double(f[2], file, lineno);
    if (f[0] == "station")
      table.station.emplace_back(f[1], u);
    else if (f[0] == "cell")
      table.cell.emplace_back(parse_int(f[1], file, lineno), u);
    else
      throw InputError(where(file, lineno) + "unknown kind '" + f[0] + "'");
  }
  return table;
}

double compute_threshold(std::span<const double> values, double q, const std::string& site) {
  if (!(q > 0.0 && q < 1.0))
    throw ConfigError("threshold quantile must lie in (0, 1)");
  std::vector<double> present;
  for (double v : values)
    if (!is_missing(v))
      present.push_back(v);
  if (present.size() < 20)
    throw InputError("site '" + site + "' has " + std::to_string(present.size()) +
                     " observed values; at least 20 are needed for a threshold");
  std::sort(present.begin(), present.end());
  return quantile_sorted(present, q);
}

std::vector<double> censor(std::span<const double> values, double threshold) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double v = values[i];
    out[i] = is_missing(v) ? v : (v > threshold ? v - threshold : 0.0);
  }
  return out;
}

void apply_threshold(StationSeries& s, double threshold) {
  if (!std::isfinite(threshold))
    throw InputError("non-finite threshold for station '" + s.id + "'");
  s.threshold = threshold;
  s.censored = censor(s.values, threshold);
}

void apply_threshold(GridSeries& g, double threshold) {
  if (!std::isfinite(threshold))
    throw InputError("non-finite threshold for cell " + std::to_string(g.cell_id));
  g.threshold = threshold;
  g.censored = censor(g.values, threshold);
  g.exceed_indicator.resize(g.censored.size());
  for (std::size_t k = 0; k < g.censored.size(); ++k)
    g.exceed_indicator[k] = g.censored[k] > 0.0 ? 1 : 0;
}

void apply_quantile_thresholds(Dataset& data, double q) {
  for (auto& s : data.stations)
    apply_threshold(s, compute_threshold(s.values, q, s.id));
  for (auto& g : data.grid)
    apply_threshold(g, compute_threshold(g.values, q, "cell " + std::to_string(g.cell_id)));
}

void apply_fixed_thresholds(Dataset& data, const ThresholdTable& table) {
  for (auto& s : data.stations) {
    auto it = std::find_if(table.station.begin(), table.station.end(),
                           [&](const auto& e) { return e.first == s.id; });
    if (it == table.station.end())
      throw InputError("no threshold given for station '" + s.id + "'");
    apply_threshold(s, it->second);
  }
  for (auto& g : data.grid) {
    auto it = std::find_if(table.cell.begin(), table.cell.end(),
                           [&](const auto& e) { return e.first == g.cell_id; });
    if (it == table.cell.end())
      throw InputError("no threshold given for cell " + std::to_string(g.cell_id));
    apply_threshold(g, it->second);
  }
}

std::vector<MrlRow> mean_residual_life(std::span<const double> values,
                                       std::span<const double> thresholds) {
  std::vector<double> present;
  for (double v : values)
    if (!is_missing(v))
      present.push_back(v);
  if (present.size() < 20)
    throw InputError("mean residual life needs at least 20 observed values");
  std::vector<MrlRow> rows;
  std::vector<double> excess;
  for (double u : thresholds) {
    excess.clear();
    for (double v : present)
      if (v > u)
        excess.push_back(v - u);
    if (excess.empty())
      continue;
    MrlRow row;
    row.threshold = u;
    row.count = excess.size();
    row.mean_excess = mean(excess);
    double half = 0.0;
    if (excess.size() > 1)
      half = 1.959963984540054 * std::sqrt(sample_variance(excess) /
                                           static_cast<double>(excess.size()));
    row.lower = row.mean_excess - half;
    row.upper = row.mean_excess + half;
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> mrl_grid(std::span<const double> values, int n, double q_lo, double q_hi) {
  if (n < 1)
    throw ConfigError("mrl grid needs at least one point");
  double lo = quantile(values, q_lo);
  double hi = quantile(values, q_hi);
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    grid[static_cast<std::size_t>(k)] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
  return grid;
}

std::size_t nearest_centroid_index(const Location& loc, std::span<const GridSeries> cells) {
  if (cells.empty())
    throw InputError("nearest_centroid: no grid cells");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < cells.size(); ++k) {
    double d = distance_km(loc, cells[k].centroid);
    if (d < best_d || (d == best_d && cells[k].cell_id < cells[best].cell_id)) {
      best = k;
      best_d = d;
    }
  }
  return best;
}

std::int64_t nearest_centroid(const Location& loc, std::span<const GridSeries> cells) {
  return cells[nearest_centroid_index(loc, cells)].cell_id;
}

Eigen::MatrixXd build_indicator_matrix(std::span<const int> timestamps, const GridSeries& grid) {
  if (grid.exceed_indicator.size() != grid.timestamps.size())
    throw InputError("grid cell " + std::to_string(grid.cell_id) + " has no threshold applied");
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(timestamps.size()), 4);
  auto indicator = [&](int t) -> double {
    auto k = grid.index_of(t);
    return k < 0 ? 0.0 : static_cast<double>(grid.exceed_indicator[static_cast<std::size_t>(k)]);
  };
  for (std::size_t j = 0; j < timestamps.size(); ++j) {
    int t = timestamps[j];
    if (grid.index_of(t) < 0)
      throw InputError("no grid value for cell " + std::to_string(grid.cell_id) + " on " +
                       format_iso_date(t));
    auto r = static_cast<Eigen::Index>(j);
    W(r, 0) = 1.0;
    W(r, 1) = indicator(t - 1);
    W(r, 2) = indicator(t);
    W(r, 3) = indicator(t + 1);
  }
  return W;
}

Eigen::MatrixXd build_W(const CollocatedPair& pair) {
  return build_indicator_matrix(pair.station.timestamps, pair.grid);
}

std::vector<CollocatedPair> collocate(std::span<const StationSeries> stations,
                                      std::span<const GridSeries> cells) {
  std::vector<CollocatedPair> pairs;
  pairs.reserve(stations.size());
  for (const auto& s : stations) {
    CollocatedPair p{s, cells[nearest_centroid_index(s.location, cells)], {}};
    p.W = build_W(p);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

} // namespace exdf
