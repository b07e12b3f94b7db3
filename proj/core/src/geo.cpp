#include "geotopic/geo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <unordered_map>

#include "geotopic/common.hpp"

namespace geotopic {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

double haversine_km(LatLon a, LatLon b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

// ------------------------------------------------------------ registry

RegionRegistry::RegionRegistry(std::vector<Region> regions) : regions_(std::move(regions)) {
  std::sort(regions_.begin(), regions_.end(),
            [](const Region& a, const Region& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    const auto& r = regions_[i];
    if (r.id.empty()) throw DataError("region with empty id");
    if (!(r.centroid.lat >= -90.0 && r.centroid.lat <= 90.0) ||
        !(r.centroid.lon >= -180.0 && r.centroid.lon <= 180.0))
      throw DataError("region " + r.id + ": centroid out of range");
    if (!index_.emplace(r.id, i).second) throw DataError("duplicate region id " + r.id);
  }
}

RegionRegistry RegionRegistry::load_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t ci = table.column("region_id"), clat = table.column("lat"),
                    clon = table.column("lon"), cpop = table.column("population");
  std::vector<Region> regions;
  regions.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Region r;
    r.id = trim(row[ci]);
    r.centroid = {parse_double(row[clat], "lat"), parse_double(row[clon], "lon")};
    const long long pop = parse_int(row[cpop], "population");
    if (pop < 0) throw DataError("region " + r.id + ": negative population");
    r.population = static_cast<std::uint64_t>(pop);
    regions.push_back(std::move(r));
  }
  return RegionRegistry(std::move(regions));
}

void RegionRegistry::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "region_id,lat,lon,population\n";
  for (const auto& r : regions_)
    out << csv_escape(r.id) << ',' << format_exact(r.centroid.lat) << ','
        << format_exact(r.centroid.lon) << ',' << r.population << '\n';
}

bool RegionRegistry::contains(std::string_view id) const { return index_.find(id) != index_.end(); }

const Region& RegionRegistry::at(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw LookupError("unknown region id '" + std::string(id) + "'");
  return regions_[it->second];
}

std::set<std::string> neighbors_within(const RegionRegistry& registry, std::string_view center,
                                       double radius_km) {
  if (radius_km < 0.0) throw ConfigError("radius_km must be non-negative");
  const Region& c = registry.at(center);
  std::set<std::string> out;
  if (radius_km == 0.0) return out;
  for (const auto& r : registry.regions()) {
    if (r.id == c.id) continue;
    if (haversine_km(c.centroid, r.centroid) <= radius_km) out.insert(r.id);
  }
  return out;
}

// ------------------------------------------------------------ adjacency

AdjacencyGraph::AdjacencyGraph(double radius_km,
                               std::map<std::string, std::vector<std::string>> neighbors)
    : radius_km_(radius_km) {
  for (auto& [id, list] : neighbors) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    neighbors_.emplace(id, std::move(list));
  }
}

const std::vector<std::string>& AdjacencyGraph::neighbors(std::string_view id) const {
  auto it = neighbors_.find(id);
  if (it == neighbors_.end()) throw LookupError("region '" + std::string(id) + "' not in adjacency graph");
  return it->second;
}

bool AdjacencyGraph::contains(std::string_view id) const { return neighbors_.find(id) != neighbors_.end(); }

std::size_t AdjacencyGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& [_, list] : neighbors_) n += list.size();
  return n / 2;
}

void AdjacencyGraph::write_csv(const std::filesystem::path& path, const RegionRegistry& registry) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "region_id,neighbor_id,distance_km\n";
  for (const auto& [id, list] : neighbors_) {
    const auto& a = registry.at(id);
    for (const auto& n : list)
      out << csv_escape(id) << ',' << csv_escape(n) << ','
          << format_fixed(haversine_km(a.centroid, registry.at(n).centroid), 6) << '\n';
  }
}

AdjacencyGraph build_adjacency(const RegionRegistry& registry, double radius_km) {
  if (!(radius_km > 0.0)) throw ConfigError("radius_km must be positive");
  const auto& regions = registry.regions();
  std::map<std::string, std::vector<std::string>> neighbors;
  for (const auto& r : regions) neighbors[r.id];
  for (std::size_t i = 0; i < regions.size(); ++i) {
    for (std::size_t j = i + 1; j < regions.size(); ++j) {
      if (haversine_km(regions[i].centroid, regions[j].centroid) <= radius_km) {
        neighbors[regions[i].id].push_back(regions[j].id);
        neighbors[regions[j].id].push_back(regions[i].id);
      }
    }
  }
  return AdjacencyGraph(radius_km, std::move(neighbors));
}

AdjacencyGraph build_adjacency_bucketed(const RegionRegistry& registry, double radius_km) {
  if (!(radius_km > 0.0)) throw ConfigError("radius_km must be positive");
  // Great-circle distance is at least R * |dlat|, so points within the
  // radius always fall into the same or an adjacent latitude band.
  const double band_deg = radius_km / (kEarthRadiusKm * kDegToRad) * (1.0 + 1e-9);
  const auto& regions = registry.regions();
  std::unordered_map<long long, std::vector<std::size_t>> bands;
  std::vector<long long> band_of(regions.size());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    band_of[i] = static_cast<long long>(std::floor((regions[i].centroid.lat + 90.0) / band_deg));
    bands[band_of[i]].push_back(i);
  }
  std::map<std::string, std::vector<std::string>> neighbors;
  for (const auto& r : regions) neighbors[r.id];
  for (std::size_t i = 0; i < regions.size(); ++i) {
    for (long long b = band_of[i] - 1; b <= band_of[i] + 1; ++b) {
      auto it = bands.find(b);
      if (it == bands.end()) continue;
      for (std::size_t j : it->second) {
        if (j <= i) continue;
        if (haversine_km(regions[i].centroid, regions[j].centroid) <= radius_km) {
          neighbors[regions[i].id].push_back(regions[j].id);
          neighbors[regions[j].id].push_back(regions[i].id);
        }
      }
    }
  }
  return AdjacencyGraph(radius_km, std::move(neighbors));
}

}  // namespace geotopic
