#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geotopic/common.hpp"

namespace geotopic {

inline constexpr double kEarthRadiusKm = 6371.0;

struct LatLon {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
};

struct Region {
  std::string id;
  LatLon centroid;
  std::uint64_t population = 0;
};

/// Great-circle distance on a sphere of radius 6371 km.
double haversine_km(LatLon a, LatLon b);

/// Set of regions keyed by unique id, iterated in id order.
class RegionRegistry {
 public:
  RegionRegistry() = default;
  /// Validates coordinates and id uniqueness; throws DataError.
  explicit RegionRegistry(std::vector<Region> regions);

  /// CSV with header `region_id,lat,lon,population`.
  static RegionRegistry load_csv(const std::filesystem::path& path);
  void write_csv(const std::filesystem::path& path) const;

  bool contains(std::string_view id) const;
  /// Throws LookupError for unknown ids.
  const Region& at(std::string_view id) const;
  const std::vector<Region>& regions() const { return regions_; }
  std::size_t size() const { return regions_.size(); }

 private:
  std::vector<Region> regions_;  // sorted by id
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// All regions r != center with haversine(center, r) <= radius_km.
std::set<std::string> neighbors_within(const RegionRegistry& registry, std::string_view center,
                                       double radius_km);

/// Radius neighbourhoods over a registry: symmetric, no self-loops.
class AdjacencyGraph {
 public:
  AdjacencyGraph() = default;
  AdjacencyGraph(double radius_km, std::map<std::string, std::vector<std::string>> neighbors);

  double radius_km() const { return radius_km_; }
  /// Sorted neighbour ids; LookupError for regions not in the graph.
  const std::vector<std::string>& neighbors(std::string_view id) const;
  bool contains(std::string_view id) const;
  std::size_t node_count() const { return neighbors_.size(); }
  std::size_t edge_count() const;
  const std::map<std::string, std::vector<std::string>, std::less<>>& nodes() const {
    return neighbors_;
  }

  /// Debug export: `region_id,neighbor_id,distance_km`, one line per
  /// directed edge.
  void write_csv(const std::filesystem::path& path, const RegionRegistry& registry) const;

  friend bool operator==(const AdjacencyGraph&, const AdjacencyGraph&) = default;

 private:
  double radius_km_ = 0.0;
  std::map<std::string, std::vector<std::string>, std::less<>> neighbors_;
};

/// Brute-force O(n^2) construction. radius_km must be positive.
AdjacencyGraph build_adjacency(const RegionRegistry& registry, double radius_km);

/// Same result as build_adjacency, using a latitude-band bucket index to
/// skip far-apart pairs.
AdjacencyGraph build_adjacency_bucketed(const RegionRegistry& registry, double radius_km);

}  // namespace geotopic
