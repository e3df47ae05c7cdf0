#pragma once

#include "parkzone/ingest.hpp"

namespace parkzone {

inline constexpr double kEarthRadiusMeters = 6'371'000.0;

/// Great-circle distance on the mean-radius sphere.
double haversine_meters(const LatLon& a, const LatLon& b);

/// Plain Euclidean distance in degree space, as used by the spatial weights.
double degree_distance(const LatLon& a, const LatLon& b);

}  // namespace parkzone
