#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "moveconv/core.hpp"

namespace moveconv {

// Everything needed to map scaled coordinates/times back to km and raw time.
struct ProjectionMeta {
  double center_lon = 0.0;  // degrees
  double center_lat = 0.0;
  double mean_x_km = 0.0;   // centering offsets in the projected plane
  double mean_y_km = 0.0;
  double scale_km = 1.0;    // pooled standard deviation divisor
  double time_origin = 0.0; // raw time units at scaled t = 0
  double time_span = 1.0;   // raw time units across [0, 1]
  double time_span_hours = 1.0;
  double earth_radius_km = 6371.0088;  // spherical mean radius
  bool geographic = true;   // input was lon/lat (false: already planar km)
};

struct TelemetryRecord {
  std::string id;
  double time = 0.0;  // raw seconds/numeric before scaling; in [0,1] after
  double x = 0.0;     // lon or km or scaled, by stage
  double y = 0.0;     // lat or km or scaled
};

// One individual's scaled observations: times in [0,1], positions dimensionless.
struct Track {
  VectorXd times;
  MatrixX2d pos;

  int n() const { return static_cast<int>(times.size()); }
};

struct TelemetrySet {
  std::vector<TelemetryRecord> records;  // sorted by (id, time)
  bool geographic = true;                // lon/lat until projected
  bool scaled = false;
  bool times_in_seconds = false;  // true when timestamps were ISO-8601
  std::optional<ProjectionMeta> meta;

  std::vector<std::string> ids() const;
  Track track(const std::string& id) const;
  std::vector<Track> all_tracks() const;
};

struct IngestReport {
  long accepted = 0;
  std::vector<std::pair<long, std::string>> rejected;  // (line number, reason)
  std::vector<std::string> warnings;
};

// Delimited text with header id,time,lon,lat (or id,time,x_km,y_km when
// km_units). Time is ISO-8601 (YYYY-MM-DD[T ]HH:MM:SS[Z], seconds optional)
// or plain numeric. Malformed and duplicate (id, time) rows are rejected
// with reasons; unsorted input is sorted with a warning; an empty or
// header-only file throws.
TelemetrySet ingest_csv(const std::string& path, bool km_units = false,
                        IngestReport* report = nullptr);

// Spherical azimuthal equidistant projection, km.
void aeqd_forward(double lon, double lat, double lon0, double lat0, double radius_km,
                  double* x_km, double* y_km);
void aeqd_inverse(double x_km, double y_km, double lon0, double lat0, double radius_km,
                  double* lon, double* lat);

// Project about the given (or data-mean) center, subtract the coordinate
// means, divide by the pooled standard deviation, and map times affinely onto
// [0, 1]. All constants land in meta. Throws if the pooled sd degenerates.
TelemetrySet project_and_scale(
    const TelemetrySet& raw,
    std::optional<std::pair<double, double>> center_lon_lat = std::nullopt);

// Inverse of the position scaling: scaled -> km in the projected plane.
void scaled_to_km(const ProjectionMeta& meta, double sx, double sy, double* x_km,
                  double* y_km);

}  // namespace moveconv
