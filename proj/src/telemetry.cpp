#include "moveconv/telemetry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace moveconv {

std::vector<std::string> TelemetrySet::ids() const {
  std::vector<std::string> out;
  for (const auto& r : records)
    if (out.empty() || out.back() != r.id)
      if (std::find(out.begin(), out.end(), r.id) == out.end()) out.push_back(r.id);
  return out;
}

Track TelemetrySet::track(const std::string& id) const {
  std::vector<const TelemetryRecord*> rows;
  for (const auto& r : records)
    if (r.id == id) rows.push_back(&r);
  if (rows.empty()) throw std::invalid_argument("TelemetrySet: unknown individual " + id);
  Track t;
  t.times.resize(rows.size());
  t.pos.resize(rows.size(), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.times[i] = rows[i]->time;
    t.pos(i, 0) = rows[i]->x;
    t.pos(i, 1) = rows[i]->y;
  }
  return t;
}

std::vector<Track> TelemetrySet::all_tracks() const {
  std::vector<Track> out;
  for (const auto& id : ids()) out.push_back(track(id));
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

bool parse_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return false;
  *out = v;
  return true;
}

// ISO-8601 (date or date+time, 'T' or space, optional :SS and trailing Z)
// to seconds since epoch; falls back to plain numeric. Sets *iso when the
// calendar form matched.
bool parse_time(const std::string& s, double* out, bool* iso) {
  int y, mo, d, h = 0, mi = 0;
  double sec = 0.0;
  char sep = 0;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%d%n", &y, &mo, &d, &consumed) == 3 &&
      consumed >= 8) {
    const char* rest = s.c_str() + consumed;
    if (*rest == 'T' || *rest == ' ') {
      sep = *rest;
      (void)sep;
      int c2 = 0;
      if (std::sscanf(rest + 1, "%d:%d%n", &h, &mi, &c2) != 2) return false;
      const char* rest2 = rest + 1 + c2;
      if (*rest2 == ':') {
        char* end = nullptr;
        sec = std::strtod(rest2 + 1, &end);
        rest2 = end;
      }
      if (*rest2 == 'Z') ++rest2;
      if (*rest2 != '\0') return false;
    } else if (*rest != '\0') {
      return false;
    }
    std::tm tm{};
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = 0;
    const time_t base = timegm(&tm);
    if (base == static_cast<time_t>(-1)) return false;
    *out = static_cast<double>(base) + sec;
    *iso = true;
    return true;
  }
  return parse_double(s, out);
}

constexpr double kDegToRad = M_PI / 180.0;

}  // namespace

TelemetrySet ingest_csv(const std::string& path, bool km_units, IngestReport* report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ingest: cannot open " + path);

  IngestReport local;
  IngestReport& rep = report ? *report : local;

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("ingest: empty file " + path);
  const auto header = split_csv_line(line);
  const std::vector<std::string> want =
      km_units ? std::vector<std::string>{"id", "time", "x_km", "y_km"}
               : std::vector<std::string>{"id", "time", "lon", "lat"};
  if (header.size() < 4 || header[0] != want[0] || header[1] != want[1] ||
      header[2] != want[2] || header[3] != want[3])
    throw std::runtime_error("ingest: expected header " + want[0] + "," + want[1] + "," +
                             want[2] + "," + want[3] + " in " + path);

  TelemetrySet set;
  set.geographic = !km_units;
  std::set<std::pair<std::string, double>> seen;
  long line_no = 1;
  bool sorted = true;
  std::map<std::string, double> last_time;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) {
      rep.rejected.emplace_back(line_no, "expected 4 fields, got " + std::to_string(f.size()));
      continue;
    }
    TelemetryRecord r;
    r.id = f[0];
    if (r.id.empty()) {
      rep.rejected.emplace_back(line_no, "empty id");
      continue;
    }
    bool iso = false;
    if (!parse_time(f[1], &r.time, &iso)) {
      rep.rejected.emplace_back(line_no, "unparseable time '" + f[1] + "'");
      continue;
    }
    if (iso) set.times_in_seconds = true;
    if (!parse_double(f[2], &r.x) || !parse_double(f[3], &r.y)) {
      rep.rejected.emplace_back(line_no, "unparseable coordinate");
      continue;
    }
    if (!km_units && (r.x < -180.0 || r.x > 360.0 || r.y < -90.0 || r.y > 90.0)) {
      rep.rejected.emplace_back(line_no, "lon/lat out of range");
      continue;
    }
    if (!seen.insert({r.id, r.time}).second) {
      rep.rejected.emplace_back(line_no, "duplicate");
      continue;
    }
    auto it = last_time.find(r.id);
    if (it != last_time.end() && r.time < it->second) sorted = false;
    last_time[r.id] = std::max(r.time, it == last_time.end() ? r.time : it->second);
    set.records.push_back(std::move(r));
    ++rep.accepted;
  }
  if (set.records.empty()) throw std::runtime_error("ingest: no valid records in " + path);
  if (!sorted) rep.warnings.push_back("input not sorted by (id, time); sorted on ingest");
  std::stable_sort(set.records.begin(), set.records.end(),
                   [](const TelemetryRecord& a, const TelemetryRecord& b) {
                     return a.id == b.id ? a.time < b.time : a.id < b.id;
                   });
  return set;
}

void aeqd_forward(double lon, double lat, double lon0, double lat0, double radius_km,
                  double* x_km, double* y_km) {
  const double phi = lat * kDegToRad, phi0 = lat0 * kDegToRad;
  const double dlam = (lon - lon0) * kDegToRad;
  const double cosc = std::sin(phi0) * std::sin(phi) +
                      std::cos(phi0) * std::cos(phi) * std::cos(dlam);
  const double c = std::acos(std::clamp(cosc, -1.0, 1.0));
  const double k = c < 1e-12 ? 1.0 : c / std::sin(c);
  *x_km = radius_km * k * std::cos(phi) * std::sin(dlam);
  *y_km = radius_km * k *
          (std::cos(phi0) * std::sin(phi) - std::sin(phi0) * std::cos(phi) * std::cos(dlam));
}

void aeqd_inverse(double x_km, double y_km, double lon0, double lat0, double radius_km,
                  double* lon, double* lat) {
  const double rho = std::hypot(x_km, y_km);
  const double phi0 = lat0 * kDegToRad;
  if (rho < 1e-12) {
    *lon = lon0;
    *lat = lat0;
    return;
  }
  const double c = rho / radius_km;
  const double sinc = std::sin(c), cosc = std::cos(c);
  const double phi =
      std::asin(std::clamp(cosc * std::sin(phi0) + y_km * sinc * std::cos(phi0) / rho,
                           -1.0, 1.0));
  const double lam = lat0 * kDegToRad == M_PI / 2
                         ? std::atan2(x_km, -y_km)
                         : std::atan2(x_km * sinc, rho * std::cos(phi0) * cosc -
                                                       y_km * std::sin(phi0) * sinc);
  *lat = phi / kDegToRad;
  *lon = lon0 + lam / kDegToRad;
}

TelemetrySet project_and_scale(const TelemetrySet& raw,
                               std::optional<std::pair<double, double>> center_lon_lat) {
  if (raw.records.empty()) throw std::invalid_argument("project_and_scale: no records");
  if (raw.scaled) throw std::invalid_argument("project_and_scale: already scaled");

  TelemetrySet out = raw;
  ProjectionMeta meta;
  meta.geographic = raw.geographic;
  const std::size_t n = out.records.size();

  if (raw.geographic) {
    double lon0, lat0;
    if (center_lon_lat) {
      lon0 = center_lon_lat->first;
      lat0 = center_lon_lat->second;
    } else {
      lon0 = lat0 = 0.0;
      for (const auto& r : out.records) {
        lon0 += r.x;
        lat0 += r.y;
      }
      lon0 /= static_cast<double>(n);
      lat0 /= static_cast<double>(n);
    }
    meta.center_lon = lon0;
    meta.center_lat = lat0;
    for (auto& r : out.records) {
      double x, y;
      aeqd_forward(r.x, r.y, lon0, lat0, meta.earth_radius_km, &x, &y);
      r.x = x;
      r.y = y;
    }
  }

  // center, then divide by the pooled sd across both coordinates
  double mx = 0.0, my = 0.0;
  for (const auto& r : out.records) {
    mx += r.x;
    my += r.y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double ss = 0.0;
  for (const auto& r : out.records)
    ss += (r.x - mx) * (r.x - mx) + (r.y - my) * (r.y - my);
  if (n < 2 || !(ss > 0.0))
    throw std::invalid_argument("project_and_scale: degenerate positions (zero pooled sd)");
  const double pooled_sd = std::sqrt(ss / static_cast<double>(2 * n - 2));
  meta.mean_x_km = mx;
  meta.mean_y_km = my;
  meta.scale_km = pooled_sd;

  double t_min = out.records.front().time, t_max = t_min;
  for (const auto& r : out.records) {
    t_min = std::min(t_min, r.time);
    t_max = std::max(t_max, r.time);
  }
  if (!(t_max > t_min))
    throw std::invalid_argument("project_and_scale: zero time span");
  meta.time_origin = t_min;
  meta.time_span = t_max - t_min;
  // ISO timestamps are stored as seconds; numeric times are taken as hours
  meta.time_span_hours = raw.times_in_seconds ? meta.time_span / 3600.0 : meta.time_span;

  for (auto& r : out.records) {
    r.x = (r.x - mx) / pooled_sd;
    r.y = (r.y - my) / pooled_sd;
    r.time = (r.time - t_min) / meta.time_span;
  }
  out.scaled = true;
  out.geographic = false;
  out.meta = meta;
  return out;
}

void scaled_to_km(const ProjectionMeta& meta, double sx, double sy, double* x_km,
                  double* y_km) {
  *x_km = sx * meta.scale_km + meta.mean_x_km;
  *y_km = sy * meta.scale_km + meta.mean_y_km;
}

}  // namespace moveconv
