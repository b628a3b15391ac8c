#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "moveconv/config.hpp"
#include "moveconv/runio.hpp"
#include "moveconv/telemetry.hpp"

using namespace moveconv;

namespace {
std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = std::string("/tmp/moveconv_test_") + name;
  std::ofstream out(path);
  out << text;
  return path;
}
}  // namespace

TEST_CASE("ingest accepts well-formed rows") {
  const auto path = write_temp("ok.csv",
                               "id,time,lon,lat\n"
                               "a,2017-03-20T00:00:00Z,-7.1,52.3\n"
                               "a,2017-03-20T03:00:00Z,-7.2,52.5\n"
                               "a,2017-03-20T06:00:00Z,-7.4,52.9\n");
  IngestReport rep;
  const TelemetrySet set = ingest_csv(path, false, &rep);
  CHECK(rep.accepted == 3);
  CHECK(rep.rejected.empty());
  CHECK(set.records.size() == 3);
  CHECK(set.times_in_seconds);
  CHECK(set.records[1].time - set.records[0].time == doctest::Approx(3 * 3600.0));
}

TEST_CASE("ingest rejects duplicates and malformed rows with line numbers") {
  const auto path = write_temp("dup.csv",
                               "id,time,lon,lat\n"
                               "a,1.0,-7.1,52.3\n"
                               "a,1.0,-7.2,52.5\n"
                               "a,not-a-time,-7.2,52.5\n"
                               "a,2.0,oops,52.5\n"
                               "a,3.0,-7.3,52.6\n");
  IngestReport rep;
  const TelemetrySet set = ingest_csv(path, false, &rep);
  CHECK(rep.accepted == 2);
  REQUIRE(rep.rejected.size() == 3);
  CHECK(rep.rejected[0].first == 3);
  CHECK(rep.rejected[0].second == "duplicate");
  CHECK(rep.rejected[1].first == 4);
  CHECK(rep.rejected[2].first == 5);
  CHECK(set.records.size() == 2);
}

TEST_CASE("unsorted input is sorted with a warning") {
  const auto path = write_temp("unsorted.csv",
                               "id,time,lon,lat\n"
                               "a,3.0,-7.3,52.6\n"
                               "a,1.0,-7.1,52.3\n"
                               "a,2.0,-7.2,52.5\n");
  IngestReport rep;
  const TelemetrySet set = ingest_csv(path, false, &rep);
  REQUIRE(rep.warnings.size() == 1);
  CHECK(set.records[0].time == 1.0);
  CHECK(set.records[2].time == 3.0);
}

TEST_CASE("empty or header-only files are errors") {
  const auto empty = write_temp("empty.csv", "");
  CHECK_THROWS(ingest_csv(empty, false));
  const auto header_only = write_temp("header.csv", "id,time,lon,lat\n");
  CHECK_THROWS(ingest_csv(header_only, false));
}

TEST_CASE("projection center maps to the plane origin and round trips") {
  double x, y;
  aeqd_forward(-110.0, 51.0, -110.0, 51.0, 6371.0088, &x, &y);
  CHECK(x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(y == doctest::Approx(0.0).epsilon(1e-12));

  for (double lon : {-150.2, -110.0, -80.5, 3.7}) {
    for (double lat : {12.0, 47.3, 63.9}) {
      aeqd_forward(lon, lat, -110.0, 51.0, 6371.0088, &x, &y);
      double lon2, lat2;
      aeqd_inverse(x, y, -110.0, 51.0, 6371.0088, &lon2, &lat2);
      CHECK(lon2 == doctest::Approx(lon).epsilon(1e-9));
      CHECK(lat2 == doctest::Approx(lat).epsilon(1e-9));
    }
  }
}

TEST_CASE("project_and_scale centers, scales, and records the metadata") {
  TelemetrySet raw;
  raw.geographic = true;
  raw.times_in_seconds = false;
  // two points symmetric about the configured center
  raw.records = {{"a", 0.0, -110.5, 51.0}, {"a", 10.0, -109.5, 51.0}};
  const TelemetrySet scaled = project_and_scale(raw, std::make_pair(-110.0, 51.0));
  REQUIRE(scaled.meta.has_value());
  CHECK(scaled.scaled);
  CHECK(scaled.records[0].x + scaled.records[1].x == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(scaled.records[0].time == 0.0);
  CHECK(scaled.records[1].time == 1.0);

  // back out km through the metadata
  double x_km, y_km;
  scaled_to_km(*scaled.meta, scaled.records[0].x, scaled.records[0].y, &x_km, &y_km);
  double x_want, y_want;
  aeqd_forward(-110.5, 51.0, -110.0, 51.0, scaled.meta->earth_radius_km, &x_want, &y_want);
  CHECK(x_km == doctest::Approx(x_want).epsilon(1e-9));
  CHECK(y_km == doctest::Approx(y_want).epsilon(1e-9));
}

TEST_CASE("degenerate positions are rejected") {
  TelemetrySet raw;
  raw.geographic = true;
  raw.records = {{"a", 0.0, -110.0, 51.0}, {"a", 1.0, -110.0, 51.0}};
  CHECK_THROWS_AS(project_and_scale(raw), std::invalid_argument);
}

TEST_CASE("config parses sections, types, and rejects unknown keys") {
  const Config cfg = Config::parse_string(
      "# comment\n"
      "[run]\n"
      "seed = 42\n"
      "[mcmc]\n"
      "iterations = 1000\n"
      "phi_min = 0.001\n"
      "flags = 0.1, 0.2, 0.3\n",
      "test");
  CHECK(cfg.get_int("run.seed", 0) == 42);
  CHECK(cfg.get_int("mcmc.iterations", 0) == 1000);
  CHECK(cfg.get_double("mcmc.phi_min", 0.0) == doctest::Approx(0.001));
  CHECK(cfg.get_list("mcmc.flags", {}).size() == 3);
  CHECK(cfg.get_bool("mcmc.missing", true) == true);
  cfg.require_all_consumed();

  const Config cfg2 = Config::parse_string("[run]\nseed = 1\nbogus = 2\n", "test2");
  CHECK(cfg2.get_int("run.seed", 0) == 1);
  CHECK_THROWS_WITH_AS(cfg2.require_all_consumed(),
                       doctest::Contains("unknown keys: run.bogus"), std::runtime_error);
}

TEST_CASE("track extraction by individual") {
  TelemetrySet set;
  set.records = {{"a", 0.0, 1.0, 2.0}, {"a", 0.5, 1.5, 2.5}, {"b", 0.0, -1.0, -2.0}};
  set.scaled = true;
  const auto ids = set.ids();
  REQUIRE(ids.size() == 2);
  const Track a = set.track("a");
  CHECK(a.n() == 2);
  CHECK(a.pos(1, 1) == 2.5);
  CHECK_THROWS_AS(set.track("zzz"), std::invalid_argument);
}
