#include "doctest.h"

#include "scum/config.hpp"
#include "scum/errors.hpp"
#include "scum/timestamp.hpp"

using namespace scum;

TEST_CASE("timestamps parse and print") {
  const auto t = Timestamp::parse_compact("20210701-1350");
  REQUIRE(t.has_value());
  CHECK(t->compact() == "20210701-1350");
  CHECK(t->iso() == "2021-07-01T13:50Z");
  CHECK(*t == Timestamp::from_utc(2021, 7, 1, 13, 50));
  CHECK(t->plus_minutes(10 * 6 * 11).iso() == "2021-07-02T00:50Z");
  CHECK(Timestamp::from_utc(1970, 1, 1, 0, 0).minutes_since_epoch() == 0);
  CHECK(Timestamp::from_utc(2020, 2, 29, 23, 59).plus_minutes(1).compact() == "20200301-0000");
}

TEST_CASE("malformed timestamps are rejected") {
  for (const char* bad : {"20210701", "20210701-135", "2021070a-1350", "20211301-0000", "20210230-0000",
                          "20210701-2400", "20210701_1350"}) {
    CAPTURE(bad);
    CHECK_FALSE(Timestamp::parse_compact(bad).has_value());
  }
  CHECK_THROWS_AS(Timestamp::from_utc(2021, 2, 30, 0, 0), InvalidParam);
}

TEST_CASE("timestamps order chronologically") {
  CHECK(*Timestamp::parse_compact("20210701-0000") < *Timestamp::parse_compact("20210701-0010"));
  CHECK(*Timestamp::parse_compact("20201231-2359") < *Timestamp::parse_compact("20210101-0000"));
}

TEST_CASE("config parses flat key = value text") {
  const auto cfg = RunConfig::parse(
      "# comment\n"
      "seed = 7\n"
      "learning_rate=0.05   # trailing\n"
      "\n"
      "emit_all = yes\n"
      "camera.cam_A.binarize_threshold = 100\n");
  CHECK(cfg.get_uint("seed", 0) == 7);
  CHECK(cfg.get_double("learning_rate", 0) == 0.05);
  CHECK(cfg.get_bool("emit_all", false));
  CHECK(cfg.get_int("epochs", 10) == 10);
  CHECK(cfg.camera_ids() == std::vector<std::string>{"cam_A"});
  CHECK(cfg.camera_key("cam_A", "binarize_threshold") == "camera.cam_A.binarize_threshold");
  CHECK(cfg.camera_key("cam_B", "binarize_threshold") == "binarize_threshold");
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_AS(RunConfig::parse("sed = 1\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("seed\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("camera.x.model = m.bin\n"), ConfigError);
  auto cfg = RunConfig::parse("seed = -3\nepochs = ten\nemit_all = maybe\n");
  CHECK_THROWS_AS(cfg.get_uint("seed", 0), ConfigError);
  CHECK(cfg.get_int("seed", 0) == -3);
  CHECK_THROWS_AS(cfg.get_double("epochs", 0), ConfigError);
  CHECK_THROWS_AS(cfg.get_bool("emit_all", false), ConfigError);
  CHECK_THROWS_AS(cfg.require("manifest"), ConfigError);
  CHECK_THROWS_AS(cfg.set("bogus", "1"), ConfigError);
  cfg.set("epochs", "3");
  CHECK(cfg.get_uint("epochs", 0) == 3);
  CHECK_THROWS_AS(RunConfig::load("/nonexistent/scumwatch.conf"), ConfigError);
}

TEST_CASE("every advertised key is accepted") {
  for (auto k : RunConfig::known_keys()) CHECK(RunConfig::is_known_key(k));
  for (auto k : RunConfig::camera_keys()) CHECK(RunConfig::is_known_key("camera.c1." + std::string(k)));
}
