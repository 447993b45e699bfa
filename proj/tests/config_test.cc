#include "safecert/config.h"

#include <fstream>

#include <gtest/gtest.h>

namespace safecert {
namespace {

using nlohmann::json;

json RoomDoc() {
  return json::parse(R"({
    "version": 1,
    "classes": [{"id": "room", "benchmark": "room", "grid": {"state": [11], "input": [11]}}]
  })");
}

json BundledRoom() { return ToJson(LoadConfig(std::string(SAFECERT_SOURCE_DIR) + "/configs/room.json")); }

TEST(ParseConfig, MinimalRoomUsesDefaults) {
  const PipelineConfig c = ParseConfig(RoomDoc());
  ASSERT_EQ(c.classes.size(), 1u);
  EXPECT_EQ(c.classes[0].benchmark, BenchmarkKind::kRoom);
  EXPECT_EQ(c.classes[0].grid_state, std::vector<int>{11});
  EXPECT_EQ(c.max_retries, 2);
  EXPECT_EQ(c.verify_refinement, 10);
  const SubsystemClass cls = BuildClass(c.classes[0]);
  EXPECT_EQ(cls.state_box(), IntervalBox::Interval(10, 13));
  EXPECT_EQ(cls.stc_template().term_count(), 3);
}

TEST(ParseConfig, BundledConfigsLoad) {
  for (const char* name : {"room", "platoon"}) {
    const PipelineConfig c =
        LoadConfig(std::string(SAFECERT_SOURCE_DIR) + "/configs/" + name + ".json");
    ASSERT_EQ(c.classes.size(), 1u) << name;
    EXPECT_NO_THROW(BuildClass(c.classes[0])) << name;
  }
  const PipelineConfig platoon = LoadConfig(std::string(SAFECERT_SOURCE_DIR) + "/configs/platoon.json");
  EXPECT_EQ(BuildClass(platoon.classes[0]).stc_template().term_count(), 15);
  EXPECT_EQ(platoon.classes[0].platoon.A(1, 1), 0.5);
}

TEST(ToJson, RoundTrip) {
  const json first = BundledRoom();
  const json second = ToJson(ParseConfig(first));
  EXPECT_EQ(first, second);
  const json platoon =
      ToJson(LoadConfig(std::string(SAFECERT_SOURCE_DIR) + "/configs/platoon.json"));
  EXPECT_EQ(ToJson(ParseConfig(platoon)), platoon);
}

TEST(ParseConfig, RejectsUnknownKeys) {
  json doc = RoomDoc();
  doc["colour"] = "blue";
  EXPECT_THROW(ParseConfig(doc), ConfigError);
  doc = RoomDoc();
  doc["classes"][0]["grid"]["extra"] = 1;
  EXPECT_THROW(ParseConfig(doc), ConfigError);
  doc = RoomDoc();
  doc["scp"] = {{"gapp", 1}};
  EXPECT_THROW(ParseConfig(doc), ConfigError);
}

TEST(ParseConfig, RejectsWrongVersionAndTypes) {
  json doc = RoomDoc();
  doc["version"] = 2;
  EXPECT_THROW(ParseConfig(doc), ConfigError);
  doc = RoomDoc();
  doc.erase("version");
  EXPECT_THROW(ParseConfig(doc), ConfigError);
  doc = RoomDoc();
  doc["classes"][0]["grid"]["state"] = "eleven";
  EXPECT_THROW(ParseConfig(doc), ConfigError);
  doc = RoomDoc();
  doc["classes"][0]["grid"]["state"] = {0};
  EXPECT_THROW(ParseConfig(doc), ConfigError);
}

TEST(ParseConfig, RejectsOverlappingSafetyBoxes) {
  json doc = RoomDoc();
  doc["classes"][0]["initial_box"] = {{"lower", {10}}, {"upper", {12.5}}};
  EXPECT_THROW(ParseConfig(doc), ConfigError);
}

TEST(ParseConfig, RejectsInconsistentClasses) {
  json doc = RoomDoc();
  doc["classes"].push_back(doc["classes"][0]);
  EXPECT_THROW(ParseConfig(doc), ConfigError);  // duplicate id
  doc = RoomDoc();
  doc["classes"][0]["data"] = "pairs.csv";
  EXPECT_THROW(ParseConfig(doc), ConfigError);  // both sources
  doc = RoomDoc();
  doc["classes"][0]["state_box"] = {{"lower", {0, 0}}, {"upper", {1, 1}}};
  EXPECT_THROW(ParseConfig(doc), ConfigError);  // dimension
  doc = RoomDoc();
  doc["classes"] = json::array();
  EXPECT_THROW(ParseConfig(doc), ConfigError);
  doc = RoomDoc();
  doc["classes"][0]["template"] = {{"degree", 2}, {"exponents", {{1}}}};
  EXPECT_THROW(ParseConfig(doc), ConfigError);
}

TEST(ParseConfig, DataClassNeedsBoxesTemplateAndProbe) {
  json doc = json::parse(R"({
    "version": 1,
    "classes": [{
      "id": "logged", "data": "pairs.csv",
      "state_box": {"lower": [0], "upper": [1]},
      "input_box": {"lower": [0], "upper": [1]},
      "initial_box": {"lower": [0], "upper": [0.2]},
      "unsafe_box": {"lower": [0.8], "upper": [1]},
      "template": {"degree": 2},
      "probe": [21, 21]
    }]
  })");
  const PipelineConfig c = ParseConfig(doc, "/data");
  EXPECT_FALSE(c.classes[0].benchmark.has_value());
  EXPECT_EQ(c.classes[0].probe_counts, (std::vector<int>{21, 21}));
  EXPECT_FALSE(BuildClass(c.classes[0]).has_oracle());
  json missing = doc;
  missing["classes"][0].erase("probe");
  EXPECT_THROW(ParseConfig(missing), ConfigError);
  missing = doc;
  missing["classes"][0].erase("template");
  EXPECT_THROW(ParseConfig(missing), ConfigError);
  missing = doc;
  missing["classes"][0].erase("unsafe_box");
  EXPECT_THROW(ParseConfig(missing), ConfigError);
}

TEST(LoadConfig, MissingOrMalformedFile) {
  EXPECT_THROW(LoadConfig("/nonexistent/config.json"), ConfigError);
  const std::string path = ::testing::TempDir() + "/broken.json";
  {
    std::ofstream(path) << "{ \"version\": 1, ";
  }
  EXPECT_THROW(LoadConfig(path), ConfigError);
}

}  // namespace
}  // namespace safecert
