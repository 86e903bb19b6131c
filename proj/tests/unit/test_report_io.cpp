#include "graft/report_io.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace graft;

namespace {

ClassProfile toy_profile(int class_id) {
  ClassProfile p;
  p.class_id = class_id;
  p.aggregate = Vector(4);
  p.aggregate << 0.1, 0.4, 0.3, 0.0;
  p.signed_mean = Vector(4);
  p.signed_mean << -0.1, 0.4, 0.3, 0.0;
  p.top_k = top_k(p.aggregate, 3);
  p.exemplars.class_id = class_id;
  p.exemplars.nodes = {2, 0};
  p.steps = 50;
  return p;
}

}  // namespace

TEST(ReportIo, ProfileJsonFields) {
  const Dataset toy = load_dataset(test::fixture("toy"));
  const RunInfo run{"toy", "GCN", 3, "abc"};
  const json j = profile_to_json(toy_profile(1), toy, run);
  EXPECT_EQ(j.at("dataset"), "toy");
  EXPECT_EQ(j.at("arch"), "GCN");
  EXPECT_EQ(j.at("seed"), 3);
  EXPECT_EQ(j.at("config_hash"), "abc");
  EXPECT_EQ(j.at("class_id"), 1);
  EXPECT_EQ(j.at("attribution").at("steps"), 50);
  EXPECT_EQ(j.at("exemplars"), json::array({2, 0}));
  ASSERT_EQ(j.at("top_k").size(), 3u);
  EXPECT_EQ(j.at("top_k")[0].at("index"), 1);
  EXPECT_EQ(j.at("top_k")[0].at("name"), "beta");
  EXPECT_EQ(j.at("top_k")[0].at("score"), 0.4);
  EXPECT_NEAR(j.at("signed_mean_sum").get<double>(), 0.6, 1e-15);
}

TEST(ReportIo, TopKSetsRoundTrip) {
  const Dataset toy = load_dataset(test::fixture("toy"));
  const std::vector<ClassProfile> ps{toy_profile(0), toy_profile(1)};
  const json arr = profiles_to_json(ps, toy, {"toy", "GCN", 0, "h"});
  ASSERT_TRUE(arr.is_array());
  const auto sets = top_k_sets_from_json(arr);
  ASSERT_EQ(sets.size(), 2u);
  EXPECT_EQ(sets[1], (FeatureSet{1, 2, 0}));
}

TEST(ReportIo, WriteReadJsonIsStable) {
  const auto dir = test::scratch_dir("report_io");
  const json value = {{"b", 1.0 / 3.0}, {"a", json::array({1, 2})}, {"n", nullptr}};
  write_json(dir / "x" / "v.json", value);
  const std::string text = test::read_file(dir / "x" / "v.json");
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(read_json(dir / "x" / "v.json"), value);
  write_json(dir / "x" / "w.json", read_json(dir / "x" / "v.json"));
  EXPECT_EQ(test::read_file(dir / "x" / "w.json"), text);
  EXPECT_THROW(read_json(dir / "none.json"), std::runtime_error);
}

TEST(ReportIo, BiasAndFidelityNulls) {
  BiasReport b;
  b.dataset = "planted";
  b.injected_feature = 60;
  const json jb = bias_to_json(b, "h");
  EXPECT_TRUE(jb.at("rank").is_null());
  EXPECT_EQ(jb.at("injected_feature"), 60);
  b.rank = 2;
  EXPECT_EQ(bias_to_json(b, "h").at("rank"), 2);

  FidelityReport f;
  f.classes.push_back({0, 3, 0.0, 0.0, 0.0, std::nullopt, 0.0});
  const json jf = fidelity_to_json(f, {"toy", "GCN", 0, "h"});
  EXPECT_TRUE(jf.at("classes")[0].at("fid_minus").is_null());
  EXPECT_EQ(jf.at("classes")[0].at("fid_plus"), 0.0);
}

TEST(ReportIo, SummaryTsvLayout) {
  const auto dir = test::scratch_dir("summary_tsv");
  SummaryRow row{"toy", "GCN", 1};
  row.fid_minus = 0.5;
  row.compression = 0.015;
  write_summary_tsv(dir / "summary.tsv", std::vector<SummaryRow>{row}, "deadbeef");
  std::istringstream in(test::read_file(dir / "summary.tsv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# config_hash=deadbeef");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 16), "dataset\tarch\tsee");
  std::getline(in, line);
  EXPECT_EQ(line, "toy\tGCN\t1\t0.5\tNA\tNA\tNA\tNA\tNA\tNA\t0.015");
}

TEST(ReportIo, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.25), "0.25");
}
