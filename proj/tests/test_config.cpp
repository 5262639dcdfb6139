#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "hwy/config.hpp"

using namespace hwy;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string error_key(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
  const RunConfig c = parse("");
  const HighwayConfig env;
  const TrainConfig train;
  EXPECT_EQ(c.env.n_lanes, env.n_lanes);
  EXPECT_EQ(c.env.n_vehicles, env.n_vehicles);
  EXPECT_DOUBLE_EQ(c.env.idm.a_max, env.idm.a_max);
  EXPECT_EQ(c.train.total_steps, train.total_steps);
  EXPECT_EQ(c.train.hidden, train.hidden);
}

TEST(Config, ParsesValuesAndComments) {
  const RunConfig c = parse(
      "# training run\n"
      "\n"
      "n_vehicles = 7   # fewer cars\n"
      "noise_level=0.05\n"
      "dynamic_actors = false\n"
      "ego_speed = 18, 22\n"
      "idm.a_max = 0.9\n"
      "mobil.politeness_side = 0.25\n"
      "train.total_steps = 100000\n"
      "train.epsilon_decay_steps = 40000\n"
      "train.hidden = 32,16\n");
  EXPECT_EQ(c.env.n_vehicles, 7);
  EXPECT_DOUBLE_EQ(c.env.noise_level, 0.05);
  EXPECT_FALSE(c.env.dynamic_actors);
  EXPECT_DOUBLE_EQ(c.env.ego_speed.min, 18.0);
  EXPECT_DOUBLE_EQ(c.env.ego_speed.max, 22.0);
  EXPECT_DOUBLE_EQ(c.env.idm.a_max, 0.9);
  EXPECT_DOUBLE_EQ(c.env.mobil.politeness_side, 0.25);
  EXPECT_EQ(c.train.total_steps, 100000);
  EXPECT_EQ(c.train.epsilon_decay_steps, 40000);
  EXPECT_EQ(c.train.hidden, (std::vector<int>{32, 16}));
}

TEST(Config, RoundTripsEveryKey) {
  RunConfig c;
  c.env.n_vehicles = 5;
  c.env.noise_level = 0.15;
  c.env.ego_speed = {17.25, 21.125};
  c.env.idm.time_headway = 1.2345678901234;
  c.env.rewards.goal = 42.0;
  c.train.learning_rate = 3.3e-4;
  c.train.hidden = {16, 8, 4};
  c.train.seed = 99;
  std::ostringstream out;
  write_config(out, c);
  const RunConfig back = parse(out.str());
  std::ostringstream again;
  write_config(again, back);
  EXPECT_EQ(out.str(), again.str());
  EXPECT_DOUBLE_EQ(back.env.idm.time_headway, 1.2345678901234);
  EXPECT_DOUBLE_EQ(back.train.learning_rate, 3.3e-4);
  EXPECT_EQ(back.train.hidden, c.train.hidden);

  std::set<std::string> written;
  std::istringstream lines(out.str());
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) written.insert(line.substr(0, eq));
  }
  const auto keys = config_keys();
  EXPECT_EQ(written, std::set<std::string>(keys.begin(), keys.end()));
}

TEST(Config, UnknownKeyIsNamed) {
  EXPECT_EQ(error_key("idm.amax = 1\n"), "idm.amax");
  try {
    parse("n_vehicle = 9\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown key"), std::string::npos);
  }
}

TEST(Config, MalformedLinesAndValues) {
  EXPECT_EQ(error_key("n_vehicles = nine\n"), "n_vehicles");
  EXPECT_EQ(error_key("n_vehicles = 9x\n"), "n_vehicles");
  EXPECT_EQ(error_key("noise_level =\n"), "noise_level");
  EXPECT_EQ(error_key("dynamic_actors = maybe\n"), "dynamic_actors");
  EXPECT_EQ(error_key("ego_speed = 20\n"), "ego_speed");
  EXPECT_EQ(error_key("train.hidden = 64,,3\n"), "train.hidden");
  EXPECT_THROW(parse("just some words\n"), ConfigError);
}

TEST(Config, ValidationNamesTheField) {
  EXPECT_EQ(error_key("n_vehicles = 4\n"), "n_vehicles");
  EXPECT_EQ(error_key("noise_level = -0.1\n"), "noise_level");
  EXPECT_EQ(error_key("idm.b = 0\n"), "idm.b");
  EXPECT_EQ(error_key("mobil.b_safe = -1\n"), "mobil.b_safe");
  EXPECT_EQ(error_key("steering.far_dist = 1\n"), "steering.far_dist");
  EXPECT_EQ(error_key("kinematics.rear_length = 5\n"), "kinematics.rear_length");
  EXPECT_EQ(error_key("train.gamma = 1.5\n"), "train.gamma");
  EXPECT_EQ(error_key("train.hidden = 64,0\n"), "train.hidden");
  EXPECT_EQ(error_key("ego_speed = 25,20\n"), "ego_speed");
}

TEST(Config, MissingFileThrows) {
  EXPECT_THROW(load_config_file("/nonexistent/run.cfg"), std::runtime_error);
}
