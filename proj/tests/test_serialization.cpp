#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include <laftr/error.hpp>
#include <laftr/serialization.hpp>

#include "oracles.hpp"

using namespace laftr;

TEST(FormatReal, RoundTrips) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss(0.0, 100.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double v = gauss(rng);
    EXPECT_EQ(std::stod(format_real(v)), v);
  }
}

TEST(ModelJson, RoundTripIsLossless) {
  std::mt19937_64 rng(2);
  const auto s = oracle::random_state(7, 3, 2.0, 0.37, rng);
  std::stringstream buffer;
  write_model_json(buffer, s, {10.5, 3.25}, 99);
  const auto file = read_model_json(buffer);
  EXPECT_EQ(file.state.z(), s.z());
  EXPECT_EQ(file.state.w(), s.w());
  EXPECT_EQ(file.state.lambda(), 0.37);
  EXPECT_EQ(file.objective_trace, (std::vector<double>{10.5, 3.25}));
  EXPECT_EQ(file.seed, 99u);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(link_probability(file.state, i, j), link_probability(s, i, j));
}

TEST(ModelJson, ByteStable) {
  std::mt19937_64 rng(3);
  const auto s = oracle::random_state(5, 2, 1.0, 0.5, rng);
  std::ostringstream a, b;
  write_model_json(a, s, {1.0}, 0);
  write_model_json(b, s, {1.0}, 0);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream in(a.str());
  std::ostringstream c;
  const auto file = read_model_json(in);
  write_model_json(c, file.state, file.objective_trace, file.seed);
  EXPECT_EQ(c.str(), a.str());
}

TEST(ModelJson, EmptyModelKeepsNodeCount) {
  const ModelState s(BinaryMatrix(4, 0), RealMatrix(0, 0), 0.5);
  std::stringstream buffer;
  write_model_json(buffer, s, {}, 0);
  const auto file = read_model_json(buffer);
  EXPECT_EQ(file.state.n(), 4u);
  EXPECT_EQ(file.state.k_plus(), 0u);
}

TEST(ModelJson, RejectsMalformed) {
  for (const char* text : {"", "{", "{\"k\": 1}", "{\"k\": 1, \"lambda\": 0.5, \"z\": [[2]], \"w\": [[1]]}",
                           "{\"k\": 2, \"lambda\": 0.5, \"z\": [[1]], \"w\": [[1]]}",
                           "{\"k\": 1, \"lambda\": 0.5, \"z\": [[1]], \"w\": [[1, 2]]}"}) {
    std::istringstream in(text);
    EXPECT_THROW(read_model_json(in), ParseError) << text;
  }
}

TEST(TruthJson, HasFields) {
  std::ostringstream out;
  write_truth_json(out, BinaryMatrix(2, 1, 1), RealMatrix(1, 1, 6.0));
  EXPECT_NE(out.str().find("\"z\""), std::string::npos);
  EXPECT_NE(out.str().find("\"w\": [\n    [6]"), std::string::npos);
}
