#include <gtest/gtest.h>

#include <sstream>

#include <laftr/error.hpp>
#include <laftr/graph.hpp>

#include "oracles.hpp"

using namespace laftr;

TEST(EdgeList, ListedEdgesAreOnes) {
  std::istringstream in("0\t1\n1\t2\n");
  const auto y = load_edge_list(in, 3);
  ASSERT_EQ(y.n(), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      EXPECT_EQ(y(i, j), (i == 0 && j == 1) || (i == 1 && j == 2) ? 1 : 0);
  EXPECT_FALSE(y.symmetric_hint());
}

TEST(EdgeList, EmptyInputWithN) {
  std::istringstream in("");
  const auto y = load_edge_list(in, 2);
  EXPECT_EQ(y.n(), 2u);
  for (auto v : y.entries().flat()) EXPECT_EQ(v, 0);
}

TEST(EdgeList, IdOutOfRangeIsParseError) {
  std::istringstream in("0\t5\n");
  EXPECT_THROW(load_edge_list(in, 3), ParseError);
}

TEST(EdgeList, ErrorNamesTheLine) {
  std::istringstream in("# header\n0 1\nx 2\n");
  try {
    load_edge_list(in, 3);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(EdgeList, ValueColumnCommentsDuplicatesAndInferredN) {
  std::istringstream in("# comment\n0 3 1\n0 3\n2 1 0\n\n1 2\n");
  const auto y = load_edge_list(in);
  EXPECT_EQ(y.n(), 4u);
  EXPECT_EQ(y(0, 3), 1);
  EXPECT_EQ(y(2, 1), 0);
  EXPECT_EQ(y(1, 2), 1);
}

TEST(EdgeList, BadValueRejected) {
  std::istringstream in("0 1 2\n");
  EXPECT_THROW(load_edge_list(in, 3), ParseError);
}

TEST(DenseMatrix, SymmetricHint) {
  std::istringstream sym("0 1\n1 0\n");
  EXPECT_TRUE(load_dense_matrix(sym).symmetric_hint());
  std::istringstream asym("0 1\n0 0\n");
  EXPECT_FALSE(load_dense_matrix(asym).symmetric_hint());
}

TEST(DenseMatrix, RejectsBadTokensAndRaggedRows) {
  std::istringstream bad("0 2\n0 0\n");
  EXPECT_THROW(load_dense_matrix(bad), ParseError);
  std::istringstream ragged("0 1\n0\n");
  EXPECT_THROW(load_dense_matrix(ragged), ParseError);
  std::istringstream extra("0 1\n1 0\n1 1\n");
  EXPECT_THROW(load_dense_matrix(extra), ParseError);
}

TEST(DenseMatrix, RoundTripIsExact) {
  std::mt19937_64 rng(5);
  const auto y = oracle::random_graph(13, 0.3, rng);
  std::stringstream buffer;
  write_dense_matrix(buffer, y);
  const auto back = load_dense_matrix(buffer);
  EXPECT_EQ(back.entries(), y.entries());
}

TEST(Adjacency, LabelsMustBeDistinctAndSized) {
  AdjacencyMatrix y(BinaryMatrix(2, 2, 0));
  EXPECT_THROW(y.set_labels({"a"}), ArgumentError);
  EXPECT_THROW(y.set_labels({"a", "a"}), ArgumentError);
  y.set_labels({"a", "b"});
  EXPECT_EQ(y.labels().size(), 2u);
  EXPECT_THROW(AdjacencyMatrix(BinaryMatrix(2, 3, 0)), ArgumentError);
}

TEST(Split, FullFractionCoversAllOffDiagonal) {
  const AdjacencyMatrix y(BinaryMatrix(3, 3, 0));
  const auto split = split_observations(y, 1.0, 0, false);
  EXPECT_EQ(split.train.count(), 6u);
  EXPECT_EQ(split.test.count(), 0u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_FALSE(split.train(i, i));
}

TEST(Split, Counts) {
  const AdjacencyMatrix y(BinaryMatrix(10, 10, 0));
  const auto split = split_observations(y, 0.8, 3, false);
  EXPECT_EQ(split.train.count(), 72u);
  EXPECT_EQ(split.test.count(), 18u);
  const auto tied = split_observations(y, 0.8, 3, true);
  EXPECT_EQ(tied.train.count(), 2u * 36u);  // floor(0.8 * 45) unordered pairs
}

TEST(Split, Determinism) {
  const AdjacencyMatrix y(BinaryMatrix(20, 20, 0));
  const auto a = split_observations(y, 0.8, 11, false);
  const auto b = split_observations(y, 0.8, 11, false);
  const auto c = split_observations(y, 0.8, 12, false);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.train, c.train);
}

TEST(Split, BadFraction) {
  const AdjacencyMatrix y(BinaryMatrix(4, 4, 0));
  EXPECT_THROW(split_observations(y, 0.0, 0, false), ArgumentError);
  EXPECT_THROW(split_observations(y, 1.5, 0, false), ArgumentError);
}

class SplitProperty : public ::testing::TestWithParam<std::tuple<std::uint64_t, double, bool>> {};

TEST_P(SplitProperty, DisjointCoveringAndTied) {
  const auto [seed, fraction, tie] = GetParam();
  const std::size_t n = 17;
  const AdjacencyMatrix y(BinaryMatrix(n, n, 0));
  const auto split = split_observations(y, fraction, seed, tie);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      EXPECT_FALSE(split.train(i, j) && split.test(i, j));
      EXPECT_EQ(split.train(i, j) || split.test(i, j), i != j);
      if (tie) {
        EXPECT_EQ(split.train(i, j), split.train(j, i));
        EXPECT_EQ(split.test(i, j), split.test(j, i));
      }
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, SplitProperty,
                         ::testing::Combine(::testing::Values(0u, 1u, 99u), ::testing::Values(0.3, 0.5, 0.8, 1.0),
                                            ::testing::Bool()));

TEST(Split, IncludeDiagonalMakesDiagonalEligible) {
  const AdjacencyMatrix y(BinaryMatrix(5, 5, 0));
  const auto split = split_observations(y, 1.0, 0, false, true);
  EXPECT_EQ(split.train.count(), 25u);
}

TEST(MaskFile, RoundTrip) {
  const AdjacencyMatrix y(BinaryMatrix(9, 9, 0));
  const auto split = split_observations(y, 0.6, 4, false);
  std::stringstream buffer;
  write_mask_file(buffer, split);
  const auto back = load_mask_file(buffer, 9);
  EXPECT_EQ(back.train, split.train);
  EXPECT_EQ(back.test, split.test);
}

TEST(MaskFile, RejectsOutOfRange) {
  std::istringstream in("0 9 1\n");
  EXPECT_THROW(load_mask_file(in, 3), ParseError);
}

TEST(PairList, Parses) {
  std::istringstream in("# pairs\n0 1\n2\t0\n");
  const auto pairs = load_pair_list(in);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[1], std::make_pair(std::size_t{2}, std::size_t{0}));
}
