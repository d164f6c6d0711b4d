#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "gcvae/graph/dataset_io.hpp"
#include "oracles.hpp"

using namespace gcvae;

TEST(DatasetIo, ParsesDocumentedExample) {
  std::istringstream in(R"({"n": 3, "adj": [[0,1,1],[1,0,1],[1,1,0]], "x": [[0.5],[1.0],[-2.0]], "y": 1})");
  const Dataset ds = read_dataset(in);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.n_max(), 3u);
  EXPECT_EQ(ds.d(), 1u);
  EXPECT_EQ(ds[0].edge_count(), 3u);
  EXPECT_EQ(ds[0].features.at(2, 0), -2.0);
  EXPECT_EQ(ds[0].label, Label::positive);
}

TEST(DatasetIo, RoundTripIsValueExact) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> wide(0.0, 1e3);
  Dataset ds(9, 3);
  for (int i = 0; i < 40; ++i) {
    Graph g = testutil::random_graph(rng, static_cast<std::size_t>(i % 10), 9, 3, 0.4,
                                     i % 3 == 0 ? std::nullopt : std::optional<Label>(i % 2 ? Label::positive : Label::negative));
    for (std::size_t k = 0; k < g.n * 3; ++k) g.features[k] = wide(rng) / 7.0;
    ds.push_back(g);
  }
  std::stringstream buf;
  write_dataset(buf, ds);
  const Dataset back = read_dataset(buf, {9, 3});
  EXPECT_EQ(back, ds);
  EXPECT_EQ(dataset_to_string(back), dataset_to_string(ds));
}

TEST(DatasetIo, MalformedLineIsNamed) {
  std::ostringstream text;
  for (int i = 0; i < 6; ++i) text << R"({"n": 2, "adj": [[0,1],[1,0]], "x": [[1],[2]], "y": -1})" << "\n";
  text << R"({"n": 2, "adj": [[0,1],[1,0]], "x": [[1],[2]], "y": )" << "\n";
  std::istringstream in(text.str());
  try {
    read_dataset(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 7u);
    EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos);
  }
}

TEST(DatasetIo, AsymmetricGraphIndexIsNamed) {
  std::istringstream in(
      R"({"n": 2, "adj": [[0,1],[1,0]], "x": [[1],[2]]})"
      "\n"
      R"({"n": 3, "adj": [[0,1,0],[0,0,0],[0,0,0]], "x": [[1],[2],[3]]})"
      "\n");
  try {
    read_dataset(in);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.index(), 1u);
    EXPECT_NE(std::string(e.what()).find("graph 1"), std::string::npos);
  }
}

TEST(DatasetIo, StructuralErrors) {
  for (const char* bad : {R"({"adj": []})", R"({"n": 2, "adj": [[0,1]], "x": [[1],[2]]})",
                          R"({"n": 1, "adj": [[0]], "x": [[1]], "y": 0})", R"([1, 2])"}) {
    std::istringstream in(bad);
    EXPECT_THROW(read_dataset(in), ParseError) << bad;
  }
  std::istringstream widths(R"({"n": 1, "adj": [[0]], "x": [[1]]})"
                            "\n"
                            R"({"n": 1, "adj": [[0]], "x": [[1, 2]]})");
  EXPECT_THROW(read_dataset(widths), ParseError);
  std::istringstream big(R"({"n": 3, "adj": [[0,0,0],[0,0,0],[0,0,0]], "x": [[],[],[]]})");
  EXPECT_THROW(read_dataset(big, {2, std::nullopt}), ParseError);
}

TEST(DatasetIo, MissingFileNamesPath) {
  try {
    load_dataset("/nonexistent/dir/data.jsonl");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/data.jsonl"), std::string::npos);
  }
}
