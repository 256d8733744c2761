#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "aik/dataset.hpp"

namespace {

aik::Dataset parse(const std::string& text, aik::CsvOptions opts = {}) {
  std::istringstream in(text);
  return aik::parse_csv(in, opts);
}

aik::Dataset labelled_rows(const std::vector<int>& labels) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  aik::RowMatrix x(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) << static_cast<double>(i), static_cast<double>(2 * i);
  std::vector<aik::Label> l;
  for (int v : labels) l.push_back(v > 0 ? aik::Label::positive : aik::Label::negative);
  return {x, aik::PresenceMatrix::Constant(n, 2, true), l};
}

}  // namespace

TEST(LoadCsv, ParsesFeaturesAndMapsLabels) {
  aik::CsvOptions opts;
  opts.positive_label = "a";
  const auto d = parse("1,a\n2,b\n", opts);
  ASSERT_EQ(d.rows(), 2u);
  ASSERT_EQ(d.dims(), 1u);
  EXPECT_EQ(d.features()(0, 0), 1.0);
  EXPECT_EQ(d.features()(1, 0), 2.0);
  EXPECT_TRUE(d.presence().all());
  EXPECT_EQ(d.label(0), aik::Label::positive);
  EXPECT_EQ(d.label(1), aik::Label::negative);
  EXPECT_EQ(d.label_names().positive, "a");
  EXPECT_EQ(d.label_names().negative, "b");
}

TEST(LoadCsv, MissingTokenGivesAbsentZeroCell) {
  const auto d = parse("?,a\n3,b\n");
  EXPECT_FALSE(d.presence()(0, 0));
  EXPECT_TRUE(d.presence()(1, 0));
  EXPECT_EQ(d.features()(0, 0), 0.0);
  EXPECT_EQ(d.features()(1, 0), 3.0);
}

TEST(LoadCsv, DefaultMissingTokens) {
  const auto d = parse("1,,NaN,?,x\n2,3,4,5,y\n");
  EXPECT_EQ(d.presence().row(0).count(), 1);
  EXPECT_EQ(d.presence().row(1).count(), 4);
}

TEST(LoadCsv, ThreeLabelValuesIsCardinalityError) {
  EXPECT_THROW(parse("1,a\n2,b\n3,c\n"), aik::LabelCardinalityError);
}

TEST(LoadCsv, RaggedRowReportsLine) {
  try {
    parse("1,2,a\n3,b\n");
    FAIL() << "expected ParseError";
  } catch (const aik::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(LoadCsv, NonNumericCellReportsCoordinates) {
  try {
    parse("1,2,a\n3,zz,b\n");
    FAIL() << "expected ParseError";
  } catch (const aik::ParseError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("line 2"), std::string::npos) << what;
    EXPECT_NE(what.find("column 1"), std::string::npos) << what;
  }
}

TEST(LoadCsv, HeaderAndLabelColumn) {
  aik::CsvOptions opts;
  opts.has_header = true;
  opts.label_column = 0;
  opts.positive_label = "ALL";
  const auto d = parse("class,g1,g2\nALL,1.5,2\r\nAML,-3,4e2\n", opts);
  ASSERT_EQ(d.dims(), 2u);
  EXPECT_EQ(d.dim_names(), (std::vector<std::string>{"g1", "g2"}));
  EXPECT_EQ(d.features()(1, 1), 400.0);
  EXPECT_EQ(d.label(1), aik::Label::negative);
}

TEST(LoadCsv, UnknownPositiveLabelIsRejected) {
  aik::CsvOptions opts;
  opts.positive_label = "z";
  EXPECT_THROW(parse("1,a\n2,b\n", opts), aik::ParseError);
}

TEST(LoadCsv, ReadsFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "aik_test_load.csv";
  {
    std::ofstream out(path);
    out << "0.5,1\n?,-1\n";
  }
  aik::CsvOptions opts;
  opts.positive_label = "1";
  const auto d = aik::load_csv(path.string(), opts);
  EXPECT_EQ(d.count(aik::Label::positive), 1u);
  EXPECT_EQ(d.count(aik::Label::negative), 1u);
  EXPECT_THROW(aik::load_csv((path.string() + ".nope"), opts), aik::ParseError);
  std::filesystem::remove(path);
}

TEST(Dataset, ZeroesMissingEntriesOnConstruction) {
  aik::RowMatrix x(1, 2);
  x << 7.0, 9.0;
  aik::PresenceMatrix p(1, 2);
  p << true, false;
  const aik::Dataset d(x, p, {aik::Label::positive});
  EXPECT_EQ(d.features()(0, 1), 0.0);
  EXPECT_EQ(d.row(0).values()[0], 7.0);
}

TEST(Dataset, ShapeErrors) {
  aik::RowMatrix x(2, 2);
  x.setZero();
  EXPECT_THROW(aik::Dataset(x, aik::PresenceMatrix::Constant(2, 3, true), {aik::Label::positive, aik::Label::negative}),
               aik::ShapeError);
  EXPECT_THROW(aik::Dataset(x, aik::PresenceMatrix::Constant(2, 2, true), {aik::Label::positive}), aik::ShapeError);
}

TEST(Split, CardinalityAndDisjointness) {
  const auto d = labelled_rows({1, -1, 1, -1, 1, -1, 1, -1, 1, -1});
  const auto s = aik::split(d, {0.8, 7});
  EXPECT_EQ(s.train.rows(), 8u);
  EXPECT_EQ(s.test.rows(), 2u);
  std::set<std::size_t> all(s.train_rows.begin(), s.train_rows.end());
  for (auto i : s.test_rows) EXPECT_TRUE(all.insert(i).second) << "row " << i << " in both parts";
  EXPECT_EQ(all.size(), 10u);
}

TEST(Split, IsDeterministic) {
  const auto d = labelled_rows({1, -1, 1, -1, 1, -1, 1, -1, 1, -1});
  const auto a = aik::split(d, {0.8, 7});
  const auto b = aik::split(d, {0.8, 7});
  EXPECT_EQ(a.train_rows, b.train_rows);
  EXPECT_EQ(a.test_rows, b.test_rows);
}

TEST(Split, SingleClassIsDegenerate) {
  const auto d = labelled_rows({1, 1, 1, 1, 1});
  EXPECT_THROW(aik::split(d, {0.8, 7}), aik::DegenerateError);
}

TEST(Split, RejectsFractionOutsideOpenInterval) {
  const auto d = labelled_rows({1, -1, 1, -1});
  EXPECT_THROW(aik::split(d, {0.0, 1}), aik::ParameterError);
  EXPECT_THROW(aik::split(d, {1.0, 1}), aik::ParameterError);
}

TEST(Split, IsAPartitionForManySeedsAndSizes) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(gen() % 60);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = (gen() & 1) ? 1 : -1;
    labels[0] = 1;
    labels[1] = -1;
    const auto d = labelled_rows(labels);
    const double frac = 0.5 + 0.4 * static_cast<double>(gen() % 100) / 100.0;
    aik::Split s;
    try {
      s = aik::split(d, {frac, gen()});
    } catch (const aik::DegenerateError&) {
      continue;
    }
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    for (auto i : s.train_rows) ++seen[i];
    for (auto i : s.test_rows) ++seen[i];
    for (int c : seen) ASSERT_EQ(c, 1);
    ASSERT_EQ(s.train_rows.size(), static_cast<std::size_t>(std::llround(frac * n)));
    ASSERT_GT(s.train.count(aik::Label::positive), 0u);
    ASSERT_GT(s.train.count(aik::Label::negative), 0u);
  }
}

TEST(WriteCsv, RoundTripsFeatureValuesBitExactly) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  const Eigen::Index n = 50, m = 7;
  aik::RowMatrix x(n, m);
  aik::PresenceMatrix p(n, m);
  std::vector<aik::Label> l;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index t = 0; t < m; ++t) {
      x(i, t) = u(gen) * std::pow(10.0, static_cast<double>(gen() % 20) - 10.0);
      p(i, t) = gen() % 5 != 0;
    }
    l.push_back(i % 3 == 0 ? aik::Label::positive : aik::Label::negative);
  }
  const aik::Dataset d(x, p, l, {}, {"yes", "no"});
  std::stringstream buf;
  aik::write_csv(buf, d);
  aik::CsvOptions opts;
  opts.positive_label = "yes";
  const auto back = aik::parse_csv(buf, opts);
  ASSERT_EQ(back.rows(), d.rows());
  EXPECT_TRUE((back.presence() == d.presence()).all());
  EXPECT_EQ(back.labels(), d.labels());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index t = 0; t < m; ++t) {
      const double a = back.features()(i, t), b = d.features()(i, t);
      EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0) << i << "," << t;
    }
  }
}
