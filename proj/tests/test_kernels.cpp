#include <gtest/gtest.h>

#include <random>

#include "aik/kernels.hpp"

namespace {

aik::MaskedVector mv(std::vector<double> v, std::vector<bool> m = {}) {
  aik::Vector vv(static_cast<Eigen::Index>(v.size()));
  aik::Mask mm = aik::Mask::Constant(vv.size(), true);
  for (std::size_t i = 0; i < v.size(); ++i) vv[static_cast<Eigen::Index>(i)] = v[i];
  for (std::size_t i = 0; i < m.size(); ++i) mm[static_cast<Eigen::Index>(i)] = m[i];
  return {vv, mm};
}

aik::ClassCentroid centroid(std::vector<double> mean, aik::Label l = aik::Label::positive) {
  aik::ClassCentroid c{l, aik::Vector(static_cast<Eigen::Index>(mean.size())),
                       std::vector<std::uint64_t>(mean.size(), 1)};
  for (std::size_t i = 0; i < mean.size(); ++i) c.mean[static_cast<Eigen::Index>(i)] = mean[i];
  return c;
}

struct RandomPair {
  aik::MaskedVector a, b;
  aik::ClassCentroid z;
};

RandomPair random_pair(std::mt19937_64& gen, Eigen::Index m, bool complete) {
  std::normal_distribution<double> g;
  aik::Vector u(m), v(m), zm(m);
  aik::Mask ma(m), mb(m);
  for (Eigen::Index t = 0; t < m; ++t) {
    u[t] = g(gen);
    v[t] = g(gen);
    zm[t] = g(gen);
    ma[t] = complete || gen() % 4 != 0;
    mb[t] = complete || gen() % 4 != 0;
  }
  return {{u, ma}, {v, mb}, {aik::Label::positive, zm, std::vector<std::uint64_t>(static_cast<std::size_t>(m), 1)}};
}

// Direct evaluation of the unit-vector distance form.
double rbf_oracle(const aik::Vector& a, const aik::Vector& b, double tau2) {
  const aik::Vector d = a / a.norm() - b / b.norm();
  return std::exp(-d.squaredNorm() / (2.0 * tau2));
}

}  // namespace

TEST(Cosine, Examples) {
  EXPECT_DOUBLE_EQ(aik::cosine(mv({1, 0}), mv({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(aik::cosine(mv({1, 0}), mv({0, 1})), 0.0);
  EXPECT_DOUBLE_EQ(aik::cosine(mv({1, 1}), mv({1, -1})), 0.0);
  EXPECT_THROW(aik::cosine(mv({1}), mv({1, 2})), aik::ShapeError);
}

TEST(Mpc, Examples) {
  const auto a = mv({1, 2, 3}, {true, true, false});
  const auto b = mv({4, 5, 6}, {false, true, true});
  EXPECT_DOUBLE_EQ(aik::mpc(a, b), 1.0);
  const auto dj = aik::mpc_value(mv({1, 2}, {true, false}), mv({3, 4}, {false, true}));
  EXPECT_EQ(dj.value, 0.0);
  EXPECT_TRUE(dj.degenerate);
}

TEST(Mpp, Examples) {
  const auto zr = centroid({1, 0});
  const auto zq = centroid({0, 1}, aik::Label::negative);
  EXPECT_DOUBLE_EQ(aik::mpp(mv({2, 0}), mv({0, 2}), &zr, &zq), 0.0);

  // Identical deviations from the two centroids.
  EXPECT_NEAR(aik::mpp(mv({1.5, -0.25}), mv({0.5, 0.75}), &zr, &zq), 1.0, 1e-15);

  const auto guard = aik::mpp_value(mv({1, 0}), mv({0, 2}), &zr, &zq);
  EXPECT_EQ(guard.value, 0.0);
  EXPECT_TRUE(guard.degenerate);

  EXPECT_THROW(aik::mpp(mv({1, 0}), mv({0, 1}), nullptr, &zq), aik::PhaseError);
}

TEST(MptLinear, Examples) {
  EXPECT_DOUBLE_EQ(aik::mpt_linear(mv({1, 0}), mv({1, 0}), centroid({1, 0})), 1.0);
  EXPECT_NEAR(aik::mpt_linear(mv({0, 1}), mv({1, 0}, {true, false}), centroid({0.5, 2})), 0.8, 1e-15);

  const auto a = mv({0.3, -1.2, 2.0});
  const auto z = centroid({1.0, 0.5, -0.7});
  EXPECT_NEAR(aik::mpt_linear(a, mv({9, 9, 9}, {false, false, false}), z),
              aik::cosine(a, aik::MaskedVector::complete(z.mean)), 1e-15);
}

TEST(MptPoly, Examples) {
  EXPECT_DOUBLE_EQ(aik::mpt_poly(mv({1, 0}), mv({1, 0}), centroid({1, 0}), 3, 1.0), 8.0);
  EXPECT_DOUBLE_EQ(aik::mpt_poly(mv({1, 0}), mv({0, 1}), centroid({0, 1}), 5, 0.3), 1.0);
  EXPECT_NEAR(aik::mpt_poly(mv({0, 1}), mv({1, 0}, {true, false}), centroid({0.5, 2}), 3, 1.0), 5.832, 1e-12);
}

TEST(MptRbf, Examples) {
  EXPECT_NEAR(aik::mpt_rbf(mv({2, 0}), mv({1, 0}), centroid({0, 0})), 1.0, 1e-15);
  EXPECT_NEAR(aik::mpt_rbf(mv({-1, 0}), mv({1, 0}), centroid({0, 0}), 1.0), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(aik::mpt_rbf(mv({1, 0}), mv({0, 1}), centroid({0, 1}), 1.0), std::exp(-1.0), 1e-15);
}

TEST(MaskedFamilies, Examples) {
  EXPECT_NEAR(aik::masked_poly(mv({1, 2}), mv({2, 4}), 3, 1.0), 8.0, 1e-12);
  // Common support {0, 1}: cosine of [1,0] and [1,sqrt 3] is 1/2.
  EXPECT_NEAR(aik::masked_poly(mv({1, 0, 5}, {true, true, false}), mv({1, std::sqrt(3.0), 0}), 3, 1.0), 3.375,
              1e-12);

  const auto a = mv({1, 2}, {true, false});
  const auto b = mv({3, 4}, {false, true});
  EXPECT_DOUBLE_EQ(aik::masked_poly(a, b, 3, 1.0), 1.0);
  const auto rbf = aik::masked_rbf_value(a, b, 1.0);
  EXPECT_EQ(rbf.value, 0.0);
  EXPECT_TRUE(rbf.degenerate);
}

TEST(KernelFamily, NamesRoundTrip) {
  for (auto f : {aik::KernelFamily::cosine, aik::KernelFamily::mpc, aik::KernelFamily::mpp,
                 aik::KernelFamily::mpt_linear, aik::KernelFamily::mpt_poly, aik::KernelFamily::mpt_rbf,
                 aik::KernelFamily::masked_poly, aik::KernelFamily::masked_rbf}) {
    EXPECT_EQ(aik::parse_kernel_family(aik::kernel_family_name(f)), f);
  }
  EXPECT_THROW(aik::parse_kernel_family("gaussian"), aik::ConfigError);
}

TEST(KernelSpec, Validation) {
  EXPECT_THROW((aik::KernelSpec{aik::KernelFamily::mpt_poly, 0, 1.0}.validate()), aik::ParameterError);
  EXPECT_THROW((aik::KernelSpec{aik::KernelFamily::mpt_rbf, 3, 0.0}.validate()), aik::ParameterError);
  EXPECT_NO_THROW(aik::KernelSpec{}.validate());
}

TEST(KernelProperties, Reductions) {
  std::mt19937_64 gen(1);
  const auto zero = centroid({0, 0, 0, 0, 0, 0});
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = random_pair(gen, 6, true);
    const double c = aik::cosine(p.a, p.b);
    EXPECT_NEAR(aik::mpc(p.a, p.b), c, 1e-12);
    EXPECT_NEAR(aik::mpt_linear(p.a, p.b, zero), c, 1e-12);
  }
}

TEST(KernelProperties, RangesAndRbfIdentity) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto p = random_pair(gen, 7, false);
    for (double tau2 : {0.5, 1.0, 3.0}) {
      const double lin = aik::mpt_linear(p.a, p.b, p.z);
      const double rbf = aik::mpt_rbf(p.a, p.b, p.z, tau2);
      EXPECT_GE(lin, -1.0 - 1e-15);
      EXPECT_LE(lin, 1.0 + 1e-15);
      EXPECT_GE(rbf, 0.0);
      EXPECT_LE(rbf, 1.0);
      EXPECT_NEAR(rbf, std::exp(-(1.0 - lin) / tau2), 1e-12);
      EXPECT_NEAR(rbf, rbf_oracle(p.a.values(), aik::centroid_augment(p.b, p.z), tau2), 1e-12);

      const double m = aik::mpc(p.a, p.b);
      EXPECT_GE(m, -1.0 - 1e-15);
      EXPECT_LE(m, 1.0 + 1e-15);
      const double mr = aik::masked_rbf(p.a, p.b, tau2);
      EXPECT_GE(mr, 0.0);
      EXPECT_LE(mr, 1.0);
    }
  }
}

TEST(KernelProperties, LeftScaleInvariantRightScaleNot) {
  const auto a = mv({1, 2, -1});
  const auto b = mv({0.5, 0, 2}, {true, false, true});
  const auto z = centroid({1, 1, 1});
  const double base = aik::mpt_linear(a, b, z);
  EXPECT_NEAR(aik::mpt_linear(mv({3, 6, -3}), b, z), base, 1e-15);
  EXPECT_GT(std::abs(aik::mpt_linear(a, mv({5, 0, 20}, {true, false, true}), z) - base), 1e-3);
}

TEST(KernelProperties, MptIsAsymmetric) {
  const auto x0 = mv({1, 1});
  const auto x1 = mv({1, -1});
  const aik::ClassCentroids cs(centroid({1, 0}, aik::Label::positive), centroid({0, 1}, aik::Label::negative));
  const double k01 = aik::mpt_linear(x0, x1, cs.of(aik::Label::negative));
  const double k10 = aik::mpt_linear(x1, x0, cs.of(aik::Label::positive));
  EXPECT_NEAR(k01, 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(k10, 1.0 / std::sqrt(10.0), 1e-15);
  EXPECT_GT(std::abs(k01 - k10), 1e-6);
}

TEST(Gram, SingleCollinearSample) {
  const std::vector<aik::MaskedVector> xs{mv({2, 1})};
  const std::vector<aik::Label> ls{aik::Label::positive};
  const aik::ClassCentroids cs(centroid({2, 1}), std::nullopt);
  const auto g = aik::gram(xs, xs, ls, cs, {aik::KernelFamily::mpt_linear});
  ASSERT_EQ(g.entries.rows(), 1);
  EXPECT_NEAR(g.entries(0, 0), 1.0, 1e-15);
  EXPECT_EQ(g.degenerate, 0u);
}

TEST(Gram, MptAsymmetricAcrossClasses) {
  const std::vector<aik::MaskedVector> xs{mv({1, 1}), mv({1, -1})};
  const std::vector<aik::Label> ls{aik::Label::positive, aik::Label::negative};
  const aik::ClassCentroids cs(centroid({1, 0}, aik::Label::positive), centroid({0, 1}, aik::Label::negative));
  const auto g = aik::gram(xs, xs, ls, cs, {aik::KernelFamily::mpt_linear});
  EXPECT_NEAR(g.entries(0, 1), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(g.entries(1, 0), 1.0 / std::sqrt(10.0), 1e-15);
  EXPECT_GT(g.max_asymmetry(), 1e-6);
}

TEST(Gram, CosineIsSymmetricWithUnitDiagonal) {
  std::mt19937_64 gen(3);
  std::vector<aik::MaskedVector> xs;
  std::vector<aik::Label> ls;
  for (int i = 0; i < 12; ++i) {
    xs.push_back(random_pair(gen, 5, true).a);
    ls.push_back(i % 2 ? aik::Label::positive : aik::Label::negative);
  }
  const auto g = aik::gram(xs, xs, ls, {}, {aik::KernelFamily::cosine});
  EXPECT_LE(g.max_asymmetry(), 1e-15);
  for (Eigen::Index i = 0; i < 12; ++i) EXPECT_NEAR(g.entries(i, i), 1.0, 1e-15);
}

TEST(Gram, MatchesScalarKernelsForEveryFamily) {
  std::mt19937_64 gen(4);
  std::vector<aik::MaskedVector> left, right;
  std::vector<aik::Label> ll, rl;
  for (int i = 0; i < 9; ++i) {
    const auto p = random_pair(gen, 6, false);
    left.push_back(p.a);
    right.push_back(p.b);
    ll.push_back(i % 3 ? aik::Label::positive : aik::Label::negative);
    rl.push_back(i % 2 ? aik::Label::positive : aik::Label::negative);
  }
  const aik::ClassCentroids cs(random_pair(gen, 6, true).z, centroid({0.1, -0.2, 0.3, 0, 1, 2}, aik::Label::negative));
  for (auto f : {aik::KernelFamily::cosine, aik::KernelFamily::mpc, aik::KernelFamily::mpp,
                 aik::KernelFamily::mpt_linear, aik::KernelFamily::mpt_poly, aik::KernelFamily::mpt_rbf,
                 aik::KernelFamily::masked_poly, aik::KernelFamily::masked_rbf}) {
    const aik::KernelSpec spec{f, 2, 0.7};
    const auto g = aik::gram(left, right, rl, cs, spec, ll);
    for (std::size_t i = 0; i < left.size(); ++i) {
      for (std::size_t j = 0; j < right.size(); ++j) {
        const double expect = aik::evaluate(spec, left[i], right[j], rl[j], cs, &ll[i]).value;
        EXPECT_NEAR(g.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), expect, 1e-14)
            << aik::kernel_family_name(f);
      }
    }
  }
}

TEST(Gram, Errors) {
  const std::vector<aik::MaskedVector> xs{mv({1, 1}), mv({1, -1})};
  const std::vector<aik::Label> ls{aik::Label::positive, aik::Label::negative};
  const aik::ClassCentroids only_pos(centroid({1, 0}), std::nullopt);
  EXPECT_THROW(aik::gram(xs, xs, ls, only_pos, {aik::KernelFamily::mpt_linear}), aik::ConfigError);
  const aik::ClassCentroids both(centroid({1, 0}), centroid({0, 1}, aik::Label::negative));
  EXPECT_THROW(aik::gram(xs, xs, ls, both, {aik::KernelFamily::mpp}), aik::PhaseError);
  const std::vector<aik::MaskedVector> wide{mv({1, 1, 1})};
  EXPECT_THROW(aik::gram(wide, xs, ls, both, {aik::KernelFamily::cosine}), aik::ShapeError);
}

TEST(Gram, CountsDegenerateEntries) {
  const std::vector<aik::MaskedVector> left{mv({0, 0}), mv({1, 0})};
  const std::vector<aik::MaskedVector> right{mv({1, 1}), mv({0, 0}, {false, false})};
  const std::vector<aik::Label> rl{aik::Label::positive, aik::Label::positive};
  const auto g = aik::gram(left, right, rl, {}, {aik::KernelFamily::masked_poly, 3, 1.0});
  // Row 0 is all zeros; column 1 has no support.
  EXPECT_EQ(g.degenerate, 3u);
  EXPECT_EQ(g.entries(0, 0), 1.0);
  EXPECT_EQ(g.entries(1, 1), 1.0);
  EXPECT_NEAR(g.entries(1, 0), std::pow(1.0 + 1.0 / std::sqrt(2.0), 3), 1e-12);
}

TEST(Gram, IdenticalAcrossThreadCounts) {
  std::mt19937_64 gen(5);
  std::vector<aik::MaskedVector> xs;
  std::vector<aik::Label> ls;
  for (int i = 0; i < 40; ++i) {
    xs.push_back(random_pair(gen, 8, false).a);
    ls.push_back(i % 2 ? aik::Label::positive : aik::Label::negative);
  }
  const aik::ClassCentroids cs(centroid({1, 0, 0, 0, 0, 0, 0, 1}), centroid({0, 1, 0, 0, 0, 0, 1, 0}, aik::Label::negative));
  aik::set_max_threads(1);
  const auto a = aik::gram(xs, xs, ls, cs, {aik::KernelFamily::mpt_poly});
  aik::set_max_threads(6);
  const auto b = aik::gram(xs, xs, ls, cs, {aik::KernelFamily::mpt_poly});
  aik::set_max_threads(0);
  EXPECT_EQ(a.entries, b.entries);
}
