#include <gtest/gtest.h>

#include "seir_pinn/grid.hpp"
#include "seir_pinn/model.hpp"

using namespace seir;

TEST(ReactionTerms, DiseaseFreeEquilibriumIsStationary) {
  EpidemicParams q;
  const auto f = reaction_terms(q.Lambda / q.mu, 0.0, 0.0, 0.0, q);
  EXPECT_NEAR(f.fS, 0.0, 1e-12);
  EXPECT_EQ(f.fE, 0.0);
  EXPECT_EQ(f.fI, 0.0);
  EXPECT_EQ(f.fR, 0.0);
}

TEST(ReactionTerms, EmptyPopulationOnlyRecruits) {
  EpidemicParams q;
  const auto f = reaction_terms(0, 0, 0, 0, q);
  EXPECT_EQ(f.fS, 1.0);
  EXPECT_EQ(f.fE, 0.0);
  EXPECT_EQ(f.fI, 0.0);
  EXPECT_EQ(f.fR, 0.0);
}

TEST(ReactionTerms, HandEvaluatedPoint) {
  EpidemicParams q;
  const auto f = reaction_terms(0.9, 0.0, 0.05, 0.0, q);
  EXPECT_NEAR(f.fS, 0.973, 1e-12);
  EXPECT_NEAR(f.fE, 0.0054, 1e-12);
  EXPECT_NEAR(f.fI, 0.0021, 1e-12);
  EXPECT_NEAR(f.fR, 0.01, 1e-12);
}

TEST(ReactionTerms, TransfersCancelInTheTotal) {
  EpidemicParams q;
  const double s = 0.7, e = 0.1, i = 0.2, r = 0.05;
  const auto f = reaction_terms(s, e, i, r, q);
  EXPECT_NEAR(f.fS + f.fE + f.fI + f.fR, q.Lambda - q.mu * (s + e + i + r), 1e-15);
}

TEST(CarryingCapacity, Values) {
  EpidemicParams q;
  EXPECT_DOUBLE_EQ(carrying_capacity(q), 100.0);
  q.Lambda = 0.0;
  EXPECT_EQ(carrying_capacity(q), 0.0);
  q.Lambda = q.mu = 0.37;
  EXPECT_EQ(carrying_capacity(q), 1.0);
}

TEST(EpidemicParams, Validation) {
  EpidemicParams q;
  EXPECT_NO_THROW(q.validate());
  q.mu = 0.0;
  EXPECT_THROW(q.validate(), InvalidInput);
  q = EpidemicParams{};
  q.p = 1.5;
  EXPECT_THROW(q.validate(), InvalidInput);
  q = EpidemicParams{};
  q.beta = -0.1;
  EXPECT_THROW(q.validate(), InvalidInput);
}

TEST(InitialConditions, GaussianPeakAtCentre) {
  DomainSpec d;
  InitialConditionSpec spec;
  const GridSpec g = make_grid(1, 101, 1, 1.0, 1.0, 5.0, 1000);
  const auto f = build_initial_conditions(d, g, spec);
  EXPECT_EQ(f.I()[50], spec.seed_amplitude_I);
  EXPECT_EQ(f.E()[50], spec.seed_amplitude_E);
}

TEST(InitialConditions, EvenAboutTheCentre) {
  DomainSpec d;
  InitialConditionSpec spec;
  const GridSpec g = make_grid(1, 101, 1, 1.0, 1.0, 5.0, 1000);
  const auto f = build_initial_conditions(d, g, spec);
  for (int off = 1; off <= 50; ++off) EXPECT_DOUBLE_EQ(f.I()[50 - off], f.I()[50 + off]) << off;
}

TEST(InitialConditions, DefaultSusceptibleIsUniform) {
  DomainSpec d;
  InitialConditionSpec spec;
  const GridSpec g = make_grid(1, 101, 1, 1.0, 1.0, 5.0, 1000);
  const auto f = build_initial_conditions(d, g, spec);
  for (double s : f.S()) EXPECT_EQ(s, 0.9);
  for (double r : f.R()) EXPECT_EQ(r, 0.0);
  EXPECT_TRUE(f.nonnegative());
}

TEST(InitialConditions, TwoDimensionalSeparable) {
  DomainSpec d;
  d.dim = 2;
  InitialConditionSpec spec;
  const GridSpec g = make_grid(2, 21, 21, 1.0, 1.0, 1.0, 10);
  const auto f = build_initial_conditions(d, g, spec);
  EXPECT_EQ(f.I()[10 * 21 + 10], spec.seed_amplitude_I);
  for (int iy = 0; iy < 21; ++iy)
    for (int ix = 0; ix < 21; ++ix) EXPECT_DOUBLE_EQ(f.I()[iy * 21 + ix], f.I()[ix * 21 + iy]);
}

TEST(InitialConditions, RejectsBadSpecs) {
  DomainSpec d;
  const GridSpec g = make_grid(1, 11, 1, 1.0, 1.0, 1.0, 10);
  InitialConditionSpec spec;
  spec.seed_width = 0.0;
  EXPECT_THROW(build_initial_conditions(d, g, spec), InvalidInput);
  spec = InitialConditionSpec{};
  spec.s0_level = -0.1;
  EXPECT_THROW(build_initial_conditions(d, g, spec), InvalidInput);
  spec = InitialConditionSpec{};
  const GridSpec wrong = make_grid(1, 11, 1, 2.0, 1.0, 1.0, 10);
  EXPECT_THROW(build_initial_conditions(d, wrong, spec), InvalidInput);
}

TEST(Grid, Construction) {
  const GridSpec g = make_grid(1, 101, 1, 1.0, 1.0, 5.0, 1000);
  EXPECT_DOUBLE_EQ(g.h, 0.01);
  EXPECT_DOUBLE_EQ(g.k, 0.005);
  EXPECT_DOUBLE_EQ(g.phi, g.k);
  EXPECT_DOUBLE_EQ(MeshRatio(g).r, 50.0);
  EXPECT_EQ(g.x(100), 1.0);
  EXPECT_THROW(make_grid(2, 11, 21, 1.0, 1.0, 1.0, 10), InvalidInput);
  EXPECT_THROW(make_grid(1, 2, 1, 1.0, 1.0, 1.0, 10), InvalidInput);
}

TEST(Grid, ExponentialDenominator) {
  const double mu = 0.01, k = 0.5;
  EXPECT_NEAR(denominator_value(Denominator::Exponential, k, mu), (1.0 - std::exp(-mu * k)) / mu, 1e-15);
  EXPECT_LT(denominator_value(Denominator::Exponential, k, mu), k);
  EXPECT_EQ(denominator_from_name("exponential"), Denominator::Exponential);
  EXPECT_THROW(denominator_from_name("cubic"), InvalidInput);
}

TEST(Compartments, NamesRoundTrip) {
  for (int c = 0; c < 4; ++c)
    EXPECT_EQ(static_cast<int>(compartment_from_name(kCompartmentNames[c])), c);
  EXPECT_THROW(compartment_from_name("X"), InvalidInput);
}
