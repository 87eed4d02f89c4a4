#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ctxslu/errors.hpp"
#include "ctxslu/profile_encoders.hpp"

namespace ctxslu::model {
namespace {

using namespace ctxslu::diff;

constexpr ProfileEncoderDims kDims{.kg_vocab = 12, .d_emb = 6, .d_i = 8, .u = 5, .c = 4};

ParameterStore make_store(std::uint64_t seed = 3) {
  ParameterStore store;
  Rng rng = make_rng(seed);
  add_profile_encoder_params(store, kDims, rng);
  // Xavier biases start at zero; random biases make the tests less forgiving.
  for (auto id : store.ids()) {
    for (double& v : store.tensor(id).values) v += uniform(rng, -0.3, 0.3);
  }
  return store;
}

std::vector<double> encode(const ParameterStore& store, std::vector<EntityTokens> entities) {
  Graph g(store);
  Var h = encode_kg(g, entities, kDims.d_i);
  return {h.values().begin(), h.values().end()};
}

TEST(EncodeKg, ParameterShapes) {
  ParameterStore store = make_store();
  EXPECT_EQ(store.tensor(store.id("kg.embedding")).shape, (Shape{12, 6}));
  EXPECT_EQ(store.tensor(store.id("kg.fwd.Wx")).shape, (Shape{16, 6}));
  EXPECT_EQ(store.tensor(store.id("kg.bwd.Wh")).shape, (Shape{16, 4}));
  EXPECT_EQ(store.tensor(store.id("up.W")).shape, (Shape{5, 8}));
  EXPECT_EQ(store.tensor(store.id("ca.W")).shape, (Shape{4, 8}));
}

TEST(EncodeKg, OddWidthRejected) {
  ParameterStore store;
  Rng rng = make_rng(1);
  ProfileEncoderDims dims = kDims;
  dims.d_i = 7;
  EXPECT_THROW(add_profile_encoder_params(store, dims, rng), DimensionError);
}

TEST(EncodeKg, IdenticalEntitiesMatchSingle) {
  ParameterStore store = make_store();
  const EntityTokens e{1, 4, 2, 7};
  const auto one = encode(store, {e});
  for (std::size_t k : {2, 3, 5}) {
    const auto many = encode(store, std::vector<EntityTokens>(k, e));
    ASSERT_EQ(many.size(), one.size());
    for (std::size_t i = 0; i < one.size(); ++i) EXPECT_NEAR(many[i], one[i], 1e-15) << "k=" << k;
  }
}

TEST(EncodeKg, ZeroParametersGiveZero) {
  ParameterStore store = make_store();
  for (auto id : store.ids()) std::fill(store.tensor(id).values.begin(), store.tensor(id).values.end(), 0.0);
  for (double v : encode(store, {{1, 2, 3}, {4}})) EXPECT_EQ(v, 0.0);
}

TEST(EncodeKg, TwoEntitiesAreMeanOfSingles) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ParameterStore store = make_store(seed);
    const auto a = encode(store, {{3}});
    const auto b = encode(store, {{9}});
    const auto both = encode(store, {{3}, {9}});
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(both[i], 0.5 * (a[i] + b[i]), 1e-12);
  }
}

TEST(EncodeKg, EntityOrderDoesNotMatter) {
  ParameterStore store = make_store();
  const auto ab = encode(store, {{1, 2}, {5, 6, 7}, {3}});
  const auto ba = encode(store, {{3}, {1, 2}, {5, 6, 7}});
  for (std::size_t i = 0; i < ab.size(); ++i) EXPECT_NEAR(ab[i], ba[i], 1e-12);
}

TEST(EncodeKg, TokenOrderMatters) {
  ParameterStore store = make_store();
  EXPECT_NE(encode(store, {{1, 2, 3}}), encode(store, {{3, 2, 1}}));
}

TEST(EncodeKg, HalvesAreForwardAndBackwardFinals) {
  // A single token: both directions see the same input once, so each half is
  // one LSTM step from zero state with that direction's weights.
  ParameterStore store = make_store();
  const auto h = encode(store, {{4}});
  Graph g(store);
  const Var x = embedding_lookup(g.param("kg.embedding"), 4);
  const LstmState zero{g.constant(Tensor::zeros({4})), g.constant(Tensor::zeros({4}))};
  const auto f = lstm_step(lstm_params(g, "kg.fwd"), x, zero).h.values();
  const auto b = lstm_step(lstm_params(g, "kg.bwd"), x, zero).h.values();
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(h[i], f[i]);
    EXPECT_EQ(h[4 + i], b[i]);
  }
}

TEST(EncodeKg, EmptyListGivesZeroVector) {
  ParameterStore store = make_store();
  const auto h = encode(store, {});
  EXPECT_EQ(h, std::vector<double>(8, 0.0));
}

TEST(EncodeKg, EmptyEntityRejected) {
  ParameterStore store = make_store();
  EXPECT_THROW(encode(store, {{1}, {}}), ValidationError);
}

std::vector<double> project(const ParameterStore& store, const std::vector<double>& x, bool up) {
  Graph g(store);
  Var v = g.constant(Tensor::vector(x));
  Var h = up ? project_up(g, v) : project_ca(g, v);
  return {h.values().begin(), h.values().end()};
}

TEST(Projection, IsLinear) {
  ParameterStore store = make_store();
  Rng rng = make_rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(5), y(5);
    for (double& v : x) v = uniform(rng, -1, 1);
    for (double& v : y) v = uniform(rng, -1, 1);
    const double a = uniform(rng, -2, 2), b = uniform(rng, -2, 2);
    std::vector<double> mix(5);
    for (std::size_t i = 0; i < 5; ++i) mix[i] = a * x[i] + b * y[i];
    const auto hx = project(store, x, true), hy = project(store, y, true), hm = project(store, mix, true);
    for (std::size_t j = 0; j < hm.size(); ++j) EXPECT_NEAR(hm[j], a * hx[j] + b * hy[j], 1e-12);
  }
}

TEST(Projection, OneHotSelectsRow) {
  ParameterStore store = make_store();
  const Tensor& w = store.tensor(store.id("ca.W"));
  for (std::size_t r = 0; r < 4; ++r) {
    std::vector<double> x(4, 0.0);
    x[r] = 1.0;
    const auto h = project(store, x, false);
    for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(h[j], w.at(r, j));
  }
}

TEST(Projection, LengthMismatchIsDimensionError) {
  ParameterStore store = make_store();
  EXPECT_THROW(project(store, std::vector<double>(6, 0.1), true), DimensionError);
}

}  // namespace
}  // namespace ctxslu::model
