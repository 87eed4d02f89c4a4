#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ctxslu/diffcore.hpp"
#include "ctxslu/errors.hpp"

namespace ctxslu::diff {
namespace {

Tensor random_tensor(Rng& rng, Shape shape, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.values) v = uniform(rng, -scale, scale);
  return t;
}

std::vector<double> as_vector(Var v) { return {v.values().begin(), v.values().end()}; }

// ---- matmul ---------------------------------------------------------------

TEST(Matmul, IdentityLeavesOperandUnchanged) {
  ParameterStore ps;
  Graph g(ps);
  Var eye = g.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  Var m = g.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  EXPECT_EQ(as_vector(matmul(eye, m)), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Matmul, ZeroOperand) {
  ParameterStore ps;
  Graph g(ps);
  Var r = matmul(g.constant(Tensor::matrix(1, 2, {1, 2})), g.constant(Tensor::matrix(2, 1, {0, 0})));
  EXPECT_EQ(r.shape(), (Shape{1, 1}));
  EXPECT_EQ(as_vector(r), std::vector<double>{0});
}

TEST(Matmul, HandMultiplied) {
  ParameterStore ps;
  Graph g(ps);
  Var r = matmul(g.constant(Tensor::matrix(2, 2, {1, 2, 3, 4})), g.constant(Tensor::matrix(2, 1, {5, 6})));
  // 1*5+2*6 = 17, 3*5+4*6 = 39
  EXPECT_EQ(as_vector(r), (std::vector<double>{17, 39}));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  ParameterStore ps;
  Graph g(ps);
  Var a = g.constant(Tensor::matrix(2, 3, std::vector<double>(6, 1.0)));
  Var b = g.constant(Tensor::matrix(2, 2, std::vector<double>(4, 1.0)));
  try {
    matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("[2x3]"), std::string::npos);
    EXPECT_NE(what.find("[2x2]"), std::string::npos);
  }
}

TEST(Matmul, AgreesWithBruteForceOnRandomShapes) {
  Rng rng = make_rng(11);
  ParameterStore ps;
  Graph g(ps);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + uniform_index(rng, 6), k = 1 + uniform_index(rng, 9), n = 1 + uniform_index(rng, 7);
    Tensor a = random_tensor(rng, {m, k});
    Tensor b = random_tensor(rng, {k, n});
    Var r = matmul(g.constant(a), g.constant(b));
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += a.at(i, p) * b.at(p, j);
        EXPECT_NEAR(r.values()[i * n + j], s, 1e-12);
      }
    }
  }
}

// ---- softmax --------------------------------------------------------------

TEST(Softmax, SymmetricInputIsUniform) {
  ParameterStore ps;
  Graph g(ps);
  auto y = as_vector(softmax(g.constant(Tensor::vector({0, 0, 0}))));
  for (double v : y) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, KnownValues) {
  ParameterStore ps;
  Graph g(ps);
  auto y = as_vector(softmax(g.constant(Tensor::vector({1, 2, 3}))));
  EXPECT_NEAR(y[0], 0.09003057, 1e-8);
  EXPECT_NEAR(y[1], 0.24472847, 1e-8);
  EXPECT_NEAR(y[2], 0.66524096, 1e-8);
}

TEST(Softmax, EmptyInputIsDomainError) {
  ParameterStore ps;
  Graph g(ps);
  Var empty = g.push(OpKind::kConstant, {0}, {}, {}, nullptr);
  EXPECT_THROW(softmax(empty), DomainError);
}

TEST(Softmax, PropertySumsToOneAndShiftInvariant) {
  Rng rng = make_rng(12);
  ParameterStore ps;
  Graph g(ps);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 12);
    Tensor v = random_tensor(rng, {n}, 30.0);
    const double shift = uniform(rng, -100.0, 100.0);
    Tensor shifted = v;
    for (double& x : shifted.values) x += shift;
    auto y = as_vector(softmax(g.constant(v)));
    auto ys = as_vector(softmax(g.constant(shifted)));
    EXPECT_NEAR(std::accumulate(y.begin(), y.end(), 0.0), 1.0, 1e-12);
    for (double p : y) EXPECT_GT(p, 0.0);
    EXPECT_EQ(std::max_element(y.begin(), y.end()) - y.begin(),
              std::max_element(ys.begin(), ys.end()) - ys.begin());
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y[i], ys[i], 1e-12);
  }
}

// ---- embedding ------------------------------------------------------------

TEST(Embedding, IdentityTableRow) {
  ParameterStore ps;
  Graph g(ps);
  Var t = g.constant(Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  EXPECT_EQ(as_vector(embedding_lookup(t, 1)), (std::vector<double>{0, 1, 0}));
  EXPECT_THROW(embedding_lookup(t, 3), IndexError);
}

TEST(Embedding, GradientIsOneHotRow) {
  ParameterStore ps;
  Rng rng = make_rng(13);
  ParamId table = ps.add("table", random_tensor(rng, {4, 3}));
  Graph g(ps);
  GradientMap grads = g.backward(sum(embedding_lookup(g.param(table), 2)));
  std::vector<double> expected(12, 0.0);
  for (std::size_t c = 0; c < 3; ++c) expected[2 * 3 + c] = 1.0;
  EXPECT_EQ(grads.at(table), expected);
}

TEST(Embedding, RepeatedLookupDoublesRowGradient) {
  ParameterStore ps;
  Rng rng = make_rng(14);
  ParamId table = ps.add("table", random_tensor(rng, {4, 3}));
  LossFn loss = [&](Graph& g) {
    Var t = g.param(table);
    Var weights = g.constant(Tensor::vector({0.3, -1.2, 2.0}));
    return add(dot(embedding_lookup(t, 1), weights), dot(embedding_lookup(t, 1), weights));
  };
  Graph g(ps);
  GradientMap grads = g.backward(loss(g));
  EXPECT_NEAR(grads.at(table)[3], 0.6, 1e-15);
  EXPECT_NEAR(grads.at(table)[4], -2.4, 1e-15);
  EXPECT_NEAR(grads.at(table)[5], 4.0, 1e-15);
  auto report = finite_diff_check(loss, ps);
  EXPECT_LT(report.max_rel_error, 1e-8);
}

// ---- LSTM -----------------------------------------------------------------

struct ScalarLstmResult {
  std::vector<double> h, c;
};

// Independent oracle: the textbook cell written element by element.
ScalarLstmResult scalar_lstm(const Tensor& wx, const Tensor& wh, const Tensor& b,
                             const std::vector<double>& x, const std::vector<double>& h,
                             const std::vector<double>& c) {
  const std::size_t hidden = h.size();
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  auto pre = [&](std::size_t row) {
    double z = b.values[row];
    for (std::size_t j = 0; j < x.size(); ++j) z += wx.at(row, j) * x[j];
    for (std::size_t j = 0; j < hidden; ++j) z += wh.at(row, j) * h[j];
    return z;
  };
  ScalarLstmResult out{std::vector<double>(hidden), std::vector<double>(hidden)};
  for (std::size_t k = 0; k < hidden; ++k) {
    const double i = sig(pre(k));
    const double f = sig(pre(hidden + k));
    const double gg = std::tanh(pre(2 * hidden + k));
    const double o = sig(pre(3 * hidden + k));
    out.c[k] = f * c[k] + i * gg;
    out.h[k] = o * std::tanh(out.c[k]);
  }
  return out;
}

LstmParams constant_lstm(Graph& g, const Tensor& wx, const Tensor& wh, const Tensor& b) {
  return {g.constant(wx), g.constant(wh), g.constant(b), wh.shape[1]};
}

TEST(LstmStep, ZeroParamsZeroStateStaysZero) {
  ParameterStore ps;
  Graph g(ps);
  const std::size_t hidden = 3, d_in = 2;
  auto p = constant_lstm(g, Tensor::zeros({4 * hidden, d_in}), Tensor::zeros({4 * hidden, hidden}),
                         Tensor::zeros({4 * hidden}));
  auto s = lstm_step(p, g.constant(Tensor::vector({0.7, -0.2})),
                     {g.constant(Tensor::zeros({hidden})), g.constant(Tensor::zeros({hidden}))});
  EXPECT_EQ(as_vector(s.h), std::vector<double>(hidden, 0.0));
  EXPECT_EQ(as_vector(s.c), std::vector<double>(hidden, 0.0));
}

TEST(LstmStep, ZeroParamsHalveCell) {
  ParameterStore ps;
  Graph g(ps);
  const std::size_t hidden = 2, d_in = 2;
  auto p = constant_lstm(g, Tensor::zeros({4 * hidden, d_in}), Tensor::zeros({4 * hidden, hidden}),
                         Tensor::zeros({4 * hidden}));
  auto s = lstm_step(p, g.constant(Tensor::vector({1, 1})),
                     {g.constant(Tensor::zeros({hidden})), g.constant(Tensor::vector({1.0, 1.0}))});
  for (double c : as_vector(s.c)) EXPECT_DOUBLE_EQ(c, 0.5);
  for (double h : as_vector(s.h)) EXPECT_DOUBLE_EQ(h, 0.5 * std::tanh(0.5));
}

TEST(LstmStep, AgreesWithScalarOracleOnRandomCases) {
  Rng rng = make_rng(15);
  ParameterStore ps;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t hidden = 1 + uniform_index(rng, 8), d_in = 1 + uniform_index(rng, 10);
    Tensor wx = random_tensor(rng, {4 * hidden, d_in});
    Tensor wh = random_tensor(rng, {4 * hidden, hidden});
    Tensor b = random_tensor(rng, {4 * hidden});
    Tensor x = random_tensor(rng, {d_in}, 2.0);
    Tensor h = random_tensor(rng, {hidden});
    Tensor c = random_tensor(rng, {hidden}, 2.0);
    Graph g(ps);
    auto s = lstm_step(constant_lstm(g, wx, wh, b), g.constant(x), {g.constant(h), g.constant(c)});
    auto expected = scalar_lstm(wx, wh, b, x.values, h.values, c.values);
    for (std::size_t k = 0; k < hidden; ++k) {
      EXPECT_NEAR(s.h.values()[k], expected.h[k], 1e-12);
      EXPECT_NEAR(s.c.values()[k], expected.c[k], 1e-12);
    }
  }
}

TEST(LstmStep, ShapeMismatchIsDimensionError) {
  ParameterStore ps;
  Graph g(ps);
  auto p = constant_lstm(g, Tensor::zeros({8, 3}), Tensor::zeros({8, 2}), Tensor::zeros({8}));
  EXPECT_THROW(lstm_step(p, g.constant(Tensor::zeros({4})),
                         {g.constant(Tensor::zeros({2})), g.constant(Tensor::zeros({2}))}),
               DimensionError);
}

TEST(LstmParamsInit, ForgetBiasIsOne) {
  ParameterStore ps;
  Rng rng = make_rng(16);
  add_lstm_params(ps, "cell", 3, 2, rng);
  EXPECT_EQ(ps.tensor(ps.id("cell.b")).values, (std::vector<double>{0, 0, 1, 1, 0, 0, 0, 0}));
  EXPECT_EQ(ps.tensor(ps.id("cell.Wx")).shape, (Shape{8, 3}));
  EXPECT_EQ(ps.tensor(ps.id("cell.Wh")).shape, (Shape{8, 2}));
}

// ---- cross entropy --------------------------------------------------------

TEST(CrossEntropy, Values) {
  ParameterStore ps;
  Graph g(ps);
  EXPECT_EQ(cross_entropy(g.constant(Tensor::vector({0, 1, 0})), 1).scalar(), 0.0);
  EXPECT_NEAR(cross_entropy(g.constant(Tensor::vector({0.25, 0.25, 0.25, 0.25})), 3).scalar(),
              1.3862944, 1e-7);
  EXPECT_NEAR(cross_entropy(g.constant(Tensor::vector({0.7, 0.3})), 1).scalar(), 1.2039728, 1e-7);
  EXPECT_NEAR(cross_entropy(g.constant(Tensor::vector({1.0, 0.0})), 1).scalar(), -std::log(1e-12), 1e-9);
  EXPECT_THROW(cross_entropy(g.constant(Tensor::vector({0.5, 0.5})), 2), IndexError);
}

// ---- backward -------------------------------------------------------------

TEST(Backward, SumOfSquares) {
  ParameterStore ps;
  ParamId x = ps.add("x", Tensor::vector({1, -2, 3}));
  Graph g(ps);
  Var xv = g.param(x);
  GradientMap grads = g.backward(sum(mul(xv, xv)));
  EXPECT_EQ(grads.at(x), (std::vector<double>{2, -4, 6}));
}

TEST(Backward, ConstantRootGivesEmptyMap) {
  ParameterStore ps;
  ps.add("unused", Tensor::vector({1.0}));
  Graph g(ps);
  GradientMap grads = g.backward(sum(g.constant(Tensor::vector({1, 2}))));
  EXPECT_TRUE(grads.empty());
}

TEST(Backward, NonScalarRootIsDomainError) {
  ParameterStore ps;
  ParamId x = ps.add("x", Tensor::vector({1, 2}));
  Graph g(ps);
  EXPECT_THROW(g.backward(g.param(x)), DomainError);
}

TEST(Backward, SecondBackwardAndLaterForwardAreStateErrors) {
  ParameterStore ps;
  ParamId x = ps.add("x", Tensor::vector({1, 2}));
  Graph g(ps);
  Var root = sum(g.param(x));
  g.backward(root);
  EXPECT_TRUE(g.sealed());
  EXPECT_THROW(g.backward(root), StateError);
  EXPECT_THROW(sum(g.param(x)), StateError);
}

TEST(Backward, LinearityOverSumOfLosses) {
  Rng rng = make_rng(17);
  ParameterStore ps;
  ParamId w = ps.add("w", random_tensor(rng, {4, 3}));
  ParamId v = ps.add("v", random_tensor(rng, {3}));
  auto loss_a = [&](Graph& g) { return sum(tanh(matvec(g.param(w), g.param(v)))); };
  auto loss_b = [&](Graph& g) { return dot(softmax(matvec(g.param(w), g.param(v))), g.constant(Tensor::vector({1, 2, 3, 4}))); };
  GradientMap ga, gb, gab;
  { Graph g(ps); g.backward(loss_a(g), ga); }
  { Graph g(ps); g.backward(loss_b(g), gb); }
  { Graph g(ps); g.backward(add(loss_a(g), loss_b(g)), gab); }
  for (ParamId id : {w, v}) {
    for (std::size_t i = 0; i < gab.at(id).size(); ++i) {
      EXPECT_NEAR(gab.at(id)[i], ga.at(id)[i] + gb.at(id)[i], 1e-12);
    }
  }
}

// ---- finite differences ----------------------------------------------------

TEST(FiniteDiff, QuadraticLoss) {
  Rng rng = make_rng(18);
  ParameterStore ps;
  ParamId theta = ps.add("theta", random_tensor(rng, {5}));
  auto report = finite_diff_check([&](Graph& g) { Var t = g.param(theta); return dot(t, t); }, ps);
  EXPECT_LT(report.max_rel_error, 1e-8);
  EXPECT_EQ(report.scalars_checked, 5u);
}

TEST(FiniteDiff, IndependentParameterHasZeroError) {
  ParameterStore ps;
  ParamId used = ps.add("used", Tensor::vector({0.5, 1.5}));
  ps.add("unused", Tensor::vector({3.0}));
  auto report = finite_diff_check([&](Graph& g) { return sum(tanh(g.param(used))); }, ps);
  ASSERT_EQ(report.entries.size(), 2u);
  EXPECT_EQ(report.entries[1].max_rel_error, 0.0);
  EXPECT_EQ(report.entries[1].worst_autodiff, 0.0);
  EXPECT_EQ(report.entries[1].worst_numeric, 0.0);
}

TEST(FiniteDiff, RejectsNondeterministicLoss) {
  ParameterStore ps;
  ParamId x = ps.add("x", Tensor::vector({1.0}));
  int calls = 0;
  auto loss = [&](Graph& g) {
    ++calls;
    return sum(scale(g.param(x), static_cast<double>(calls)));
  };
  EXPECT_THROW(finite_diff_check(loss, ps), DeterminismError);
}

TEST(FiniteDiff, RejectsEpsOutOfRange) {
  ParameterStore ps;
  ParamId x = ps.add("x", Tensor::vector({1.0}));
  GradCheckOptions opts;
  opts.eps = 0.5;
  EXPECT_THROW(finite_diff_check([&](Graph& g) { return sum(g.param(x)); }, ps, opts), DomainError);
}

TEST(FiniteDiff, TermsMatchSingleLoss) {
  Rng rng = make_rng(19);
  ParameterStore ps;
  ParamId theta = ps.add("theta", random_tensor(rng, {6}));
  const auto single = finite_diff_check([&](Graph& g) { return sum(tanh(g.param(theta))); }, ps);
  const auto terms = finite_diff_check(
      [&](Graph& g) {
        Var t = tanh(g.param(theta));
        return std::vector<Var>{sum(slice(t, 0, 3)), sum(slice(t, 3, 6))};
      },
      ps);
  EXPECT_LT(terms.max_rel_error, 1e-8);
  EXPECT_EQ(terms.scalars_checked, single.scalars_checked);
}

TEST(FiniteDiff, EmptyTermsRejected) {
  ParameterStore ps;
  ps.add("x", Tensor::vector({1.0}));
  EXPECT_THROW(finite_diff_check([](Graph&) { return std::vector<Var>{}; }, ps), DomainError);
}

TEST(FiniteDiff, LargestOnlyPicksBiggestGradients) {
  // d/dx_i sum(c_i x_i) = c_i; a wrong gradient on the smallest entry would
  // only be found by the sampled mode.
  ParameterStore ps;
  ParamId x = ps.add("x", Tensor::vector({0, 0, 0, 0, 0, 0}));
  auto loss = [&](Graph& g) { return dot(g.param(x), g.constant(Tensor::vector({6, 5, 4, 3, 2, 1}))); };
  const auto report = finite_diff_check(loss, ps, {.max_entries_per_tensor = 2, .largest_only = true});
  ASSERT_EQ(report.entries.size(), 1u);
  EXPECT_EQ(report.entries[0].checked, 2u);
  EXPECT_GE(std::abs(report.entries[0].worst_autodiff), 5.0);
}

// Every operation kind in isolation, composed into a scalar with a fixed
// random projection so no gradient is trivially uniform.
class OpGradCheck : public ::testing::Test {
 protected:
  void check(const std::function<Var(Graph&)>& build) {
    auto loss = [&](Graph& g) {
      Var out = build(g);
      Rng proj_rng = make_rng(99);
      Tensor proj = random_tensor(proj_rng, out.shape().empty() ? Shape{1} : Shape{out.values().size()});
      if (out.shape().empty()) return scale(out, proj.values[0]);
      Var flat = out.shape().size() == 1 ? out : slice(as_flat(g, out), 0, out.values().size());
      return dot(flat, g.constant(proj));
    };
    auto report = finite_diff_check(loss, ps);
    EXPECT_LT(report.max_rel_error, 1e-6);
  }
  static Var as_flat(Graph&, Var m) {
    // Flatten a matrix by stacking its rows into one vector.
    std::vector<Var> rows;
    for (std::size_t r = 0; r < m.shape()[0]; ++r) rows.push_back(row(m, r));
    return concat(rows);
  }
  ParamId p(const std::string& name, Shape s) { return ps.add(name, random_tensor(rng, std::move(s))); }
  Rng rng = make_rng(20);
  ParameterStore ps;
};

TEST_F(OpGradCheck, Matmul) {
  auto a = p("a", {3, 4}), b = p("b", {4, 2});
  check([&](Graph& g) { return matmul(g.param(a), g.param(b)); });
}
TEST_F(OpGradCheck, MatmulNT) {
  auto a = p("a", {3, 4}), b = p("b", {5, 4});
  check([&](Graph& g) { return matmul_nt(g.param(a), g.param(b)); });
}
TEST_F(OpGradCheck, MatvecAndVecmat) {
  auto w = p("w", {3, 4}), x = p("x", {4}), y = p("y", {3});
  check([&](Graph& g) { return concat({matvec(g.param(w), g.param(x)), vecmat(g.param(y), g.param(w))}); });
}
TEST_F(OpGradCheck, ElementwiseArithmetic) {
  auto a = p("a", {5}), b = p("b", {5});
  check([&](Graph& g) {
    Var x = g.param(a), y = g.param(b);
    return concat({add(x, y), sub(x, y), mul(x, y), scale(x, -1.7)});
  });
}
TEST_F(OpGradCheck, Nonlinearities) {
  auto a = p("a", {6});
  check([&](Graph& g) { return concat({tanh(g.param(a)), sigmoid(g.param(a))}); });
}
TEST_F(OpGradCheck, StructuralOps) {
  auto a = p("a", {4}), b = p("b", {4}), m = p("m", {2, 3});
  check([&](Graph& g) {
    std::vector<Var> rows{g.param(a), g.param(b)};
    Var stacked = stack_rows(rows);
    Var both = concat_cols(stacked, g.param(m));
    return concat({row(both, 1), slice(g.param(a), 1, 3)});
  });
}
TEST_F(OpGradCheck, SoftmaxFamilies) {
  auto a = p("a", {5}), m = p("m", {3, 4});
  check([&](Graph& g) { return concat({softmax(g.param(a)), as_flat(g, softmax_rows(g.param(m)))}); });
}
TEST_F(OpGradCheck, Reductions) {
  auto a = p("a", {5}), b = p("b", {5});
  check([&](Graph& g) { return add(sum(g.param(a)), dot(g.param(a), g.param(b))); });
}
TEST_F(OpGradCheck, EmbeddingAndCrossEntropy) {
  auto t = p("t", {4, 3});
  check([&](Graph& g) {
    Var e = embedding_lookup(g.param(t), 2);
    return add(cross_entropy(softmax(e), 1), cross_entropy(softmax(embedding_lookup(g.param(t), 0)), 2));
  });
}
TEST_F(OpGradCheck, LstmStepThroughTwoSteps) {
  add_lstm_params(ps, "cell", 3, 4, rng);
  for (double& v : ps.tensor(ps.id("cell.b")).values) v += uniform(rng, -0.5, 0.5);
  auto x0 = p("x0", {3}), x1 = p("x1", {3}), h0 = p("h0", {4}), c0 = p("c0", {4});
  check([&](Graph& g) {
    LstmParams lp = lstm_params(g, "cell");
    LstmState s{g.param(h0), g.param(c0)};
    s = lstm_step(lp, g.param(x0), s);
    s = lstm_step(lp, g.param(x1), s);
    return concat({s.h, s.c});
  });
}

}  // namespace
}  // namespace ctxslu::diff
