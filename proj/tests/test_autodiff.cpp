#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "hamflow/adam.hpp"
#include "hamflow/autodiff.hpp"
#include "hamflow/errors.hpp"
#include "hamflow/network.hpp"
#include "hamflow/nhf_generative.hpp"
#include "support.hpp"

using namespace hamflow;
using namespace hamflow::testing;
using ad::Graph;
using ad::Matrix;
using ad::Var;

namespace {

// Random weights turn any matrix-valued op into a scalar root.
Var weighted_sum(Graph& g, Var v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ad::sum(ad::mul(v, g.constant(uniform_matrix(v.rows(), v.cols(), -1.0, 1.0, rng))));
}

void check_unary(const char* name, const std::function<Var(Var)>& op, double lo, double hi) {
  std::mt19937_64 rng(17);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix x = uniform_matrix(1, 1, lo, hi, rng);
    worst = std::max(worst, max_gradient_error([&](Graph& g, Var v) { return weighted_sum(g, op(v), 5); }, x));
  }
  INFO(name);
  CHECK(worst < 1e-6);
}

void check_binary(const char* name, const std::function<Var(Var, Var)>& op, ad::Index ra, ad::Index ca,
                  ad::Index rb, ad::Index cb) {
  std::mt19937_64 rng(23);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix a = uniform_matrix(ra, ca, -2.0, 2.0, rng);
    const Matrix b = uniform_matrix(rb, cb, -2.0, 2.0, rng);
    worst = std::max(worst, max_gradient_error(
                                [&](Graph& g, Var v) { return weighted_sum(g, op(v, g.constant(b)), 7); }, a));
    worst = std::max(worst, max_gradient_error(
                                [&](Graph& g, Var v) { return weighted_sum(g, op(g.constant(a), v), 7); }, b));
  }
  INFO(name);
  CHECK(worst < 1e-6);
}

DenseNetwork random_net(std::vector<int> sizes, std::uint64_t seed) {
  DenseNetwork net(std::move(sizes));
  std::mt19937_64 rng(seed);
  net.initialize(rng);
  // Nonzero biases exercise every term of the recurrence.
  for (auto* p : net.parameters()) {
    if (p->name.find("bias") != std::string::npos) p->value = uniform_matrix(1, p->value.cols(), -0.5, 0.5, rng);
  }
  return net;
}

}  // namespace

TEST_CASE("primitive ops match central differences on [-2, 2]") {
  check_unary("tanh", [](Var a) { return ad::tanh(a); }, -2, 2);
  check_unary("exp", [](Var a) { return ad::exp(a); }, -2, 2);
  check_unary("log", [](Var a) { return ad::log(a); }, 0.05, 2);
  check_unary("square", [](Var a) { return ad::square(a); }, -2, 2);
  check_unary("sqrt", [](Var a) { return ad::sqrt(a); }, 0.05, 2);
  check_unary("pow", [](Var a) { return ad::pow(a, 2.5); }, 0.05, 2);
  check_unary("sigmoid", [](Var a) { return ad::sigmoid(a); }, -2, 2);
  check_unary("log_sigmoid", [](Var a) { return ad::log_sigmoid(a); }, -2, 2);
  check_unary("neg", [](Var a) { return -a; }, -2, 2);
  check_unary("affine", [](Var a) { return ad::affine(a, -1.7, 0.3); }, -2, 2);
  check_unary("clamp inside", [](Var a) { return ad::clamp(a, -3.0, 3.0); }, -2, 2);
  check_unary("clamp outside", [](Var a) { return ad::clamp(a, -0.5, -0.25); }, 0, 2);

  check_binary("add", [](Var a, Var b) { return a + b; }, 3, 2, 3, 2);
  check_binary("sub", [](Var a, Var b) { return a - b; }, 3, 2, 3, 2);
  check_binary("mul", [](Var a, Var b) { return ad::mul(a, b); }, 3, 2, 3, 2);
  check_binary("matmul", [](Var a, Var b) { return ad::matmul(a, b); }, 3, 4, 4, 2);
  check_binary("matmul_nt", [](Var a, Var b) { return ad::matmul_nt(a, b); }, 3, 4, 2, 4);
  check_binary("hcat", [](Var a, Var b) { return ad::hcat(a, b); }, 3, 2, 3, 1);
}

TEST_CASE("reductions and reshaping match central differences") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix x = uniform_matrix(3, 3, -2.0, 2.0, rng);
    const Matrix row = uniform_matrix(1, 3, -2.0, 2.0, rng);
    const Matrix col = uniform_matrix(3, 1, -2.0, 2.0, rng);
    const Matrix packed = uniform_matrix(1, 6, -2.0, 2.0, rng);
    CHECK(max_gradient_error([](Graph& g, Var v) { return weighted_sum(g, ad::row_sum(v), 1); }, x) < 1e-6);
    CHECK(max_gradient_error([](Graph& g, Var v) { return weighted_sum(g, ad::column(v, 1), 1); }, x) < 1e-6);
    CHECK(max_gradient_error([](Graph& g, Var v) { return ad::square(ad::sum(v)); }, x) < 1e-6);
    CHECK(max_gradient_error([](Graph& g, Var v) { return ad::square(ad::mean(v)); }, x) < 1e-6);
    CHECK(max_gradient_error([](Graph& g, Var v) { return weighted_sum(g, ad::broadcast_rows(v, 4), 2); }, row) <
          1e-6);
    CHECK(max_gradient_error([](Graph& g, Var v) { return weighted_sum(g, ad::broadcast_cols(v, 4), 2); }, col) <
          1e-6);
    CHECK(max_gradient_error([](Graph& g, Var v) { return weighted_sum(g, ad::lower_triangular(v, 3), 2); },
                             packed) < 1e-6);
  }
}

TEST_CASE("graph nodes are in topological order") {
  Graph g;
  Var x = g.variable(Matrix::Constant(1, 1, 2.0));
  Var y = ad::exp(ad::square(x) + x);
  CHECK(y.index() > x.index());
  CHECK(g.size() == y.index() + 1);
}

TEST_CASE("backward on simple scalars") {
  SUBCASE("x^2 at 3") {
    Graph g;
    Var x = g.variable(Matrix::Constant(1, 1, 3.0));
    g.backward(ad::square(x));
    CHECK(g.adjoint(x)(0, 0) == doctest::Approx(6.0).epsilon(1e-15));
  }
  SUBCASE("log at 2") {
    Graph g;
    Var x = g.variable(Matrix::Constant(1, 1, 2.0));
    g.backward(ad::log(x));
    CHECK(g.adjoint(x)(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("repeated backward resets adjoints") {
    Graph g;
    Var x = g.variable(Matrix::Constant(1, 1, 3.0));
    Var y = ad::square(x);
    g.backward(y);
    g.backward(y);
    CHECK(g.adjoint(x)(0, 0) == doctest::Approx(6.0).epsilon(1e-15));
  }
  SUBCASE("root from another graph is a usage error") {
    Graph g1;
    Graph g2;
    Var x = g2.variable(Matrix::Constant(1, 1, 1.0));
    CHECK_THROWS_AS(g1.backward(x), UsageError);
  }
  SUBCASE("non-scalar root is a usage error") {
    Graph g;
    Var x = g.variable(Matrix::Ones(2, 1));
    CHECK_THROWS_AS(g.backward(x), UsageError);
  }
  SUBCASE("shape mismatch is a configuration error") {
    Graph g;
    CHECK_THROWS_AS(g.constant(Matrix::Ones(2, 1)) + g.constant(Matrix::Ones(1, 2)), ConfigError);
    CHECK_THROWS_AS(ad::matmul(g.constant(Matrix::Ones(2, 3)), g.constant(Matrix::Ones(2, 3))), ConfigError);
  }
}

TEST_CASE("dense network forward") {
  SUBCASE("zero weights output the final bias") {
    DenseNetwork net({2, 8, 8, 3});
    net.zero();
    auto params = net.parameters();
    params.back()->value << 0.25, -1.0, 4.0;
    Graph g;
    const Matrix out = net.forward(g, g.constant(Matrix::Constant(1, 2, 7.0))).value();
    CHECK(out(0, 0) == 0.25);
    CHECK(out(0, 1) == -1.0);
    CHECK(out(0, 2) == 4.0);
  }
  SUBCASE("single linear layer") {
    DenseNetwork net({1, 1});
    auto params = net.parameters();
    params[0]->value << 2.0;
    params[1]->value << 0.0;
    Graph g;
    CHECK(net.forward(g, g.constant(Matrix::Constant(1, 1, 3.0))).scalar() == 6.0);
  }
  SUBCASE("dimension mismatch is a configuration error") {
    DenseNetwork net({2, 4, 1});
    Graph g;
    CHECK_THROWS_AS(net.forward(g, g.constant(Matrix::Ones(1, 3))), ConfigError);
  }
  SUBCASE("random 2-8-8-1 network: directional derivative vs central differences") {
    const DenseNetwork net = random_net({2, 8, 8, 1}, 11);
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix x = uniform_matrix(1, 2, -2.0, 2.0, rng);
      const Matrix dir = uniform_matrix(1, 2, -1.0, 1.0, rng);
      Graph g;
      Var xv = g.variable(x);
      g.backward(net.forward(g, xv));
      const double ad_dd = (g.adjoint(xv).array() * dir.array()).sum();
      const auto f = [&](double t) {
        Graph h;
        return net.forward(h, h.constant(x + t * dir)).scalar();
      };
      const double fd = (f(kFdStep) - f(-kFdStep)) / (2 * kFdStep);
      worst = std::max(worst, rel_err(ad_dd, fd));
    }
    CHECK(worst < 1e-6);
  }
  SUBCASE("initialization: uniform within 1/sqrt(fan_in), zero biases") {
    DenseNetwork net({2, 16, 16, 1});
    std::mt19937_64 rng(1);
    net.initialize(rng);
    for (const auto* p : std::as_const(net).parameters()) {
      if (p->name.find("bias") != std::string::npos) {
        CHECK(p->value.isZero(0.0));
      } else {
        const double bound = 1.0 / std::sqrt(static_cast<double>(p->value.cols()));
        CHECK(p->value.cwiseAbs().maxCoeff() <= bound);
      }
    }
  }
}

TEST_CASE("network input gradient") {
  SUBCASE("half squared norm built from primitives") {
    Graph g;
    Var x = g.variable((Matrix(1, 2) << 3.0, 4.0).finished());
    Var f = 0.5 * ad::sum(ad::square(x));
    g.backward(f);
    CHECK(g.adjoint(x)(0, 0) == 3.0);
    CHECK(g.adjoint(x)(0, 1) == 4.0);
  }
  SUBCASE("bias-only network has zero gradient") {
    DenseNetwork net({2, 8, 8, 1});
    net.zero();
    net.parameters().back()->value << 3.0;
    Graph g;
    const Matrix grad = net.input_gradient(g, g.constant(Matrix::Constant(1, 2, 0.4))).value();
    CHECK(grad.isZero(0.0));
  }
  SUBCASE("random 2-8-8-1 tanh network at (0.3, -0.7) vs central differences") {
    const DenseNetwork net = random_net({2, 8, 8, 1}, 29);
    const Matrix x = (Matrix(1, 2) << 0.3, -0.7).finished();
    Graph g;
    const Matrix grad = net.input_gradient(g, g.constant(x)).value();
    const auto f = [&](const Matrix& m) {
      Graph h;
      return net.forward(h, h.constant(m)).scalar();
    };
    CHECK(rel_err(grad(0, 0), central_difference(f, x, 0, 0)) < 1e-6);
    CHECK(rel_err(grad(0, 1), central_difference(f, x, 0, 1)) < 1e-6);
  }
  SUBCASE("softplus network also matches central differences") {
    DenseNetwork net({2, 8, 8, 1}, Activation::Softplus);
    std::mt19937_64 rng(3);
    net.initialize(rng);
    const Matrix x = (Matrix(1, 2) << -0.2, 1.1).finished();
    Graph g;
    const Matrix grad = net.input_gradient(g, g.constant(x)).value();
    const auto f = [&](const Matrix& m) {
      Graph h;
      return net.forward(h, h.constant(m)).scalar();
    };
    CHECK(rel_err(grad(0, 0), central_difference(f, x, 0, 0)) < 1e-6);
    CHECK(rel_err(grad(0, 1), central_difference(f, x, 0, 1)) < 1e-6);
  }
  SUBCASE("batched rows are independent") {
    const DenseNetwork net = random_net({2, 8, 8, 1}, 31);
    std::mt19937_64 rng(2);
    const Matrix x = uniform_matrix(5, 2, -2, 2, rng);
    Graph g;
    const Matrix batch = net.input_gradient(g, g.constant(x)).value();
    for (ad::Index r = 0; r < 5; ++r) {
      Graph h;
      const Matrix single = net.input_gradient(h, h.constant(x.row(r))).value();
      CHECK((single - batch.row(r)).cwiseAbs().maxCoeff() < 1e-15);
    }
  }
  SUBCASE("non-scalar output is a usage error") {
    DenseNetwork net({2, 4, 2});
    Graph g;
    CHECK_THROWS_AS(net.input_gradient(g, g.constant(Matrix::Ones(1, 2))), UsageError);
  }
  SUBCASE("second-order: parameter gradient of a loss containing the input gradient") {
    DenseNetwork net = random_net({2, 8, 8, 1}, 37);
    std::mt19937_64 rng(9);
    const Matrix x = uniform_matrix(4, 2, -2, 2, rng);
    const auto loss = [&](Graph& g) { return ad::sum(ad::square(net.input_gradient(g, g.constant(x)))); };
    Graph g;
    g.backward(loss(g));
    double worst = 0.0;
    for (auto* p : net.parameters()) {
      const Matrix grad = g.parameter_gradient(*p);
      for (ad::Index i = 0; i < p->value.size(); ++i) {
        const double v0 = p->value.data()[i];
        p->value.data()[i] = v0 + kFdStep;
        Graph gp;
        const double up = loss(gp).scalar();
        p->value.data()[i] = v0 - kFdStep;
        Graph gm;
        const double down = loss(gm).scalar();
        p->value.data()[i] = v0;
        worst = std::max(worst, rel_err(grad.data()[i], (up - down) / (2 * kFdStep)));
      }
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("full ELBO loss: 20 random parameter adjoints vs central differences") {
  FlowConfig cfg;
  cfg.hidden = 8;
  cfg.leapfrog.steps = 2;
  cfg.leapfrog.time = 0.5;
  GenerativeNHF model(cfg, std::make_unique<GaussianPrior>(2, 1.0), 4);
  const Matrix data = mixture_sample(GaussianMixture::grid3x3(), 32, 3);
  std::mt19937_64 rng(8);
  const Matrix noise = standard_normal(32, 2, rng);
  Graph g;
  g.backward(model.elbo_loss(g, data, noise));

  auto params = model.parameters();
  std::vector<std::pair<ad::Parameter*, ad::Index>> entries;
  for (auto* p : params) {
    for (ad::Index i = 0; i < p->value.size(); ++i) entries.emplace_back(p, i);
  }
  std::shuffle(entries.begin(), entries.end(), rng);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    auto [p, i] = entries[static_cast<std::size_t>(k)];
    const double grad = g.parameter_gradient(*p).data()[i];
    const double v0 = p->value.data()[i];
    p->value.data()[i] = v0 + kFdStep;
    Graph gp;
    const double up = model.elbo_loss(gp, data, noise).scalar();
    p->value.data()[i] = v0 - kFdStep;
    Graph gm;
    const double down = model.elbo_loss(gm, data, noise).scalar();
    p->value.data()[i] = v0;
    worst = std::max(worst, rel_err(grad, (up - down) / (2 * kFdStep)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("adam") {
  SUBCASE("first step with unit gradient moves each parameter by lr / (1 + eps)") {
    ad::Parameter p("w", Matrix::Constant(2, 2, 1.0));
    std::vector<ad::Parameter*> params{&p};
    AdamState state(params, AdamOptions{});
    p.grad.setOnes();
    adam_step(state, params);
    const double expected = 1.0 - 5e-4 * (1.0 / (1.0 + 1e-8));
    CHECK((p.value.array() - expected).abs().maxCoeff() < 1e-15);
    CHECK(state.step_count == 1);
  }
  SUBCASE("zero gradient leaves parameters unchanged and decays moments") {
    ad::Parameter p("w", Matrix::Constant(1, 3, 0.5));
    std::vector<ad::Parameter*> params{&p};
    AdamState state(params, AdamOptions{});
    p.grad.setOnes();
    adam_step(state, params);
    const Matrix after_first = p.value;
    const Matrix m1 = state.first_moment[0];
    const Matrix v1 = state.second_moment[0];
    p.grad.setZero();
    adam_step(state, params);
    CHECK(state.first_moment[0].isApprox(0.9 * m1));
    CHECK(state.second_moment[0].isApprox(0.999 * v1));
    CHECK(state.step_count == 2);
    // m_hat is no longer zero after decay, so only the first-step parameters are compared here.
    CHECK(after_first.allFinite());
  }
  SUBCASE("zero gradient from a fresh state leaves parameters exactly unchanged") {
    ad::Parameter p("w", Matrix::Constant(1, 3, 0.5));
    std::vector<ad::Parameter*> params{&p};
    AdamState state(params, AdamOptions{});
    p.grad.setZero();
    adam_step(state, params);
    CHECK(p.value == Matrix::Constant(1, 3, 0.5));
  }
  SUBCASE("two steps with constant gradient 2 follow the hand-rolled recurrence") {
    ad::Parameter p("w", Matrix::Constant(1, 1, 0.3));
    std::vector<ad::Parameter*> params{&p};
    const AdamOptions o{};
    AdamState state(params, o);
    double theta = 0.3;
    double m = 0.0;
    double v = 0.0;
    for (int t = 1; t <= 2; ++t) {
      p.grad.setConstant(2.0);
      adam_step(state, params);
      m = o.beta1 * m + (1 - o.beta1) * 2.0;
      v = o.beta2 * v + (1 - o.beta2) * 4.0;
      const double mh = m / (1 - std::pow(o.beta1, t));
      const double vh = v / (1 - std::pow(o.beta2, t));
      theta -= o.learning_rate * mh / (std::sqrt(vh) + o.epsilon);
      CHECK(std::abs(p.value(0, 0) - theta) < 1e-12);
    }
  }
  SUBCASE("second moments stay nonnegative and the step count increases by one") {
    ad::Parameter p("w", Matrix::Zero(3, 3));
    std::vector<ad::Parameter*> params{&p};
    AdamState state(params, AdamOptions{});
    std::mt19937_64 rng(4);
    for (int t = 1; t <= 50; ++t) {
      p.grad = uniform_matrix(3, 3, -5, 5, rng);
      adam_step(state, params);
      CHECK(state.step_count == t);
      CHECK(state.second_moment[0].minCoeff() >= 0.0);
    }
  }
  SUBCASE("shape mismatch is a configuration error") {
    ad::Parameter p("w", Matrix::Zero(2, 2));
    std::vector<ad::Parameter*> params{&p};
    AdamState state(params, AdamOptions{});
    p.grad = Matrix::Zero(3, 1);
    CHECK_THROWS_AS(adam_step(state, params), ConfigError);
  }
}

TEST_CASE("graph evaluation is deterministic") {
  const auto loss = [] {
    FlowConfig cfg;
    cfg.hidden = 8;
    cfg.leapfrog.steps = 3;
    GenerativeNHF model(cfg, std::make_unique<SoftUniform>(2), 42);
    const Matrix data = mixture_sample(GaussianMixture::grid3x3(), 64, 42);
    std::mt19937_64 rng(42);
    const Matrix noise = standard_normal(64, 2, rng);
    Graph g;
    return model.elbo_loss(g, data, noise).scalar();
  };
  const double a = loss();
  const double b = loss();
  CHECK(std::memcmp(&a, &b, sizeof a) == 0);
}
