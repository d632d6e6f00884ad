#include <doctest.h>

#include <cmath>
#include <random>

#include "hpred/error.hpp"
#include "hpred/nn.hpp"

using namespace hpred;
using nn::DenseNetwork;

namespace {

// Straightforward forward pass written out loop by loop.
std::vector<double> reference_forward(const DenseNetwork& net, std::vector<double> a) {
  const auto& sizes = net.layer_sizes();
  const auto p = net.parameters();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t in = sizes[l], out = sizes[l + 1];
    std::vector<double> next(out);
    for (std::size_t o = 0; o < out; ++o) {
      double z = p[off + in * out + o];
      for (std::size_t i = 0; i < in; ++i) z += p[off + o * in + i] * a[i];
      next[o] = l + 2 < sizes.size() ? std::tanh(z) : z;
    }
    off += in * out + out;
    a = next;
  }
  return a;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den = std::max(den, std::max(a[i] * a[i], b[i] * b[i]));
  }
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(std::max(na, nb)), 1e-12);
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST_CASE("parameter count") {
  const std::vector<std::size_t> sizes{3, 4, 2};
  CHECK(nn::parameter_count_for(sizes) == 3 * 4 + 4 + 4 * 2 + 2);
  CHECK(DenseNetwork(sizes).parameter_count() == 26);
  CHECK_THROWS_AS(DenseNetwork({3}), Error);
}

TEST_CASE("zero network outputs zero") {
  const DenseNetwork net({3, 4, 2});
  const std::vector<double> x{1, -2, 3};
  CHECK(net.forward(x) == std::vector<double>{0, 0});
  CHECK_THROWS_AS(net.forward(std::vector<double>{1, 2}), Error);
}

TEST_CASE("identity linear layer passes input through") {
  DenseNetwork net({3, 3});
  auto p = net.parameters();
  for (std::size_t i = 0; i < 3; ++i) p[i * 3 + i] = 1.0;
  const std::vector<double> x{0.5, -1.5, 2.0};
  CHECK(net.forward(x) == x);
}

TEST_CASE("forward matches the reference implementation") {
  std::mt19937_64 rng(4);
  const auto net = DenseNetwork::glorot({3, 4, 2}, rng);
  const std::vector<double> x{0.3, -0.7, 1.1};
  const auto y = net.forward(x);
  const auto ref = reference_forward(net, x);
  for (std::size_t i = 0; i < 2; ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-14));
  CHECK(net.forward(x) == y);  // bitwise repeatable
}

TEST_CASE("glorot init stays within its bound") {
  std::mt19937_64 rng(1);
  const auto net = DenseNetwork::glorot({50, 64}, rng);
  const double bound = std::sqrt(6.0 / (50 + 64));
  const auto p = net.parameters();
  for (std::size_t i = 0; i < 50 * 64; ++i) CHECK(std::abs(p[i]) <= bound);
  for (std::size_t i = 50 * 64; i < p.size(); ++i) CHECK(p[i] == 0.0);
}

TEST_CASE("reverse-mode gradient matches central differences") {
  std::mt19937_64 rng(9);
  // Small nets plus the CVAE encoder and decoder shapes.
  const std::vector<std::vector<std::size_t>> shapes{
      {3, 4, 2}, {5, 7, 6, 3}, {70, 64, 64, 16}, {58, 64, 64, 20}};
  for (const auto& shape : shapes) {
    auto net = DenseNetwork::glorot(shape, rng);
    const auto x = random_vector(shape.front(), rng);
    const auto up = random_vector(shape.back(), rng);
    const auto g = net.gradient(x, up);
    const double h = 1e-5;
    std::vector<double> fd(net.parameter_count());
    auto p = net.parameters();
    for (std::size_t k = 0; k < fd.size(); ++k) {
      const double keep = p[k];
      p[k] = keep + h;
      const double plus = dot(net.forward(x), up);
      p[k] = keep - h;
      const double minus = dot(net.forward(x), up);
      p[k] = keep;
      fd[k] = (plus - minus) / (2 * h);
    }
    CHECK(relative_error(g.parameters, fd) < 1e-4);
    std::vector<double> fd_in(x.size());
    auto xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xp[i] = x[i] + h;
      const double plus = dot(net.forward(xp), up);
      xp[i] = x[i] - h;
      const double minus = dot(net.forward(xp), up);
      xp[i] = x[i];
      fd_in[i] = (plus - minus) / (2 * h);
    }
    CHECK(relative_error(g.input, fd_in) < 1e-4);
  }
}

TEST_CASE("gradient special cases") {
  std::mt19937_64 rng(2);
  const auto net = DenseNetwork::glorot({3, 4, 2}, rng);
  const std::vector<double> x{1, 2, 3};
  const auto zero = net.gradient(x, std::vector<double>{0, 0});
  for (double v : zero.parameters) CHECK(v == 0.0);

  // Linear layer: d(u . Wx + b)/dW_ij = u_i x_j.
  const auto lin = DenseNetwork::glorot({3, 2}, rng);
  const std::vector<double> u{0.5, -2.0};
  const auto g = lin.gradient(x, u);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(g.parameters[i * 3 + j] == doctest::Approx(u[i] * x[j]));
    CHECK(g.parameters[6 + i] == doctest::Approx(u[i]));
  }
}

TEST_CASE("adam first step and fixed point") {
  auto state = nn::OptimizerState::for_parameters(2, 0.01);
  std::vector<double> params{1.0, -1.0};
  const std::vector<double> grad{0.3, -2.0};
  nn::apply_update(state, params, grad);
  // m = 0.1 g, v = 0.001 g^2; bias corrected m_hat = g, v_hat = g^2.
  CHECK(params[0] == doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-12));
  CHECK(params[1] == doctest::Approx(-1.0 + 0.01 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
  CHECK(state.step == 1);
  CHECK(state.first_moment[0] == doctest::Approx(0.1 * 0.3));
  CHECK(state.second_moment[1] == doctest::Approx(0.001 * 4.0));

  // Constant gradient: every step has size lr in the direction -sign(g).
  for (int i = 0; i < 200; ++i) {
    const auto before = params;
    nn::apply_update(state, params, grad);
    CHECK(params[0] - before[0] == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(params[1] - before[1] == doctest::Approx(0.01).epsilon(1e-6));
  }

  auto fresh = nn::OptimizerState::for_parameters(2, 0.01);
  fresh.first_moment = {0.5, 0.5};
  std::vector<double> still{1.0, 2.0};
  const std::vector<double> none{0.0, 0.0};
  nn::apply_update(fresh, still, none);
  CHECK(fresh.first_moment[0] == doctest::Approx(0.45));
  CHECK(std::isfinite(still[0]));
}

TEST_CASE("adam with zero gradient from zero moments leaves parameters") {
  auto state = nn::OptimizerState::for_parameters(3, 0.1);
  std::vector<double> params{1.0, 2.0, 3.0};
  const std::vector<double> none(3, 0.0);
  nn::apply_update(state, params, none);
  CHECK(params == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("network JSON round trip") {
  std::mt19937_64 rng(6);
  const auto net = DenseNetwork::glorot({4, 5, 3}, rng);
  CHECK(nn::network_from_json(nn::to_json(net)) == net);
  auto j = nn::to_json(net);
  j["parameters"].erase(0);
  CHECK_THROWS_AS(nn::network_from_json(j), Error);
}
