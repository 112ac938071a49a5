#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "pioneer/autodiff.hpp"

using pioneer::ad::Tape;
using pioneer::ad::Var;

namespace {

// Central-difference oracle for scalar-to-scalar maps.
double fd(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double ad_grad(const std::function<Var(Var)>& f, double x) {
  Tape tape;
  Var v(x, &tape);
  Var y = f(v);
  REQUIRE(y.tracked());
  tape.backward(y.id);
  return tape.adjoint(v.id);
}

}  // namespace

TEST_CASE("primitive gradients match central differences") {
  struct Case {
    const char* name;
    std::function<Var(Var)> f;
    std::function<double(double)> g;
    double x;
  };
  using std::exp;
  using std::log;
  const std::vector<Case> cases = {
      {"sin", [](Var v) { return sin(v); }, [](double x) { return std::sin(x); }, 0.7},
      {"cos", [](Var v) { return cos(v); }, [](double x) { return std::cos(x); }, -0.4},
      {"tan", [](Var v) { return tan(v); }, [](double x) { return std::tan(x); }, 0.3},
      {"tanh", [](Var v) { return tanh(v); }, [](double x) { return std::tanh(x); }, 1.1},
      {"atan", [](Var v) { return atan(v); }, [](double x) { return std::atan(x); }, 2.0},
      {"atanh", [](Var v) { return atanh(v); }, [](double x) { return std::atanh(x); }, 0.6},
      {"sqrt", [](Var v) { return sqrt(v); }, [](double x) { return std::sqrt(x); }, 2.5},
      {"exp", [](Var v) { return exp(v); }, [](double x) { return std::exp(x); }, 0.9},
      {"log", [](Var v) { return log(v); }, [](double x) { return std::log(x); }, 1.7},
      {"sigmoid", [](Var v) { return sigmoid(v); },
       [](double x) { return pioneer::sigmoid(x); }, -0.8},
      {"rational", [](Var v) { return (v * v - Var(3.0)) / (v + Var(2.0)); },
       [](double x) { return (x * x - 3.0) / (x + 2.0); }, 1.3},
      {"neg-chain", [](Var v) { return -(v * Var(2.0)) + v / Var(4.0); },
       [](double x) { return -2.0 * x + x / 4.0; }, 0.2},
  };
  for (const auto& c : cases) {
    INFO(c.name);
    const double got = ad_grad(c.f, c.x);
    const double want = fd(c.g, c.x);
    CHECK(std::abs(got - want) <= 1e-6 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("binary ops propagate to both operands") {
  Tape tape;
  Var a(1.5, &tape), b(-0.7, &tape);
  Var y = a * b + a / b - b;
  tape.backward(y.id);
  // dy/da = b + 1/b ; dy/db = a - a/b^2 - 1
  CHECK(tape.adjoint(a.id) == Catch::Approx(-0.7 + 1.0 / -0.7).epsilon(1e-12));
  CHECK(tape.adjoint(b.id) == Catch::Approx(1.5 - 1.5 / 0.49 - 1.0).epsilon(1e-12));
}

TEST_CASE("constants never allocate tape nodes") {
  Tape tape;
  Var a(2.0, &tape);
  const size_t before = tape.size();
  Var c = Var(3.0) * Var(4.0);  // pure constant arithmetic
  CHECK_FALSE(c.tracked());
  CHECK(c.v == 12.0);
  Var y = a * Var(5.0);
  CHECK(tape.size() == before + 1);
  tape.backward(y.id);
  CHECK(tape.adjoint(a.id) == 5.0);
}

TEST_CASE("fan-out accumulates adjoints") {
  Tape tape;
  Var x(0.3, &tape);
  Var y = x * x * x;  // dy/dx = 3 x^2
  tape.backward(y.id);
  CHECK(tape.adjoint(x.id) == Catch::Approx(3 * 0.3 * 0.3).epsilon(1e-12));
}

TEST_CASE("softmax gradient is exact despite the constant shift") {
  Tape tape;
  std::vector<Var> logits = {Var(0.2, &tape), Var(-1.0, &tape), Var(2.5, &tape)};
  auto sm = pioneer::softmax(logits);
  tape.backward(sm[0].id);
  // d softmax_0 / d logit_k = s0 (delta_0k - sk)
  std::vector<double> s = {sm[0].v, sm[1].v, sm[2].v};
  CHECK(tape.adjoint(logits[0].id) == Catch::Approx(s[0] * (1 - s[0])).epsilon(1e-10));
  CHECK(tape.adjoint(logits[1].id) == Catch::Approx(-s[0] * s[1]).epsilon(1e-10));
  CHECK(tape.adjoint(logits[2].id) == Catch::Approx(-s[0] * s[2]).epsilon(1e-10));
}

TEST_CASE("matrix apply works for double and Var identically") {
  pioneer::MatX<double> W(2, 3);
  W(0, 0) = 1.0; W(0, 1) = 2.0; W(0, 2) = 3.0;
  W(1, 0) = -1.0; W(1, 1) = 0.5; W(1, 2) = 0.0;
  pioneer::Vec x = {2.0, 4.0};
  auto yd = pioneer::matvec(W, x);
  REQUIRE(yd.size() == 3);
  CHECK(yd[0] == Catch::Approx(-2.0));
  CHECK(yd[1] == Catch::Approx(6.0));
  CHECK(yd[2] == Catch::Approx(6.0));

  Tape tape;
  pioneer::MatX<Var> Wv(2, 3);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) Wv(r, c) = Var(W(r, c), &tape);
  std::vector<Var> xv = {Var(2.0, &tape), Var(4.0, &tape)};
  auto yv = pioneer::matvec(Wv, xv);
  for (int c = 0; c < 3; ++c) CHECK(yv[c].v == Catch::Approx(yd[c]));
  tape.backward(yv[1].id);
  CHECK(tape.adjoint(xv[0].id) == Catch::Approx(2.0));   // W(0,1)
  CHECK(tape.adjoint(Wv(1, 1).id) == Catch::Approx(4.0));  // x[1]
}

TEST_CASE("tape clear allows reuse") {
  Tape tape;
  {
    Var x(1.0, &tape);
    Var y = exp(x);
    tape.backward(y.id);
    CHECK(tape.adjoint(x.id) == Catch::Approx(std::exp(1.0)));
  }
  tape.clear();
  CHECK(tape.size() == 0);
  Var x(2.0, &tape);
  Var y = x * x;
  tape.backward(y.id);
  CHECK(tape.adjoint(x.id) == Catch::Approx(4.0));
}
