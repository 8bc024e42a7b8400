#include <cstring>

#include "doctest.h"
#include "slothbench/grad_check.hpp"
#include "slothbench/rng.hpp"
#include "slothbench/tape.hpp"

using namespace sloth;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, float scale = 1.f) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (float& v : t.data) v = rng.next_symmetric(scale);
  return t;
}

}  // namespace

TEST_CASE("softmax of zeros is uniform") {
  Tape tape;
  auto x = tape.leaf(Tensor({1, 2}, {0.f, 0.f}), false);
  auto y = tape.softmax_rows(x);
  CHECK(tape.value(y).data[0] == doctest::Approx(0.5));
  CHECK(tape.value(y).data[1] == doctest::Approx(0.5));
}

TEST_CASE("matmul of zero matrix gives zeros") {
  Tape tape;
  auto a = tape.leaf(Tensor::zeros({2, 3}), false);
  Rng rng(1);
  auto b = tape.leaf(random_tensor({3, 4}, rng), false);
  auto c = tape.matmul(a, b);
  CHECK(tape.value(c).shape == std::vector<int>{2, 4});
  for (float v : tape.value(c).data) CHECK(v == 0.f);
}

TEST_CASE("matmul shape mismatch names the primitive and shapes") {
  Tape tape;
  auto a = tape.leaf(Tensor::zeros({2, 3}), false);
  auto b = tape.leaf(Tensor::zeros({4, 2}), false);
  try {
    tape.matmul(a, b);
    FAIL("expected invalid-shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidShape);
    CHECK(std::string(e.what()).find("matmul") != std::string::npos);
    CHECK(std::string(e.what()).find("[2x3]") != std::string::npos);
    CHECK(std::string(e.what()).find("[4x2]") != std::string::npos);
  }
}

TEST_CASE("embedding gather repeats rows") {
  Tape tape;
  Rng rng(2);
  Tensor table = random_tensor({4, 3}, rng);
  auto t = tape.leaf(table, false);
  auto g = tape.gather_rows(t, {2, 2});
  const Tensor& out = tape.value(g);
  CHECK(out.shape == std::vector<int>{2, 3});
  for (int j = 0; j < 3; ++j) {
    CHECK(out.at(0, j) == table.at(2, j));
    CHECK(out.at(1, j) == table.at(2, j));
  }
}

TEST_CASE("backward of x*x at 3 is 6") {
  Tape tape;
  auto x = tape.leaf(Tensor({1, 1}, {3.f}), true);
  auto f = tape.select(tape.mul(x, x), 0, 0);
  tape.backward(f);
  CHECK(tape.grad(x).data[0] == doctest::Approx(6.f));
}

TEST_CASE("backward of mean over 4 entries is 0.25 each") {
  Tape tape;
  auto x = tape.leaf(Tensor({1, 4}, {1.f, 2.f, 3.f, 4.f}), true);
  auto f = tape.mean_all(x);
  tape.backward(f);
  for (float v : tape.grad(x).data) CHECK(v == doctest::Approx(0.25f));
}

TEST_CASE("backward requires scalar output") {
  Tape tape;
  auto x = tape.leaf(Tensor({1, 2}, {1.f, 2.f}), true);
  auto y = tape.tanh(x);
  CHECK_THROWS_AS(tape.backward(y), Error);
}

TEST_CASE("unreached leaves get zero gradients") {
  Tape tape;
  auto x = tape.leaf(Tensor({1, 2}, {1.f, 2.f}), true);
  auto unused = tape.leaf(Tensor({1, 3}, {1.f, 1.f, 1.f}), true);
  auto f = tape.mean_all(x);
  tape.backward(f);
  for (float v : tape.grad(unused).data) CHECK(v == 0.f);
}

TEST_CASE("two-layer network gradients match finite differences over 100 probes") {
  Rng rng(7);
  Tensor w1 = random_tensor({100, 16}, rng, 0.3f);
  Tensor w2 = random_tensor({16, 1}, rng, 0.3f);
  TapeFn net = [&](Tape& tape, Tape::NodeId in) {
    auto c1 = tape.leaf(w1, false);
    auto c2 = tape.leaf(w2, false);
    auto h = tape.tanh(tape.matmul(in, c1));
    return tape.select(tape.matmul(h, c2), 0, 0);
  };
  Tensor point = random_tensor({1, 100}, rng, 0.5f);
  CHECK(grad_check(net, point, 1e-3f) <= 1e-3f);
}

TEST_CASE("grad_check: quadratic is exact up to rounding") {
  Rng rng(11);
  TapeFn sum_sq = [](Tape& tape, Tape::NodeId in) {
    auto sq = tape.mul(in, in);
    return tape.scale(tape.mean_all(sq), 4.f);
  };
  Tensor point = random_tensor({1, 4}, rng, 1.f);
  // A large step is principled here: central differences are exact on
  // quadratics and the step only dilutes float rounding.
  CHECK(grad_check(sum_sq, point, 0.25f) <= 1e-6f);
}

TEST_CASE("grad_check: tanh composition at 10 random points") {
  Rng rng(13);
  Tensor w = random_tensor({6, 6}, rng, 0.4f);
  TapeFn f = [&](Tape& tape, Tape::NodeId in) {
    auto c = tape.leaf(w, false);
    return tape.mean_all(tape.tanh(tape.matmul(tape.tanh(in), c)));
  };
  for (int trial = 0; trial < 10; ++trial) {
    Tensor point = random_tensor({1, 6}, rng, 0.8f);
    CHECK(grad_check(f, point, 1e-3f) <= 1e-3f);
  }
}

TEST_CASE("grad_check rejects non-positive step") {
  TapeFn f = [](Tape& tape, Tape::NodeId in) { return tape.mean_all(in); };
  CHECK_THROWS_AS(grad_check(f, Tensor({1, 2}, {1.f, 2.f}), 0.f), Error);
}

TEST_CASE("every primitive matches finite differences") {
  Rng rng(17);
  Tensor other = random_tensor({3, 4}, rng, 0.5f);
  Tensor mat = random_tensor({4, 3}, rng, 0.5f);

  struct Case {
    const char* name;
    TapeFn fn;
  };
  std::vector<Case> cases;
  cases.push_back({"matmul", [&](Tape& t, Tape::NodeId in) {
                     auto c = t.leaf(mat, false);
                     return t.mean_all(t.matmul(in, c));
                   }});
  cases.push_back({"add", [&](Tape& t, Tape::NodeId in) {
                     auto c = t.leaf(other, false);
                     return t.mean_all(t.add(in, c));
                   }});
  cases.push_back({"sub", [&](Tape& t, Tape::NodeId in) {
                     auto c = t.leaf(other, false);
                     return t.mean_all(t.sub(in, c));
                   }});
  cases.push_back({"mul", [&](Tape& t, Tape::NodeId in) {
                     auto c = t.leaf(other, false);
                     return t.mean_all(t.mul(in, c));
                   }});
  cases.push_back({"scale", [](Tape& t, Tape::NodeId in) {
                     return t.mean_all(t.scale(in, -1.7f));
                   }});
  cases.push_back({"tanh", [](Tape& t, Tape::NodeId in) {
                     return t.mean_all(t.tanh(in));
                   }});
  cases.push_back({"sigmoid", [](Tape& t, Tape::NodeId in) {
                     return t.mean_all(t.sigmoid(in));
                   }});
  cases.push_back({"softmax", [](Tape& t, Tape::NodeId in) {
                     return t.select(t.softmax_rows(in), 1, 2);
                   }});
  cases.push_back({"log", [](Tape& t, Tape::NodeId in) {
                     // shift positive before log
                     auto pos = t.sigmoid(in);
                     return t.mean_all(t.log(pos));
                   }});
  cases.push_back({"mean", [](Tape& t, Tape::NodeId in) { return t.mean_all(in); }});
  cases.push_back({"concat_cols", [&](Tape& t, Tape::NodeId in) {
                     auto c = t.leaf(other, false);
                     return t.mean_all(t.concat_cols(in, c));
                   }});
  cases.push_back({"concat_rows", [&](Tape& t, Tape::NodeId in) {
                     auto c = t.leaf(other, false);
                     return t.mean_all(t.concat_rows({in, c}));
                   }});
  cases.push_back({"transpose", [&](Tape& t, Tape::NodeId in) {
                     auto c = t.leaf(mat, false);
                     return t.mean_all(t.matmul(t.transpose(in), t.transpose(c)));
                   }});
  cases.push_back({"select", [](Tape& t, Tape::NodeId in) {
                     return t.select(in, 2, 3);
                   }});

  for (const auto& c : cases) {
    CAPTURE(c.name);
    for (int trial = 0; trial < 9; ++trial) {  // 9 x 12 coords > 100 probes
      Tensor point = random_tensor({3, 4}, rng, 0.8f);
      // step 1e-2: large enough to clear float32 forward-pass rounding,
      // small enough that curvature stays far below the tolerance
      CHECK(grad_check(c.fn, point, 1e-2f) <= 1e-3f);
    }
  }
}

TEST_CASE("gather gradient matches finite differences") {
  Rng rng(19);
  TapeFn f = [](Tape& t, Tape::NodeId in) {
    return t.mean_all(t.tanh(t.gather_rows(in, {0, 2, 2})));
  };
  Tensor table = random_tensor({3, 5}, rng, 0.8f);
  CHECK(grad_check(f, table, 1e-3f) <= 1e-3f);
}

TEST_CASE("linearity of backward") {
  Rng rng(23);
  Tensor point = random_tensor({2, 3}, rng);
  const float a = 1.3f, b = -0.7f;

  auto grad_of = [&](const TapeFn& fn) {
    Tape tape;
    auto in = tape.leaf(point, true);
    tape.backward(fn(tape, in));
    return tape.grad(in);
  };
  TapeFn f = [](Tape& t, Tape::NodeId in) { return t.mean_all(t.tanh(in)); };
  TapeFn g = [](Tape& t, Tape::NodeId in) { return t.mean_all(t.mul(in, in)); };
  TapeFn combined = [&](Tape& t, Tape::NodeId in) {
    return t.add(t.scale(f(t, in), a), t.scale(g(t, in), b));
  };

  Tensor gf = grad_of(f), gg = grad_of(g), gc = grad_of(combined);
  for (std::size_t i = 0; i < gc.data.size(); ++i)
    CHECK(gc.data[i] == doctest::Approx(a * gf.data[i] + b * gg.data[i]).epsilon(1e-6));
}

TEST_CASE("gradients are bit-identical across runs") {
  Rng rng(29);
  Tensor point = random_tensor({4, 4}, rng);
  Tensor w = random_tensor({4, 4}, rng);

  auto run = [&]() {
    Tape tape;
    auto in = tape.leaf(point, true);
    auto c = tape.leaf(w, false);
    auto out = tape.mean_all(tape.softmax_rows(tape.matmul(tape.tanh(in), c)));
    tape.backward(out);
    return tape.grad(in);
  };
  Tensor g1 = run(), g2 = run();
  CHECK(std::memcmp(g1.data.data(), g2.data.data(), g1.data.size() * sizeof(float)) == 0);
}
