#include "sigmoid/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace sigmoid;

TEST_CASE("rng: same seed gives identical streams") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng: uniform stays in [0,1) and has the right mean") {
  Rng rng(7);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("rng: normal moments") {
  Rng rng(99);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("rng: forked substreams are independent of parent consumption") {
  Rng parent(5);
  Rng child_before = parent.fork(3);
  parent.normal();
  parent.normal();
  Rng child_after = parent.fork(3);
  for (int i = 0; i < 100; ++i) CHECK(child_before.next_u64() == child_after.next_u64());
}

TEST_CASE("rng: stage seeds differ per stage and per master seed") {
  const auto a = derive_stage_seed(1, "simulate");
  const auto b = derive_stage_seed(1, "train-solver");
  const auto c = derive_stage_seed(2, "simulate");
  CHECK(a != b);
  CHECK(a != c);
  CHECK(derive_stage_seed(1, "simulate") == a);
}
