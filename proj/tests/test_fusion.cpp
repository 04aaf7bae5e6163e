#include <doctest.h>

#include "startnet/fusion.hpp"
#include "startnet/rng.hpp"

using namespace startnet;

namespace {

Vector simplex_point(int k, Rng& rng) {
  Vector p(k);
  double sum = 0.0;
  for (int j = 0; j < k; ++j) {
    p(j) = -std::log(1.0 - rng.uniform());
    sum += p(j);
  }
  return p / sum;
}

/// One-hot-ish score vector whose argmax is `cls`.
Vector peaked(int k, int cls, double peak = 0.9) {
  Vector p = Vector::Constant(k, (1.0 - peak) / (k - 1));
  p(cls) = peak;
  return p;
}

}  // namespace

TEST_CASE("fuse: worked example") {
  Vector p(3);
  p << 0.2, 0.5, 0.3;
  const Vector fused = fuse(p, 0.8);
  CHECK(fused(0) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(fused(1) == doctest::Approx(0.40).epsilon(1e-12));
  CHECK(fused(2) == doctest::Approx(0.24).epsilon(1e-12));
}

TEST_CASE("fuse: boundary start probabilities") {
  Vector p(4);
  p << 0.1, 0.4, 0.3, 0.2;
  const Vector all_start = fuse(p, 1.0);
  CHECK(all_start(0) == 0.0);
  CHECK(all_start(1) == 0.4);
  CHECK(all_start(2) == 0.3);
  CHECK(all_start(3) == 0.2);
  const Vector no_start = fuse(p, 0.0);
  CHECK(no_start(0) == 0.1);
  CHECK(no_start(1) == 0.0);
  CHECK(no_start(2) == 0.0);
  CHECK(no_start(3) == 0.0);
}

TEST_CASE("fuse: mass identity and positive-class argmax invariance") {
  Rng rng(314);
  for (int trial = 0; trial < 10000; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform_int(0, 4));
    const Vector p = simplex_point(k, rng);
    const double s = rng.uniform();
    const Vector fused = fuse(p, s);

    CHECK(std::abs(fused.sum() - (s * (1.0 - p(0)) + (1.0 - s) * p(0))) <= 1e-12);
    for (int j = 0; j < k; ++j) {
      CHECK(fused(j) >= 0.0);
      CHECK(fused(j) <= 1.0);
    }
    if (s > 0.0 && k > 2) {
      int best_p = 1, best_f = 1;
      for (int j = 2; j < k; ++j) {
        if (p(j) > p(best_p)) best_p = j;
        if (fused(j) > fused(best_f)) best_f = j;
      }
      CHECK(best_p == best_f);
    }
  }
}

TEST_CASE("fuse: rejects invalid start probabilities") {
  Vector p(2);
  p << 0.5, 0.5;
  CHECK_THROWS_AS(fuse(p, -0.1), ValidationError);
  CHECK_THROWS_AS(fuse(p, 1.1), ValidationError);
}

TEST_CASE("generate_starts: argmax-change rule on a scripted stream") {
  // argmax classes: bg, A, A, bg, A  ->  predictions at t=1 and t=4
  const int k = 3;
  std::vector<Vector> stream{peaked(k, 0), peaked(k, 1), peaked(k, 1), peaked(k, 0), peaked(k, 1)};
  const std::vector<StartPrediction> preds = generate_starts(stream, 0.0);
  REQUIRE(preds.size() == 2);
  CHECK(preds[0].t == 1);
  CHECK(preds[0].class_id == 1);
  CHECK(preds[0].confidence == doctest::Approx(0.9));
  CHECK(preds[1].t == 4);
  CHECK(preds[1].class_id == 1);
}

TEST_CASE("generate_starts: all-background stream yields nothing") {
  std::vector<Vector> stream(20, peaked(4, 0));
  CHECK(generate_starts(stream, 0.0).empty());
}

TEST_CASE("generate_starts: action at t=0 is detected immediately") {
  std::vector<Vector> stream{peaked(3, 2), peaked(3, 2)};
  const std::vector<StartPrediction> preds = generate_starts(stream, 0.0);
  REQUIRE(preds.size() == 1);
  CHECK(preds[0].t == 0);
  CHECK(preds[0].class_id == 2);
}

TEST_CASE("generate_starts: threshold is strict") {
  std::vector<Vector> stream{peaked(2, 1, 0.6)};
  CHECK(generate_starts(stream, 0.6).empty());
  CHECK(generate_starts(stream, 0.59).size() == 1);
}

TEST_CASE("generate_starts: sub-threshold argmax changes still reset the previous class") {
  // t=0: A at 0.52 (below threshold, no emission, but prev becomes A)
  // t=1: A at 0.9 (argmax unchanged -> still no emission)
  std::vector<Vector> stream{peaked(2, 1, 0.52), peaked(2, 1, 0.9)};
  CHECK(generate_starts(stream, 0.55).empty());
}

TEST_CASE("generate_starts: matches a brute-force re-evaluation of the conditions") {
  Rng rng(161803);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform_int(0, 3));
    const long len = 1 + rng.uniform_int(0, 30);
    const double threshold = rng.uniform(0.0, 0.5);
    std::vector<Vector> stream;
    for (long t = 0; t < len; ++t) {
      Vector v(k);
      for (int j = 0; j < k; ++j) v(j) = rng.uniform();
      stream.push_back(v);
    }
    const std::vector<StartPrediction> got = generate_starts(stream, threshold, trial);

    // independent condition-by-condition evaluation
    std::vector<StartPrediction> expected;
    int prev = 0;
    for (long t = 0; t < len; ++t) {
      const Vector& v = stream[static_cast<std::size_t>(t)];
      int arg = 0;
      for (int j = 1; j < k; ++j) {
        if (v(j) > v(arg)) arg = j;
      }
      const bool cond_action = arg != 0;
      const bool cond_change = arg != prev;
      const bool cond_threshold = v(arg) > threshold;
      if (cond_action && cond_change && cond_threshold) {
        expected.push_back({trial, t, arg, v(arg)});
      }
      prev = arg;
    }

    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].stream == expected[i].stream);
      CHECK(got[i].t == expected[i].t);
      CHECK(got[i].class_id == expected[i].class_id);
      CHECK(got[i].confidence == expected[i].confidence);
    }
  }
}

TEST_CASE("generate_starts: no two consecutive predictions share a class") {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vector> stream;
    for (int t = 0; t < 60; ++t) {
      Vector v(3);
      for (int j = 0; j < 3; ++j) v(j) = rng.uniform();
      stream.push_back(v);
    }
    const std::vector<StartPrediction> preds = generate_starts(stream, 0.0);
    for (std::size_t i = 1; i < preds.size(); ++i) {
      if (preds[i].t == preds[i - 1].t + 1) CHECK(preds[i].class_id != preds[i - 1].class_id);
    }
  }
}

TEST_CASE("generate_starts: causal under prefixes") {
  Rng rng(66);
  std::vector<Vector> stream;
  for (int t = 0; t < 40; ++t) {
    Vector v(3);
    for (int j = 0; j < 3; ++j) v(j) = rng.uniform();
    stream.push_back(v);
  }
  const std::vector<StartPrediction> full = generate_starts(stream, 0.0);
  for (std::size_t cut : {1UL, 10UL, 39UL}) {
    const std::vector<Vector> prefix(stream.begin(), stream.begin() + cut);
    const std::vector<StartPrediction> part = generate_starts(prefix, 0.0);
    std::size_t expect = 0;
    while (expect < full.size() && full[expect].t < static_cast<long>(cut)) ++expect;
    REQUIRE(part.size() == expect);
    for (std::size_t i = 0; i < part.size(); ++i) {
      CHECK(part[i].t == full[i].t);
      CHECK(part[i].class_id == full[i].class_id);
      CHECK(part[i].confidence == full[i].confidence);
    }
  }
}

TEST_CASE("clsnet_only_starts: identical to generate_starts on raw scores") {
  Rng rng(77);
  std::vector<Vector> stream;
  for (int t = 0; t < 30; ++t) stream.push_back(simplex_point(4, rng));
  const auto a = generate_starts(stream, 0.0, 3);
  const auto b = clsnet_only_starts(stream, 0.0, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].t == b[i].t);
    CHECK(a[i].class_id == b[i].class_id);
    CHECK(a[i].confidence == b[i].confidence);
  }
}

TEST_CASE("predictions: jsonl round trip") {
  std::vector<StartPrediction> preds{{0, 3, 1, 0.75}, {1, 10, 2, 0.123456789012345}};
  const auto path = std::filesystem::temp_directory_path() / "startnet_preds.jsonl";
  save_predictions(path, preds);
  const std::vector<StartPrediction> loaded = load_predictions(path);
  REQUIRE(loaded.size() == preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    CHECK(loaded[i].stream == preds[i].stream);
    CHECK(loaded[i].t == preds[i].t);
    CHECK(loaded[i].class_id == preds[i].class_id);
    CHECK(loaded[i].confidence == preds[i].confidence);
  }
  std::filesystem::remove(path);
}
