#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "infopos/passport.hpp"
#include "oracles/normal_equations.hpp"
#include "support.hpp"

using namespace infopos;
using testing::error_code_of;

namespace {

double rel_err(long double expected, double actual) {
  const long double scale = std::max<long double>(1.0L, std::fabs(expected));
  return static_cast<double>(std::fabs(expected - actual) / scale);
}

RegressionSignature sig(double c2, double c1, double c0) {
  RegressionSignature s;
  s.degree = c2 == 0.0 ? 1 : 2;
  s.coefficient_2 = c2;
  s.coefficient_1 = c1;
  s.intercept = c0;
  return s;
}

}  // namespace

TEST_CASE("fit_signature exact fits") {
  const auto line = testing::sampled_segment(20, 1.0, 2.0, [](double u) { return 2 * u + 1; });
  const auto s = fit_signature(line, 1);
  CHECK(s.coefficient_1 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.intercept == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.coefficient_2 == 0.0);
  CHECK(s.execution_time == 2.0);

  const auto flat = testing::sampled_segment(10, 0.0, 1.0, [](double) { return 3.0; });
  const auto f = fit_signature(flat, 2);
  CHECK(std::fabs(f.coefficient_1) < 1e-12);
  CHECK(std::fabs(f.coefficient_2) < 1e-12);
  CHECK(f.intercept == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("fit_signature matches the normal-equation oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const auto seg = testing::random_segment(rng, trial == 0 ? 5 : 5 + rng.below(300));
    const auto u = normalized_time(seg);
    std::vector<double> y;
    for (const auto& x : seg.samples) y.push_back(x.value);
    for (int degree : {1, 2}) {
      const auto expect = oracle::normal_equation_fit(u, y, degree);
      const auto got = fit_signature(seg, degree);
      CHECK(rel_err(expect[0], got.intercept) < 1e-9);
      CHECK(rel_err(expect[1], got.coefficient_1) < 1e-9);
      CHECK(rel_err(expect[2], got.coefficient_2) < 1e-9);
    }
  }
}

TEST_CASE("fit residuals are orthogonal to the design columns") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto seg = testing::random_segment(rng, 10 + rng.below(200));
    const auto u = normalized_time(seg);
    for (int degree : {1, 2}) {
      const auto s = fit_signature(seg, degree);
      double scale = 0;
      for (const auto& x : seg.samples) scale = std::max(scale, std::fabs(x.value));
      for (int k = 0; k <= degree; ++k) {
        double dot = 0;
        for (std::size_t i = 0; i < u.size(); ++i) {
          dot += (seg.samples[i].value - evaluate_signature(s, u[i])) * std::pow(u[i], k);
        }
        CHECK(std::fabs(dot) <= 1e-8 * static_cast<double>(u.size()) * scale);
      }
    }
  }
}

TEST_CASE("quadratic fits never have larger SSE than linear fits") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto seg = testing::random_segment(rng, 5 + rng.below(100));
    const auto u = normalized_time(seg);
    auto sse = [&](const RegressionSignature& s) {
      double e = 0;
      for (std::size_t i = 0; i < u.size(); ++i) e += std::pow(seg.samples[i].value - evaluate_signature(s, u[i]), 2);
      return e;
    };
    CHECK(sse(fit_signature(seg, 2)) <= sse(fit_signature(seg, 1)) * (1 + 1e-12) + 1e-12);
  }
}

TEST_CASE("time shift leaves the signature unchanged") {
  Rng rng(29);
  auto seg = testing::random_segment(rng, 50);
  const auto before = fit_signature(seg, 2);
  for (auto& x : seg.samples) x.t += 1000.0;
  seg.t_start += 1000.0;
  seg.t_end += 1000.0;
  const auto after = fit_signature(seg, 2);
  CHECK(after.coefficient_2 == doctest::Approx(before.coefficient_2).epsilon(1e-8));
  CHECK(after.coefficient_1 == doctest::Approx(before.coefficient_1).epsilon(1e-8));
  CHECK(after.intercept == doctest::Approx(before.intercept).epsilon(1e-8));
}

TEST_CASE("fit errors") {
  const auto one = testing::make_segment({0.0}, {1.0}, 1.0);
  CHECK(error_code_of([&] { fit_signature(one, 1); }) == Errc::TooFewSamples);
  const auto two = testing::make_segment({0.0, 0.5}, {1.0, 2.0}, 1.0);
  CHECK(error_code_of([&] { fit_signature(two, 2); }) == Errc::TooFewSamples);
}

TEST_CASE("evaluate_signature") {
  CHECK(evaluate_signature(sig(0, 2, 1), 0.0) == 1.0);
  CHECK(evaluate_signature(sig(0, 2, 1), 1.0) == 3.0);
  CHECK(evaluate_signature(sig(1, 0, 0), 0.5) == 0.25);
  CHECK(error_code_of([] { evaluate_signature(sig(0, 2, 1), 1.5); }) == Errc::DomainError);
}

TEST_CASE("parallel and serial batch fits agree") {
  Rng rng(31);
  std::vector<Segment> segs;
  for (int i = 0; i < 200; ++i) segs.push_back(testing::random_segment(rng, 5 + rng.below(300)));
  for (int degree : {1, 2}) {
    const auto serial = fit_signatures_serial(segs, degree);
    CHECK(fit_signatures(segs, degree, 4) == serial);
    CHECK(fit_signatures(segs, degree) == serial);
  }
}

TEST_CASE("build_mean_passport") {
  const auto a = testing::sampled_segment(20, 0.0, 1.0, [](double u) { return 2 * u + 1; });
  const auto b = testing::sampled_segment(30, 5.0, 1.0, [](double u) { return 4 * u + 3; });
  const std::vector<Segment> two{a, b};
  const auto p = build_mean_passport(two, 1);
  CHECK(p.support_count == 2);
  CHECK(p.signature.coefficient_2 == 0.0);
  CHECK(p.signature.coefficient_1 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(p.signature.intercept == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p.key.phase_type == "neural-op");

  const std::vector<Segment> one{a};
  CHECK(build_mean_passport(one, 1).signature == fit_signature(a, 1));

  const std::vector<Segment> reversed{b, a};
  CHECK(build_mean_passport(reversed, 1).signature == p.signature);

  auto fan = b;
  fan.label = "NoFan";
  const std::vector<Segment> mixed{a, fan};
  CHECK(error_code_of([&] { build_mean_passport(mixed, 1); }) == Errc::NonNormalLabel);
  CHECK(error_code_of([&] { build_mean_passport(std::span<const Segment>{}, 1); }) == Errc::EmptyInput);

  auto other = b;
  other.phase_type = "image-op";
  const std::vector<Segment> keys{a, other};
  CHECK(error_code_of([&] { build_mean_passport(keys, 1); }) == Errc::MixedKey);
}

TEST_CASE("passport store CSV round trip") {
  PassportStore store;
  Passport p;
  p.key = {"neural-op", MetricKind::Power, CutKind::Mid, 2};
  p.signature = sig(0.125, -3.5, 1e-7);
  p.signature.execution_time = 0.61;
  p.support_count = 12;
  store.add(p);
  p.key.phase_type = "cycle-op";
  store.add(p);
  const auto again = PassportStore::from_csv(store.to_csv());
  CHECK(again.size() == 2);
  CHECK(again.to_csv() == store.to_csv());
  CHECK(again.at(p.key).signature == p.signature);
  CHECK(error_code_of([&] { again.at({"x", MetricKind::Current, CutKind::Full, 1}); }) == Errc::MissingPassport);
}
