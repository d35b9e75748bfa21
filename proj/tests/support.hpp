#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "infopos/error.hpp"
#include "infopos/rng.hpp"
#include "infopos/trace_core.hpp"

namespace testing {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("infopos_test_" + std::to_string(getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline infopos::Segment make_segment(const std::vector<double>& t, const std::vector<double>& v, double t_end,
                                     std::string label = "Normal", std::string phase = "neural-op") {
  infopos::Segment s;
  s.scenario_id = "s";
  s.phase_type = std::move(phase);
  s.label = std::move(label);
  for (std::size_t i = 0; i < t.size(); ++i) s.samples.push_back({t[i], v[i]});
  s.t_start = t.empty() ? 0.0 : t.front();
  s.t_end = t_end;
  return s;
}

// n uniform samples over [t0, t0 + duration) following `f(u)`.
template <class F>
infopos::Segment sampled_segment(std::size_t n, double t0, double duration, F f, std::string label = "Normal",
                                 std::string phase = "neural-op") {
  std::vector<double> t, v;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n);
    t.push_back(t0 + u * duration);
    v.push_back(f(u));
  }
  return make_segment(t, v, t0 + duration, std::move(label), std::move(phase));
}

// Random segment: n samples at sorted distinct random times, noisy values.
inline infopos::Segment random_segment(infopos::Rng& rng, std::size_t n) {
  std::vector<double> t{rng.uniform(0.0, 10.0)};
  for (std::size_t i = 1; i < n; ++i) t.push_back(t.back() + rng.uniform(0.001, 0.05));
  std::vector<double> v;
  const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3), c = rng.uniform(-3, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (t[i] - t.front()) / (t.back() - t.front());
    v.push_back(a * u * u + b * u + c + rng.normal(0.0, 0.5));
  }
  return make_segment(t, v, t.back() + 0.01);
}

template <class F>
infopos::Errc error_code_of(F&& f) {
  try {
    f();
  } catch (const infopos::Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected an infopos::Error");
}

}  // namespace testing
