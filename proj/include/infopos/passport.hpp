#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "infopos/trace_core.hpp"

namespace infopos {

// Polynomial summary of one segment over normalized time u in [0,1].
struct RegressionSignature {
  int degree = 1;  // 1 or 2; coefficient_2 stays 0 for linear fits
  double coefficient_2 = 0.0;
  double coefficient_1 = 0.0;
  double intercept = 0.0;
  double execution_time = 0.0;  // seconds, t_end - t_start

  bool operator==(const RegressionSignature&) const = default;
};

// coefficient_2*u^2 + coefficient_1*u + intercept. Throws DomainError outside [0,1].
double evaluate_signature(const RegressionSignature& sig, double u);

// u_i = (t_i - t_start) / (t_end - t_start)
std::vector<double> normalized_time(const Segment& segment);

// Least-squares polynomial coefficients {intercept, c1[, c2]} of y against u,
// solved by Householder QR. Throws TooFewSamples or SingularFit.
std::vector<double> least_squares_poly(std::span<const double> u, std::span<const double> y, int degree);

RegressionSignature fit_signature(const Segment& segment, int degree);

// Batch fit over many segments: OpenMP-parallel, and a serial reference
// that must produce identical results.
std::vector<RegressionSignature> fit_signatures(std::span<const Segment> segments, int degree,
                                                int workers = 0);
std::vector<RegressionSignature> fit_signatures_serial(std::span<const Segment> segments, int degree);

struct PassportKey {
  std::string phase_type;
  MetricKind metric = MetricKind::Current;
  CutKind cut = CutKind::Full;
  int degree = 1;

  auto operator<=>(const PassportKey&) const = default;
  std::string to_string() const;
};

PassportKey key_of(const Segment& segment, int degree);

struct Passport {
  PassportKey key;
  RegressionSignature signature;
  std::size_t support_count = 0;
};

// Coefficient-wise mean of the per-segment fits of Normal segments sharing
// one key. The fits are summed in sorted order, so the result does not
// depend on input order. Throws EmptyInput, MixedKey, NonNormalLabel.
Passport build_mean_passport(std::span<const Segment> segments, int degree);

class PassportStore {
 public:
  void add(Passport passport);
  const Passport* find(const PassportKey& key) const;
  const Passport& at(const PassportKey& key) const;  // throws MissingPassport
  std::size_t size() const { return passports_.size(); }
  const std::map<PassportKey, Passport>& entries() const { return passports_; }

  // CSV: phase_type,metric,cut,degree,coefficient_2,coefficient_1,intercept,
  //      execution_time,support_count
  std::string to_csv() const;
  static PassportStore from_csv(const std::string& contents);
  void write(const std::filesystem::path& path) const;
  static PassportStore read(const std::filesystem::path& path);

 private:
  std::map<PassportKey, Passport> passports_;
};

}  // namespace infopos
