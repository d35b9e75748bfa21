#include "infopos/passport.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "infopos/error.hpp"
#include "infopos/text.hpp"
#include "parallel.hpp"

namespace infopos {

double evaluate_signature(const RegressionSignature& sig, double u) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw Error(Errc::DomainError, "normalized time " + text::format_double(u) + " outside [0,1]");
  }
  return (sig.coefficient_2 * u + sig.coefficient_1) * u + sig.intercept;
}

std::vector<double> normalized_time(const Segment& segment) {
  const double span = segment.t_end - segment.t_start;
  std::vector<double> u;
  u.reserve(segment.samples.size());
  for (const auto& s : segment.samples) u.push_back((s.t - segment.t_start) / span);
  return u;
}

std::vector<double> least_squares_poly(std::span<const double> u, std::span<const double> y, int degree) {
  if (degree < 1 || degree > 2) throw Error(Errc::InvalidArgument, "degree must be 1 or 2");
  const std::size_t n = u.size();
  const std::size_t m = static_cast<std::size_t>(degree) + 1;
  if (y.size() != n) throw Error(Errc::InvalidArgument, "u/y length mismatch");
  if (n < m) {
    throw Error(Errc::TooFewSamples, std::to_string(n) + " samples for a degree-" + std::to_string(degree) + " fit");
  }

  // Column-major design matrix [1, u, u^2].
  std::vector<double> a(n * m);
  std::vector<double> col_norm(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double p = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      a[j * n + i] = p;
      col_norm[j] += p * p;
      p *= u[i];
    }
  }
  for (auto& c : col_norm) c = std::sqrt(c);
  std::vector<double> b(y.begin(), y.end());

  // Householder reflections; R overwrites the upper triangle of `a`.
  for (std::size_t k = 0; k < m; ++k) {
    double* col = &a[k * n];
    double norm = 0.0;
    for (std::size_t i = k; i < n; ++i) norm += col[i] * col[i];
    norm = std::sqrt(norm);
    if (!(norm > 1e-12 * col_norm[k])) {
      throw Error(Errc::SingularFit, "design matrix is rank deficient (normalized times coincide)");
    }
    const double alpha = col[k] > 0.0 ? -norm : norm;
    std::vector<double> v(col + k, col + n);
    v[0] -= alpha;
    double vv = 0.0;
    for (double x : v) vv += x * x;

    auto reflect = [&](double* target) {
      double dot = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * target[k + i];
      const double f = 2.0 * dot / vv;
      for (std::size_t i = 0; i < v.size(); ++i) target[k + i] -= f * v[i];
    };
    for (std::size_t j = k + 1; j < m; ++j) reflect(&a[j * n]);
    reflect(b.data());
    col[k] = alpha;
    for (std::size_t i = k + 1; i < n; ++i) col[i] = 0.0;
  }

  std::vector<double> coef(m, 0.0);
  for (std::size_t k = m; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < m; ++j) s -= a[j * n + k] * coef[j];
    coef[k] = s / a[k * n + k];
  }
  for (double c : coef) {
    if (!std::isfinite(c)) throw Error(Errc::SingularFit, "non-finite coefficient");
  }
  return coef;
}

RegressionSignature fit_signature(const Segment& segment, int degree) {
  if (degree < 1 || degree > 2) throw Error(Errc::InvalidArgument, "degree must be 1 or 2");
  if (segment.samples.size() < static_cast<std::size_t>(degree) + 1) {
    throw Error(Errc::TooFewSamples, segment.scenario_id + "/" + segment.phase_type + " has " +
                                         std::to_string(segment.samples.size()) + " samples");
  }
  if (!(segment.t_end > segment.t_start)) throw Error(Errc::SingularFit, "segment has zero duration");

  const auto u = normalized_time(segment);
  std::vector<double> y;
  y.reserve(segment.samples.size());
  for (const auto& s : segment.samples) y.push_back(s.value);
  const auto coef = least_squares_poly(u, y, degree);

  RegressionSignature sig;
  sig.degree = degree;
  sig.intercept = coef[0];
  sig.coefficient_1 = coef[1];
  sig.coefficient_2 = degree == 2 ? coef[2] : 0.0;
  sig.execution_time = segment.t_end - segment.t_start;
  return sig;
}

std::vector<RegressionSignature> fit_signatures(std::span<const Segment> segments, int degree, int workers) {
  std::vector<RegressionSignature> out(segments.size());
  detail::parallel_for(segments.size(), workers,
                       [&](std::size_t i) { out[i] = fit_signature(segments[i], degree); });
  return out;
}

std::vector<RegressionSignature> fit_signatures_serial(std::span<const Segment> segments, int degree) {
  std::vector<RegressionSignature> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(fit_signature(s, degree));
  return out;
}

std::string PassportKey::to_string() const {
  return phase_type + "/" + std::string(infopos::to_string(metric)) + "/" +
         std::string(infopos::to_string(cut)) + "/deg" + std::to_string(degree);
}

PassportKey key_of(const Segment& segment, int degree) {
  return {segment.phase_type, segment.metric, segment.cut, degree};
}

Passport build_mean_passport(std::span<const Segment> segments, int degree) {
  if (segments.empty()) throw Error(Errc::EmptyInput, "no segments for mean passport");
  const PassportKey key = key_of(segments.front(), degree);
  for (const auto& s : segments) {
    if (key_of(s, degree) != key) {
      throw Error(Errc::MixedKey, key.to_string() + " vs " + key_of(s, degree).to_string());
    }
  }
  for (const auto& s : segments) {
    if (s.label != kNormalLabel) {
      throw Error(Errc::NonNormalLabel, s.scenario_id + " is labelled " + s.label);
    }
  }

  auto fits = fit_signatures_serial(segments, degree);
  auto as_tuple = [](const RegressionSignature& s) {
    return std::make_tuple(s.coefficient_2, s.coefficient_1, s.intercept, s.execution_time);
  };
  std::sort(fits.begin(), fits.end(),
            [&](const auto& a, const auto& b) { return as_tuple(a) < as_tuple(b); });

  RegressionSignature mean;
  mean.degree = degree;
  for (const auto& f : fits) {
    mean.coefficient_2 += f.coefficient_2;
    mean.coefficient_1 += f.coefficient_1;
    mean.intercept += f.intercept;
    mean.execution_time += f.execution_time;
  }
  const double n = static_cast<double>(fits.size());
  mean.coefficient_2 /= n;
  mean.coefficient_1 /= n;
  mean.intercept /= n;
  mean.execution_time /= n;
  return {key, mean, fits.size()};
}

void PassportStore::add(Passport passport) {
  auto key = passport.key;
  passports_.insert_or_assign(std::move(key), std::move(passport));
}

const Passport* PassportStore::find(const PassportKey& key) const {
  const auto it = passports_.find(key);
  return it == passports_.end() ? nullptr : &it->second;
}

const Passport& PassportStore::at(const PassportKey& key) const {
  const auto* p = find(key);
  if (p == nullptr) throw Error(Errc::MissingPassport, "no passport for " + key.to_string());
  return *p;
}

namespace {
constexpr std::string_view kPassportHeader =
    "phase_type,metric,cut,degree,coefficient_2,coefficient_1,intercept,execution_time,support_count";
}

std::string PassportStore::to_csv() const {
  std::string out(kPassportHeader);
  out += '\n';
  for (const auto& [key, p] : passports_) {
    out += key.phase_type + "," + std::string(infopos::to_string(key.metric)) + "," +
           std::string(infopos::to_string(key.cut)) + "," + std::to_string(key.degree) + "," +
           text::format_double(p.signature.coefficient_2) + "," +
           text::format_double(p.signature.coefficient_1) + "," +
           text::format_double(p.signature.intercept) + "," +
           text::format_double(p.signature.execution_time) + "," + std::to_string(p.support_count) + "\n";
  }
  return out;
}

PassportStore PassportStore::from_csv(const std::string& contents) {
  PassportStore store;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string::npos) end = contents.size();
    const std::string_view line = text::trim(std::string_view(contents).substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kPassportHeader) throw ParseError(1, "unexpected passport header");
      continue;
    }
    const auto f = text::split(line);
    if (f.size() != 9) throw ParseError(line_no, "expected 9 columns");
    Passport p;
    p.key.phase_type = std::string(f[0]);
    p.key.metric = parse_metric(f[1]);
    p.key.cut = parse_cut(f[2]);
    const auto degree = text::parse_int(f[3]);
    const auto c2 = text::parse_double(f[4]);
    const auto c1 = text::parse_double(f[5]);
    const auto ic = text::parse_double(f[6]);
    const auto et = text::parse_double(f[7]);
    const auto support = text::parse_int(f[8]);
    if (!degree || !c2 || !c1 || !ic || !et || !support || *support < 1 || (*degree != 1 && *degree != 2)) {
      throw ParseError(line_no, "malformed passport row");
    }
    p.key.degree = static_cast<int>(*degree);
    p.signature = {p.key.degree, *c2, *c1, *ic, *et};
    p.support_count = static_cast<std::size_t>(*support);
    store.add(std::move(p));
  }
  return store;
}

void PassportStore::write(const std::filesystem::path& path) const { text::write_file(path, to_csv()); }

PassportStore PassportStore::read(const std::filesystem::path& path) { return from_csv(text::read_file(path)); }

}  // namespace infopos
