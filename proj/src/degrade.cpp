#include "infopos/degrade.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "infopos/error.hpp"
#include "infopos/rng.hpp"
#include "json_io.hpp"

namespace infopos::degrade {

namespace {

void require_two(const Segment& s, std::string_view op) {
  if (s.samples.size() < 2) {
    throw Error(Errc::EmptySegment, std::string(op) + " left " + std::to_string(s.samples.size()) +
                                        " samples in " + s.scenario_id + "/" + s.phase_type);
  }
}

double value_std(const Segment& s) {
  if (s.samples.empty()) return 0.0;
  double mean = 0.0;
  for (const auto& x : s.samples) mean += x.value;
  mean /= static_cast<double>(s.samples.size());
  double var = 0.0;
  for (const auto& x : s.samples) var += (x.value - mean) * (x.value - mean);
  return std::sqrt(var / static_cast<double>(s.samples.size()));
}

// Cubic Hermite segment on [x0, x1] in power form over s = (x - x0) / h.
struct Cubic {
  double x0, h, a, b, c, d;

  static Cubic hermite(double x0, double x1, double y0, double y1, double t0, double t1) {
    const double h = x1 - x0;
    return {x0, h, y0, h * t0, -3.0 * y0 - 2.0 * h * t0 + 3.0 * y1 - h * t1,
            2.0 * y0 + h * t0 - 2.0 * y1 + h * t1};
  }
  double at(double s) const { return a + s * (b + s * (c + s * d)); }
  double slope(double s) const { return (b + s * (2.0 * c + s * 3.0 * d)) / h; }

  // max |w(x) - x| over the segment
  double max_deviation() const {
    auto dev = [&](double s) { return std::abs(at(s) - (x0 + h * s)); };
    double best = std::max(dev(0.0), dev(1.0));
    // d/ds (w - x) = b - h + 2c s + 3d s^2
    const double qa = 3.0 * d, qb = 2.0 * c, qc = b - h;
    if (std::abs(qa) < 1e-300) {
      if (std::abs(qb) > 0.0) {
        const double s = -qc / qb;
        if (s > 0.0 && s < 1.0) best = std::max(best, dev(s));
      }
      return best;
    }
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) return best;
    const double r = std::sqrt(disc);
    for (double s : {(-qb + r) / (2.0 * qa), (-qb - r) / (2.0 * qa)}) {
      if (s > 0.0 && s < 1.0) best = std::max(best, dev(s));
    }
    return best;
  }
};

std::array<Cubic, 2> warp_pieces(double displacement) {
  const double ym = 0.5 + displacement;
  const double m0 = ym / 0.5;
  const double m1 = (1.0 - ym) / 0.5;
  const double mid = 2.0 * m0 * m1 / (m0 + m1);  // harmonic mean keeps the map monotone
  return {Cubic::hermite(0.0, 0.5, 0.0, ym, m0, mid), Cubic::hermite(0.5, 1.0, ym, 1.0, mid, m1)};
}

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

double warp_map(double x, double displacement) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const auto pieces = warp_pieces(displacement);
  if (x < 0.5) return pieces[0].at(x / 0.5);
  return pieces[1].at((x - 0.5) / 0.5);
}

double max_warp_displacement(double max_shift) {
  if (!(max_shift > 0.0)) return 0.0;
  auto peak = [](double d) {
    const auto p = warp_pieces(d);
    return std::max(p[0].max_deviation(), p[1].max_deviation());
  };
  // The peak grows with |d| and is symmetric in d; bisect on d >= 0.
  double lo = 0.0;
  double hi = std::min(max_shift, 0.5 * (1.0 - 1e-9));
  if (peak(hi) <= max_shift) return hi;
  for (int i = 0; i < 100; ++i) {
    const double m = 0.5 * (lo + hi);
    (peak(m) <= max_shift ? lo : hi) = m;
  }
  return lo;
}

Segment jitter(const Segment& seg, double sigma_rel, std::uint64_t seed) {
  if (!(sigma_rel >= 0.0)) throw Error(Errc::InvalidArgument, "jitter sigma_rel must be >= 0");
  require_two(seg, "jitter");
  if (sigma_rel == 0.0) return seg;
  Segment out = seg;
  const double sigma = sigma_rel * value_std(seg);
  Rng rng(seed);
  for (auto& s : out.samples) s.value += sigma * rng.normal();
  return out;
}

Segment time_warp(const Segment& seg, double strength, std::uint64_t seed) {
  if (!(strength >= 0.0 && strength < 1.0)) {
    throw Error(Errc::InvalidArgument, "time_warp strength must lie in [0,1)");
  }
  require_two(seg, "time_warp");
  if (strength == 0.0) return seg;

  Rng rng(seed);
  const double limit = max_warp_displacement(strength / 2.0);
  const double displacement = rng.uniform(-limit, limit);
  const double span = seg.t_end - seg.t_start;

  Segment out = seg;
  double previous = -1.0;
  for (auto& s : out.samples) {
    const double x = (s.t - seg.t_start) / span;
    double t = seg.t_start + span * warp_map(x, displacement);
    if (x == 0.0) t = seg.t_start;
    t = std::min(t, std::nextafter(seg.t_end, seg.t_start));
    if (!(t > previous)) throw Error(Errc::InvalidArgument, "time_warp collapsed adjacent samples");
    previous = t;
    s.t = t;
  }
  return out;
}

Segment time_mask(const Segment& seg, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw Error(Errc::InvalidArgument, "time_mask fraction must lie in [0,1)");
  }
  require_two(seg, "time_mask");
  if (fraction == 0.0) return seg;

  Rng rng(seed);
  const double span = seg.t_end - seg.t_start;
  const double width = fraction * span;
  const double lo = seg.t_start + rng.uniform() * (span - width);
  const double hi = lo + width;

  Segment out = seg;
  out.samples.clear();
  for (const auto& s : seg.samples) {
    if (s.t < lo || s.t >= hi) out.samples.push_back(s);
  }
  require_two(out, "time_mask");
  return out;
}

Segment amplitude_scale(const Segment& seg, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error(Errc::InvalidArgument, "amplitude_scale factor must be > 0");
  }
  require_two(seg, "amplitude_scale");
  Segment out = seg;
  for (auto& s : out.samples) s.value *= factor;
  return out;
}

Segment spike_inject(const Segment& seg, int count, double magnitude_rel, std::uint64_t seed) {
  if (count < 0) throw Error(Errc::InvalidArgument, "spike count must be >= 0");
  if (!(magnitude_rel >= 0.0)) throw Error(Errc::InvalidArgument, "spike magnitude must be >= 0");
  require_two(seg, "spike_inject");
  const std::size_t n = seg.samples.size();
  if (static_cast<std::size_t>(count) > n) {
    throw Error(Errc::InvalidArgument, "more spikes than samples");
  }
  if (count == 0) return seg;

  Rng rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
    std::swap(idx[i], idx[i + rng.below(n - i)]);
  }
  const double magnitude = magnitude_rel * value_std(seg);
  Segment out = seg;
  for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    out.samples[idx[i]].value += sign * magnitude;
  }
  return out;
}

Segment decimate(const Segment& seg, int keep_every) {
  if (keep_every < 1) throw Error(Errc::InvalidArgument, "decimate keep_every must be >= 1");
  require_two(seg, "decimate");
  if (keep_every == 1) return seg;
  Segment out = seg;
  out.samples.clear();
  for (std::size_t i = 0; i < seg.samples.size(); i += static_cast<std::size_t>(keep_every)) {
    out.samples.push_back(seg.samples[i]);
  }
  require_two(out, "decimate");
  return out;
}

std::string_view operator_name(const Operator& op) {
  return std::visit(Overloaded{[](const Jitter&) { return std::string_view("jitter"); },
                               [](const TimeWarp&) { return std::string_view("time_warp"); },
                               [](const TimeMask&) { return std::string_view("time_mask"); },
                               [](const AmplitudeScale&) { return std::string_view("amplitude_scale"); },
                               [](const SpikeInject&) { return std::string_view("spike_inject"); },
                               [](const Decimate&) { return std::string_view("decimate"); }},
                    op);
}

Segment apply_plan(const Segment& seg, const DegradationPlan& plan, std::size_t segment_index) {
  Segment cur = seg;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& step = plan.steps[i];
    const std::uint64_t seed =
        derive_seed(plan.seed, {step.seed, i, hash_string(seg.scenario_id), hash_string(seg.phase_type),
                                static_cast<std::uint64_t>(segment_index)});
    cur = std::visit(
        Overloaded{[&](const Jitter& p) { return jitter(cur, p.sigma_rel, seed); },
                   [&](const TimeWarp& p) { return time_warp(cur, p.strength, seed); },
                   [&](const TimeMask& p) { return time_mask(cur, p.fraction, seed); },
                   [&](const AmplitudeScale& p) { return amplitude_scale(cur, p.factor); },
                   [&](const SpikeInject& p) { return spike_inject(cur, p.count, p.magnitude_rel, seed); },
                   [&](const Decimate& p) { return decimate(cur, p.keep_every); }},
        step.op);
  }
  return cur;
}

}  // namespace infopos::degrade

namespace infopos::detail {

using nlohmann::json;

DegradationPlan plan_from_json(const json& j) {
  DegradationPlan plan;
  plan.name = j.value("name", plan.name);
  plan.position = j.value("position", "");
  plan.seed = j.value("seed", std::uint64_t{0});
  if (!j.contains("steps")) return plan;
  for (const auto& s : j.at("steps")) {
    const auto op = s.at("op").get<std::string>();
    degrade::Step step;
    step.seed = s.value("seed", std::uint64_t{0});
    if (op == "jitter") {
      step.op = degrade::Jitter{s.at("sigma_rel").get<double>()};
    } else if (op == "time_warp") {
      step.op = degrade::TimeWarp{s.at("strength").get<double>()};
    } else if (op == "time_mask") {
      step.op = degrade::TimeMask{s.at("fraction").get<double>()};
    } else if (op == "amplitude_scale") {
      step.op = degrade::AmplitudeScale{s.at("factor").get<double>()};
    } else if (op == "spike_inject") {
      step.op = degrade::SpikeInject{s.at("count").get<int>(), s.at("magnitude_rel").get<double>()};
    } else if (op == "decimate") {
      step.op = degrade::Decimate{s.at("keep_every").get<int>()};
    } else {
      throw Error(Errc::InvalidArgument, "unknown degradation operator '" + op + "'");
    }
    plan.steps.push_back(step);
  }
  return plan;
}

json plan_to_json(const DegradationPlan& plan) {
  json steps = json::array();
  for (const auto& step : plan.steps) {
    json s = std::visit(
        degrade::Overloaded{
            [](const degrade::Jitter& p) { return json{{"op", "jitter"}, {"sigma_rel", p.sigma_rel}}; },
            [](const degrade::TimeWarp& p) { return json{{"op", "time_warp"}, {"strength", p.strength}}; },
            [](const degrade::TimeMask& p) { return json{{"op", "time_mask"}, {"fraction", p.fraction}}; },
            [](const degrade::AmplitudeScale& p) { return json{{"op", "amplitude_scale"}, {"factor", p.factor}}; },
            [](const degrade::SpikeInject& p) {
              return json{{"op", "spike_inject"}, {"count", p.count}, {"magnitude_rel", p.magnitude_rel}};
            },
            [](const degrade::Decimate& p) { return json{{"op", "decimate"}, {"keep_every", p.keep_every}}; }},
        step.op);
    s["seed"] = step.seed;
    steps.push_back(std::move(s));
  }
  return {{"name", plan.name}, {"position", plan.position}, {"seed", plan.seed}, {"steps", steps}};
}

}  // namespace infopos::detail

namespace infopos::degrade {

DegradationPlan parse_plan(std::string_view json_text) {
  try {
    return detail::plan_from_json(nlohmann::json::parse(json_text));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("degradation plan: ") + e.what());
  }
}

std::string plan_to_json(const DegradationPlan& plan) { return detail::plan_to_json(plan).dump(2) + "\n"; }

}  // namespace infopos::degrade
