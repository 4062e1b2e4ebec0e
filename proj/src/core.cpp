#include "convexlab/core.hpp"

#include <cmath>
#include <sstream>

namespace convexlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// splitmix64 finalizer; statistically strong enough for counter-mode draws.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t RngStream::word_at(std::uint64_t ctr) const {
  std::uint64_t h = mix64(seed_ ^ 0x8c2f9d4b6e1a35c7ULL);
  h = mix64(h ^ stream_);
  return mix64(h ^ ctr);
}

RngStream RngStream::fork(std::uint64_t k) const {
  return RngStream(seed_, mix64(stream_ ^ mix64(k ^ 0xa5a5a5a5deadbeefULL)));
}

double RngStream::next_uniform() {
  const std::uint64_t w = word_at(counter_++);
  // (0, 1]: 53-bit mantissa shifted into the open-at-zero unit interval.
  return (static_cast<double>(w >> 11) + 1.0) * 0x1p-53;
}

double RngStream::next_normal() {
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

Point sample_gaussian(int n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_gaussian: dimension must be >= 1");
  Point x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.next_normal();
  return x;
}

LabeledSample draw_one(const FunctionOracle& oracle, RngStream& rng) {
  LabeledSample s;
  s.point = sample_gaussian(oracle.dimension, rng);
  s.value = oracle.evaluator(s.point);
  ++*oracle.draws;
  return s;
}

std::vector<LabeledSample> draw_labeled(const FunctionOracle& oracle, long long count,
                                        RngStream& rng) {
  if (count < 1) throw std::invalid_argument("draw_labeled: count must be >= 1");
  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) out.push_back(draw_one(oracle, rng));
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

namespace {

Point unit_direction(const std::vector<double>& v, std::size_t offset, int n,
                     const std::string& name) {
  if (v.size() != offset + static_cast<std::size_t>(n)) {
    throw std::invalid_argument(name + ": expected a direction with " + std::to_string(n) +
                                " coordinates");
  }
  Point u(n);
  for (int i = 0; i < n; ++i) u[i] = v[offset + i];
  if (std::abs(u.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument(name + ": direction must be a unit vector");
  }
  return u;
}

// Scale-then-direction convention: params of size n are a bare unit direction,
// params of size n+1 put the scale s (|s| <= 1) first. Defaults to s=1, u=e1.
struct ScaledDirection {
  double scale = 1.0;
  Point u;
};

ScaledDirection scaled_direction(const std::vector<double>& params, int n,
                                 const std::string& name) {
  ScaledDirection sd;
  if (params.empty()) {
    sd.u = Point::Zero(n);
    sd.u[0] = 1.0;
    return sd;
  }
  if (params.size() == static_cast<std::size_t>(n)) {
    sd.u = unit_direction(params, 0, n, name);
    return sd;
  }
  if (params.size() == static_cast<std::size_t>(n) + 1) {
    sd.scale = params[0];
    if (std::abs(sd.scale) > 1.0 + 1e-12) {
      throw std::invalid_argument(name + ": scale must satisfy |s| <= 1");
    }
    sd.u = unit_direction(params, 1, n, name);
    return sd;
  }
  throw std::invalid_argument(name + ": bad parameter count " + std::to_string(params.size()));
}

}  // namespace

FunctionOracle catalog_function(const std::string& name, int n,
                                const std::vector<double>& params) {
  if (n < 1) throw std::invalid_argument("catalog_function: dimension must be >= 1");
  FunctionOracle oracle;
  oracle.dimension = n;
  oracle.name = name;

  if (name == "linear") {
    auto sd = scaled_direction(params, n, name);
    oracle.lipschitz_bound = std::abs(sd.scale);
    oracle.evaluator = [sd](const Point& x) { return sd.scale * sd.u.dot(x); };
  } else if (name == "relu_proj") {
    auto sd = scaled_direction(params, n, name);
    oracle.lipschitz_bound = std::abs(sd.scale);
    oracle.evaluator = [sd](const Point& x) { return sd.scale * std::max(0.0, sd.u.dot(x)); };
  } else if (name == "abs_proj") {
    auto sd = scaled_direction(params, n, name);
    oracle.lipschitz_bound = std::abs(sd.scale);
    oracle.evaluator = [sd](const Point& x) { return sd.scale * std::abs(sd.u.dot(x)); };
  } else if (name == "sine_proj") {
    auto sd = scaled_direction(params, n, name);
    oracle.lipschitz_bound = std::abs(sd.scale);
    oracle.evaluator = [sd](const Point& x) { return sd.scale * std::sin(sd.u.dot(x)); };
  } else if (name == "quadratic") {
    if (params.size() != 1 || params[0] <= 0.0) {
      throw std::invalid_argument("quadratic: expects one positive parameter c");
    }
    const double c = params[0];
    const double ball = 3.0 * std::sqrt(static_cast<double>(n));
    oracle.lipschitz_bound = ball / c;  // sup of |grad| = |x|/c on the ball
    oracle.lipschitz_note = "locally Lipschitz; bound valid on B2(3*sqrt(n))";
    oracle.evaluator = [c](const Point& x) { return x.squaredNorm() / (2.0 * c); };
  } else if (name == "neg_h2") {
    // s * (1 - <x,u>^2)/sqrt(2); gradient norm sqrt(2)|s||<x,u>|, local bound.
    double scale = 1.0;
    Point u = Point::Zero(n);
    u[0] = 1.0;
    if (params.size() == 1) {
      scale = params[0];
    } else if (!params.empty()) {
      if (params.size() != static_cast<std::size_t>(n) + 1) {
        throw std::invalid_argument("neg_h2: expects {s} or {s, u_1..u_n}");
      }
      scale = params[0];
      u = unit_direction(params, 1, n, name);
    }
    const double ball = 3.0 * std::sqrt(static_cast<double>(n));
    oracle.lipschitz_bound = std::abs(scale) * std::sqrt(2.0) * ball;
    oracle.lipschitz_note = "locally Lipschitz; bound valid on B2(3*sqrt(n))";
    oracle.evaluator = [scale, u](const Point& x) {
      const double t = u.dot(x);
      return scale * (1.0 - t * t) / std::sqrt(2.0);
    };
  } else {
    throw std::invalid_argument("catalog_function: unknown name '" + name + "'");
  }
  return oracle;
}

namespace {

std::vector<double> parse_params(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) throw std::invalid_argument("empty parameter in function spec");
    std::size_t pos = 0;
    out.push_back(std::stod(tok, &pos));
    if (pos != tok.size()) throw std::invalid_argument("bad parameter '" + tok + "'");
  }
  return out;
}

// P_t by common random numbers: one fixed Gaussian pool shared across all x,
// so the evaluator is a deterministic function. Each term x -> f(e^-t x + c)
// is (e^-t L)-Lipschitz, hence so is the average.
FunctionOracle make_noised(const FunctionOracle& inner, double t, int n) {
  if (t <= 0.0) throw std::invalid_argument("noised: t must be > 0");
  const int pool_size = 512;
  const double decay = std::exp(-t);
  const double sigma = std::sqrt(1.0 - std::exp(-2.0 * t));
  auto pool = std::make_shared<std::vector<Point>>();
  RngStream pool_rng(0x6f697365644c6162ULL ^ static_cast<std::uint64_t>(t * 1e9), 17);
  for (int i = 0; i < pool_size; ++i) pool->push_back(sample_gaussian(n, pool_rng));

  FunctionOracle oracle;
  oracle.dimension = n;
  oracle.lipschitz_bound = decay * inner.lipschitz_bound;
  oracle.name = "noised(" + inner.name + "," + std::to_string(t) + ")";
  oracle.lipschitz_note = inner.lipschitz_note;
  auto inner_eval = inner.evaluator;
  oracle.evaluator = [inner_eval, pool, decay, sigma](const Point& x) {
    double acc = 0.0;
    for (const Point& g : *pool) acc += inner_eval(decay * x + sigma * g);
    return acc / static_cast<double>(pool->size());
  };
  return oracle;
}

}  // namespace

FunctionOracle parse_function_spec(const std::string& spec, int n) {
  std::string name = spec;
  std::vector<double> params;
  if (auto colon = spec.find(':'); colon != std::string::npos) {
    name = spec.substr(0, colon);
    params = parse_params(spec.substr(colon + 1));
  }
  if (name.rfind("noised(", 0) == 0) {
    if (name.back() != ')') throw std::invalid_argument("noised: expected 'noised(inner,t)'");
    const std::string args = name.substr(7, name.size() - 8);
    const auto comma = args.rfind(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("noised: expected 'noised(inner,t)'");
    }
    const std::string inner_name = args.substr(0, comma);
    const double t = std::stod(args.substr(comma + 1));
    return make_noised(catalog_function(inner_name, n, params), t, n);
  }
  return catalog_function(name, n, params);
}

// ---------------------------------------------------------------------------
// Monte-Carlo distance
// ---------------------------------------------------------------------------

McDistance mc_l2_distance(const FunctionOracle& f, const FunctionOracle& g, long long count,
                          RngStream& rng) {
  if (f.dimension != g.dimension) {
    throw std::invalid_argument("mc_l2_distance: dimension mismatch");
  }
  if (count < 100) throw std::invalid_argument("mc_l2_distance: count must be >= 100");

  double mean = 0.0;
  double m2 = 0.0;  // Welford accumulator over squared differences
  for (long long i = 0; i < count; ++i) {
    const Point x = sample_gaussian(f.dimension, rng);
    const double d = f.evaluator(x) - g.evaluator(x);
    const double sq = d * d;
    const double delta = sq - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (sq - mean);
  }
  const double var = m2 / static_cast<double>(count - 1);
  McDistance out;
  out.mean_sq = mean;
  out.half_width_sq = 1.96 * std::sqrt(var / static_cast<double>(count));
  out.estimate = std::sqrt(std::max(0.0, mean));
  // delta method d sqrt(m) = hw / (2 sqrt(m)); fall back to sqrt(hw) near zero
  out.half_width = out.estimate > 1e-12 ? out.half_width_sq / (2.0 * out.estimate)
                                        : std::sqrt(out.half_width_sq);
  return out;
}

}  // namespace convexlab
