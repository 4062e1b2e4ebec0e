#include "convexlab/hermite.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>

namespace convexlab {

MultiIndex MultiIndex::unit(int n, int i, int degree) {
  Eigen::VectorXi e = Eigen::VectorXi::Zero(n);
  e[i] = degree;
  return MultiIndex(std::move(e));
}

bool GradedLexLess::operator()(const MultiIndex& a, const MultiIndex& b) const {
  const int da = a.total_degree();
  const int db = b.total_degree();
  if (da != db) return da < db;
  for (int i = 0; i < a.entries.size() && i < b.entries.size(); ++i) {
    if (a.entries[i] != b.entries[i]) return a.entries[i] < b.entries[i];
  }
  return a.entries.size() < b.entries.size();
}

std::vector<MultiIndex> enumerate_indices(int n, int d) {
  if (n < 1 || d < 0) throw std::invalid_argument("enumerate_indices: need n >= 1, d >= 0");
  std::vector<MultiIndex> out;
  Eigen::VectorXi cur = Eigen::VectorXi::Zero(n);
  // Enumerate compositions of each total degree in lexicographic order.
  std::function<void(int, int)> fill = [&](int pos, int remaining) {
    if (pos == n - 1) {
      cur[pos] = remaining;
      out.emplace_back(cur);
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      cur[pos] = v;
      fill(pos + 1, remaining - v);
    }
  };
  for (int total = 0; total <= d; ++total) fill(0, total);
  return out;
}

double hermite_1d(int j, double z) {
  if (j < 0) throw std::invalid_argument("hermite_1d: j must be >= 0");
  if (j == 0) return 1.0;
  double prev = 1.0;
  double cur = z;
  for (int k = 1; k < j; ++k) {
    const double next = (z * cur - std::sqrt(static_cast<double>(k)) * prev) /
                        std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

Eigen::VectorXd hermite_all(int j_max, double z) {
  Eigen::VectorXd h(j_max + 1);
  h[0] = 1.0;
  if (j_max >= 1) h[1] = z;
  for (int k = 1; k < j_max; ++k) {
    h[k + 1] = (z * h[k] - std::sqrt(static_cast<double>(k)) * h[k - 1]) /
               std::sqrt(static_cast<double>(k + 1));
  }
  return h;
}

double hermite_multi(const MultiIndex& alpha, const Point& x) {
  if (alpha.dimension() != x.size()) {
    throw std::invalid_argument("hermite_multi: dimension mismatch");
  }
  double prod = 1.0;
  for (int i = 0; i < x.size(); ++i) prod *= hermite_1d(alpha.entries[i], x[i]);
  return prod;
}

void HermiteExpansion::set(const MultiIndex& alpha, double value) {
  if (alpha.dimension() != dimension) {
    throw std::invalid_argument("HermiteExpansion::set: dimension mismatch");
  }
  if (!std::isfinite(value)) throw std::invalid_argument("HermiteExpansion::set: non-finite");
  coefficients[alpha] = value;
}

int HermiteExpansion::max_degree() const {
  int d = 0;
  for (const auto& [alpha, c] : coefficients) d = std::max(d, alpha.total_degree());
  return d;
}

double HermiteExpansion::norm_sq() const {
  double s = 0.0;
  for (const auto& [alpha, c] : coefficients) s += c * c;
  return s;
}

double eval_expansion(const HermiteExpansion& e, const Point& x) {
  if (e.dimension != x.size()) throw std::invalid_argument("eval_expansion: dimension mismatch");
  const int d = e.max_degree();
  // One recurrence pass per coordinate, then products over the sparse support.
  std::vector<Eigen::VectorXd> per_axis;
  per_axis.reserve(x.size());
  for (int i = 0; i < x.size(); ++i) per_axis.push_back(hermite_all(d, x[i]));
  double acc = 0.0;
  for (const auto& [alpha, c] : e.coefficients) {
    double prod = c;
    for (int i = 0; i < x.size(); ++i) prod *= per_axis[i][alpha.entries[i]];
    acc += prod;
  }
  return acc;
}

double expansion_gradient_sq_norm(const HermiteExpansion& e) {
  double s = 0.0;
  for (const auto& [alpha, c] : e.coefficients) s += alpha.total_degree() * c * c;
  return s;
}

double expansion_inner(const HermiteExpansion& a, const HermiteExpansion& b) {
  double s = 0.0;
  for (const auto& [alpha, c] : a.coefficients) s += c * b.coefficient(alpha);
  return s;
}

HermiteExpansion apply_noise_spectral(const HermiteExpansion& e, NoiseParameter t) {
  HermiteExpansion out;
  out.dimension = e.dimension;
  for (const auto& [alpha, c] : e.coefficients) {
    out.coefficients[alpha] = std::exp(-t.t * alpha.total_degree()) * c;
  }
  return out;
}

double apply_noise_mc(const FunctionOracle& f, NoiseParameter t, const Point& x,
                      long long count, RngStream& rng) {
  if (t.t <= 0.0) throw std::invalid_argument("apply_noise_mc: t must be > 0");
  if (count < 100) throw std::invalid_argument("apply_noise_mc: count must be >= 100");
  if (f.dimension != x.size()) throw std::invalid_argument("apply_noise_mc: dimension mismatch");
  const double decay = std::exp(-t.t);
  const double sigma = std::sqrt(1.0 - std::exp(-2.0 * t.t));
  double acc = 0.0;
  for (long long i = 0; i < count; ++i) {
    acc += f.evaluator(decay * x + sigma * sample_gaussian(f.dimension, rng));
  }
  return acc / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

std::string format_17g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string expansion_to_json(const HermiteExpansion& e) {
  std::string out = "{\"n\": " + std::to_string(e.dimension) + ", \"coeffs\": [";
  bool first = true;
  for (const auto& [alpha, c] : e.coefficients) {  // map iterates in graded-lex order
    if (!first) out += ", ";
    first = false;
    out += "{\"alpha\": [";
    for (int i = 0; i < alpha.dimension(); ++i) {
      if (i) out += ", ";
      out += std::to_string(alpha.entries[i]);
    }
    out += "], \"c\": " + format_17g(c) + "}";
  }
  out += "]}";
  return out;
}

HermiteExpansion expansion_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  HermiteExpansion e;
  e.dimension = j.at("n").get<int>();
  for (const auto& item : j.at("coeffs")) {
    const auto& av = item.at("alpha");
    Eigen::VectorXi alpha(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) alpha[static_cast<int>(i)] = av[i].get<int>();
    e.set(MultiIndex(std::move(alpha)), item.at("c").get<double>());
  }
  return e;
}

FunctionOracle expansion_oracle(const HermiteExpansion& e, double ball_radius) {
  if (ball_radius <= 0.0) ball_radius = 3.0 * std::sqrt(static_cast<double>(e.dimension));
  // Crude sup-gradient bound over the ball via per-term gradients:
  // |d/dx_i h_alpha| <= sqrt(alpha_i) * prod over the simple bound
  // |h_k(z)| <= ((1+|z|) max(k,1))^k, summed with |coefficients|.
  double grad_bound = 0.0;
  for (const auto& [alpha, c] : e.coefficients) {
    const int d = alpha.total_degree();
    if (d == 0) continue;
    const double term = std::pow((1.0 + ball_radius) * std::max(d, 1), d);
    grad_bound += std::abs(c) * std::sqrt(static_cast<double>(d)) * term *
                  std::sqrt(static_cast<double>(alpha.dimension()));
  }
  FunctionOracle oracle;
  oracle.dimension = e.dimension;
  oracle.lipschitz_bound = std::max(grad_bound, 1e-12);
  oracle.name = "expansion";
  oracle.lipschitz_note = "locally Lipschitz; bound valid on B2(" + std::to_string(ball_radius) + ")";
  auto copy = std::make_shared<HermiteExpansion>(e);
  oracle.evaluator = [copy](const Point& x) { return eval_expansion(*copy, x); };
  return oracle;
}

}  // namespace convexlab
