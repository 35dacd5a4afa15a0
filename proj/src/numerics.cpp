#include "rse/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rse/error.hpp"
#include "rse/kernels.hpp"

namespace rse {

double norm(std::span<const double> v) { return std::sqrt(kernels::dot(v, v)); }

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorKind::Shape, "cosine of vectors with dims " + std::to_string(u.size()) +
                                      " and " + std::to_string(v.size()));
  }
  const double nu = norm(u);
  const double nv = norm(v);
  if (!(nu > 0.0) || !(nv > 0.0)) throw Error(ErrorKind::DegenerateVector, "cosine of zero vector");
  return std::clamp(kernels::dot(u, v) / (nu * nv), -1.0, 1.0);
}

double log_sum_exp(std::span<const double> logits) {
  if (logits.empty()) throw Error(ErrorKind::Arity, "log_sum_exp of empty sequence");
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double x : logits) sum += std::exp(x - peak);
  return peak + std::log(sum);
}

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw Error(ErrorKind::Shape, "adam_step: params/grads/state sizes disagree");
  }
  if (!(lr > 0.0)) throw Error(ErrorKind::Config, "adam_step: learning rate must be > 0");
  if (!all_finite(grads)) throw Error(ErrorKind::Numeric, "adam_step: non-finite gradient");

  const auto& h = state.hyper;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  auto& m = state.first_moment;
  auto& v = state.second_moment;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
  }
}

double finite_diff_check(const LossFn& loss, std::span<const double> params,
                         std::span<const double> analytic, double h) {
  if (params.empty()) throw Error(ErrorKind::Arity, "finite_diff_check over zero parameters");
  if (params.size() != analytic.size()) {
    throw Error(ErrorKind::Shape, "finite_diff_check: analytic gradient size mismatch");
  }
  if (!(h > 0.0)) throw Error(ErrorKind::Config, "finite_diff_check: step must be > 0");

  DenseVector probe(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = loss(probe);
    probe[i] = saved - h;
    const double down = loss(probe);
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error(ErrorKind::Numeric,
                  "finite_diff_check: non-finite loss at coordinate " + std::to_string(i));
    }
    const double central = (up - down) / (2.0 * h);
    const double denom = std::max(1e-12, std::abs(analytic[i]) + std::abs(central));
    worst = std::max(worst, std::abs(analytic[i] - central) / denom);
  }
  return worst;
}

std::uint64_t SeededRng::uniform_index(std::uint64_t n) {
  if (n == 0) throw Error(ErrorKind::Arity, "uniform_index over empty range");
  // Reject the top partial bucket so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

}  // namespace rse
