#pragma once

// Shared generators and independent high-precision oracles for the tests.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rse/numerics.hpp"

namespace rse::test {

using hp = boost::multiprecision::cpp_bin_float_50;

inline DenseVector random_vector(SeededRng& rng, std::size_t d, double lo = -1.0, double hi = 1.0) {
  DenseVector v(d);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline hp hp_cosine(std::span<const double> u, std::span<const double> v) {
  hp dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += hp(u[i]) * hp(v[i]);
    nu += hp(u[i]) * hp(u[i]);
    nv += hp(v[i]) * hp(v[i]);
  }
  return dot / (sqrt(nu) * sqrt(nv));
}

// -log( exp(l[pos]) / sum exp(l) ) evaluated in 50-digit arithmetic, no max shift.
inline hp hp_softmax_nll(const std::vector<hp>& logits, std::size_t pos) {
  hp denom = 0;
  for (const auto& l : logits) denom += exp(l);
  return -log(exp(logits[pos]) / denom);
}

// Rank correlation by O(n^2) counting ranks and a long-double Pearson;
// shares no code with the library's sort-based implementation.
inline double brute_spearman(std::span<const double> a, std::span<const double> b) {
  auto ranks = [](std::span<const double> v) {
    std::vector<long double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      long double less = 0, equal = 0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] < v[i]) less += 1;
        else if (v[j] == v[i] && j != i) equal += 1;
      }
      r[i] = 1 + less + equal / 2;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  long double ma = 0, mb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= ra.size();
  mb /= rb.size();
  long double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

// Rank by full stable sort (descending score, target placed by tie midpoint).
inline double sort_rank(std::span<const double> scores, std::size_t target) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t first = 0;
  while (scores[order[first]] != scores[target]) ++first;
  std::size_t last = first;
  while (last + 1 < order.size() && scores[order[last + 1]] == scores[target]) ++last;
  return 1.0 + 0.5 * static_cast<double>(first + last);
}

}  // namespace rse::test
