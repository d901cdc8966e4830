#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "slicegraph/error.hpp"

namespace slicegraph::metrics {

template <typename T>
std::vector<T> dedupe(const std::vector<T>& ranked) {
  std::vector<T> out;
  std::set<T> seen;
  for (const auto& x : ranked) {
    if (seen.insert(x).second) out.push_back(x);
  }
  return out;
}

template <typename T>
double recall_at_k(const std::vector<T>& predicted, const std::set<T>& gold, std::size_t k) {
  if (k < 1) throw InvalidArgument("k must be >= 1");
  for (std::size_t i = 0; i < predicted.size() && i < k; ++i) {
    if (gold.contains(predicted[i])) return 1.0;
  }
  return 0.0;
}

template <typename T>
double mrr(const std::vector<T>& predicted, const std::set<T>& gold) {
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (gold.contains(predicted[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

template <typename T>
double f1_at_k(const std::vector<T>& predicted, const std::set<T>& gold, std::size_t k) {
  if (k < 1) throw InvalidArgument("k must be >= 1");
  std::size_t n = std::min(k, predicted.size());
  if (n == 0 || gold.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += gold.contains(predicted[i]);
  if (hits == 0) return 0.0;
  double p = static_cast<double>(hits) / static_cast<double>(n);
  double r = static_cast<double>(hits) / static_cast<double>(gold.size());
  return 2.0 * p * r / (p + r);
}

template <typename T>
double iou(const std::set<T>& predicted, const std::set<T>& gold) {
  std::size_t inter = 0;
  for (const auto& x : predicted) inter += gold.contains(x);
  std::size_t uni = predicted.size() + gold.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Fraction of gold items contained in the covered set.
template <typename T>
double coverage(const std::set<T>& covered, const std::set<T>& gold) {
  if (gold.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& x : gold) hit += covered.contains(x);
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

// 1-based ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double r = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

struct Correlation {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;
};

// Pearson correlation of the average ranks. Undefined for fewer than two
// points or a constant series.
inline Correlation spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InvalidArgument("series lengths differ");
  Correlation out;
  if (a.size() < 2) return out;
  auto ra = average_ranks(a);
  auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) ma += ra[i], mb += rb[i];
  ma /= n, mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return out;
  out.value = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
  out.defined = true;
  return out;
}

}  // namespace slicegraph::metrics
