#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "spin/rng.hpp"
#include "spin/tensor.hpp"

namespace spin {

struct GradCheckEntry {
  std::string name;
  long long elements = 0;  // elements actually probed
  double max_err = 0.0;    // worst element error (see gradcheck for the metric)
  long long worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  bool finite = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_err = 0.0;
  bool all_finite = true;

  bool pass(double tol) const { return all_finite && max_err < tol; }
};

// Central finite differences against the analytic gradients of `forward`,
// which must rebuild the scalar loss from the current parameter values on
// every call. Large tensors are subsampled: `samples_per_tensor` elements
// are probed per parameter (0 = every element).
//
// Element error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-4);
// the absolute floor keeps finite-difference noise on near-zero gradients
// from masquerading as relative error while still catching sign and scale
// bugs on small-magnitude elements.
template <typename T>
GradCheckReport gradcheck(const std::function<Tensor<T>()>& forward,
                          const std::vector<std::pair<std::string, Tensor<T>*>>& params,
                          T perturbation, int samples_per_tensor = 0, uint64_t seed = 7) {
  GradCheckReport report;
  Rng rng(seed);

  Tensor<T> loss = forward();
  check(loss.numel() == 1, "gradcheck: forward() must produce a scalar");
  for (auto& [name, p] : params) p->zero_grad();
  loss.backward();

  const double h = static_cast<double>(perturbation);
  for (auto& [name, p] : params) {
    GradCheckEntry entry;
    entry.name = name;
    auto& val = p->data();
    const auto& analytic = p->grad();

    std::vector<long long> indices;
    const long long n = p->numel();
    if (samples_per_tensor <= 0 || n <= samples_per_tensor) {
      indices.resize(static_cast<size_t>(n));
      for (long long i = 0; i < n; ++i) indices[static_cast<size_t>(i)] = i;
    } else {
      for (int i = 0; i < samples_per_tensor; ++i)
        indices.push_back(rng.uniform_int(0, static_cast<int>(n - 1)));
      std::sort(indices.begin(), indices.end());
      indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    }

    for (const long long idx : indices) {
      const T saved = val[idx];
      val[idx] = saved + static_cast<T>(h);
      double fplus;
      {
        NoGradGuard ng;
        fplus = static_cast<double>(forward().scalar());
      }
      val[idx] = saved - static_cast<T>(h);
      double fminus;
      {
        NoGradGuard ng;
        fminus = static_cast<double>(forward().scalar());
      }
      val[idx] = saved;

      const double numeric = (fplus - fminus) / (2.0 * h);
      const double a = static_cast<double>(analytic[idx]);
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        entry.finite = false;
        report.all_finite = false;
      }
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-4});
      const double err = std::abs(a - numeric) / denom;
      ++entry.elements;
      if (err > entry.max_err) {
        entry.max_err = err;
        entry.worst_index = idx;
        entry.analytic = a;
        entry.numeric = numeric;
      }
    }
    report.max_err = std::max(report.max_err, entry.max_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace spin
