#include "spin/metrics.hpp"

#include "spin/tensor.hpp"

namespace spin {

ConfusionCounts confusion(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gt) {
  check(pred.size() == gt.size(), "confusion: size mismatch (" + std::to_string(pred.size()) +
                                      " vs " + std::to_string(gt.size()) + ")");
  ConfusionCounts c;
  for (size_t i = 0; i < pred.size(); ++i) {
    const uint8_t p = pred[i], g = gt[i];
    check(p <= 1 && g <= 1, "confusion: masks must be 0/1 valued");
    if (p && g)
      ++c.tp;
    else if (p && !g)
      ++c.fp;
    else if (!p && g)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

namespace {

double ratio(uint64_t num, uint64_t den, const ConfusionCounts& c) {
  if (den == 0) return (c.tp == 0 && c.fp == 0 && c.fn == 0) ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricValues metrics(const ConfusionCounts& c) {
  MetricValues m;
  m.iou = ratio(c.tp, c.tp + c.fn + c.fp, c);
  m.dsc = ratio(2 * c.tp, 2 * c.tp + c.fn + c.fp, c);
  m.precision = ratio(c.tp, c.tp + c.fp, c);
  m.recall = ratio(c.tp, c.tp + c.fn, c);
  return m;
}

std::vector<uint8_t> threshold(const std::vector<float>& confidence, double tau) {
  check(tau >= 0.0 && tau <= 1.0, "threshold: tau must be in [0,1], got " + std::to_string(tau));
  std::vector<uint8_t> out(confidence.size());
  for (size_t i = 0; i < confidence.size(); ++i) {
    const float v = confidence[i];
    check(v >= 0.0f && v <= 1.0f, "threshold: confidence values must be in [0,1]");
    out[i] = v > tau ? 1 : 0;
  }
  return out;
}

}  // namespace spin
