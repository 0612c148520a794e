#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spin {

struct ConfusionCounts {
  uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  uint64_t total() const { return tp + fp + fn + tn; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
};

struct MetricValues {
  double dsc = 0.0, iou = 0.0, precision = 0.0, recall = 0.0;
};

// Exact pixel counts; inputs must be {0,1} valued and equally sized.
ConfusionCounts confusion(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gt);

// IOU = TP/(TP+FN+FP), DSC = 2TP/(2TP+FN+FP), Precision = TP/(TP+FP),
// Recall = TP/(TP+FN). A 0/0 denominator yields 1.0 when tp=fp=fn=0 (a
// correct empty prediction) and 0.0 otherwise.
MetricValues metrics(const ConfusionCounts& c);

// Binary mask from a confidence map: 1 where value > tau (strictly), else 0.
std::vector<uint8_t> threshold(const std::vector<float>& confidence, double tau = 0.5);

}  // namespace spin
