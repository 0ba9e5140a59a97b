#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "wfmatch/features.hpp"
#include "wfmatch/groundtruth.hpp"

namespace wfm {

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // in descending threshold order
  double average_precision = 0.0;
  int num_predictions = 0;  // after discarding predictions touching IGNORE
  int num_gt = 0;
};

// Average precision with all-points (monotone envelope) interpolation.
// Predictions touching an IGNORE feature are dropped from both numerator and
// denominator; the recall denominator is the GT match count.
inline PrCurve precision_recall_ap(std::vector<MatchEntry> predictions,
                                   const std::vector<std::pair<int, int>>& gt_matches,
                                   const std::set<int>& ignore_a, const std::set<int>& ignore_b) {
  PrCurve out;
  out.num_gt = static_cast<int>(gt_matches.size());

  predictions.erase(std::remove_if(predictions.begin(), predictions.end(),
                                   [&](const MatchEntry& e) {
                                     return ignore_a.count(e.a) > 0 || ignore_b.count(e.b) > 0;
                                   }),
                    predictions.end());
  out.num_predictions = static_cast<int>(predictions.size());
  std::stable_sort(predictions.begin(), predictions.end(), [](const MatchEntry& x, const MatchEntry& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  const std::set<std::pair<int, int>> gt(gt_matches.begin(), gt_matches.end());
  int tp = 0;
  std::vector<bool> correct(predictions.size(), false);
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    correct[k] = gt.count({predictions[k].a, predictions[k].b}) > 0;
    tp += correct[k] ? 1 : 0;
    out.points.push_back({predictions[k].score, double(tp) / double(k + 1),
                          out.num_gt > 0 ? double(tp) / out.num_gt : 0.0});
  }

  if (out.num_gt == 0 || predictions.empty()) return out;
  // precision envelope from the low-score end
  std::vector<double> env(predictions.size());
  double best = 0.0;
  for (int k = static_cast<int>(predictions.size()) - 1; k >= 0; --k) {
    best = std::max(best, out.points[k].precision);
    env[k] = best;
  }
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    if (correct[k]) {
      out.average_precision += (out.points[k].recall - prev_recall) * env[k];
      prev_recall = out.points[k].recall;
    }
  }
  return out;
}

struct PrecisionRecall {
  int correct = 0, predicted = 0, gt = 0;
  double precision() const { return predicted > 0 ? double(correct) / predicted : 0.0; }
  double recall() const { return gt > 0 ? double(correct) / gt : 0.0; }
};

inline PrecisionRecall match_precision_recall(const std::vector<MatchEntry>& predictions,
                                              const std::vector<std::pair<int, int>>& gt_matches,
                                              const std::set<int>& ignore_a, const std::set<int>& ignore_b) {
  PrecisionRecall pr;
  pr.gt = static_cast<int>(gt_matches.size());
  const std::set<std::pair<int, int>> gt(gt_matches.begin(), gt_matches.end());
  for (const auto& e : predictions) {
    if (ignore_a.count(e.a) > 0 || ignore_b.count(e.b) > 0) continue;
    ++pr.predicted;
    if (gt.count({e.a, e.b}) > 0) ++pr.correct;
  }
  return pr;
}

// Points carry no explicit IGNORE list in the labels; anything absent from
// both the matched and unmatched sets was ignored by the labeler.
inline std::pair<std::set<int>, std::set<int>> point_ignore_sets(const GtLabels& gt,
                                                                 const std::vector<MatchEntry>& preds,
                                                                 const std::vector<int>& extra_a = {},
                                                                 const std::vector<int>& extra_b = {}) {
  std::set<int> known_a, known_b;
  for (const auto& [i, j] : gt.point_matches) {
    known_a.insert(i);
    known_b.insert(j);
  }
  for (int i : gt.point_unmatched_a) known_a.insert(i);
  for (int j : gt.point_unmatched_b) known_b.insert(j);
  std::set<int> ig_a(gt.point_ignored_a.begin(), gt.point_ignored_a.end());
  std::set<int> ig_b(gt.point_ignored_b.begin(), gt.point_ignored_b.end());
  auto sweep = [&](int a, int b) {
    if (!known_a.count(a)) ig_a.insert(a);
    if (!known_b.count(b)) ig_b.insert(b);
  };
  for (const auto& e : preds) sweep(e.a, e.b);
  for (int i : extra_a)
    if (!known_a.count(i)) ig_a.insert(i);
  for (int j : extra_b)
    if (!known_b.count(j)) ig_b.insert(j);
  return {ig_a, ig_b};
}

// Percentage of GT line correspondences relative to the mean line count of
// the two images.
inline double line_repeatability(const FeatureSet& fa, const FeatureSet& fb, const TwoViewGeometry& g,
                                 const GtConfig& cfg) {
  const LineGt gt = gt_line_matches(fa, fb, g, cfg);
  const double denom = std::max(1.0, 0.5 * (double(fa.lines.size()) + double(fb.lines.size())));
  return 100.0 * double(gt.matches.size()) / denom;
}

// ---- rotation metrics ----

inline void require_rotation(const Mat3& r, const std::string& what) {
  const Mat3 rtr = transposed(r) * r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (std::abs(rtr(i, j) - (i == j ? 1.0 : 0.0)) > 1e-6)
        throw Error("not_a_rotation", what + ": R^T R != I");
  if (det(r) < 0.0) throw Error("not_a_rotation", what + ": det < 0");
}

// Angle of the relative rotation. atan2 of the skew/trace parts agrees with
// arccos((trace-1)/2) but stays accurate for angles near zero, where acos
// bottoms out around 1e-6 degrees.
inline double rotation_error_deg(const Mat3& r_est, const Mat3& r_gt) {
  require_rotation(r_est, "estimate");
  require_rotation(r_gt, "ground truth");
  const Mat3 rel = transposed(r_gt) * r_est;
  const double c = (rel(0, 0) + rel(1, 1) + rel(2, 2) - 1.0) / 2.0;
  const Vec3 skew{rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1)};
  const double s = 0.5 * norm(skew);
  return std::atan2(s, c) * 180.0 / M_PI;
}

struct RotationStats {
  double median = 0.0, mean = 0.0;
  std::vector<double> auc;  // one entry per threshold
};

// Trapezoid area under the cumulative error curve up to each threshold,
// normalized by the threshold.
inline std::vector<double> auc_at_thresholds(std::vector<double> errors, const std::vector<double>& thresholds) {
  std::sort(errors.begin(), errors.end());
  const int n = static_cast<int>(errors.size());
  std::vector<double> out;
  for (double t : thresholds) {
    if (n == 0 || t <= 0.0) {
      out.push_back(0.0);
      continue;
    }
    std::vector<double> x{0.0}, y{0.0};
    for (int i = 0; i < n && errors[i] <= t; ++i) {
      x.push_back(errors[i]);
      y.push_back(double(i + 1) / n);
    }
    x.push_back(t);
    y.push_back(y.back());
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) area += (x[i + 1] - x[i]) * (y[i + 1] + y[i]) / 2.0;
    out.push_back(area / t);
  }
  return out;
}

inline RotationStats rotation_stats(std::vector<double> errors, const std::vector<double>& thresholds) {
  RotationStats s;
  s.auc = auc_at_thresholds(errors, thresholds);
  if (errors.empty()) return s;
  std::sort(errors.begin(), errors.end());
  const int n = static_cast<int>(errors.size());
  s.median = n % 2 == 1 ? errors[n / 2] : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
  for (double e : errors) s.mean += e;
  s.mean /= n;
  return s;
}

}  // namespace wfm
