#pragma once

#include "hamtrack/io_mot.hpp"

#include <string>

namespace hamtrack {

struct EvalReport {
  long gt_total = 0;
  long fp = 0;
  long fn = 0;
  long idsw = 0;
  double mota = 0.0;
  long idtp = 0;
  long idfp = 0;
  long idfn = 0;
  double idf1 = 0.0;
};

double iou(const BBox& a, const BBox& b);

/// CLEAR-MOT counts. Per frame, last frame's gt->hyp pairings are kept while
/// their IoU stays >= iou_threshold; remaining boxes are matched by
/// Hungarian on IoU. An ID switch is counted when a gt object is matched to
/// a different hypothesis id than at its previous match, gaps included.
/// Fills gt_total, fp, fn, idsw and mota. Throws std::invalid_argument when
/// there is no ground truth.
EvalReport clear_mot(const TrackBoxesByFrame& gt, const TrackBoxesByFrame& hyp,
                     double iou_threshold);

/// Identity metrics from a trajectory-level matching maximizing the number
/// of co-occurring frames with IoU >= iou_threshold. Fills idtp, idfp, idfn
/// and idf1 (0 when there is nothing to score).
EvalReport idf1(const TrackBoxesByFrame& gt, const TrackBoxesByFrame& hyp, double iou_threshold);

/// Both metric families in one report.
EvalReport evaluate(const TrackBoxesByFrame& gt, const TrackBoxesByFrame& hyp,
                    double iou_threshold);

/// `MOTA,IDF1,IDSw,FP,FN,GT` header line.
std::string summary_header();
/// Values line matching summary_header(), scores with 3 decimals.
std::string summary_line(const EvalReport& report);

}  // namespace hamtrack
