#include "hamtrack/eval.hpp"

#include "hamtrack/association.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace hamtrack {

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

EvalReport clear_mot(const TrackBoxesByFrame& gt, const TrackBoxesByFrame& hyp,
                     double iou_threshold) {
  EvalReport r;
  std::unordered_map<int, int> previous;      // gt id -> hyp id matched last frame
  std::unordered_map<int, int> last_matched;  // gt id -> hyp id at its latest match

  std::set<int> frames;
  for (const auto& [f, _] : gt) frames.insert(f);
  for (const auto& [f, _] : hyp) frames.insert(f);

  static const std::vector<TrackBox> kEmpty;
  for (int frame : frames) {
    const auto git = gt.find(frame);
    const auto hit = hyp.find(frame);
    const auto& g = git == gt.end() ? kEmpty : git->second;
    const auto& h = hit == hyp.end() ? kEmpty : hit->second;
    r.gt_total += static_cast<long>(g.size());

    std::vector<int> g_to_h(g.size(), -1);
    std::vector<char> h_used(h.size(), 0);

    // Keep last frame's correspondences that still overlap enough.
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto prev = previous.find(g[i].id);
      if (prev == previous.end()) continue;
      for (std::size_t j = 0; j < h.size(); ++j) {
        if (!h_used[j] && h[j].id == prev->second && iou(g[i].box, h[j].box) >= iou_threshold) {
          g_to_h[i] = static_cast<int>(j);
          h_used[j] = 1;
          break;
        }
      }
    }

    std::vector<std::size_t> free_g, free_h;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g_to_h[i] < 0) free_g.push_back(i);
    }
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (!h_used[j]) free_h.push_back(j);
    }
    if (!free_g.empty() && !free_h.empty()) {
      Eigen::MatrixXd overlap(free_g.size(), free_h.size());
      for (std::size_t a = 0; a < free_g.size(); ++a) {
        for (std::size_t b = 0; b < free_h.size(); ++b) {
          const double v = iou(g[free_g[a]].box, h[free_h[b]].box);
          overlap(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
              v >= iou_threshold ? v : 0.0;
        }
      }
      for (const auto& [a, b] : hungarian_max(overlap)) {
        if (overlap(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) <= 0.0) continue;
        g_to_h[free_g[a]] = static_cast<int>(free_h[b]);
        h_used[free_h[b]] = 1;
      }
    }

    previous.clear();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g_to_h[i] < 0) {
        ++r.fn;
        continue;
      }
      const int hyp_id = h[static_cast<std::size_t>(g_to_h[i])].id;
      const auto last = last_matched.find(g[i].id);
      if (last != last_matched.end() && last->second != hyp_id) ++r.idsw;
      last_matched[g[i].id] = hyp_id;
      previous[g[i].id] = hyp_id;
    }
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (!h_used[j]) ++r.fp;
    }
  }

  if (r.gt_total == 0) throw std::invalid_argument("clear_mot: ground truth is empty");
  r.mota = 1.0 - static_cast<double>(r.fp + r.fn + r.idsw) / static_cast<double>(r.gt_total);
  return r;
}

EvalReport idf1(const TrackBoxesByFrame& gt, const TrackBoxesByFrame& hyp,
                double iou_threshold) {
  std::map<int, std::size_t> gt_index, hyp_index;
  long gt_boxes = 0, hyp_boxes = 0;
  for (const auto& [_, boxes] : gt) {
    for (const auto& b : boxes) gt_index.emplace(b.id, gt_index.size());
    gt_boxes += static_cast<long>(boxes.size());
  }
  for (const auto& [_, boxes] : hyp) {
    for (const auto& b : boxes) hyp_index.emplace(b.id, hyp_index.size());
    hyp_boxes += static_cast<long>(boxes.size());
  }

  EvalReport r;
  long idtp = 0;
  if (!gt_index.empty() && !hyp_index.empty()) {
    Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(gt_index.size()),
                                                    static_cast<Eigen::Index>(hyp_index.size()));
    for (const auto& [frame, g] : gt) {
      const auto hit = hyp.find(frame);
      if (hit == hyp.end()) continue;
      for (const auto& gb : g) {
        for (const auto& hb : hit->second) {
          if (iou(gb.box, hb.box) >= iou_threshold) {
            overlap(static_cast<Eigen::Index>(gt_index.at(gb.id)),
                    static_cast<Eigen::Index>(hyp_index.at(hb.id))) += 1.0;
          }
        }
      }
    }
    for (const auto& [a, b] : hungarian_max(overlap)) {
      idtp += static_cast<long>(overlap(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    }
  }

  r.idtp = idtp;
  r.idfn = gt_boxes - idtp;
  r.idfp = hyp_boxes - idtp;
  const long denom = 2 * r.idtp + r.idfp + r.idfn;
  r.idf1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(r.idtp) / static_cast<double>(denom);
  return r;
}

EvalReport evaluate(const TrackBoxesByFrame& gt, const TrackBoxesByFrame& hyp,
                    double iou_threshold) {
  EvalReport r = clear_mot(gt, hyp, iou_threshold);
  const EvalReport id = idf1(gt, hyp, iou_threshold);
  r.idtp = id.idtp;
  r.idfp = id.idfp;
  r.idfn = id.idfn;
  r.idf1 = id.idf1;
  return r;
}

std::string summary_header() { return "MOTA,IDF1,IDSw,FP,FN,GT"; }

std::string summary_line(const EvalReport& r) {
  return fmt::format("{:.3f},{:.3f},{},{},{},{}", r.mota, r.idf1, r.idsw, r.fp, r.fn, r.gt_total);
}

}  // namespace hamtrack
