#pragma once

#include "hamtrack/core.hpp"
#include "hamtrack/io_mot.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace hamtrack::test {

// Standard normal quantile used as an oracle: Acklam's rational start
// refined by Newton steps on erfc. Kept away from the library's bisection.
inline double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p > 1 - 0.02425) {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  }
  for (int i = 0; i < 3; ++i) {
    const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI);
    x -= (cdf - p) / pdf;
  }
  return x;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("hamtrack_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

struct GtHyp {
  TrackBoxesByFrame gt;
  TrackBoxesByFrame hyp;
};

// Two objects over 5 frames (10 gt boxes). Object 1 is followed by id 10
// then id 11 from frame 3 (1 switch); object 2 is lost in frames 4-5 (2
// misses); a stray hypothesis appears in frame 5 (1 false positive).
inline GtHyp ten_box_scenario() {
  GtHyp s;
  for (int f = 1; f <= 5; ++f) {
    const BBox a(10.0 * f, 50, 40, 80), b(300.0 - 10.0 * f, 50, 40, 80);
    s.gt[f].push_back({f, 1, a});
    s.gt[f].push_back({f, 2, b});
    s.hyp[f].push_back({f, f <= 2 ? 10 : 11, BBox(a.x + 2, a.y + 1, a.w, a.h)});
    if (f <= 3) s.hyp[f].push_back({f, 20, b});
  }
  s.hyp[5].push_back({5, 30, BBox(500, 300, 40, 80)});
  return s;
}

// One 10-frame object covered by id 7 in frames 1-5 and id 8 in 6-10.
inline GtHyp split_trajectory_scenario() {
  GtHyp s;
  for (int f = 1; f <= 10; ++f) {
    const BBox box(20.0 + 5 * f, 40, 30, 60);
    s.gt[f].push_back({f, 1, box});
    s.hyp[f].push_back({f, f <= 5 ? 7 : 8, box});
  }
  return s;
}

}  // namespace hamtrack::test
