#include "hamtrack/synthgen.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hamtrack {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::vector<double> random_unit(Xoshiro256& rng, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double sq = 0.0;
  do {
    sq = 0.0;
    for (double& x : v) {
      x = rng.normal();
      sq += x * x;
    }
  } while (sq == 0.0);
  for (double& x : v) x /= std::sqrt(sq);
  return v;
}

std::vector<double> blend(const std::vector<double>& a, const std::vector<double>& b, double wb) {
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = (1.0 - wb) * a[k] + wb * b[k];
  return out;
}

// Normalizes v; a vanishing vector is replaced by a fresh random direction.
std::vector<double> unit_or_random(std::vector<double> v, Xoshiro256& rng) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (!(sq > 1e-24)) return random_unit(rng, static_cast<int>(v.size()));
  for (double& x : v) x /= std::sqrt(sq);
  return v;
}

bool live_at(const ObjectSpec& o, int frame) {
  return frame >= o.path.front().frame && frame <= o.path.back().frame;
}

BBox box_at(const ObjectSpec& o, int frame) {
  const auto& p = o.path;
  std::size_t k = 0;
  while (k + 1 < p.size() && p[k + 1].frame < frame) ++k;
  double cx = p[k].x, cy = p[k].y;
  if (k + 1 < p.size() && p[k + 1].frame != p[k].frame) {
    const double t = static_cast<double>(frame - p[k].frame) / (p[k + 1].frame - p[k].frame);
    cx = p[k].x + t * (p[k + 1].x - p[k].x);
    cy = p[k].y + t * (p[k + 1].y - p[k].y);
  }
  return BBox::from_center(cx, cy, o.w, o.h);
}

// Shifts and shrinks a box so it lies inside the canvas.
BBox inside(BBox b, int width, int height) {
  const double w = std::clamp(b.w, 1.0, static_cast<double>(width));
  const double h = std::clamp(b.h, 1.0, static_cast<double>(height));
  const double x = std::clamp(b.x, 0.0, width - w);
  const double y = std::clamp(b.y, 0.0, height - h);
  return BBox(x, y, w, h);
}

BBox union_box(const BBox& a, const BBox& b) {
  const double x0 = std::min(a.x, b.x), y0 = std::min(a.y, b.y);
  return BBox(x0, y0, std::max(a.right(), b.right()) - x0, std::max(a.bottom(), b.bottom()) - y0);
}

bool intersects(const BBox& a, const BBox& b) {
  return std::min(a.right(), b.right()) > std::max(a.x, b.x) &&
         std::min(a.bottom(), b.bottom()) > std::max(a.y, b.y);
}

const ConfidenceRegime& regime_at(const ScenarioSpec& spec, int frame) {
  const ConfidenceRegime* active = &spec.regimes.front();
  for (const auto& r : spec.regimes) {
    if (r.start <= frame) active = &r;
  }
  return *active;
}

}  // namespace

Xoshiro256::Xoshiro256(std::uint64_t seed) {
  for (auto& s : s_) s = splitmix64(seed);
}

std::uint64_t Xoshiro256::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Xoshiro256::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Xoshiro256::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Xoshiro256::below(std::uint64_t n) {
  return n == 0 ? 0 : static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
}

void validate_scenario(const ScenarioSpec& spec) {
  auto fail = [](std::string key, const std::string& what) {
    throw ConfigError(key, fmt::format("{}: {}", key, what));
  };
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };

  if (spec.n_frames < 1) fail("n_frames", "must be >= 1");
  if (spec.width < 1 || spec.height < 1) fail("width", "canvas must be at least 1x1");
  for (std::size_t k = 0; k < spec.objects.size(); ++k) {
    const auto& o = spec.objects[k];
    if (o.path.empty()) fail(fmt::format("object.{}.path", k), "needs at least one waypoint");
    if (!(o.w > 0.0) || !(o.h > 0.0)) fail(fmt::format("object.{}.size", k), "must be positive");
    for (std::size_t p = 0; p < o.path.size(); ++p) {
      const auto& wp = o.path[p];
      if (wp.frame < 1 || wp.frame > spec.n_frames ||
          (p > 0 && wp.frame <= o.path[p - 1].frame)) {
        fail(fmt::format("object.{}.path", k), "waypoint frames must increase within [1, n_frames]");
      }
    }
  }
  for (std::size_t k = 0; k < spec.occlusions.size(); ++k) {
    const auto& e = spec.occlusions[k];
    if (e.object >= spec.objects.size()) fail(fmt::format("event.{}.object", k), "unknown object");
    if (e.start < 1 || e.end > spec.n_frames || e.start > e.end) {
      fail(fmt::format("event.{}.span", k),
           fmt::format("span {}..{} outside [1, {}]", e.start, e.end, spec.n_frames));
    }
    if (e.occluder && (*e.occluder >= spec.objects.size() || *e.occluder == e.object)) {
      fail(fmt::format("event.{}.occluder", k), "must name another object");
    }
  }
  const auto& n = spec.noise;
  if (!unit(n.drop_prob)) fail("noise.drop_prob", "out of [0,1]");
  if (!unit(n.merge_prob)) fail("noise.merge_prob", "out of [0,1]");
  if (!unit(n.fragment_prob)) fail("noise.fragment_prob", "out of [0,1]");
  if (!unit(n.fp_rate)) fail("noise.fp_rate", "out of [0,1]");
  if (!(n.jitter_std >= 0.0)) fail("noise.jitter_std", "must be >= 0");
  if (spec.regimes.empty()) fail("regime.0.mean", "at least one confidence regime required");
  for (std::size_t k = 0; k < spec.regimes.size(); ++k) {
    if (!(spec.regimes[k].stddev >= 0.0)) fail(fmt::format("regime.{}.std", k), "must be >= 0");
    if (k > 0 && spec.regimes[k].start <= spec.regimes[k - 1].start) {
      fail(fmt::format("regime.{}.start", k), "regime starts must increase");
    }
  }
  if (spec.descriptor.dim < 1) fail("descriptor.dim", "must be >= 1");
  if (!unit(spec.descriptor.corruption)) fail("descriptor.corruption", "out of [0,1]");
  if (!unit(spec.descriptor.occluder_leak)) fail("descriptor.occluder_leak", "out of [0,1]");
  if (spec.descriptor.corrupt_margin < 0) fail("descriptor.corrupt_margin", "must be >= 0");
}

Scenario generate(const ScenarioSpec& spec) {
  validate_scenario(spec);
  Xoshiro256 rng(spec.seed);
  const DescriptorModel& dm = spec.descriptor;

  std::vector<std::vector<double>> bases;
  for (std::size_t k = 0; k < spec.objects.size(); ++k) bases.push_back(random_unit(rng, dm.dim));

  auto occluded = [&](std::size_t k, int frame) {
    return std::any_of(spec.occlusions.begin(), spec.occlusions.end(), [&](const OcclusionEvent& e) {
      return e.object == k && frame >= e.start && frame <= e.end;
    });
  };
  // Appearance leaking into object k's descriptor at this frame, if any.
  auto leak = [&](std::size_t k, int frame) -> std::optional<std::pair<std::size_t, double>> {
    for (const auto& e : spec.occlusions) {
      if (!e.occluder) continue;
      const bool near_span = e.object == k && ((frame >= e.start - dm.corrupt_margin && frame < e.start) ||
                                               (frame > e.end && frame <= e.end + dm.corrupt_margin));
      if (near_span) return std::pair{*e.occluder, dm.corruption};
      if (*e.occluder == k && frame >= e.start && frame <= e.end) {
        return std::pair{e.object, dm.occluder_leak};
      }
    }
    return std::nullopt;
  };

  Scenario out;
  out.embeddings = EmbeddingTable(static_cast<std::size_t>(dm.dim));

  struct Candidate {
    BBox box;
    std::vector<double> appearance;
  };

  for (int frame = 1; frame <= spec.n_frames; ++frame) {
    const ConfidenceRegime& regime = regime_at(spec, frame);

    std::vector<Candidate> candidates;
    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
      const ObjectSpec& o = spec.objects[k];
      if (!live_at(o, frame)) continue;
      ++out.stats.live;
      if (occluded(k, frame)) {
        ++out.stats.occluded;
        continue;
      }
      const BBox truth = inside(box_at(o, frame), spec.width, spec.height);
      out.gt[frame].push_back({frame, static_cast<int>(k) + 1, truth});

      if (spec.noise.drop_prob > 0.0 && rng.uniform() < spec.noise.drop_prob) {
        ++out.stats.dropped;
        continue;
      }
      std::vector<double> a = bases[k];
      if (const auto other = leak(k, frame); other && other->second > 0.0) {
        a = blend(a, bases[other->first], other->second);
      }
      candidates.push_back({truth, std::move(a)});
    }

    // Overlapping detections occasionally fuse into one union box.
    if (spec.noise.merge_prob > 0.0) {
      for (std::size_t a = 0; a < candidates.size(); ++a) {
        for (std::size_t b = a + 1; b < candidates.size(); ++b) {
          if (!intersects(candidates[a].box, candidates[b].box)) continue;
          if (rng.uniform() >= spec.noise.merge_prob) continue;
          candidates[a].box = union_box(candidates[a].box, candidates[b].box);
          candidates[a].appearance = blend(candidates[a].appearance, candidates[b].appearance, 0.5);
          candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(b));
          ++out.stats.merged;
          --b;
        }
      }
    }

    auto& dets = out.detections[frame];
    auto emit = [&](BBox box, std::vector<double> appearance, double mean) {
      Detection d;
      d.frame = frame;
      d.bbox = box;
      d.confidence = regime.stddev > 0.0 ? mean + regime.stddev * rng.normal() : mean;
      if (dm.noise_std > 0.0) {
        for (double& x : appearance) x += dm.noise_std * rng.normal();
      }
      d.descriptor = AppearanceDescriptor::embedding(unit_or_random(std::move(appearance), rng));
      out.embeddings.insert(frame, dets.size(), *d.descriptor);
      dets.push_back(std::move(d));
    };

    for (auto& c : candidates) {
      BBox box = c.box;
      if (spec.noise.fragment_prob > 0.0 && rng.uniform() < spec.noise.fragment_prob) {
        // Upper or lower half of the object.
        const bool upper = rng.uniform() < 0.5;
        box = BBox(box.x, upper ? box.y : box.y + 0.5 * box.h, box.w, 0.5 * box.h);
        ++out.stats.fragments;
      }
      if (spec.noise.jitter_std > 0.0) {
        const double j = spec.noise.jitter_std;
        box = BBox(box.x + j * rng.normal(), box.y + j * rng.normal(),
                   std::max(1.0, box.w + j * rng.normal()), std::max(1.0, box.h + j * rng.normal()));
      }
      emit(inside(box, spec.width, spec.height), std::move(c.appearance), regime.mean);
    }

    if (spec.noise.fp_rate > 0.0 && rng.uniform() < spec.noise.fp_rate) {
      const double w = rng.uniform(20.0, 80.0);
      const double h = 2.0 * w;
      const BBox box(rng.uniform(0.0, std::max(1.0, spec.width - w)),
                     rng.uniform(0.0, std::max(1.0, spec.height - h)), w, h);
      emit(inside(box, spec.width, spec.height), random_unit(rng, dm.dim),
           regime.mean - spec.noise.fp_conf_shift);
      ++out.stats.false_positives;
    }
    if (dets.empty()) out.detections.erase(frame);
  }
  return out;
}

Image render_frame(const ScenarioSpec& spec, const Scenario& scenario, int frame) {
  Image img;
  img.width = spec.width;
  img.height = spec.height;
  img.rgb.assign(3 * static_cast<std::size_t>(img.width) * img.height, 128);

  const auto it = scenario.gt.find(frame);
  if (it == scenario.gt.end()) return img;
  for (const auto& t : it->second) {
    // Colour depends on the object only, so it is stable across frames.
    Xoshiro256 colour_rng(spec.seed ^ (0x5bd1e995ULL * static_cast<std::uint64_t>(t.id)));
    std::uint8_t rgb[3];
    for (auto& c : rgb) c = static_cast<std::uint8_t>(colour_rng.below(256));
    const int x0 = std::max(0, static_cast<int>(std::floor(t.box.x)));
    const int y0 = std::max(0, static_cast<int>(std::floor(t.box.y)));
    const int x1 = std::min(img.width, static_cast<int>(std::ceil(t.box.right())));
    const int y1 = std::min(img.height, static_cast<int>(std::ceil(t.box.bottom())));
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) std::copy(rgb, rgb + 3, img.pixel(x, y));
    }
  }
  return img;
}

namespace {

double scn_double(const std::string& key, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError(key, fmt::format("{}: cannot parse '{}' as a number", key, text));
  }
  return v;
}

int scn_int(const std::string& key, std::string_view text) {
  const double v = scn_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 2e9) {
    throw ConfigError(key, fmt::format("{}: '{}' is not an integer", key, text));
  }
  return static_cast<int>(v);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto pos = s.find(sep);
    auto part = s.substr(0, pos);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    parts.push_back(part);
    if (pos == std::string_view::npos) break;
    s = s.substr(pos + 1);
  }
  return parts;
}

std::pair<double, double> scn_pair(const std::string& key, std::string_view text) {
  const auto p = split(text, ',');
  if (p.size() != 2) throw ConfigError(key, fmt::format("{}: expected two comma-separated values", key));
  return {scn_double(key, p[0]), scn_double(key, p[1])};
}

template <typename T>
T& grow(std::vector<T>& v, std::size_t index) {
  if (v.size() <= index) v.resize(index + 1);
  return v[index];
}

}  // namespace

ScenarioSpec parse_scenario_text(std::string_view text) {
  ScenarioSpec spec;
  spec.regimes.clear();
  for (const auto& [key, value] : parse_key_values(text)) {
    const auto parts = split(key, '.');
    if (parts.size() == 1) {
      if (key == "seed") {
        const double v = scn_double(key, value);
        if (v < 0 || v != std::floor(v)) throw ConfigError(key, "seed: expected a non-negative integer");
        spec.seed = static_cast<std::uint64_t>(v);
      } else if (key == "n_frames") {
        spec.n_frames = scn_int(key, value);
      } else if (key == "width") {
        spec.width = scn_int(key, value);
      } else if (key == "height") {
        spec.height = scn_int(key, value);
      } else {
        throw ConfigError(key, fmt::format("unknown scenario key '{}'", key));
      }
    } else if (parts.size() == 2 && parts[0] == "noise") {
      auto& n = spec.noise;
      const double v = scn_double(key, value);
      if (parts[1] == "drop_prob") n.drop_prob = v;
      else if (parts[1] == "jitter_std") n.jitter_std = v;
      else if (parts[1] == "merge_prob") n.merge_prob = v;
      else if (parts[1] == "fragment_prob") n.fragment_prob = v;
      else if (parts[1] == "fp_rate") n.fp_rate = v;
      else if (parts[1] == "fp_conf_shift") n.fp_conf_shift = v;
      else throw ConfigError(key, fmt::format("unknown scenario key '{}'", key));
    } else if (parts.size() == 2 && parts[0] == "descriptor") {
      auto& d = spec.descriptor;
      if (parts[1] == "dim") d.dim = scn_int(key, value);
      else if (parts[1] == "noise_std") d.noise_std = scn_double(key, value);
      else if (parts[1] == "corruption") d.corruption = scn_double(key, value);
      else if (parts[1] == "corrupt_margin") d.corrupt_margin = scn_int(key, value);
      else if (parts[1] == "occluder_leak") d.occluder_leak = scn_double(key, value);
      else throw ConfigError(key, fmt::format("unknown scenario key '{}'", key));
    } else if (parts.size() == 3 && (parts[0] == "object" || parts[0] == "event" || parts[0] == "regime")) {
      const int index = scn_int(key, parts[1]);
      if (index < 0 || index > 10000) throw ConfigError(key, fmt::format("{}: bad index", key));
      const auto idx = static_cast<std::size_t>(index);
      const std::string_view field = parts[2];
      if (parts[0] == "object") {
        ObjectSpec& o = grow(spec.objects, idx);
        if (field == "size") {
          std::tie(o.w, o.h) = scn_pair(key, value);
        } else if (field == "path") {
          o.path.clear();
          for (auto wp : split(value, ';')) {
            const auto colon = wp.find(':');
            if (colon == std::string_view::npos) {
              throw ConfigError(key, fmt::format("{}: waypoint '{}' is not frame:x,y", key, wp));
            }
            const auto [x, y] = scn_pair(key, wp.substr(colon + 1));
            o.path.push_back({scn_int(key, wp.substr(0, colon)), x, y});
          }
        } else {
          throw ConfigError(key, fmt::format("unknown scenario key '{}'", key));
        }
      } else if (parts[0] == "event") {
        OcclusionEvent& e = grow(spec.occlusions, idx);
        if (field == "object") {
          e.object = static_cast<std::size_t>(std::max(0, scn_int(key, value)));
        } else if (field == "span") {
          const auto [a, b] = scn_pair(key, value);
          e.start = static_cast<int>(a);
          e.end = static_cast<int>(b);
        } else if (field == "occluder") {
          e.occluder = static_cast<std::size_t>(std::max(0, scn_int(key, value)));
        } else {
          throw ConfigError(key, fmt::format("unknown scenario key '{}'", key));
        }
      } else {
        ConfidenceRegime& r = grow(spec.regimes, idx);
        if (field == "start") r.start = scn_int(key, value);
        else if (field == "mean") r.mean = scn_double(key, value);
        else if (field == "std") r.stddev = scn_double(key, value);
        else throw ConfigError(key, fmt::format("unknown scenario key '{}'", key));
      }
    } else {
      throw ConfigError(key, fmt::format("unknown scenario key '{}'", key));
    }
  }
  if (spec.regimes.empty()) spec.regimes.push_back(ConfidenceRegime{});
  return spec;
}

std::pair<double, double> regime_stats(const DetectionsByFrame& detections, int first, int last) {
  double n = 0.0, mean = 0.0, m2 = 0.0;
  for (auto it = detections.lower_bound(first); it != detections.end() && it->first <= last; ++it) {
    for (const auto& d : it->second) {
      n += 1.0;
      const double delta = d.confidence - mean;
      mean += delta / n;
      m2 += delta * (d.confidence - mean);
    }
  }
  if (n == 0.0) {
    throw std::invalid_argument(fmt::format("regime_stats: no detections in frames {}..{}", first, last));
  }
  return {mean, n < 2.0 ? 0.0 : std::sqrt(std::max(m2, 0.0) / (n - 1.0))};
}

ScenarioSpec make_lanes_scenario(std::uint64_t seed, int n_objects, int n_frames) {
  Xoshiro256 rng(seed);
  ScenarioSpec spec;
  spec.seed = seed;
  spec.n_frames = n_frames;
  spec.width = 1920;
  spec.height = std::max(480, 120 * n_objects);
  spec.regimes = {ConfidenceRegime{1, 50.0, 0.0}};
  const double lane = static_cast<double>(spec.height) / n_objects;
  for (int k = 0; k < n_objects; ++k) {
    ObjectSpec o;
    o.h = rng.uniform(0.5, 0.8) * lane;
    o.w = o.h * rng.uniform(0.35, 0.5);
    const double y = (k + 0.5) * lane;
    const double speed = rng.uniform(-1.5, 1.5);
    const double margin = o.w;
    const double travel = speed * (n_frames - 1);
    const double x0 = travel >= 0 ? rng.uniform(margin, std::max(margin + 1, spec.width - margin - travel))
                                  : rng.uniform(std::min(spec.width - margin - 1, margin - travel),
                                                spec.width - margin);
    o.path = {{1, x0, y}, {n_frames, x0 + travel, y}};
    spec.objects.push_back(o);
  }
  return spec;
}

ScenarioSpec make_crossing_scenario(std::uint64_t seed, int n_pairs, int n_frames) {
  Xoshiro256 rng(seed);
  ScenarioSpec spec;
  spec.seed = seed;
  spec.n_frames = n_frames;
  spec.width = 960;
  spec.height = std::max(480, 160 * n_pairs);
  spec.regimes = {ConfidenceRegime{1, 50.0, 0.0}};
  spec.descriptor = DescriptorModel{16, 0.05, 0.7, 2, 0.2};

  const double band = static_cast<double>(spec.height) / n_pairs;
  for (int p = 0; p < n_pairs; ++p) {
    const double h = rng.uniform(0.6, 0.75) * band;
    const double w = 0.4 * h;
    const double y = (p + 0.5) * band;
    const double speed = rng.uniform(3.0, 6.0);
    const int cross = static_cast<int>(rng.uniform(0.35, 0.65) * n_frames);
    const double cx = rng.uniform(0.4, 0.6) * spec.width;
    const double dy = rng.uniform(-0.08, 0.08) * h;

    // Rear object moves right, front object moves left; they meet at `cross`.
    ObjectSpec rear{{{1, cx - speed * (cross - 1), y + dy}, {n_frames, cx + speed * (n_frames - cross), y + dy}}, w, h};
    ObjectSpec front{{{1, cx + speed * (cross - 1), y}, {n_frames, cx - speed * (n_frames - cross), y}}, w, h};
    const std::size_t rear_idx = spec.objects.size();
    spec.objects.push_back(rear);
    spec.objects.push_back(front);

    const int span = 3 + static_cast<int>(rng.below(6));  // 3..8 frames
    const int start = cross - span / 2;
    spec.occlusions.push_back({rear_idx, start, start + span - 1, rear_idx + 1});
  }
  return spec;
}

}  // namespace hamtrack
