#include "hamtrack/io_mot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string_view>

namespace hamtrack {

ParseError::ParseError(std::size_t line, const std::string& message)
    : IoError(fmt::format("line {}: {}", line, message)), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  while (true) {
    const auto comma = line.find(',');
    fields.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    line = line.substr(comma + 1);
  }
  return fields;
}

double to_double(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError(line_no, fmt::format("'{}' is not a number", field));
  }
  return value;
}

int to_int(std::string_view field, std::size_t line_no) {
  const double v = to_double(field, line_no);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw ParseError(line_no, fmt::format("'{}' is not an integer", field));
  }
  return static_cast<int>(v);
}

BBox to_box(std::span<const std::string_view> f, std::size_t line_no) {
  try {
    return BBox(to_double(f[0], line_no), to_double(f[1], line_no), to_double(f[2], line_no),
                to_double(f[3], line_no));
  } catch (const std::invalid_argument& e) {
    throw ParseError(line_no, e.what());
  }
}

int to_frame(std::string_view field, std::size_t line_no) {
  const int frame = to_int(field, line_no);
  if (frame < 1) throw ParseError(line_no, fmt::format("frame {} must be >= 1", frame));
  return frame;
}

// Calls fn(fields, line_no) for every non-blank line.
template <typename Fn>
void for_each_row(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    fn(split_csv(line), line_no);
  }
}

}  // namespace

DetectionsByFrame parse_det_file(std::istream& in) {
  DetectionsByFrame out;
  for_each_row(in, [&](const std::vector<std::string_view>& f, std::size_t line_no) {
    if (f.size() != 10) {
      throw ParseError(line_no, fmt::format("expected 10 fields, found {}", f.size()));
    }
    Detection d;
    d.frame = to_frame(f[0], line_no);
    d.bbox = to_box(std::span(f).subspan(2, 4), line_no);
    d.confidence = to_double(f[6], line_no);
    out[d.frame].push_back(std::move(d));
  });
  return out;
}

TrackBoxesByFrame parse_track_file(std::istream& in) {
  TrackBoxesByFrame out;
  for_each_row(in, [&](const std::vector<std::string_view>& f, std::size_t line_no) {
    if (f.size() < 7) {
      throw ParseError(line_no, fmt::format("expected at least 7 fields, found {}", f.size()));
    }
    TrackBox t;
    t.frame = to_frame(f[0], line_no);
    t.id = to_int(f[1], line_no);
    t.box = to_box(std::span(f).subspan(2, 4), line_no);
    out[t.frame].push_back(t);
  });
  return out;
}

void write_det_file(std::ostream& out, const DetectionsByFrame& detections) {
  for (const auto& [frame, dets] : detections) {
    for (const auto& d : dets) {
      out << fmt::format("{},-1,{:.2f},{:.2f},{:.2f},{:.2f},{:.4f},-1,-1,-1\n", frame, d.bbox.x,
                         d.bbox.y, d.bbox.w, d.bbox.h, d.confidence);
    }
  }
}

void write_result_file(std::ostream& out, const TrackBoxesByFrame& results) {
  for (const auto& [frame, boxes] : results) {
    std::vector<TrackBox> sorted(boxes.begin(), boxes.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const TrackBox& a, const TrackBox& b) { return a.id < b.id; });
    for (const auto& t : sorted) {
      out << fmt::format("{},{},{:.2f},{:.2f},{:.2f},{:.2f},1,-1,-1,-1\n", frame, t.id, t.box.x,
                         t.box.y, t.box.w, t.box.h);
    }
  }
}

Image read_ppm(std::istream& in) {
  auto next_token = [&in]() {
    std::string token;
    while (in && token.empty()) {
      const int c = in.peek();
      if (c == '#') {
        std::string comment;
        std::getline(in, comment);
      } else if (std::isspace(c)) {
        in.get();
      } else if (c == EOF) {
        break;
      } else {
        in >> token;
      }
    }
    return token;
  };
  auto next_int = [&](const char* what) {
    const std::string token = next_token();
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || value <= 0) {
      throw IoError(fmt::format("ppm: invalid {} '{}'", what, token));
    }
    return value;
  };

  if (next_token() != "P6") throw IoError("ppm: missing P6 magic");
  Image img;
  img.width = next_int("width");
  img.height = next_int("height");
  if (next_int("maxval") != 255) throw IoError("ppm: only maxval 255 is supported");
  in.get();  // single whitespace before the raster

  img.rgb.resize(3 * static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.rgb.size())) {
    throw IoError(fmt::format("ppm: truncated raster ({} of {} bytes)", in.gcount(),
                              img.rgb.size()));
  }
  return img;
}

void write_ppm(std::ostream& out, const Image& image) {
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()),
            static_cast<std::streamsize>(image.rgb.size()));
}

AppearanceDescriptor histogram_from_patch(const Image& image, const BBox& box) {
  if (image.rgb.size() != 3 * static_cast<std::size_t>(image.width) * image.height) {
    throw std::invalid_argument("histogram_from_patch: image buffer size mismatch");
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(box.x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(box.y)));
  const int x1 = std::min(image.width, static_cast<int>(std::ceil(box.right())));
  const int y1 = std::min(image.height, static_cast<int>(std::ceil(box.bottom())));
  if (x1 <= x0 || y1 <= y0) {
    throw std::invalid_argument("histogram_from_patch: box lies outside the image");
  }

  std::vector<double> bins(512, 0.0);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const std::uint8_t* p = image.pixel(x, y);
      bins[(p[0] >> 5) * 64 + (p[1] >> 5) * 8 + (p[2] >> 5)] += 1.0;
    }
  }
  return AppearanceDescriptor::histogram(std::move(bins));
}

const AppearanceDescriptor* EmbeddingTable::find(int frame, std::size_t ordinal) const {
  const auto it = table_.find({frame, ordinal});
  return it == table_.end() ? nullptr : &it->second;
}

void EmbeddingTable::insert(int frame, std::size_t ordinal, AppearanceDescriptor descriptor) {
  if (descriptor.size() != dim_) {
    throw std::invalid_argument(
        fmt::format("embedding ({}, {}) has length {}, expected {}", frame, ordinal,
                    descriptor.size(), dim_));
  }
  if (!table_.emplace(std::pair{frame, ordinal}, std::move(descriptor)).second) {
    throw std::invalid_argument(fmt::format("duplicate embedding key ({}, {})", frame, ordinal));
  }
}

EmbeddingTable parse_embedding_file(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::string_view header;
  while (std::getline(in, line)) {
    ++line_no;
    header = trim(line);
    if (!header.empty()) break;
  }
  if (header.substr(0, 4) != "dim=") throw ParseError(line_no, "missing 'dim=<k>' header");
  const int dim = to_int(trim(header.substr(4)), line_no);
  if (dim < 1) throw ParseError(line_no, "dim must be >= 1");

  EmbeddingTable table(static_cast<std::size_t>(dim));
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != static_cast<std::size_t>(dim) + 2) {
      throw ParseError(line_no, fmt::format("dim mismatch: expected {} components, found {}", dim,
                                            f.size() < 2 ? 0 : f.size() - 2));
    }
    const int frame = to_frame(f[0], line_no);
    const int ordinal = to_int(f[1], line_no);
    if (ordinal < 0) throw ParseError(line_no, "ordinal must be >= 0");
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(dim));
    for (std::size_t k = 2; k < f.size(); ++k) v.push_back(to_double(f[k], line_no));
    try {
      table.insert(frame, static_cast<std::size_t>(ordinal),
                   AppearanceDescriptor::embedding(std::move(v)));
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return table;
}

void write_embedding_file(std::ostream& out, const EmbeddingTable& table) {
  out << "dim=" << table.dim() << '\n';
  for (const auto& [key, descriptor] : table.entries()) {
    out << key.first << ',' << key.second;
    for (double v : descriptor.values()) out << fmt::format(",{:.6f}", v);
    out << '\n';
  }
}

}  // namespace hamtrack
