#pragma once

// MOTChallenge-style text files (det.txt, gt.txt, results), binary PPM
// frames and precomputed embedding files.
//
// det/gt/result rows are `frame,id,x,y,w,h,conf,x,y,z`. Detections use
// id -1; results write conf 1 and -1 placeholders.

#include "hamtrack/core.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hamtrack {

/// Raised for malformed text input; `line` is 1-based.
class ParseError : public IoError {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

using DetectionsByFrame = std::map<int, std::vector<Detection>>;

/// One identity-labelled box (ground truth or tracker output).
struct TrackBox {
  int frame = 1;
  int id = 0;
  BBox box;
};

using TrackBoxesByFrame = std::map<int, std::vector<TrackBox>>;

/// Groups detection rows by frame, keeping file order within a frame.
/// Rows must have exactly 10 fields.
DetectionsByFrame parse_det_file(std::istream& in);

/// Reads gt.txt or result files: the first 7 fields are used, extra
/// columns are ignored, fewer than 7 is an error.
TrackBoxesByFrame parse_track_file(std::istream& in);

void write_det_file(std::ostream& out, const DetectionsByFrame& detections);

/// Rows `frame,id,x,y,w,h,1,-1,-1,-1` sorted by (frame, id), 2 decimals.
void write_result_file(std::ostream& out, const TrackBoxesByFrame& results);

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  std::uint8_t* pixel(int x, int y) { return &rgb[3 * (static_cast<std::size_t>(y) * width + x)]; }
  const std::uint8_t* pixel(int x, int y) const {
    return &rgb[3 * (static_cast<std::size_t>(y) * width + x)];
  }
};

/// Binary PPM (P6, maxval 255). Throws IoError on bad header or truncated data.
Image read_ppm(std::istream& in);
void write_ppm(std::ostream& out, const Image& image);

/// 8x8x8 joint RGB histogram over the box clipped to the image; bin index
/// is (r>>5)*64 + (g>>5)*8 + (b>>5). A pixel belongs to the box when its
/// integer coordinates fall in [floor(x), ceil(x+w)). Throws
/// std::invalid_argument if the clipped box is empty.
AppearanceDescriptor histogram_from_patch(const Image& image, const BBox& box);

/// Per-detection embeddings keyed by (frame, ordinal within frame).
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }
  const AppearanceDescriptor* find(int frame, std::size_t ordinal) const;
  /// Throws std::invalid_argument on a duplicate key or wrong length.
  void insert(int frame, std::size_t ordinal, AppearanceDescriptor descriptor);

  const std::map<std::pair<int, std::size_t>, AppearanceDescriptor>& entries() const {
    return table_;
  }

 private:
  std::size_t dim_;
  std::map<std::pair<int, std::size_t>, AppearanceDescriptor> table_;
};

/// Header `dim=<k>`, then rows `frame,ordinal,v1,...,vk`. Vectors are
/// L2-normalized on load.
EmbeddingTable parse_embedding_file(std::istream& in);
void write_embedding_file(std::ostream& out, const EmbeddingTable& table);

}  // namespace hamtrack
