#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hamtrack {

/// Raised when a value violates a configuration invariant. Carries the
/// offending key so the CLI can report it.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Raised for unreadable, missing or malformed input files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box in image coordinates (y grows downward).
struct BBox {
  double x = 0.0;  // left
  double y = 0.0;  // top
  double w = 1.0;
  double h = 1.0;

  BBox() = default;
  /// Throws std::invalid_argument unless w > 0, h > 0 and all fields finite.
  BBox(double x, double y, double w, double h);

  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }

  static BBox from_center(double cx, double cy, double w, double h);

  friend bool operator==(const BBox&, const BBox&) = default;
};

enum class DescriptorKind { kHistogram, kEmbedding };

/// Appearance vector. Histograms always sum to 1, embeddings always have
/// unit L2 norm; both factories normalize their input or throw.
class AppearanceDescriptor {
 public:
  static AppearanceDescriptor histogram(std::vector<double> values);
  static AppearanceDescriptor embedding(std::vector<double> values);

  DescriptorKind kind() const { return kind_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  friend bool operator==(const AppearanceDescriptor&,
                         const AppearanceDescriptor&) = default;

 private:
  AppearanceDescriptor(DescriptorKind kind, std::vector<double> values)
      : kind_(kind), values_(std::move(values)) {}

  DescriptorKind kind_;
  std::vector<double> values_;
};

struct Detection {
  int frame = 1;
  BBox bbox;
  double confidence = 0.0;
  std::optional<AppearanceDescriptor> descriptor;
};

/// How the stored colour histogram follows matched observations.
enum class AlphaMode {
  kAffinity,  // alpha = match affinity
  kReplace,   // alpha = 1
};

enum class FilterMode { kSadf, kConst, kNone };

struct TrackerConfig {
  double xi = 1.0;
  double eta = 0.5;
  Eigen::Matrix2d sigma = Eigen::Vector2d(150.0 * 150.0, 150.0 * 150.0).asDiagonal();
  double tau_asc = 0.05;
  double tau_conf = 0.6;
  int hist_max = 10;
  int hist_window = 15;
  double tau_const = 30.0;
  double p_d = 0.4;
  double beta = 0.5;
  double rho = 0.95;
  AlphaMode alpha_mode = AlphaMode::kAffinity;
  int confirm_hits = 3;
  int max_age = 10;
  double iou_eval = 0.5;

  // Kalman noise, as multiples of the object height.
  double process_pos_std = 0.05;
  double process_vel_std = 1.0 / 160.0;
  double measurement_std = 0.1;

  /// Multiplicative decay of the recent matching confidence per missed frame.
  double recent_conf_decay = 0.9;

  bool use_ham = true;
  FilterMode filter = FilterMode::kSadf;
  /// Emit predicted boxes of confirmed tracks on frames they were missed.
  bool emit_missed = false;

  friend bool operator==(const TrackerConfig&, const TrackerConfig&) = default;
};

/// Returns one message per violated invariant; empty means valid.
std::vector<std::string> validate_config(const TrackerConfig& cfg);

/// Sets one field from its textual key/value. Throws ConfigError naming the
/// key if the key is unknown or the value does not parse.
void apply_config_value(TrackerConfig& cfg, std::string_view key, std::string_view value);

/// Applies every `key = value` line of a config file (`#` starts a comment).
void apply_config_text(TrackerConfig& cfg, std::string_view text);

/// Serializes every field in the config-file format; reparsing it yields
/// an identical config.
std::string config_to_text(const TrackerConfig& cfg);

/// Splits `key = value` text into pairs, skipping blanks and comments.
/// Throws ConfigError on a line without '='.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text);

std::string_view to_string(FilterMode mode);
std::string_view to_string(AlphaMode mode);

}  // namespace hamtrack
