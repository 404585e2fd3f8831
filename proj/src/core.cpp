#include "hamtrack/core.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <numeric>

namespace hamtrack {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ConfigError(std::string(key),
                      fmt::format("{}: cannot parse '{}' as a number", key, text));
  }
  return value;
}

int parse_int(std::string_view key, std::string_view text) {
  text = trim(text);
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(std::string(key),
                      fmt::format("{}: cannot parse '{}' as an integer", key, text));
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "on" || text == "true" || text == "1") return true;
  if (text == "off" || text == "false" || text == "0") return false;
  throw ConfigError(std::string(key), fmt::format("{}: expected on/off, got '{}'", key, text));
}

}  // namespace

BBox::BBox(double x_, double y_, double w_, double h_) : x(x_), y(y_), w(w_), h(h_) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h)) {
    throw std::invalid_argument("bbox fields must be finite");
  }
  if (!(w > 0.0) || !(h > 0.0)) {
    throw std::invalid_argument(fmt::format("bbox size must be positive (w={}, h={})", w, h));
  }
}

BBox BBox::from_center(double cx, double cy, double w, double h) {
  return BBox(cx - 0.5 * w, cy - 0.5 * h, w, h);
}

AppearanceDescriptor AppearanceDescriptor::histogram(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("histogram must not be empty");
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("histogram bins must be finite and non-negative");
    }
    sum += v;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("histogram has zero mass");
  for (double& v : values) v /= sum;
  return AppearanceDescriptor(DescriptorKind::kHistogram, std::move(values));
}

AppearanceDescriptor AppearanceDescriptor::embedding(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("embedding must not be empty");
  double sq = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("embedding components must be finite");
    sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0)) throw std::invalid_argument("embedding has zero norm");
  for (double& v : values) v /= norm;
  return AppearanceDescriptor(DescriptorKind::kEmbedding, std::move(values));
}

std::vector<std::string> validate_config(const TrackerConfig& cfg) {
  std::vector<std::string> errors;
  auto check = [&](bool ok, std::string message) {
    if (!ok) errors.push_back(std::move(message));
  };
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };

  check(std::isfinite(cfg.xi) && cfg.xi >= 0.0, "xi must be >= 0");
  check(std::isfinite(cfg.eta) && cfg.eta >= 0.0, "eta must be >= 0");

  const bool symmetric =
      cfg.sigma.allFinite() && std::abs(cfg.sigma(0, 1) - cfg.sigma(1, 0)) <= 1e-12;
  check(symmetric, "sigma not symmetric");
  if (symmetric) {
    Eigen::LLT<Eigen::Matrix2d> llt(cfg.sigma);
    check(llt.info() == Eigen::Success && cfg.sigma.determinant() > 0.0,
          "sigma not positive-definite");
  }

  check(unit(cfg.tau_asc), "tau_asc out of [0,1]");
  check(unit(cfg.tau_conf), "tau_conf out of [0,1]");
  check(cfg.hist_max >= 1, "hist_max must be >= 1");
  check(cfg.hist_window >= 0, "hist_window must be >= 0");
  check(std::isfinite(cfg.tau_const), "tau_const must be finite");
  check(cfg.p_d > 0.0 && cfg.p_d < 1.0, "p_d out of (0,1)");
  check(unit(cfg.beta), "beta out of [0,1]");
  check(cfg.rho > 0.0 && cfg.rho < 1.0, "rho out of (0,1)");
  check(cfg.confirm_hits >= 1, "confirm_hits must be >= 1");
  check(cfg.max_age >= 1, "max_age must be >= 1");
  check(cfg.iou_eval > 0.0 && cfg.iou_eval <= 1.0, "iou_eval out of (0,1]");
  check(cfg.process_pos_std >= 0.0, "process_pos_std must be >= 0");
  check(cfg.process_vel_std >= 0.0, "process_vel_std must be >= 0");
  check(cfg.measurement_std >= 0.0, "measurement_std must be >= 0");
  check(unit(cfg.recent_conf_decay), "recent_conf_decay out of [0,1]");
  return errors;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(line),
                        fmt::format("line {}: expected 'key = value', got '{}'", line_no, line));
    }
    out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

void apply_config_value(TrackerConfig& cfg, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "xi") {
    cfg.xi = parse_double(key, value);
  } else if (key == "eta") {
    cfg.eta = parse_double(key, value);
  } else if (key == "sigma_xx") {
    cfg.sigma(0, 0) = parse_double(key, value);
  } else if (key == "sigma_yy") {
    cfg.sigma(1, 1) = parse_double(key, value);
  } else if (key == "sigma_xy") {
    cfg.sigma(0, 1) = cfg.sigma(1, 0) = parse_double(key, value);
  } else if (key == "tau_asc") {
    cfg.tau_asc = parse_double(key, value);
  } else if (key == "tau_conf") {
    cfg.tau_conf = parse_double(key, value);
  } else if (key == "hist_max") {
    cfg.hist_max = parse_int(key, value);
  } else if (key == "hist_window") {
    cfg.hist_window = parse_int(key, value);
  } else if (key == "tau_const") {
    cfg.tau_const = parse_double(key, value);
  } else if (key == "p_d") {
    cfg.p_d = parse_double(key, value);
  } else if (key == "beta") {
    cfg.beta = parse_double(key, value);
  } else if (key == "rho") {
    cfg.rho = parse_double(key, value);
  } else if (key == "alpha_mode") {
    if (value == "affinity") {
      cfg.alpha_mode = AlphaMode::kAffinity;
    } else if (value == "replace") {
      cfg.alpha_mode = AlphaMode::kReplace;
    } else {
      throw ConfigError("alpha_mode", fmt::format("alpha_mode: unknown policy '{}'", value));
    }
  } else if (key == "confirm_hits") {
    cfg.confirm_hits = parse_int(key, value);
  } else if (key == "max_age") {
    cfg.max_age = parse_int(key, value);
  } else if (key == "iou_eval") {
    cfg.iou_eval = parse_double(key, value);
  } else if (key == "process_pos_std") {
    cfg.process_pos_std = parse_double(key, value);
  } else if (key == "process_vel_std") {
    cfg.process_vel_std = parse_double(key, value);
  } else if (key == "measurement_std") {
    cfg.measurement_std = parse_double(key, value);
  } else if (key == "recent_conf_decay") {
    cfg.recent_conf_decay = parse_double(key, value);
  } else if (key == "ham") {
    cfg.use_ham = parse_bool(key, value);
  } else if (key == "filter") {
    if (value == "sadf") {
      cfg.filter = FilterMode::kSadf;
    } else if (value == "const") {
      cfg.filter = FilterMode::kConst;
    } else if (value == "none") {
      cfg.filter = FilterMode::kNone;
    } else {
      throw ConfigError("filter", fmt::format("filter: unknown mode '{}'", value));
    }
  } else if (key == "emit_missed") {
    cfg.emit_missed = parse_bool(key, value);
  } else {
    throw ConfigError(std::string(key), fmt::format("unknown config key '{}'", key));
  }
}

void apply_config_text(TrackerConfig& cfg, std::string_view text) {
  for (const auto& [key, value] : parse_key_values(text)) {
    apply_config_value(cfg, key, value);
  }
}

std::string_view to_string(FilterMode mode) {
  switch (mode) {
    case FilterMode::kSadf: return "sadf";
    case FilterMode::kConst: return "const";
    case FilterMode::kNone: return "none";
  }
  return "?";
}

std::string_view to_string(AlphaMode mode) {
  switch (mode) {
    case AlphaMode::kAffinity: return "affinity";
    case AlphaMode::kReplace: return "replace";
  }
  return "?";
}

std::string config_to_text(const TrackerConfig& cfg) {
  // {} prints the shortest representation that round-trips exactly.
  std::string out;
  auto put = [&out](std::string_view key, const auto& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  put("xi", cfg.xi);
  put("eta", cfg.eta);
  put("sigma_xx", cfg.sigma(0, 0));
  put("sigma_xy", cfg.sigma(0, 1));
  put("sigma_yy", cfg.sigma(1, 1));
  put("tau_asc", cfg.tau_asc);
  put("tau_conf", cfg.tau_conf);
  put("hist_max", cfg.hist_max);
  put("hist_window", cfg.hist_window);
  put("tau_const", cfg.tau_const);
  put("p_d", cfg.p_d);
  put("beta", cfg.beta);
  put("rho", cfg.rho);
  put("alpha_mode", to_string(cfg.alpha_mode));
  put("confirm_hits", cfg.confirm_hits);
  put("max_age", cfg.max_age);
  put("iou_eval", cfg.iou_eval);
  put("process_pos_std", cfg.process_pos_std);
  put("process_vel_std", cfg.process_vel_std);
  put("measurement_std", cfg.measurement_std);
  put("recent_conf_decay", cfg.recent_conf_decay);
  put("ham", cfg.use_ham ? "on" : "off");
  put("filter", to_string(cfg.filter));
  put("emit_missed", cfg.emit_missed ? "on" : "off");
  return out;
}

}  // namespace hamtrack
