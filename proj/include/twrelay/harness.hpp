#pragma once

#include <array>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "twrelay/capacity.hpp"
#include "twrelay/channel.hpp"
#include "twrelay/strategies.hpp"

namespace twrelay {

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Metric { ub_bc, ub_mac, ub_coherent, dcm, nc_ub, nc_af };

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::ub_bc: return "ub_bc";
    case Metric::ub_mac: return "ub_mac";
    case Metric::ub_coherent: return "ub_coherent";
    case Metric::dcm: return "dcm";
    case Metric::nc_ub: return "nc_ub";
    case Metric::nc_af: return "nc_af";
  }
  return "?";
}

inline std::optional<Metric> parse_metric(const std::string& name) {
  for (Metric m : {Metric::ub_bc, Metric::ub_mac, Metric::ub_coherent,
                   Metric::dcm, Metric::nc_ub, Metric::nc_af}) {
    if (name == metric_name(m)) return m;
  }
  return std::nullopt;
}

enum class SweepAxis { relay_count, relay_power, alpha };

inline const char* axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::relay_count: return "relay_count";
    case SweepAxis::relay_power: return "relay_power";
    case SweepAxis::alpha: return "alpha";
  }
  return "?";
}

/// One Monte Carlo experiment: a grid of points along one axis, evaluated
/// with common per-trial substreams.
struct SweepSpec {
  SystemConfig base;
  SweepAxis axis = SweepAxis::relay_count;
  std::vector<double> axis_values;  // nonempty, strictly ascending
  int trials = 1;
  std::uint64_t seed = 0;
  std::vector<Metric> metrics;
  // For relay_power sweeps: also set the terminal power P to the axis value
  // (the high-SNR operating point has the terminals and relays scale
  // together).
  bool tie_terminal_power = false;
  int threads = 1;  // 0 = hardware concurrency

  void validate() const {
    base.validate();
    if (axis_values.empty()) {
      throw std::invalid_argument("SweepSpec: axis_values must be nonempty");
    }
    for (std::size_t i = 1; i < axis_values.size(); ++i) {
      if (!(axis_values[i] > axis_values[i - 1])) {
        throw std::invalid_argument(
            "SweepSpec: axis_values must be strictly ascending");
      }
    }
    if (trials < 1) {
      throw std::invalid_argument("SweepSpec: trials must be >= 1");
    }
    if (metrics.empty()) {
      throw std::invalid_argument("SweepSpec: metrics must be nonempty");
    }
  }
};

/// Aggregated Monte Carlo result for one (point, metric, direction).
struct SweepRow {
  SweepAxis axis = SweepAxis::relay_count;
  double axis_value = 0.0;
  Metric metric = Metric::ub_coherent;
  int direction = 12;  // 12 or 21
  double mean_bits = 0.0;
  double stderr_bits = 0.0;
  int trials = 0;
  SystemConfig cfg;  // effective config at this point
  std::uint64_t seed = 0;
};

struct ScalingFit {
  double slope_bits_per_doubling = 0.0;
  double intercept_bits = 0.0;
  double r_squared = 0.0;
};

/// Rectangle of simultaneously achievable pairs, counter-clockwise from the
/// origin.
struct RateRegion {
  std::array<std::array<double, 2>, 4> vertices{};
};

struct RunOptions {
  int threads = 1;                 // 0 = hardware concurrency
  std::uint64_t trial_offset = 0;  // first trial substream index
};

/// All requested metrics for one realization. Cut bounds are shared between
/// ub_bc/ub_mac/ub_coherent and the power allocation between the strategies.
inline std::vector<RatePair> evaluate_metrics(
    const ChannelRealization& real, const SystemConfig& cfg,
    const std::vector<Metric>& metrics) {
  std::optional<BoundPair> bc;
  std::optional<BoundPair> mac;
  std::optional<PowerAllocation> alloc;
  const auto broadcast = [&]() -> const BoundPair& {
    if (!bc) bc = broadcast_cut_bound(real, cfg);
    return *bc;
  };
  const auto multiple_access = [&]() -> const BoundPair& {
    if (!mac) mac = mac_cut_bound(real, cfg);
    return *mac;
  };
  const auto allocation = [&]() -> const PowerAllocation& {
    if (!alloc) alloc = equal_power_allocation(cfg);
    return *alloc;
  };

  std::vector<RatePair> out;
  out.reserve(metrics.size());
  for (Metric m : metrics) {
    switch (m) {
      case Metric::ub_bc: {
        const BoundPair& b = broadcast();
        out.push_back({b.r12_bits, b.r21_bits});
        break;
      }
      case Metric::ub_mac: {
        const BoundPair& b = multiple_access();
        out.push_back({b.r12_bits, b.r21_bits});
        break;
      }
      case Metric::ub_coherent: {
        const BoundPair& b = broadcast();
        const BoundPair& m2 = multiple_access();
        out.push_back({std::min(b.r12_bits, m2.r12_bits),
                       std::min(b.r21_bits, m2.r21_bits)});
        break;
      }
      case Metric::dcm: {
        const EffectiveLink l12 =
            dcm_effective_link(real, cfg, allocation(), Direction::t1_to_t2);
        const EffectiveLink l21 =
            dcm_effective_link(real, cfg, allocation(), Direction::t2_to_t1);
        out.push_back(dcm_rate(l12, l21, cfg));
        break;
      }
      case Metric::nc_ub: {
        const BoundPair b = noncoherent_mac_bound(real, cfg);
        out.push_back({b.r12_bits, b.r21_bits});
        break;
      }
      case Metric::nc_af: {
        const EffectiveLink l12 = nc_af_effective_link(real, cfg, allocation(),
                                                       Direction::t1_to_t2);
        const EffectiveLink l21 = nc_af_effective_link(real, cfg, allocation(),
                                                       Direction::t2_to_t1);
        out.push_back(nc_af_rate(l12, l21, cfg));
        break;
      }
    }
  }
  return out;
}

/// Per-trial metric values. Trial t draws its realization from the substream
/// (seed, trial_offset + t), so the value of a trial never depends on how
/// trials are batched or scheduled.
inline std::vector<std::vector<RatePair>> run_trials(
    const SystemConfig& cfg, int trials, std::uint64_t seed,
    const std::vector<Metric>& metrics, const RunOptions& opts = {}) {
  cfg.validate();
  if (trials < 1) throw std::invalid_argument("run_trials: trials must be >= 1");
  std::vector<std::vector<RatePair>> values(
      static_cast<std::size_t>(trials));

  const auto eval_trial = [&](int t) {
    RngStream stream(seed, opts.trial_offset + static_cast<std::uint64_t>(t),
                     StreamPurpose::realization);
    const ChannelRealization real = sample_realization(cfg, stream);
    values[static_cast<std::size_t>(t)] = evaluate_metrics(real, cfg, metrics);
  };

  int nthreads = opts.threads == 0
                     ? static_cast<int>(std::thread::hardware_concurrency())
                     : opts.threads;
  nthreads = std::max(1, std::min(nthreads, trials));
  if (nthreads == 1) {
    for (int t = 0; t < trials; ++t) eval_trial(t);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(
        static_cast<std::size_t>(nthreads));
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int w = 0; w < nthreads; ++w) {
      pool.emplace_back([&, w]() {
        try {
          for (int t = w; t < trials; t += nthreads) eval_trial(t);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (std::thread& th : pool) th.join();
    for (const std::exception_ptr& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return values;
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Mean and standard error (sample standard deviation / sqrt(n)) over a
/// fixed-order value vector; n = 1 reports stderr 0.
inline MeanStderr aggregate_mean_stderr(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n == 0) throw std::invalid_argument("aggregate_mean_stderr: empty");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(n);
  if (n == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return {mean, sd / std::sqrt(static_cast<double>(n))};
}

/// Monte Carlo means and standard errors at one configuration point. Rows
/// default to axis relay_count / axis value K; run_sweep restamps them.
inline std::vector<SweepRow> run_point(const SystemConfig& cfg, int trials,
                                       std::uint64_t seed,
                                       const std::vector<Metric>& metrics,
                                       const RunOptions& opts = {}) {
  const std::vector<std::vector<RatePair>> values =
      run_trials(cfg, trials, seed, metrics, opts);
  std::vector<SweepRow> rows;
  rows.reserve(metrics.size() * 2);
  std::vector<double> series(static_cast<std::size_t>(trials));
  for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
    for (int direction : {12, 21}) {
      for (std::size_t t = 0; t < values.size(); ++t) {
        series[t] = direction == 12 ? values[t][mi].r12_bits
                                    : values[t][mi].r21_bits;
      }
      const MeanStderr agg = aggregate_mean_stderr(series);
      SweepRow row;
      row.axis = SweepAxis::relay_count;
      row.axis_value = static_cast<double>(cfg.K);
      row.metric = metrics[mi];
      row.direction = direction;
      row.mean_bits = agg.mean;
      row.stderr_bits = agg.stderr_;
      row.trials = trials;
      row.cfg = cfg;
      row.seed = seed;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// Config at one sweep point: the axis value replaces the swept parameter.
inline SystemConfig apply_axis(const SystemConfig& base, SweepAxis axis,
                               double value, bool tie_terminal_power) {
  SystemConfig cfg = base;
  switch (axis) {
    case SweepAxis::relay_count: {
      const double rounded = std::round(value);
      if (!(value >= 1.0) || std::abs(value - rounded) > 1e-9) {
        throw std::invalid_argument(
            "apply_axis: relay_count values must be integers >= 1, got " +
            std::to_string(value));
      }
      cfg.K = static_cast<int>(rounded);
      break;
    }
    case SweepAxis::relay_power:
      if (!(value > 0.0)) {
        throw std::invalid_argument(
            "apply_axis: relay_power values must be > 0");
      }
      cfg.P_R = value;
      if (tie_terminal_power) cfg.P = value;
      break;
    case SweepAxis::alpha:
      if (!(value >= 0.0 && value <= 1.0)) {
        throw std::invalid_argument(
            "apply_axis: alpha values must be in [0, 1]");
      }
      cfg.alpha = value;
      break;
  }
  return cfg;
}

inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  std::vector<SweepRow> rows;
  rows.reserve(spec.axis_values.size() * spec.metrics.size() * 2);
  for (double value : spec.axis_values) {
    const SystemConfig cfg =
        apply_axis(spec.base, spec.axis, value, spec.tie_terminal_power);
    RunOptions opts;
    opts.threads = spec.threads;
    std::vector<SweepRow> point_rows =
        run_point(cfg, spec.trials, spec.seed, spec.metrics, opts);
    for (SweepRow& row : point_rows) {
      row.axis = spec.axis;
      row.axis_value = value;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// Ordinary least squares of mean_bits against log2(axis_value); the slope is
/// bits per doubling, so a scaling law with coefficient c/2 per direction
/// shows up directly as slope c/2.
inline ScalingFit fit_scaling(
    const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) {
    throw std::invalid_argument("fit_scaling: need at least 2 points");
  }
  const std::size_t n = points.size();
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(points[i].first > 0.0)) {
      throw std::invalid_argument("fit_scaling: axis values must be > 0");
    }
    xs[i] = std::log2(points[i].first);
  }
  double xbar = 0.0;
  double ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xbar += xs[i];
    ybar += points[i].second;
  }
  xbar /= static_cast<double>(n);
  ybar /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (points[i].second - ybar);
  }
  if (!(sxx > 0.0)) {
    throw std::invalid_argument("fit_scaling: axis values must be distinct");
  }
  ScalingFit fit;
  fit.slope_bits_per_doubling = sxy / sxx;
  fit.intercept_bits = ybar - fit.slope_bits_per_doubling * xbar;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double predicted =
        fit.intercept_bits + fit.slope_bits_per_doubling * xs[i];
    ss_res += (points[i].second - predicted) * (points[i].second - predicted);
    ss_tot += (points[i].second - ybar) * (points[i].second - ybar);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.r_squared = std::clamp(fit.r_squared, 0.0, 1.0);
  return fit;
}

/// Both rates are achievable simultaneously, so the region is the rectangle
/// spanned by the pair; no time-sharing vertices are needed.
inline RateRegion rate_region(const RatePair& pair) {
  if (!(pair.r12_bits >= 0.0) || !(pair.r21_bits >= 0.0)) {
    throw std::invalid_argument("rate_region: rates must be >= 0");
  }
  RateRegion region;
  region.vertices = {{{0.0, 0.0},
                      {pair.r12_bits, 0.0},
                      {pair.r12_bits, pair.r21_bits},
                      {0.0, pair.r21_bits}}};
  return region;
}

/// A scaling fit attached to one (metric, direction) series of a sweep.
struct MetricFit {
  Metric metric = Metric::ub_coherent;
  int direction = 12;
  ScalingFit fit;
};

namespace detail {

// 9 significant digits, '.' separator regardless of the process locale.
inline std::string fmt9(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v,
                                 std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Write rows as CSV with the fixed column schema, deterministic row order
/// (axis value, metric, direction) and 9-significant-digit floats. Fits, if
/// any, are appended as '#'-comment lines so the data schema stays exact.
inline void emit_csv(const std::vector<SweepRow>& rows,
                     const std::vector<MetricFit>& fits,
                     const std::string& path) {
  std::vector<SweepRow> sorted = rows;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SweepRow& a, const SweepRow& b) {
                     if (a.axis_value != b.axis_value) {
                       return a.axis_value < b.axis_value;
                     }
                     if (a.metric != b.metric) {
                       return static_cast<int>(a.metric) <
                              static_cast<int>(b.metric);
                     }
                     return a.direction < b.direction;
                   });

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw io_error("emit_csv: cannot open '" + path + "' for writing");
  }
  out << "axis,axis_value,metric,direction,mean_bits,stderr_bits,trials,M,N,"
         "K,P,P_R,sigma2,alpha,seed\n";
  for (const SweepRow& row : sorted) {
    out << axis_name(row.axis) << ',' << detail::fmt9(row.axis_value) << ','
        << metric_name(row.metric) << ',' << row.direction << ','
        << detail::fmt9(row.mean_bits) << ',' << detail::fmt9(row.stderr_bits)
        << ',' << row.trials << ',' << row.cfg.M << ',' << row.cfg.N << ','
        << row.cfg.K << ',' << detail::fmt9(row.cfg.P) << ','
        << detail::fmt9(row.cfg.P_R) << ',' << detail::fmt9(row.cfg.sigma2)
        << ',' << detail::fmt9(row.cfg.alpha) << ',' << row.seed << '\n';
  }
  for (const MetricFit& mf : fits) {
    out << "# fit," << metric_name(mf.metric) << ',' << mf.direction << ','
        << detail::fmt9(mf.fit.slope_bits_per_doubling) << ','
        << detail::fmt9(mf.fit.intercept_bits) << ','
        << detail::fmt9(mf.fit.r_squared) << '\n';
  }
  out.flush();
  if (!out.good()) {
    throw io_error("emit_csv: write to '" + path + "' failed");
  }
}

inline void emit_csv(const std::vector<SweepRow>& rows,
                     const std::string& path) {
  emit_csv(rows, {}, path);
}

}  // namespace twrelay
