#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twrelay/harness.hpp"

namespace twrelay::cli {

/// A fully validated command invocation. Powers are linear units throughout;
/// all reported rates are bits per full-slot channel use.
struct CliInvocation {
  enum class Command {
    coherent_sweep,
    noncoherent_sweep,
    alpha_sweep,
    rate_region,
    slot_dump,
  };

  Command command = Command::coherent_sweep;
  SystemConfig cfg;
  std::vector<double> axis_values;  // sweep subcommands only
  int trials = 200;
  std::uint64_t seed = 42;
  int threads = 0;  // 0 = auto
  std::string output_path;
  std::vector<Metric> metrics;
  RelayStrategy strategy = RelayStrategy::dcm;  // slot-dump only
};

struct ParseOutcome {
  std::optional<CliInvocation> invocation;  // empty on usage error or help
  int exit_code = 0;
};

namespace detail {

inline std::vector<double> parse_value_list(const std::string& text,
                                            const char* flag) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      values.push_back(v);
    } catch (const std::exception&) {
      throw CLI::ValidationError(std::string(flag) + ": '" + item +
                                 "' is not a number");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) {
      throw CLI::ValidationError(std::string(flag) +
                                 ": values must be strictly ascending");
    }
  }
  return values;
}

inline FadingLaw parse_fading(const std::string& text) {
  const auto fail = [&]() -> FadingLaw {
    throw CLI::ValidationError(
        "--fading: expected uniform:<lo>:<hi> or constant:<c>, got '" + text +
        "'");
  };
  const std::size_t c1 = text.find(':');
  if (c1 == std::string::npos) return fail();
  const std::string kind = text.substr(0, c1);
  try {
    if (kind == "constant") {
      return FadingLaw::constant(std::stod(text.substr(c1 + 1)));
    }
    if (kind == "uniform") {
      const std::size_t c2 = text.find(':', c1 + 1);
      if (c2 == std::string::npos) return fail();
      return FadingLaw::uniform(std::stod(text.substr(c1 + 1, c2 - c1 - 1)),
                                std::stod(text.substr(c2 + 1)));
    }
  } catch (const CLI::ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw CLI::ValidationError(std::string("--fading: ") + e.what());
  }
  return fail();
}

inline std::vector<Metric> parse_metric_list(const std::string& text) {
  std::vector<Metric> metrics;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const std::optional<Metric> m = parse_metric(item);
    if (!m) {
      throw CLI::ValidationError(
          "--metrics: unknown metric '" + item +
          "' (known: ub_bc, ub_mac, ub_coherent, dcm, nc_ub, nc_af)");
    }
    metrics.push_back(*m);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return metrics;
}

}  // namespace detail

/// Parse and validate argv. On usage errors (unknown flag, out-of-range
/// value, malformed list) prints the CLI11 message naming the flag and
/// reports exit code 1; --help reports exit code 0.
inline ParseOutcome parse(int argc, const char* const* argv) {
  CliInvocation inv;

  CLI::App app{
      "twrelay: Monte Carlo capacity bounds and amplify-and-forward rates "
      "for the MIMO two-way relay channel.\n"
      "All powers are linear units; all rates are bits per full-slot channel "
      "use."};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Flat key = value config file mirroring the flags below; "
                 "command-line flags override file values");

  app.add_option("--M", inv.cfg.M, "Antennas at each terminal")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--N", inv.cfg.N, "Antennas per relay")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  int scalar_k = 16;
  app.add_option("--K", scalar_k,
                 "Relay count (for subcommands that do not sweep K)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--P", inv.cfg.P, "Terminal transmit power, linear")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--P_R", inv.cfg.P_R, "Sum power across relays, linear")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--sigma2", inv.cfg.sigma2,
                 "Noise variance per receive antenna, linear")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--alpha", inv.cfg.alpha,
                 "Transmit-phase fraction of the slot")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  std::string fading_text = "uniform:0.5:1.5";
  app.add_option("--fading", fading_text,
                 "Path-loss/shadowing law: uniform:<lo>:<hi> or constant:<c>")
      ->capture_default_str();
  app.add_option("--trials", inv.trials, "Monte Carlo trials per point")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", inv.seed, "Master seed; fixes every random draw")
      ->capture_default_str();
  app.add_option("--threads", inv.threads,
                 "Trial parallelism cap; 0 = auto")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  std::string out_path;
  app.add_option("--out", out_path,
                 "Output path (default: <subcommand>.csv / slot_dump.txt)");
  std::string metrics_text;
  app.add_option("--metrics", metrics_text,
                 "Comma list overriding the subcommand's metric set "
                 "(ub_bc, ub_mac, ub_coherent, dcm, nc_ub, nc_af)");

  CLI::App* coherent = app.add_subcommand(
      "coherent-sweep",
      "Sweep relay count K: coherent cut-set bounds and the dual-channel-"
      "matching AF rate");
  std::string k_values = "32,128,512,2048";
  coherent->add_option("--K", k_values,
                       "Comma-separated ascending relay counts")
      ->capture_default_str();

  CLI::App* noncoherent = app.add_subcommand(
      "noncoherent-sweep",
      "Sweep relay sum power P_R with P tied to it: non-coherent bound and "
      "the normalize-and-forward AF rate (requires alpha = 0.5)");
  std::string pr_values = "100,1000,10000,100000";
  noncoherent->add_option("--P_R", pr_values,
                          "Comma-separated ascending relay sum powers; the "
                          "terminal power P is set equal at each point")
      ->capture_default_str();

  CLI::App* alpha_sweep = app.add_subcommand(
      "alpha-sweep", "Sweep the transmit-phase fraction alpha at fixed K");
  std::string alpha_values = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  alpha_sweep->add_option("--alpha", alpha_values,
                          "Comma-separated ascending alpha values")
      ->capture_default_str();

  CLI::App* region = app.add_subcommand(
      "rate-region",
      "Rate region rectangle of the mean achievable pair at one "
      "configuration, against the coherent bound rectangle");

  CLI::App* slot = app.add_subcommand(
      "slot-dump",
      "Simulate one slot at the signal level and dump the realization, the "
      "transcript and the cancellation residuals");
  std::string strategy_text = "dcm";
  slot->add_option("--strategy", strategy_text, "Relay strategy: dcm | nc_af")
      ->capture_default_str()
      ->check(CLI::IsMember({"dcm", "nc_af"}));

  try {
    app.parse(argc, argv);

    inv.cfg.K = scalar_k;
    inv.cfg.fading = detail::parse_fading(fading_text);

    if (app.got_subcommand(coherent)) {
      inv.command = CliInvocation::Command::coherent_sweep;
      inv.axis_values = detail::parse_value_list(k_values, "--K");
      for (double v : inv.axis_values) {
        if (!(v >= 1.0) || v != std::round(v)) {
          throw CLI::ValidationError(
              "--K: relay counts must be integers >= 1");
        }
      }
      inv.metrics = {Metric::ub_bc, Metric::ub_mac, Metric::ub_coherent,
                     Metric::dcm};
      inv.output_path = "coherent_sweep.csv";
    } else if (app.got_subcommand(noncoherent)) {
      inv.command = CliInvocation::Command::noncoherent_sweep;
      inv.axis_values = detail::parse_value_list(pr_values, "--P_R");
      for (double v : inv.axis_values) {
        if (!(v > 0.0)) {
          throw CLI::ValidationError("--P_R: powers must be > 0");
        }
      }
      inv.metrics = {Metric::nc_ub, Metric::nc_af};
      inv.output_path = "noncoherent_sweep.csv";
    } else if (app.got_subcommand(alpha_sweep)) {
      inv.command = CliInvocation::Command::alpha_sweep;
      inv.axis_values = detail::parse_value_list(alpha_values, "--alpha");
      for (double v : inv.axis_values) {
        if (!(v >= 0.0 && v <= 1.0)) {
          throw CLI::ValidationError("--alpha: values must be in [0, 1]");
        }
      }
      inv.metrics = {Metric::ub_bc, Metric::ub_mac, Metric::ub_coherent};
      inv.output_path = "alpha_sweep.csv";
    } else if (app.got_subcommand(region)) {
      inv.command = CliInvocation::Command::rate_region;
      inv.metrics = {Metric::ub_bc, Metric::ub_mac, Metric::ub_coherent,
                     Metric::dcm};
      inv.output_path = "rate_region.csv";
    } else {
      inv.command = CliInvocation::Command::slot_dump;
      inv.strategy = strategy_text == "dcm" ? RelayStrategy::dcm
                                            : RelayStrategy::nc_af;
      inv.output_path = "slot_dump.txt";
    }

    if (!metrics_text.empty()) {
      inv.metrics = detail::parse_metric_list(metrics_text);
    }
    if (!out_path.empty()) inv.output_path = out_path;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return {std::nullopt, code == 0 ? 0 : 1};
  }
  return {inv, 0};
}

inline ParseOutcome parse(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("twrelay");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return parse(static_cast<int>(argv.size()), argv.data());
}

namespace detail {

inline void print_point_summary(std::ostream& out,
                                const std::vector<SweepRow>& rows) {
  char buf[160];
  for (const SweepRow& row : rows) {
    std::snprintf(buf, sizeof buf,
                  "%s=%-9g %-12s r%d = %.4f bits (stderr %.4f, %d trials)",
                  axis_name(row.axis), row.axis_value,
                  metric_name(row.metric), row.direction, row.mean_bits,
                  row.stderr_bits, row.trials);
    out << buf << '\n';
  }
}

inline std::vector<MetricFit> fit_sweep(const std::vector<SweepRow>& rows,
                                        const std::vector<Metric>& metrics,
                                        const std::vector<double>& values) {
  std::vector<MetricFit> fits;
  if (values.size() < 2) return fits;
  for (Metric m : metrics) {
    for (int direction : {12, 21}) {
      std::vector<std::pair<double, double>> points;
      for (double v : values) {
        for (const SweepRow& row : rows) {
          if (row.metric == m && row.direction == direction &&
              row.axis_value == v) {
            points.emplace_back(v, row.mean_bits);
          }
        }
      }
      fits.push_back({m, direction, fit_scaling(points)});
    }
  }
  return fits;
}

inline void print_fits(std::ostream& out, const std::vector<MetricFit>& fits) {
  char buf[160];
  for (const MetricFit& mf : fits) {
    std::snprintf(
        buf, sizeof buf,
        "fit %-12s r%d: slope = %.4f bits/doubling, intercept = %.4f bits, "
        "r^2 = %.6f",
        metric_name(mf.metric), mf.direction,
        mf.fit.slope_bits_per_doubling, mf.fit.intercept_bits,
        mf.fit.r_squared);
    out << buf << '\n';
  }
}

inline double row_mean(const std::vector<SweepRow>& rows, Metric m,
                       int direction) {
  for (const SweepRow& row : rows) {
    if (row.metric == m && row.direction == direction) return row.mean_bits;
  }
  throw std::logic_error("row_mean: metric not present");
}

inline void print_region(std::ostream& out, const char* label,
                         const RateRegion& region) {
  out << label << " region vertices:";
  char buf[64];
  for (const auto& v : region.vertices) {
    std::snprintf(buf, sizeof buf, " (%.4f, %.4f)", v[0], v[1]);
    out << buf;
  }
  out << '\n';
}

}  // namespace detail

/// Execute a validated invocation. Exit codes: 0 success, 2 numeric failure
/// (e.g. non-coherent metrics at alpha != 0.5), 3 I/O failure.
inline int run(const CliInvocation& inv, std::ostream& out) {
  try {
    RunOptions opts;
    opts.threads = inv.threads;

    switch (inv.command) {
      case CliInvocation::Command::coherent_sweep:
      case CliInvocation::Command::noncoherent_sweep:
      case CliInvocation::Command::alpha_sweep: {
        SweepSpec spec;
        spec.base = inv.cfg;
        spec.axis_values = inv.axis_values;
        spec.trials = inv.trials;
        spec.seed = inv.seed;
        spec.metrics = inv.metrics;
        spec.threads = inv.threads;
        if (inv.command == CliInvocation::Command::coherent_sweep) {
          spec.axis = SweepAxis::relay_count;
        } else if (inv.command == CliInvocation::Command::noncoherent_sweep) {
          spec.axis = SweepAxis::relay_power;
          spec.tie_terminal_power = true;
        } else {
          spec.axis = SweepAxis::alpha;
        }
        const std::vector<SweepRow> rows = run_sweep(spec);
        // Scaling fits make sense for the scaling axes only.
        std::vector<MetricFit> fits;
        if (spec.axis != SweepAxis::alpha) {
          fits = detail::fit_sweep(rows, spec.metrics, spec.axis_values);
        }
        emit_csv(rows, fits, inv.output_path);
        detail::print_point_summary(out, rows);
        detail::print_fits(out, fits);
        out << "wrote " << inv.output_path << '\n';
        return 0;
      }
      case CliInvocation::Command::rate_region: {
        const std::vector<SweepRow> rows =
            run_point(inv.cfg, inv.trials, inv.seed, inv.metrics, opts);
        emit_csv(rows, inv.output_path);
        detail::print_point_summary(out, rows);
        const RatePair achievable{detail::row_mean(rows, Metric::dcm, 12),
                                  detail::row_mean(rows, Metric::dcm, 21)};
        const RatePair bound{detail::row_mean(rows, Metric::ub_coherent, 12),
                             detail::row_mean(rows, Metric::ub_coherent, 21)};
        detail::print_region(out, "dcm", rate_region(achievable));
        detail::print_region(out, "ub_coherent", rate_region(bound));
        out << "wrote " << inv.output_path << '\n';
        return 0;
      }
      case CliInvocation::Command::slot_dump: {
        inv.cfg.validate();
        RngStream real_stream(inv.seed, 0, StreamPurpose::realization);
        const ChannelRealization real =
            sample_realization(inv.cfg, real_stream);
        const PowerAllocation alloc = equal_power_allocation(inv.cfg);
        RngStream slot_stream(inv.seed, 0, StreamPurpose::slot);
        const SlotTranscript slot =
            simulate_slot(real, inv.cfg, alloc, inv.strategy, slot_stream);
        std::ofstream file(inv.output_path, std::ios::binary);
        if (!file) {
          throw io_error("slot-dump: cannot open '" + inv.output_path +
                         "' for writing");
        }
        file << "[realization]\n";
        dump_realization(real, file);
        dump_transcript(slot, file);
        file.flush();
        if (!file.good()) {
          throw io_error("slot-dump: write to '" + inv.output_path +
                         "' failed");
        }
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "cancellation residuals: 12 = %.3e, 21 = %.3e\n",
                      slot.cancel_residual_12, slot.cancel_residual_21);
        out << buf;
        out << "wrote " << inv.output_path << '\n';
        return 0;
      }
    }
  } catch (const io_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

inline int main_entry(int argc, const char* const* argv) {
  const ParseOutcome outcome = parse(argc, argv);
  if (!outcome.invocation) return outcome.exit_code;
  return run(*outcome.invocation, std::cout);
}

}  // namespace twrelay::cli
