#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "twrelay/capacity.hpp"
#include "twrelay/channel.hpp"
#include "twrelay/matrix.hpp"
#include "twrelay/rng.hpp"

namespace twrelay {

/// Per-relay transmit powers under the sum budget P_R.
struct PowerAllocation {
  std::vector<double> gamma;
};

inline PowerAllocation equal_power_allocation(const SystemConfig& cfg) {
  if (cfg.K < 1) {
    throw std::invalid_argument("equal_power_allocation: K must be >= 1");
  }
  PowerAllocation alloc;
  alloc.gamma.assign(static_cast<std::size_t>(cfg.K),
                     cfg.P_R / static_cast<double>(cfg.K));
  return alloc;
}

enum class Direction { t1_to_t2, t2_to_t1 };

/// Equivalent M x M channel after relay processing and self-interference
/// cancellation: received = signal * x + noise with noise covariance
/// noise_cov (Hermitian PD; always contains the +sigma2*I receiver term).
struct EffectiveLink {
  CMatrix signal;     // A, M x M
  CMatrix noise_cov;  // M x M
};

/// Simultaneously achievable rates, bits per full-slot channel use.
struct RatePair {
  double r12_bits = 0.0;
  double r21_bits = 0.0;
};

/// Dual channel matching weight W_k = G_k* H_k* + H_k^(r)* G_k^(r)*: the
/// relay matches both directions' channel pairs at once. N x N.
inline CMatrix dcm_weight(const ChannelRealization& real, std::size_t k) {
  const RelayLink& link = real.relays.at(k);
  return adjoint(link.h_relay_to_t2) * adjoint(link.h_t1_to_relay) +
         adjoint(link.h_relay_to_t1) * adjoint(link.h_t2_to_relay);
}

/// Normalizer beta_k = tr(W_k R_r W_k*) with R_r the receive covariance at
/// relay k conditioned on the channels, so that E{t_k* t_k} = 1 with the
/// expectation over signals and noise.
inline double dcm_normalization(const ChannelRealization& real,
                                const SystemConfig& cfg, std::size_t k) {
  const RelayLink& link = real.relays.at(k);
  const CMatrix w = dcm_weight(real, k);
  const double m = static_cast<double>(cfg.M);
  const CMatrix receive_cov =
      (cfg.P * link.gain_t1_to_relay / m) *
          (link.h_t1_to_relay * adjoint(link.h_t1_to_relay)) +
      (cfg.P * link.gain_t2_to_relay / m) *
          (link.h_t2_to_relay * adjoint(link.h_t2_to_relay)) +
      cfg.sigma2 * CMatrix::identity(cfg.N);
  const double beta = trace(w * receive_cov * adjoint(w)).real();
  if (!(beta > 0.0)) {
    throw std::domain_error(
        "dcm_normalization: beta is not positive (relay " + std::to_string(k) +
        "); all channels and the noise floor are zero");
  }
  return beta;
}

namespace detail {

/// The four per-relay quantities that differ between the two directions.
/// Selecting them through one code path keeps the direction-12 formulas and
/// the direction-21 formulas exact mirrors of each other.
struct DirectedHop {
  const CMatrix* out;   // relay -> receiving terminal
  const CMatrix* in;    // transmitting terminal -> relay
  double gain_out;      // path loss on the outgoing hop
  double gain_in;       // path loss on the incoming hop
};

inline DirectedHop directed_hop(const RelayLink& link, Direction dir) {
  if (dir == Direction::t1_to_t2) {
    return {&link.h_relay_to_t2, &link.h_t1_to_relay, link.gain_relay_to_t2,
            link.gain_t1_to_relay};
  }
  return {&link.h_relay_to_t1, &link.h_t2_to_relay, link.gain_relay_to_t1,
          link.gain_t2_to_relay};
}

}  // namespace detail

/// Effective link under dual channel matching. Direction t1->t2:
///   A      = sum_k sqrt(gamma_k P_k P E_k / (M beta_k)) G_k W_k H_k
///   Rnoise = sum_k (gamma_k P_k sigma2 / beta_k) G_k W_k W_k* G_k* + sigma2 I
/// after exact removal of the receiving terminal's own echoed signal.
/// Direction t2->t1 mirrors with (H^(r), G^(r), Q_k, F_k).
inline EffectiveLink dcm_effective_link(const ChannelRealization& real,
                                        const SystemConfig& cfg,
                                        const PowerAllocation& alloc,
                                        Direction dir) {
  if (alloc.gamma.size() != real.relays.size()) {
    throw std::invalid_argument(
        "dcm_effective_link: allocation size does not match relay count");
  }
  const int m = cfg.M;
  CMatrix signal(m, m);
  CMatrix noise(m, m);
  for (std::size_t k = 0; k < real.relays.size(); ++k) {
    const detail::DirectedHop hop = detail::directed_hop(real.relays[k], dir);
    const CMatrix w = dcm_weight(real, k);
    if (max_abs(w) == 0.0) continue;  // relay forwards nothing
    const double beta = dcm_normalization(real, cfg, k);
    const double sig_scale =
        std::sqrt(alloc.gamma[k] * hop.gain_out * cfg.P * hop.gain_in /
                  (static_cast<double>(m) * beta));
    signal = signal + sig_scale * (*hop.out * w * *hop.in);
    const CMatrix forwarded = *hop.out * w;
    noise = noise + (alloc.gamma[k] * hop.gain_out * cfg.sigma2 / beta) *
                        (forwarded * adjoint(forwarded));
  }
  noise = noise + cfg.sigma2 * CMatrix::identity(m);
  return EffectiveLink{std::move(signal), std::move(noise)};
}

/// Achievable rates under dual channel matching at alpha = 1/2, with input
/// covariance Qx = I_M (unit power per antenna, E{x*x} = M).
inline RatePair dcm_rate(const EffectiveLink& link12,
                         const EffectiveLink& link21,
                         const SystemConfig& cfg) {
  const CMatrix qx = CMatrix::identity(cfg.M);
  RatePair out;
  out.r12_bits =
      0.5 * mimo_mutual_information(link12.signal, qx, link12.noise_cov);
  out.r21_bits =
      0.5 * mimo_mutual_information(link21.signal, qx, link21.noise_cov);
  return out;
}

namespace detail {

/// Ensemble-average received signal-plus-noise power at relay k; the
/// normalize-and-forward scaling uses it in place of CSI.
inline double nc_receive_power(const RelayLink& link,
                               const SystemConfig& cfg) {
  return static_cast<double>(cfg.N) *
         (cfg.P * (link.gain_t1_to_relay + link.gain_t2_to_relay) +
          cfg.sigma2);
}

}  // namespace detail

/// Effective link under normalize-and-forward (no CSI at any relay). With
/// c_k = gamma_k P_k / (N (P (E_k + F_k) + sigma2)), direction t1->t2:
///   A      = sum_k sqrt(c_k P E_k / M) G_k H_k
///   Rnoise = sum_k c_k sigma2 G_k G_k* + sigma2 I
/// after exact self-interference removal; t2->t1 mirrors with Q_k, F_k.
inline EffectiveLink nc_af_effective_link(const ChannelRealization& real,
                                          const SystemConfig& cfg,
                                          const PowerAllocation& alloc,
                                          Direction dir) {
  if (alloc.gamma.size() != real.relays.size()) {
    throw std::invalid_argument(
        "nc_af_effective_link: allocation size does not match relay count");
  }
  const int m = cfg.M;
  CMatrix signal(m, m);
  CMatrix noise(m, m);
  for (std::size_t k = 0; k < real.relays.size(); ++k) {
    const RelayLink& link = real.relays[k];
    const detail::DirectedHop hop = detail::directed_hop(link, dir);
    const double c =
        alloc.gamma[k] * hop.gain_out / detail::nc_receive_power(link, cfg);
    signal = signal + std::sqrt(c * cfg.P * hop.gain_in /
                                static_cast<double>(m)) *
                          (*hop.out * *hop.in);
    noise = noise + (c * cfg.sigma2) * (*hop.out * adjoint(*hop.out));
  }
  noise = noise + cfg.sigma2 * CMatrix::identity(m);
  return EffectiveLink{std::move(signal), std::move(noise)};
}

/// Achievable rates under normalize-and-forward at alpha = 1/2, input
/// covariance Qx = I_M as in the slot signal model (E{x*x} = M).
inline RatePair nc_af_rate(const EffectiveLink& link12,
                           const EffectiveLink& link21,
                           const SystemConfig& cfg) {
  const CMatrix qx = CMatrix::identity(cfg.M);
  RatePair out;
  out.r12_bits =
      0.5 * mimo_mutual_information(link12.signal, qx, link12.noise_cov);
  out.r21_bits =
      0.5 * mimo_mutual_information(link21.signal, qx, link21.noise_cov);
  return out;
}

enum class RelayStrategy { dcm, nc_af };

/// Signal-level record of one simulated slot. Residuals are relative to the
/// received vector's norm; cancellation is algebraic, so both should sit at
/// machine precision.
struct SlotTranscript {
  CMatrix x;  // M x 1 transmitted by T1
  CMatrix u;  // M x 1 transmitted by T2
  std::vector<CMatrix> relay_rx;  // r_k, N x 1
  std::vector<CMatrix> relay_tx;  // t_k, N x 1
  CMatrix y;  // M x 1 received at T2
  CMatrix v;  // M x 1 received at T1
  double recon_residual_12 = 0.0;   // expansion identity at T2
  double recon_residual_21 = 0.0;   // expansion identity at T1
  double cancel_residual_12 = 0.0;  // post-cancellation identity at T2
  double cancel_residual_21 = 0.0;  // post-cancellation identity at T1
};

/// Simulate one slot at the signal level: draw x, u ~ CN(0, I_M) and all
/// noise vectors, run the relay processing of the chosen strategy, and check
/// that subtracting the self-interference leaves exactly the effective-link
/// signal plus the realized forwarded noise.
inline SlotTranscript simulate_slot(const ChannelRealization& real,
                                    const SystemConfig& cfg,
                                    const PowerAllocation& alloc,
                                    RelayStrategy strategy,
                                    RngStream& stream) {
  if (alloc.gamma.size() != real.relays.size()) {
    throw std::invalid_argument(
        "simulate_slot: allocation size does not match relay count");
  }
  const std::size_t kK = real.relays.size();
  const double noise_std = std::sqrt(cfg.sigma2);

  SlotTranscript slot;
  slot.x = detail::sample_cn_matrix(cfg.M, 1, stream);
  slot.u = detail::sample_cn_matrix(cfg.M, 1, stream);
  std::vector<CMatrix> relay_noise(kK);
  for (std::size_t k = 0; k < kK; ++k) {
    relay_noise[k] = CMatrix(noise_std *
                             detail::sample_cn_matrix(cfg.N, 1, stream).data());
  }
  const CMatrix w_noise =
      CMatrix(noise_std * detail::sample_cn_matrix(cfg.M, 1, stream).data());
  const CMatrix z_noise =
      CMatrix(noise_std * detail::sample_cn_matrix(cfg.M, 1, stream).data());

  // Transmit phase: r_k = sqrt(P E_k / M) H_k x + sqrt(P F_k / M) Gr_k u + n_k
  slot.relay_rx.reserve(kK);
  slot.relay_tx.reserve(kK);
  std::vector<CMatrix> relay_weight(kK);  // t_k = weight_k * r_k
  for (std::size_t k = 0; k < kK; ++k) {
    const RelayLink& link = real.relays[k];
    const double m = static_cast<double>(cfg.M);
    const CMatrix rx =
        std::sqrt(cfg.P * link.gain_t1_to_relay / m) *
            (link.h_t1_to_relay * slot.x) +
        std::sqrt(cfg.P * link.gain_t2_to_relay / m) *
            (link.h_t2_to_relay * slot.u) +
        relay_noise[k];
    if (strategy == RelayStrategy::dcm) {
      const CMatrix w = dcm_weight(real, k);
      relay_weight[k] =
          max_abs(w) == 0.0
              ? CMatrix(cfg.N, cfg.N)
              : CMatrix((1.0 / std::sqrt(dcm_normalization(real, cfg, k))) *
                        w.data());
    } else {
      relay_weight[k] =
          CMatrix((1.0 / std::sqrt(detail::nc_receive_power(link, cfg))) *
                  CMatrix::identity(cfg.N).data());
    }
    slot.relay_rx.push_back(rx);
    slot.relay_tx.push_back(relay_weight[k] * rx);
  }

  // Receive phase: y at T2, v at T1.
  CMatrix y(cfg.M, 1);
  CMatrix v(cfg.M, 1);
  for (std::size_t k = 0; k < kK; ++k) {
    const RelayLink& link = real.relays[k];
    y = y + std::sqrt(alloc.gamma[k] * link.gain_relay_to_t2) *
                (link.h_relay_to_t2 * slot.relay_tx[k]);
    v = v + std::sqrt(alloc.gamma[k] * link.gain_relay_to_t1) *
                (link.h_relay_to_t1 * slot.relay_tx[k]);
  }
  slot.y = y + z_noise;
  slot.v = v + w_noise;

  // Expansion of the received signal into signal, self-interference and
  // forwarded-noise terms; both terminals know all channels, so each can
  // rebuild and subtract its own contribution exactly.
  const auto expand = [&](Direction dir) {
    const bool to_t2 = dir == Direction::t1_to_t2;
    const CMatrix& wanted = to_t2 ? slot.x : slot.u;
    const CMatrix& echoed = to_t2 ? slot.u : slot.x;
    const CMatrix& rx = to_t2 ? slot.y : slot.v;
    const CMatrix& terminal_noise = to_t2 ? z_noise : w_noise;

    const EffectiveLink link_eff =
        strategy == RelayStrategy::dcm
            ? dcm_effective_link(real, cfg, alloc, dir)
            : nc_af_effective_link(real, cfg, alloc, dir);

    CMatrix self_interference(cfg.M, 1);
    CMatrix forwarded_noise(cfg.M, 1);
    for (std::size_t k = 0; k < kK; ++k) {
      const RelayLink& link = real.relays[k];
      const detail::DirectedHop hop = detail::directed_hop(link, dir);
      const CMatrix* echo_in =
          to_t2 ? &link.h_t2_to_relay : &link.h_t1_to_relay;
      const double echo_gain =
          to_t2 ? link.gain_t2_to_relay : link.gain_t1_to_relay;
      const double tx_scale = std::sqrt(alloc.gamma[k] * hop.gain_out);
      const CMatrix through = *hop.out * relay_weight[k];
      self_interference =
          self_interference +
          (tx_scale * std::sqrt(cfg.P * echo_gain /
                                static_cast<double>(cfg.M))) *
              (through * (*echo_in * echoed));
      forwarded_noise =
          forwarded_noise + tx_scale * (through * relay_noise[k]);
    }
    const CMatrix realized_noise = forwarded_noise + terminal_noise;
    const CMatrix expected_signal = link_eff.signal * wanted;
    const double scale = std::max(frobenius_norm(rx), 1e-300);
    const double recon = frobenius_norm(rx - (expected_signal +
                                              self_interference +
                                              realized_noise)) /
                         scale;
    const double cancel =
        frobenius_norm((rx - self_interference) -
                       (expected_signal + realized_noise)) /
        scale;
    return std::pair<double, double>{recon, cancel};
  };

  const auto [recon12, cancel12] = expand(Direction::t1_to_t2);
  slot.recon_residual_12 = recon12;
  slot.cancel_residual_12 = cancel12;
  const auto [recon21, cancel21] = expand(Direction::t2_to_t1);
  slot.recon_residual_21 = recon21;
  slot.cancel_residual_21 = cancel21;
  return slot;
}

namespace detail {

inline void dump_vector_section(std::ostream& out, const std::string& name,
                                const CMatrix& v) {
  out << '[' << name << "]\n";
  char buf[80];
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", v(i, 0).real(),
                  v(i, 0).imag());
    out << buf << '\n';
  }
}

}  // namespace detail

/// Debug dump: plain-text sections for x, u, each r_k and t_k, y, v, and the
/// residual norms.
inline void dump_transcript(const SlotTranscript& slot, std::ostream& out) {
  detail::dump_vector_section(out, "x", slot.x);
  detail::dump_vector_section(out, "u", slot.u);
  for (std::size_t k = 0; k < slot.relay_rx.size(); ++k) {
    detail::dump_vector_section(out, "r " + std::to_string(k + 1),
                                slot.relay_rx[k]);
    detail::dump_vector_section(out, "t " + std::to_string(k + 1),
                                slot.relay_tx[k]);
  }
  detail::dump_vector_section(out, "y", slot.y);
  detail::dump_vector_section(out, "v", slot.v);
  out << "[residuals]\n";
  char buf[96];
  std::snprintf(buf, sizeof buf, "recon_12=%.3e\nrecon_21=%.3e\n",
                slot.recon_residual_12, slot.recon_residual_21);
  out << buf;
  std::snprintf(buf, sizeof buf, "cancel_12=%.3e\ncancel_21=%.3e\n",
                slot.cancel_residual_12, slot.cancel_residual_21);
  out << buf;
}

}  // namespace twrelay
