#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "twrelay/channel.hpp"
#include "twrelay/matrix.hpp"

namespace twrelay {

/// Water-filling allocation over channel eigenmodes.
struct WaterfillResult {
  double nu = 0.0;             // water level, power units
  std::vector<double> powers;  // per-mode allocation, aligned with the input
  double capacity_bits = 0.0;
};

/// Per-direction capacity upper bounds, bits per full-slot channel use.
struct BoundPair {
  double r12_bits = 0.0;
  double r21_bits = 0.0;
};

/// Maximize sum_l log2(1 + p_l * lambda_l / sigma2) subject to
/// sum_l p_l = budget, p_l >= 0. Active-set water level: modes are already
/// sorted descending, try the largest active set and shrink until the
/// smallest active power is positive.
inline WaterfillResult waterfill(const HermitianSpectrum& lambda,
                                 double budget, double sigma2) {
  if (!(budget > 0.0)) {
    throw std::invalid_argument("waterfill: budget must be > 0");
  }
  if (!(sigma2 > 0.0)) {
    throw std::invalid_argument("waterfill: sigma2 must be > 0");
  }
  const std::size_t n = lambda.size();
  std::size_t n_pos = 0;
  while (n_pos < n && lambda[n_pos] > 0.0) ++n_pos;
  if (n_pos == 0) {
    throw std::domain_error("waterfill: no positive eigenmode to allocate to");
  }

  std::vector<double> inv_gain(n_pos);  // sigma2 / lambda_l, ascending
  double prefix = 0.0;
  for (std::size_t l = 0; l < n_pos; ++l) inv_gain[l] = sigma2 / lambda[l];

  std::size_t active = 0;
  double nu = 0.0;
  for (std::size_t m = n_pos; m >= 1; --m) {
    prefix = 0.0;
    for (std::size_t l = 0; l < m; ++l) prefix += inv_gain[l];
    nu = (budget + prefix) / static_cast<double>(m);
    if (nu > inv_gain[m - 1]) {
      active = m;
      break;
    }
  }
  // m = 1 always admits a positive power for budget > 0.

  WaterfillResult result;
  result.nu = nu;
  result.powers.assign(n, 0.0);
  for (std::size_t l = 0; l < active; ++l) {
    const double p = nu - inv_gain[l];
    result.powers[l] = p;
    result.capacity_bits += std::log2(1.0 + p * lambda[l] / sigma2);
  }
  return result;
}

/// log2 det(I + Heff Qx Heff* Rnoise^{-1}) for colored noise. Evaluated as
/// log2 det(I + L^{-1} (Heff Qx Heff*) L^{-*}) with L L* = Rnoise, so the
/// determinant argument is Hermitian by construction.
inline double mimo_mutual_information(const CMatrix& heff, const CMatrix& qx,
                                      const CMatrix& rnoise) {
  if (heff.rows() != rnoise.rows() || heff.cols() != qx.rows()) {
    throw std::invalid_argument("mimo_mutual_information: dimension mismatch");
  }
  detail::require_hermitian(qx, "mimo_mutual_information (Qx)");
  const CMatrix signal_cov = heff * qx * adjoint(heff);
  const CMatrix whitened = hpd_whiten(rnoise, signal_cov);
  const CMatrix arg = CMatrix::identity(whitened.rows()) + whitened;
  return logdet_hpd(hermitian_part(arg));
}

/// Broadcast-cut bound: what the terminal could push into all relays if they
/// fully cooperated in decoding. The per-relay 1/K signal scaling and the
/// sigma2/K noise scaling cancel, leaving
///   r12 = alpha * log2 det(I + P/(M sigma2) * sum_k E_k H_k* H_k)
/// and the mirrored expression for r21.
inline BoundPair broadcast_cut_bound(const ChannelRealization& real,
                                     const SystemConfig& cfg) {
  const int m = cfg.M;
  CMatrix s12(m, m);
  CMatrix s21(m, m);
  for (const RelayLink& link : real.relays) {
    s12 = s12 + link.gain_t1_to_relay *
                    (adjoint(link.h_t1_to_relay) * link.h_t1_to_relay);
    s21 = s21 + link.gain_t2_to_relay *
                    (adjoint(link.h_t2_to_relay) * link.h_t2_to_relay);
  }
  const double scale = cfg.P / (static_cast<double>(cfg.M) * cfg.sigma2);
  const CMatrix eye = CMatrix::identity(m);
  BoundPair out;
  out.r12_bits = cfg.alpha * logdet_hpd(hermitian_part(eye + scale * s12));
  out.r21_bits = cfg.alpha * logdet_hpd(hermitian_part(eye + scale * s21));
  return out;
}

/// Multiple-access-cut bound: all relays cooperating as one NK-antenna
/// transmitter under the sum power budget. The per-mode gains are the
/// eigenvalues of sum_k P_k G_k G_k* (equivalently K times the eigenvalues of
/// the normalized Gram, evaluated at noise sigma2), water-filled over P_R.
inline BoundPair mac_cut_bound(const ChannelRealization& real,
                               const SystemConfig& cfg) {
  const int m = cfg.M;
  CMatrix s12(m, m);
  CMatrix s21(m, m);
  for (const RelayLink& link : real.relays) {
    s12 = s12 + link.gain_relay_to_t2 *
                    (link.h_relay_to_t2 * adjoint(link.h_relay_to_t2));
    s21 = s21 + link.gain_relay_to_t1 *
                    (link.h_relay_to_t1 * adjoint(link.h_relay_to_t1));
  }
  const HermitianSpectrum gains12 = eigvals_hermitian(hermitian_part(s12));
  const HermitianSpectrum gains21 = eigvals_hermitian(hermitian_part(s21));
  BoundPair out;
  out.r12_bits =
      (1.0 - cfg.alpha) * waterfill(gains12, cfg.P_R, cfg.sigma2).capacity_bits;
  out.r21_bits =
      (1.0 - cfg.alpha) * waterfill(gains21, cfg.P_R, cfg.sigma2).capacity_bits;
  return out;
}

/// Cut-set bound on the coherent channel: per direction, the tighter of the
/// broadcast cut and the multiple-access cut.
inline BoundPair coherent_upper_bound(const ChannelRealization& real,
                                      const SystemConfig& cfg) {
  const BoundPair bc = broadcast_cut_bound(real, cfg);
  const BoundPair mac = mac_cut_bound(real, cfg);
  return BoundPair{std::min(bc.r12_bits, mac.r12_bits),
                   std::min(bc.r21_bits, mac.r21_bits)};
}

/// Multiple-access-cut bound without CSI at the relays: isotropic transmit
/// covariance P_R/(NK) I across all relay antennas. Only defined for
/// alpha = 1/2 (equal transmit and receive phases).
inline BoundPair noncoherent_mac_bound(const ChannelRealization& real,
                                       const SystemConfig& cfg) {
  if (cfg.alpha != 0.5) {
    throw std::domain_error(
        "noncoherent_mac_bound: non-coherent bounds are defined only for "
        "alpha = 0.5 (equal transmit and receive phases); got alpha = " +
        std::to_string(cfg.alpha));
  }
  const int m = cfg.M;
  CMatrix s12(m, m);
  CMatrix s21(m, m);
  for (const RelayLink& link : real.relays) {
    s12 = s12 + link.gain_relay_to_t2 *
                    (link.h_relay_to_t2 * adjoint(link.h_relay_to_t2));
    s21 = s21 + link.gain_relay_to_t1 *
                    (link.h_relay_to_t1 * adjoint(link.h_relay_to_t1));
  }
  const double scale =
      cfg.P_R / (static_cast<double>(cfg.N) * static_cast<double>(cfg.K) *
                 cfg.sigma2);
  const CMatrix eye = CMatrix::identity(m);
  BoundPair out;
  out.r12_bits = 0.5 * logdet_hpd(hermitian_part(eye + scale * s12));
  out.r21_bits = 0.5 * logdet_hpd(hermitian_part(eye + scale * s21));
  return out;
}

}  // namespace twrelay
