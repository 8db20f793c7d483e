// SPDX-License-Identifier: Apache-2.0
//
// PSS correlation, energy detection with and without timing knowledge, and the
// directional (sector sweep) benchmark detector.
//
// Correlation index origin: under eps_T = 0 the post-CP PSS of burst m starts at
// corr index N_CP + m*N_B, so every window below is offset by N_CP.

#ifndef CIA_DETECTION_HPP
#define CIA_DETECTION_HPP

#include "cia/config.hpp"
#include "cia/waveform.hpp"

#include <armadillo>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace cia
{
    enum class DetectMode
    {
        PT,
        NT,
        DIA
    };

    enum class Hypothesis
    {
        H0,
        H1
    };

    const char *to_string(DetectMode mode);

    struct DetectionResult
    {
        Hypothesis decision = Hypothesis::H0;
        double statistic = 0.0;
        double threshold = 0.0;
        std::optional<int> eps_T_hat; // NT mode with an H1 decision only
        std::optional<int> m_star;    // DIA mode: 1-based burst of the peak
        DetectMode mode = DetectMode::PT;
    };

    // corr[n] = (1/P) sum_k y[n+k] conj(s[k]) for n = 0..len(y)-P.
    arma::cx_vec pss_correlate(const arma::cx_vec &y, const PssSequence &pss);
    // Single lag, direct sum.
    cplx pss_correlate_at(const arma::cx_vec &y, const PssSequence &pss, int n);

    // (1/M) sum_m sum_{k<N_c} |corr[N_CP + offset + k + m N_B]|^2
    double window_energy(const arma::cx_vec &corr, const FrameConfig &cfg, int offset);

    DetectionResult detect_pt(const arma::cx_vec &corr, const FrameConfig &cfg, double eta_PT);
    // Sliding window over 0 <= n < eps_T_max; ties keep the lowest n.
    DetectionResult detect_nt(const arma::cx_vec &corr, const FrameConfig &cfg, double eta_NT);
    // All windowed energies for 0 <= n < eps_T_max.
    std::vector<double> nt_energy_profile(const arma::cx_vec &corr, const FrameConfig &cfg);

    // Peak |corr|^2 over the burst span; the burst holding the peak is reported 1-based.
    // Assumes the PSS sits in the first N_B - P samples of its burst after timing offset.
    DetectionResult detect_dia(const arma::cx_vec &corr, const FrameConfig &cfg, double eta_DIA);

    // Empirical (1 - p_fa) quantile of the DIA statistic from noise-only captures
    // produced by `noise_capture(trial)`.
    double calibrate_dia_threshold(const std::function<arma::cx_vec(int)> &noise_capture, const PssSequence &pss,
                                   const FrameConfig &cfg, double p_fa, int trials);
}

#endif
