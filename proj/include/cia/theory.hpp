// SPDX-License-Identifier: Apache-2.0
//
// Closed-form analysis: detection thresholds and miss-detection rate, the CFO /
// beam-switch SNR degradation factor, Fisher information of single-path training,
// access latency and overhead, and baseband multiply counts.

#ifndef CIA_THEORY_HPP
#define CIA_THEORY_HPP

#include "cia/codebook.hpp"
#include "cia/config.hpp"
#include "cia/detection.hpp"
#include "cia/waveform.hpp"

#include <armadillo>
#include <cstdint>

namespace cia
{
    // Gaussian tail probability and its inverse.
    double q_function(double x);
    double q_inverse(double p);

    // sqrt(6)/pi: scale between a Gumbel standard deviation and its beta parameter.
    inline constexpr double gumbel_constant = 0.7796968012336761;

    // Samples of the PSS received after a mid-PSS combiner switch.
    int gain_split_K(int eps_T, const FrameConfig &cfg);

    // SNR degradation factor; exact (K^2 + (P-K)^2)/P^2 at eps_F = 0.
    double kappa(int eps_T, double eps_F, const FrameConfig &cfg);

    struct DetectionTheoryInputs
    {
        FrameConfig cfg;
        double snr = 1.0;       // sigma_g^2 / sigma_n^2, linear
        double eps_F = 0.0;     // rad/sample
        int eps_T = 0;          // samples
        double p_fa_star = 0.01;
        DetectMode mode = DetectMode::PT;
        double gumbel = gumbel_constant;
        double noise_power = 1.0; // sigma_n^2 used for the threshold
    };

    void validate_theory_inputs(const DetectionTheoryInputs &in);

    // Threshold adjustment factor xi (PT: Q^-1(P_FA); NT: Gumbel-corrected maximum).
    double threshold_factor(const DetectionTheoryInputs &in);
    // eta* = sigma_n^2 [N_c/P + sqrt(N_c/(M P^2)) xi]
    double threshold_opt(const DetectionTheoryInputs &in);
    double pmd_theory(const DetectionTheoryInputs &in);

    // ----- Fisher information for single-path training --------------------------

    // Parameter order: eps_F, theta, phi, tau, alpha, beta.
    struct LosParams
    {
        double eps_F = 0.0;
        double theta = 0.0; // AoD
        double phi = 0.0;   // AoA
        double tau = 0.0;   // seconds
        cplx g{1.0, 0.0};
    };

    struct FimResult
    {
        arma::mat Phi;           // Re{(d_x x)^H (d_y x)}
        arma::mat J;             // 2 Phi / sigma_n^2
        double crlb_theta = 0.0; // [J^-1] at the theta slot
        double crlb_phi = 0.0;   // [J^-1] at the phi slot
        bool singular = false;
    };

    FimResult fim(const LosParams &xi, const FrameConfig &cfg, const Codebook &cb_tx, const Codebook &cb_rx,
                  const PssSequence &pss, double sigma_n2);

    // Inverse of a symmetric positive definite matrix with diagonal equilibration.
    // Returns false when the scaled matrix is not numerically invertible.
    bool inverse_spd(const arma::mat &J, arma::mat &inv);

    // ----- access latency and overhead ------------------------------------------

    struct SystemModelInputs
    {
        int N_UE = 1;
        double T_R = 1e-3;      // CSI-RS period [s]
        double T_r = 17.84e-6;  // CSI-RS duration [s]
        int N_train = 0;
        double B_IA = 57.6e6;   // [Hz]
        double B_tot = 400e6;   // [Hz]
        double P_MD = 0.0;
        int K_R_override = -1;  // >= 0 replaces the value derived from T_R

        int K_R(const FrameConfig &cfg) const;
    };

    // Mean wait for a scheduled CSI-RS when N_UE users share K_R slots per period.
    double mean_csirs_wait(int N_UE, int K_R, double T_SS, double T_R);
    double latency(const SystemModelInputs &in, const FrameConfig &cfg);
    // Percent of time-frequency resources spent on SS bursts and CSI-RS.
    double overhead(const SystemModelInputs &in, const FrameConfig &cfg);

    // ----- complex multiplication counts ----------------------------------------

    struct ComplexityCounts
    {
        std::uint64_t pss_corr = 0;
        std::uint64_t detect = 0;
        std::uint64_t delay_est = 0;
        std::uint64_t aoa_aod = 0;
        std::uint64_t cfo = 0;

        std::uint64_t discovery() const { return pss_corr + detect; }
        std::uint64_t total() const { return pss_corr + detect + delay_est + aoa_aod + cfo; }
    };

    ComplexityCounts complexity_counts(const FrameConfig &cfg, int G_d, int G_T, int G_R);
    // (P N_B + P G_d + 3 M G_T G_R) / (P N_B)
    double complexity_ratio(const FrameConfig &cfg, int G_d, int G_T, int G_R);
}

#endif
