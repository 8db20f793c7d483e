// SPDX-License-Identifier: Apache-2.0
//
// PSS generation, SS-burst stream assembly and the frequency-delay response
// vectors shared by detection and training.

#ifndef CIA_WAVEFORM_HPP
#define CIA_WAVEFORM_HPP

#include "cia/config.hpp"

#include <armadillo>
#include <utility>
#include <vector>

namespace cia
{
    // Time-domain sequence and its unitary-DFT dual: freq = F * time.
    struct PssSequence
    {
        arma::cx_vec freq;
        arma::cx_vec time;
        int root = 0;

        int length() const { return static_cast<int>(time.n_elem); }
    };

    // Zadoff-Chu sequence of length P: exp(-j pi u n (n + P mod 2) / P).
    // Throws ConfigError unless 1 <= root < P and gcd(root, P) == 1.
    PssSequence gen_zc(int root, int P);

    // Default PSS root used throughout the simulator.
    inline constexpr int default_zc_root = 25;

    // BPSK maximum-length sequence (x^7 + x^4 + 1, as used by NR PSS) placed in
    // the time domain and padded with +1 up to P samples. Constant modulus, but
    // its periodic autocorrelation is two-valued rather than a delta.
    PssSequence gen_msequence(int P, int cell_id2 = 0);

    // Inclusive sample index ranges [first, last] of CP and PSS per burst (0-based bursts).
    struct BurstPlacement
    {
        std::vector<std::pair<int, int>> cp_sets;
        std::vector<std::pair<int, int>> pss_sets;
    };

    BurstPlacement burst_placement(const FrameConfig &cfg);

    // Transmit stream s[n] of length M*N_B with the PSS (and its CP copy) at the
    // start of each burst and zeros elsewhere.
    arma::cx_vec assemble_stream(const FrameConfig &cfg, const PssSequence &pss);

    // [f(tau)]_p = exp(-j 2 pi p tau / (P T_s)), p = 0..P-1
    arma::cx_vec delay_response(double tau, const FrameConfig &cfg);
    // Derivative of delay_response with respect to tau.
    arma::cx_vec delay_response_derivative(double tau, const FrameConfig &cfg);

    // PSS samples received through a single path with delay tau: F^H [f(tau) o s].
    arma::cx_vec pss_delay_atom(double tau, const FrameConfig &cfg, const PssSequence &pss);

    // Delay dictionary grid: d_q = q * N_c T_s / G_d for q = 0..G_d-1.
    std::vector<double> delay_grid(int G_d, const FrameConfig &cfg);
}

#endif
