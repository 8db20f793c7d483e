// SPDX-License-Identifier: Apache-2.0
//
// Sparse multipath MIMO channel, array responses and receive-chain synthesis.
//
// Beams are unit-norm and steering vectors unit-modulus, so the post-beamforming
// gain of path l through burst m is g_l (w_m^H a_rx)(a_tx^H v_m). With
// pseudorandom beams its mean power equals |g_l|^2, and the noise at the
// combiner output has variance sigma_n^2.

#ifndef CIA_CHANNEL_HPP
#define CIA_CHANNEL_HPP

#include "cia/codebook.hpp"
#include "cia/config.hpp"
#include "cia/waveform.hpp"

#include <armadillo>
#include <random>
#include <vector>

namespace cia
{
    // Uniform linear array with half-wavelength spacing.
    struct ArrayGeometry
    {
        int N = 1;
    };

    // [a(angle)]_k = exp(j pi k sin(angle)), k = 0..N-1
    arma::cx_vec steer(const ArrayGeometry &geom, double angle);
    // d a / d angle
    arma::cx_vec steer_derivative(const ArrayGeometry &geom, double angle);

    // Diagonal of Q(eps_F) = diag(1, e^{j eps_F}, ..., e^{j (P-1) eps_F}).
    arma::cx_vec apply_cfo_matrix(double eps_F, int P);

    // Monte Carlo path sampler.
    struct ChannelDrawSpec
    {
        int L = 1;
        std::vector<double> relative_power_db; // per path; empty means equal power
        double angle_limit = pi / 2;            // angles uniform on (-limit, limit)
        bool integer_delays = false;            // distinct integer taps in [0, N_c)
    };

    // Path gains have fixed magnitudes summing to sigma_g2 in power and uniform phases.
    ChannelRealization draw_channel(const ChannelDrawSpec &spec, const FrameConfig &cfg, double sigma_g2, double noise_power,
                                    std::mt19937_64 &rng);

    struct RxCapture
    {
        arma::cx_vec y;
        SyncState sync;
        int M = 0;
    };

    struct SynthOptions
    {
        bool add_noise = true;
        double phase_noise_var = 0.0; // Wiener increment variance per sample [rad^2], 0 disables
    };

    // Samples captured by the UE: length M*N_B + eps_T_max + N_c + N_CP + P.
    inline int capture_length(const FrameConfig &cfg) { return cfg.M * cfg.N_B + cfg.eps_T_max + cfg.N_c + cfg.N_CP + cfg.P; }

    // Receive combiner active at absolute sample n.
    inline int rx_beam_index(int n, const FrameConfig &cfg) { return (n / cfg.N_B) % cfg.M; }

    // Burst m is transmitted with precoder v_m; its CP starts at m*N_B + eps_T.
    // Path l arrives as the cyclically extended F^H[f(tau_l) o s], present for
    // floor(tau_l/T_s) <= i < N_CP + P + floor(tau_l/T_s) within the burst.
    RxCapture synth_rx(const FrameConfig &cfg, const ChannelRealization &chan, const Codebook &cb_tx, const Codebook &cb_rx,
                       const SyncState &sync, const PssSequence &pss, std::mt19937_64 &rng, const SynthOptions &opts = {});

    // Effective gain of path l in burst m (0-based), including the inter-burst CFO rotation.
    cplx effective_gain(const PathComponent &path, const arma::cx_vec &w, const arma::cx_vec &v, double eps_F, int m,
                        const FrameConfig &cfg);

    // Time taps h_l[d], d = 0..P-1, of the periodic band-limited delay: (1/P) sum_p f_p(tau) e^{j 2 pi p d / P}.
    arma::cx_vec delay_taps(double tau, const FrameConfig &cfg);

    // sum_d |sum_l g_l h_l[d] (w^H a_rx(phi_l)) (a_tx(theta_l)^H v)|^2
    double beamformed_gain(const ChannelRealization &chan, const arma::cx_vec &w, const arma::cx_vec &v, const FrameConfig &cfg);

    // 10 log10(P_out * gain / (noise_psd * B_tot)); noise_psd in W/Hz (default -170 dBm/Hz).
    double post_bf_snr_db(const ChannelRealization &chan, const arma::cx_vec &w, const arma::cx_vec &v, const FrameConfig &cfg,
                          double P_out, double B_tot, double noise_psd = 1e-20);
}

#endif
