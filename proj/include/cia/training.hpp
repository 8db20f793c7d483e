// SPDX-License-Identifier: Apache-2.0
//
// Compressive beam training from the received SS bursts: rearrangement, delay and
// effective-gain estimation, CFO-aware matching pursuit over the AoA x AoD grid,
// and first-order off-grid refinement of a single path.

#ifndef CIA_TRAINING_HPP
#define CIA_TRAINING_HPP

#include "cia/channel.hpp"
#include "cia/codebook.hpp"
#include "cia/config.hpp"
#include "cia/detection.hpp"
#include "cia/theory.hpp"
#include "cia/waveform.hpp"

#include <armadillo>
#include <optional>
#include <string>
#include <vector>

namespace cia
{
    // G angles on (-pi/2, pi/2) with step pi/G, endpoints excluded by half a step.
    std::vector<double> angle_grid(int G);

    struct Dictionaries
    {
        int G_d = 0, G_T = 0, G_R = 0;
        std::vector<double> d; // delays [s]
        std::vector<double> r; // AoA candidates
        std::vector<double> t; // AoD candidates
        arma::cx_mat delay_atoms; // P x G_d, column q is F^H[f(d_q) o s]
        // M x (G_T G_R); column k = k_rx G_T + k_tx holds (w_m^H a_rx(r)) (a_tx(t)^H v_m).
        arma::cx_mat angle_atoms;

        int n_angle_atoms() const { return G_T * G_R; }
    };

    Dictionaries build_dictionaries(const FrameConfig &cfg, const PssSequence &pss, const Codebook &cb_tx, const Codebook &cb_rx,
                                    int G_d, int G_T, int G_R);

    // 0-based joint index <-> (k_tx, k_rx); rx index varies slowest.
    struct AnglePair
    {
        int k_tx = 0;
        int k_rx = 0;
    };

    inline AnglePair unmap_angle_index(int k, int G_T) { return {k % G_T, k / G_T}; }
    inline int map_angle_index(const AnglePair &a, int G_T) { return a.k_rx * G_T + a.k_tx; }

    // P x M matrix whose column m holds y[eps_T_hat + N_CP + p + m N_B], p < P.
    arma::cx_mat rearrange(const arma::cx_vec &y, int eps_T_hat, const FrameConfig &cfg);

    struct DelayEstimate
    {
        int q = 0;
        double tau = 0.0;
    };

    enum class DelayRule
    {
        burst_energy, // sum_m |<p_q, y_m>|^2 / ||p_q||^2, ML for unknown per-burst gains
        burst_average // |<p_q, mean_m y_m>| / ||p_q||^2
    };

    // The burst average can cancel: pseudorandom beams give every burst a gain of
    // random phase, and the CFO rotates it further.
    DelayEstimate estimate_delay(const arma::cx_mat &Y, const Dictionaries &dict, DelayRule rule = DelayRule::burst_energy);
    // g_m = p_q^H y_m / ||p_q||^2
    arma::cx_vec estimate_gain(const arma::cx_mat &Y, int q, const Dictionaries &dict);

    // Phase increment of a tone sampled once per burst; result in (-pi/N_B, pi/N_B].
    double cfo_from_tone(const arma::cx_vec &tone, int N_B);

    struct MpResult
    {
        int k = 0;
        AnglePair pair;
        double theta = 0.0;
        double phi = 0.0;
        double eps_F = 0.0;
        double score = 0.0;
    };

    enum class MpNorm
    {
        atom_norm,    // |<Q a_k, g>| / ||a_k||, equal to the likelihood ranking
        atom_norm_sq  // |<Q a_k, g>| / ||a_k||^2
    };

    // How each atom's CFO is chosen before scoring.
    enum class MpCfo
    {
        none,        // no inter-burst rotation
        tone,        // phase increment of the tone conj(a_k) o g (cfo_from_tone)
        periodogram  // peak of the tone's zero-padded spectrum, polished for the winning atom
    };

    // The lag-1 tone rule loses the correct atom off-grid: the atom mismatch
    // scrambles the per-burst phases it relies on. The periodogram peak is the
    // likelihood-maximizing CFO for each atom and keeps the on-grid exactness.
    MpResult matching_pursuit(const arma::cx_vec &g_hat, const Dictionaries &dict, int N_B, MpNorm norm = MpNorm::atom_norm,
                              MpCfo cfo = MpCfo::periodogram);

    // Score of atom k with a given CFO, same normalization as matching_pursuit.
    double mp_score(const arma::cx_vec &g_hat, const Dictionaries &dict, int k, double eps_F, int N_B,
                    MpNorm norm = MpNorm::atom_norm);

    // ----- single-path model ----------------------------------------------------

    // x_m[p] = g (w_m^H a_rx(phi)) (a_tx(theta)^H v_m) e^{j eps_F (m N_B + p)} u_tau[p],
    // stacked burst by burst into a vector of length M P.
    class LosModel
    {
    public:
        LosModel(const FrameConfig &cfg, const PssSequence &pss, const Codebook &cb_tx, const Codebook &cb_rx);

        arma::cx_vec evaluate(const LosParams &xi) const;
        // Columns: d/d eps_F, theta, phi, tau, alpha, beta.
        arma::cx_mat jacobian(const LosParams &xi) const;
        // Least-squares gain for fixed (eps_F, theta, phi, tau).
        cplx ls_gain(const arma::cx_vec &y, const LosParams &xi) const;

        const FrameConfig &config() const { return cfg_; }
        int n_tx() const { return tx_.n_antennas(); }
        int n_rx() const { return rx_.n_antennas(); }

    private:
        arma::cx_vec unit_response(const LosParams &xi, arma::cx_vec *d_eps, arma::cx_vec *d_theta, arma::cx_vec *d_phi,
                                   arma::cx_vec *d_tau) const;

        FrameConfig cfg_;
        PssSequence pss_;
        Codebook tx_, rx_;
    };

    struct TrainingEstimate
    {
        double theta_hat = 0.0;
        double phi_hat = 0.0;
        double tau_hat = 0.0;
        cplx g_hat{0.0, 0.0};
        double eps_F_hat = 0.0;
        bool refined = false;
        int iterations = 0;
        std::vector<double> residual_trace;

        LosParams params() const { return {eps_F_hat, theta_hat, phi_hat, tau_hat, g_hat}; }
    };

    std::string to_json(const TrainingEstimate &est);
    TrainingEstimate training_estimate_from_json(const std::string &text);

    struct RefineOptions
    {
        double eps0 = 0.0;          // absolute residual floor; <= 0 uses 1e-12 ||y||^2
        double rel_tol = 1e-6;      // stop when the residual changes less than this fraction
        int max_iters = 100;
        int max_halvings = 10;
    };

    // Tries eps + 2 pi q / N_B for every q with |.| <= bound. Each candidate gets the
    // delay re-estimated after removing its in-symbol rotation; the pair with the
    // smallest LS residual wins.
    LosParams resolve_cfo_branch(const arma::cx_mat &Y, const Dictionaries &dict, const LosModel &model, const LosParams &xi,
                                 double bound, DelayRule rule = DelayRule::burst_energy);

    TrainingEstimate refine(const arma::cx_vec &y, const TrainingEstimate &coarse, const LosModel &model,
                            const RefineOptions &opts = {});

    struct TrainingOptions
    {
        MpNorm norm = MpNorm::atom_norm;
        MpCfo cfo = MpCfo::periodogram;
        DelayRule delay = DelayRule::burst_energy;
        bool do_refine = true;
        double cfo_bound = 0.0; // |eps_F| bound for branch resolution [rad/sample]; 0 skips it
        RefineOptions refine;
    };

    // Steps from rearrangement through refinement for a known timing offset.
    TrainingEstimate train(const arma::cx_vec &capture, int eps_T_hat, const FrameConfig &cfg, const Dictionaries &dict,
                           const LosModel &model, const TrainingOptions &opts = {});

    struct Algorithm1Result
    {
        DetectionResult detection;
        std::optional<TrainingEstimate> estimate;
        std::optional<int> training_timing; // window start handed to training
        arma::cx_vec w_star;
        arma::cx_vec v_star;
    };

    // Moves the detected window start to one lag before its strongest lag so the
    // dominant path lands at a small non-negative delay.
    int align_training_timing(const arma::cx_vec &corr, const FrameConfig &cfg, int eps_T_hat);

    Algorithm1Result run_algorithm1(const arma::cx_vec &capture, const FrameConfig &cfg, const PssSequence &pss,
                                    const Dictionaries &dict, const LosModel &model, double eta_NT,
                                    const TrainingOptions &opts = {});

    // ----- hierarchical directional refinement ----------------------------------

    struct HierarchicalResult
    {
        double theta = 0.0;
        double phi = 0.0;
        Sector tx_region;
        Sector rx_region;
    };

    // Starts from the sector pair of burst m_star (1-based) and, in each of n_train
    // rounds, splits both regions into sqrt(beams_per_csirs) parts and keeps the
    // pair with the largest noiseless beamformed gain.
    HierarchicalResult hierarchical_refine(int m_star, const ChannelRealization &chan, const FrameConfig &cfg, int n_train,
                                           int beams_per_csirs, int N_tx, int N_rx, int M_tx, int M_rx);
}

#endif
