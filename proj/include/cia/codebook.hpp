// SPDX-License-Identifier: Apache-2.0
//
// Sounding-beam codebooks: pseudorandom quasi-omni beams, frequency-sampling
// sector beams for the directional benchmark, and steering beams.

#ifndef CIA_CODEBOOK_HPP
#define CIA_CODEBOOK_HPP

#include "cia/config.hpp"

#include <armadillo>
#include <iosfwd>
#include <random>
#include <vector>

namespace cia
{
    enum class CodebookKind
    {
        pseudorandom,
        sector,
        steering
    };

    // Unit-norm beams stored as the columns of an N x M matrix.
    struct Codebook
    {
        CodebookKind kind = CodebookKind::pseudorandom;
        arma::cx_mat beams;

        int n_antennas() const { return static_cast<int>(beams.n_rows); }
        int size() const { return static_cast<int>(beams.n_cols); }
        arma::cx_vec beam(int m) const { return beams.col(m); }
    };

    // Entries drawn i.i.d. from {+1, -1, +j, -j} / sqrt(N).
    Codebook gen_pseudorandom(int N, int M, std::mt19937_64 &rng);

    // Angular sector [lo, hi] of sector `index` (0-based) when (-pi/2, pi/2) is split evenly.
    struct Sector
    {
        double lo = 0.0;
        double hi = 0.0;
        double center() const { return 0.5 * (lo + hi); }
        double width() const { return hi - lo; }
    };

    Sector sector_bounds(int index, int n_sectors);

    // Frequency-sampling sector beam: normalized sum of steering vectors at angles
    // spread uniformly over [lo, hi].
    arma::cx_vec sector_beam(int N, double lo, double hi);

    Codebook gen_sector(int N, int n_sectors);
    Codebook gen_steering(int N, const std::vector<double> &angles);

    // 1-based (tx, rx) sector pair used in burst m; tx varies fastest.
    struct BeamPair
    {
        int tx = 1;
        int rx = 1;
        bool operator==(const BeamPair &) const = default;
    };

    std::vector<BeamPair> pair_schedule(int M_tx, int M_rx);
    // Inverse map of the schedule: rx = floor((m-1)/M_tx)+1, tx = m-(rx-1)M_tx.
    BeamPair burst_to_pair(int m_star, int M_tx);
    int pair_to_burst(const BeamPair &pair, int M_tx);

    // Expands per-end sector codebooks into per-burst codebooks following pair_schedule.
    std::pair<Codebook, Codebook> schedule_codebooks(const Codebook &tx_sectors, const Codebook &rx_sectors);

    // CSV: one row per beam, entries as re,im pairs.
    void write_codebook_csv(std::ostream &out, const Codebook &cb);
    Codebook read_codebook_csv(std::istream &in, CodebookKind kind = CodebookKind::pseudorandom);
}

#endif
