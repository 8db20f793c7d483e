// SPDX-License-Identifier: Apache-2.0

#include "cia/codebook.hpp"
#include "cia/channel.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace cia
{
    Codebook gen_pseudorandom(int N, int M, std::mt19937_64 &rng)
    {
        if (N < 1 || M < 1)
            throw ConfigError("codebook needs N >= 1 and M >= 1");
        static const cplx alphabet[4] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
        const double scale = 1.0 / std::sqrt(static_cast<double>(N));
        Codebook cb;
        cb.kind = CodebookKind::pseudorandom;
        cb.beams.set_size(N, M);
        for (int m = 0; m < M; ++m)
            for (int n = 0; n < N; ++n)
                cb.beams(n, m) = alphabet[rng() >> 62] * scale;
        return cb;
    }

    Sector sector_bounds(int index, int n_sectors)
    {
        if (n_sectors < 1 || index < 0 || index >= n_sectors)
            throw ConfigError("sector index out of range");
        const double w = pi / n_sectors;
        return Sector{-pi / 2 + index * w, -pi / 2 + (index + 1) * w};
    }

    arma::cx_vec sector_beam(int N, double lo, double hi)
    {
        // Sample spacing well below the array's angular resolution.
        const ArrayGeometry geom{N};
        const int n_samples = std::max(1, static_cast<int>(std::ceil((hi - lo) / (0.25 * pi / N))));
        arma::cx_vec w(N, arma::fill::zeros);
        for (int i = 0; i < n_samples; ++i)
            w += steer(geom, lo + (i + 0.5) * (hi - lo) / n_samples);
        return w / arma::norm(w);
    }

    Codebook gen_sector(int N, int n_sectors)
    {
        Codebook cb;
        cb.kind = CodebookKind::sector;
        cb.beams.set_size(N, n_sectors);
        for (int s = 0; s < n_sectors; ++s)
        {
            const Sector sec = sector_bounds(s, n_sectors);
            cb.beams.col(s) = sector_beam(N, sec.lo, sec.hi);
        }
        return cb;
    }

    Codebook gen_steering(int N, const std::vector<double> &angles)
    {
        const ArrayGeometry geom{N};
        Codebook cb;
        cb.kind = CodebookKind::steering;
        cb.beams.set_size(N, angles.size());
        for (std::size_t i = 0; i < angles.size(); ++i)
            cb.beams.col(i) = steer(geom, angles[i]) / std::sqrt(static_cast<double>(N));
        return cb;
    }

    std::vector<BeamPair> pair_schedule(int M_tx, int M_rx)
    {
        if (M_tx < 1 || M_rx < 1)
            throw ConfigError("schedule needs M_tx >= 1 and M_rx >= 1");
        std::vector<BeamPair> s;
        s.reserve(static_cast<std::size_t>(M_tx) * M_rx);
        for (int r = 1; r <= M_rx; ++r)
            for (int t = 1; t <= M_tx; ++t)
                s.push_back({t, r});
        return s;
    }

    BeamPair burst_to_pair(int m_star, int M_tx)
    {
        if (m_star < 1 || M_tx < 1)
            throw ConfigError("burst index is 1-based and M_tx >= 1");
        const int rx = (m_star - 1) / M_tx + 1;
        return {m_star - (rx - 1) * M_tx, rx};
    }

    int pair_to_burst(const BeamPair &pair, int M_tx) { return (pair.rx - 1) * M_tx + pair.tx; }

    std::pair<Codebook, Codebook> schedule_codebooks(const Codebook &tx_sectors, const Codebook &rx_sectors)
    {
        const auto sched = pair_schedule(tx_sectors.size(), rx_sectors.size());
        Codebook tx{tx_sectors.kind, arma::cx_mat(tx_sectors.n_antennas(), sched.size())};
        Codebook rx{rx_sectors.kind, arma::cx_mat(rx_sectors.n_antennas(), sched.size())};
        for (std::size_t m = 0; m < sched.size(); ++m)
        {
            tx.beams.col(m) = tx_sectors.beams.col(sched[m].tx - 1);
            rx.beams.col(m) = rx_sectors.beams.col(sched[m].rx - 1);
        }
        return {tx, rx};
    }

    void write_codebook_csv(std::ostream &out, const Codebook &cb)
    {
        for (int m = 0; m < cb.size(); ++m)
        {
            for (int n = 0; n < cb.n_antennas(); ++n)
            {
                if (n > 0)
                    out << ',';
                out << format_double(cb.beams(n, m).real()) << ',' << format_double(cb.beams(n, m).imag());
            }
            out << '\n';
        }
    }

    Codebook read_codebook_csv(std::istream &in, CodebookKind kind)
    {
        std::vector<std::vector<cplx>> rows;
        std::string line;
        while (std::getline(in, line))
        {
            if (line.empty() || line == "\r")
                continue;
            std::vector<double> vals;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
                vals.push_back(parse_double("codebook", cell));
            if (vals.size() % 2 != 0)
                throw ConfigError("codebook row " + std::to_string(rows.size() + 1) + " has an odd number of values");
            std::vector<cplx> row;
            for (std::size_t i = 0; i < vals.size(); i += 2)
                row.emplace_back(vals[i], vals[i + 1]);
            if (!rows.empty() && row.size() != rows.front().size())
                throw ConfigError("codebook rows differ in length");
            rows.push_back(std::move(row));
        }
        if (rows.empty())
            throw ConfigError("empty codebook");
        Codebook cb;
        cb.kind = kind;
        cb.beams.set_size(rows.front().size(), rows.size());
        for (std::size_t m = 0; m < rows.size(); ++m)
            for (std::size_t n = 0; n < rows[m].size(); ++n)
                cb.beams(n, m) = rows[m][n];
        return cb;
    }
}
