// SPDX-License-Identifier: Apache-2.0

#include "cia/waveform.hpp"
#include "cia/fft.hpp"

#include <cmath>
#include <numeric>

namespace cia
{
    PssSequence gen_zc(int root, int P)
    {
        if (P < 1)
            throw ConfigError("ZC length must be at least 1");
        if (root < 1 || root >= std::max(P, 2) || std::gcd(root, P) != 1)
            throw ConfigError("ZC root must be in [1, P) and coprime with P");

        PssSequence s;
        s.root = root;
        s.time.set_size(P);
        const long long odd = P % 2;
        for (long long n = 0; n < P; ++n)
        {
            // Reduce the quadratic phase index modulo 2P before scaling to keep precision.
            const long long idx = (static_cast<long long>(root) * n % (2LL * P)) * ((n + odd) % (2LL * P)) % (2LL * P);
            const double ph = -pi * static_cast<double>(idx) / P;
            s.time(n) = cplx(std::cos(ph), std::sin(ph));
        }
        s.freq = fft_unitary(s.time);
        return s;
    }

    PssSequence gen_msequence(int P, int cell_id2)
    {
        constexpr int L = 127;
        if (P < L)
            throw ConfigError("M-sequence PSS needs P >= 127");
        std::vector<int> x(L + 7, 0);
        const int init[7] = {0, 1, 1, 0, 1, 1, 1};
        for (int i = 0; i < 7; ++i)
            x[i] = init[i];
        for (int i = 0; i + 7 < static_cast<int>(x.size()); ++i)
            x[i + 7] = (x[i + 4] + x[i]) % 2;

        PssSequence s;
        s.root = cell_id2;
        s.time.ones(P);
        for (int n = 0; n < L; ++n)
            s.time(n) = 1.0 - 2.0 * x[(n + 43 * cell_id2) % L];
        s.freq = fft_unitary(s.time);
        return s;
    }

    BurstPlacement burst_placement(const FrameConfig &cfg)
    {
        BurstPlacement b;
        for (int m = 0; m < cfg.M; ++m)
        {
            const int base = m * cfg.N_B;
            b.cp_sets.emplace_back(base, base + cfg.N_CP - 1);
            b.pss_sets.emplace_back(base + cfg.N_CP, base + cfg.N() - 1);
        }
        return b;
    }

    arma::cx_vec assemble_stream(const FrameConfig &cfg, const PssSequence &pss)
    {
        arma::cx_vec s(static_cast<arma::uword>(cfg.M) * cfg.N_B, arma::fill::zeros);
        for (int m = 0; m < cfg.M; ++m)
        {
            const arma::uword base = static_cast<arma::uword>(m) * cfg.N_B;
            for (int i = 0; i < cfg.N_CP; ++i)
                s(base + i) = pss.time(i + cfg.P - cfg.N_CP);
            for (int p = 0; p < cfg.P; ++p)
                s(base + cfg.N_CP + p) = pss.time(p);
        }
        return s;
    }

    arma::cx_vec delay_response(double tau, const FrameConfig &cfg)
    {
        arma::cx_vec f(cfg.P);
        const double w = -2.0 * pi * tau / (cfg.P * cfg.T_s);
        for (int p = 0; p < cfg.P; ++p)
            f(p) = std::polar(1.0, w * p);
        return f;
    }

    arma::cx_vec delay_response_derivative(double tau, const FrameConfig &cfg)
    {
        arma::cx_vec f = delay_response(tau, cfg);
        const double w = -2.0 * pi / (cfg.P * cfg.T_s);
        for (int p = 0; p < cfg.P; ++p)
            f(p) *= cplx(0.0, w * p);
        return f;
    }

    arma::cx_vec pss_delay_atom(double tau, const FrameConfig &cfg, const PssSequence &pss)
    {
        return ifft_unitary(delay_response(tau, cfg) % pss.freq);
    }

    std::vector<double> delay_grid(int G_d, const FrameConfig &cfg)
    {
        if (G_d < 1)
            throw ConfigError("delay grid needs G_d >= 1");
        std::vector<double> d(G_d);
        const double step = cfg.N_c * cfg.T_s / G_d;
        for (int q = 0; q < G_d; ++q)
            d[q] = q * step;
        return d;
    }
}
