// SPDX-License-Identifier: Apache-2.0

#include "cia/channel.hpp"
#include "cia/fft.hpp"

#include <algorithm>
#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <numeric>

namespace cia
{
    arma::cx_vec steer(const ArrayGeometry &geom, double angle)
    {
        const double s = pi * std::sin(angle);
        arma::cx_vec a(geom.N);
        for (int k = 0; k < geom.N; ++k)
            a(k) = std::polar(1.0, s * k);
        return a;
    }

    arma::cx_vec steer_derivative(const ArrayGeometry &geom, double angle)
    {
        const double s = pi * std::sin(angle);
        const double c = pi * std::cos(angle);
        arma::cx_vec a(geom.N);
        for (int k = 0; k < geom.N; ++k)
            a(k) = cplx(0.0, c * k) * std::polar(1.0, s * k);
        return a;
    }

    arma::cx_vec apply_cfo_matrix(double eps_F, int P)
    {
        arma::cx_vec q(P);
        for (int p = 0; p < P; ++p)
            q(p) = std::polar(1.0, eps_F * p);
        return q;
    }

    ChannelRealization draw_channel(const ChannelDrawSpec &spec, const FrameConfig &cfg, double sigma_g2, double noise_power,
                                    std::mt19937_64 &rng)
    {
        if (spec.L < 1)
            throw ConfigError("channel needs at least one path (L >= 1)");
        if (!spec.relative_power_db.empty() && static_cast<int>(spec.relative_power_db.size()) != spec.L)
            throw ConfigError("relative_power_db must list one value per path");
        if (spec.integer_delays && spec.L > cfg.N_c)
            throw ConfigError("distinct integer taps need L <= N_c");

        std::vector<double> pw(spec.L, 1.0);
        for (int l = 0; l < spec.L && !spec.relative_power_db.empty(); ++l)
            pw[l] = std::pow(10.0, spec.relative_power_db[l] / 10.0);
        const double total = std::accumulate(pw.begin(), pw.end(), 0.0);

        std::uniform_real_distribution<double> uni(0.0, 1.0);
        std::vector<int> taps(cfg.N_c);
        std::iota(taps.begin(), taps.end(), 0);
        if (spec.integer_delays)
            for (int i = 0; i < spec.L; ++i) // partial Fisher-Yates
                std::swap(taps[i], taps[i + static_cast<int>(uni(rng) * (cfg.N_c - i))]);

        ChannelRealization chan;
        chan.noise_power = noise_power;
        for (int l = 0; l < spec.L; ++l)
        {
            PathComponent p;
            p.gain = std::polar(std::sqrt(sigma_g2 * pw[l] / total), 2.0 * pi * uni(rng));
            p.aod = spec.angle_limit * (2.0 * uni(rng) - 1.0);
            p.aoa = spec.angle_limit * (2.0 * uni(rng) - 1.0);
            p.delay = spec.integer_delays ? taps[l] * cfg.T_s : uni(rng) * cfg.N_c * cfg.T_s;
            chan.paths.push_back(p);
        }
        return chan;
    }

    cplx effective_gain(const PathComponent &path, const arma::cx_vec &w, const arma::cx_vec &v, double eps_F, int m,
                        const FrameConfig &cfg)
    {
        const cplx A = arma::cdot(w, steer({static_cast<int>(w.n_elem)}, path.aoa));
        const cplx B = arma::cdot(steer({static_cast<int>(v.n_elem)}, path.aod), v);
        return std::polar(1.0, eps_F * cfg.N_B * m) * path.gain * A * B;
    }

    RxCapture synth_rx(const FrameConfig &cfg, const ChannelRealization &chan, const Codebook &cb_tx, const Codebook &cb_rx,
                       const SyncState &sync, const PssSequence &pss, std::mt19937_64 &rng, const SynthOptions &opts)
    {
        validate_config(cfg);
        validate_channel(chan, cfg);
        validate_sync(sync, cfg);
        if (cb_tx.size() != cfg.M || cb_rx.size() != cfg.M)
            throw ConfigError("codebooks must hold M beams");
        if (pss.length() != cfg.P)
            throw ConfigError("PSS length must equal P");

        const int len = capture_length(cfg);
        const int N = cfg.N();
        RxCapture cap;
        cap.sync = sync;
        cap.M = cfg.M;
        cap.y.zeros(len);

        // Array responses per path, combiner responses per beam.
        const int L = static_cast<int>(chan.paths.size());
        arma::cx_mat A(cfg.M, L), B(cfg.M, L);
        std::vector<arma::cx_vec> atoms(L);
        std::vector<int> d_int(L);
        for (int l = 0; l < L; ++l)
        {
            const auto &p = chan.paths[l];
            const arma::cx_vec a_rx = steer({cb_rx.n_antennas()}, p.aoa);
            const arma::cx_vec a_tx = steer({cb_tx.n_antennas()}, p.aod);
            A.col(l) = cb_rx.beams.t() * a_rx;
            B.col(l) = (a_tx.t() * cb_tx.beams).st();
            atoms[l] = pss_delay_atom(p.delay, cfg, pss);
            d_int[l] = static_cast<int>(std::floor(p.delay / cfg.T_s + 1e-9));
        }

        for (int m = 0; m < cfg.M; ++m)
        {
            const int base = m * cfg.N_B + sync.eps_T;
            for (int l = 0; l < L; ++l)
            {
                const cplx gB = chan.paths[l].gain * B(m, l);
                const arma::cx_vec &u = atoms[l];
                for (int i = d_int[l]; i < N + d_int[l]; ++i)
                {
                    const int n = base + i;
                    const int idx = ((i - cfg.N_CP) % cfg.P + cfg.P) % cfg.P;
                    cap.y(n) += gB * A(rx_beam_index(n, cfg), l) * u(idx);
                }
            }
        }

        // CFO and optional phase noise act on the whole received signal.
        double psi = 0.0;
        std::normal_distribution<double> pn(0.0, std::sqrt(std::max(opts.phase_noise_var, 0.0)));
        for (int n = 0; n < len; ++n)
        {
            if (opts.phase_noise_var > 0.0)
                psi += pn(rng);
            cap.y(n) *= std::polar(1.0, sync.eps_F * n + psi);
        }

        if (opts.add_noise && chan.noise_power > 0.0)
        {
            boost::random::normal_distribution<double> gauss(0.0, std::sqrt(chan.noise_power / 2.0));
            double *raw = reinterpret_cast<double *>(cap.y.memptr());
            for (int i = 0; i < 2 * len; ++i)
                raw[i] += gauss(rng);
        }
        return cap;
    }

    arma::cx_vec delay_taps(double tau, const FrameConfig &cfg)
    {
        arma::cx_vec h;
        fft_backward_raw(delay_response(tau, cfg), h);
        return h / static_cast<double>(cfg.P);
    }

    double beamformed_gain(const ChannelRealization &chan, const arma::cx_vec &w, const arma::cx_vec &v, const FrameConfig &cfg)
    {
        arma::cx_vec tot(cfg.P, arma::fill::zeros);
        for (const auto &p : chan.paths)
        {
            const cplx A = arma::cdot(w, steer({static_cast<int>(w.n_elem)}, p.aoa));
            const cplx B = arma::cdot(steer({static_cast<int>(v.n_elem)}, p.aod), v);
            tot += (p.gain * A * B) * delay_taps(p.delay, cfg);
        }
        return arma::accu(arma::square(arma::abs(tot)));
    }

    double post_bf_snr_db(const ChannelRealization &chan, const arma::cx_vec &w, const arma::cx_vec &v, const FrameConfig &cfg,
                          double P_out, double B_tot, double noise_psd)
    {
        return 10.0 * std::log10(P_out * beamformed_gain(chan, w, v, cfg) / (noise_psd * B_tot));
    }
}
