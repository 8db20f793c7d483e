// SPDX-License-Identifier: Apache-2.0

#include "cia/channel.hpp"
#include "cia/harness.hpp"
#include "cia/training.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <numeric>
#include <sstream>

namespace cia
{
    namespace
    {
        std::string num(double x)
        {
            std::ostringstream s;
            s.precision(17);
            s << x;
            return s.str();
        }

        SelftestCheck near(const std::string &name, double got, double want, double rel)
        {
            const bool ok = std::abs(got - want) <= rel * std::abs(want);
            return {name, ok, "got " + num(got) + ", want " + num(want)};
        }

        FrameConfig small_frame()
        {
            FrameConfig cfg;
            cfg.M = 16;
            cfg.N_B = 256;
            cfg.eps_T_max = 256;
            return cfg;
        }
    }

    std::vector<SelftestCheck> run_selftest(SelftestMutation mutation)
    {
        std::vector<SelftestCheck> out;
        const FrameConfig full;

        out.push_back(near("q_inverse(0.01)", q_inverse(0.01), 2.32634787404084110, 1e-12));

        DetectionTheoryInputs th;
        th.mode = DetectMode::NT;
        if (mutation == SelftestMutation::gumbel_constant)
            th.gumbel = 0.5;
        out.push_back(near("nt_threshold_factor", threshold_factor(th), 4.25529621331651353, 1e-9));

        // Empirical NT false alarms on a reduced frame against a loose bound.
        {
            const FrameConfig cfg = small_frame();
            DetectionTheoryInputs in = th;
            in.cfg = cfg;
            const double eta = threshold_opt(in);
            const auto pss = gen_zc(default_zc_root, cfg.P);
            const int len = capture_length(cfg), trials = 1000;
            auto fa = parallel_map(trials, 1, [&](int t) {
                auto rng = derive_stream(7, "selftest-nt-fa", static_cast<std::uint64_t>(t)).engine();
                boost::random::normal_distribution<double> g(0.0, std::sqrt(0.5));
                arma::cx_vec y(len);
                for (auto &x : y)
                    x = {g(rng), g(rng)};
                return detect_nt(pss_correlate(y, pss), cfg, eta).decision == Hypothesis::H1 ? 1 : 0;
            });
            const double rate = std::accumulate(fa.begin(), fa.end(), 0.0) / trials;
            out.push_back({"nt_false_alarm_calibration", rate <= 0.05, "rate " + num(rate) + ", bound 0.05"});
        }

        out.push_back(near("kappa_5ppm", kappa(0, cfo_from_ppm(5.0, 28e9, full.T_s), full), 0.719492180711242671, 1e-12));
        out.push_back({"kappa_no_cfo_no_split", kappa(170, 0.0, full) == 1.0, "exact 1"});

        {
            const auto pss = gen_zc(default_zc_root, full.P);
            double worst = 0.0;
            for (int lag = 1; lag < full.P; ++lag)
            {
                cplx acc = 0.0;
                for (int k = 0; k < full.P; ++k)
                    acc += pss.time((k + lag) % full.P) * std::conj(pss.time(k));
                worst = std::max(worst, std::abs(acc));
            }
            out.push_back({"zc_autocorrelation", worst < 1e-9, "max sidelobe " + num(worst)});

            std::mt19937_64 rng(1);
            std::normal_distribution<double> g;
            arma::cx_vec y(2000);
            for (auto &x : y)
                x = {g(rng), g(rng)};
            const arma::cx_vec c = pss_correlate(y, pss);
            double err = 0.0;
            for (int n : {0, 511, 1024, 1872})
                err = std::max(err, std::abs(c(n) - pss_correlate_at(y, pss, n)));
            out.push_back({"fft_correlation", err < 1e-12, "max error " + num(err)});
        }

        // Grid consistency: index maps invert and each atom equals the per-burst gain of its angles.
        {
            const FrameConfig cfg = small_frame();
            const auto pss = gen_zc(default_zc_root, cfg.P);
            auto rng = derive_stream(7, "selftest-codebook", 0).engine();
            const auto tx = gen_pseudorandom(8, cfg.M, rng), rx = gen_pseudorandom(4, cfg.M, rng);
            Dictionaries dict = build_dictionaries(cfg, pss, tx, rx, 20, 16, 8);
            if (mutation == SelftestMutation::corrupt_dictionary)
                dict.angle_atoms.swap_cols(3, 40);
            double err = 0.0;
            bool maps = true;
            for (int k = 0; k < dict.n_angle_atoms(); ++k)
            {
                const AnglePair a = unmap_angle_index(k, dict.G_T);
                maps = maps && map_angle_index(a, dict.G_T) == k;
                const PathComponent path{cplx(1.0, 0.0), dict.t[a.k_tx], dict.r[a.k_rx], 0.0};
                for (int m = 0; m < cfg.M; ++m)
                    err = std::max(err, std::abs(dict.angle_atoms(m, k) - effective_gain(path, rx.beam(m), tx.beam(m), 0.0, m, cfg)));
            }
            out.push_back({"grid_consistency", maps && err < 1e-12, "max atom error " + num(err)});

            // Noiseless on-grid recovery through matching pursuit.
            const int kt = 11, kr = 2;
            ChannelRealization chan{{{cplx(0.3, 0.9), dict.t[kt], dict.r[kr], 0.0}}, 1.0};
            const auto cap = synth_rx(cfg, chan, tx, rx, {0, 0.004}, pss, rng, {false});
            const arma::cx_mat Y = rearrange(cap.y, 0, cfg);
            const auto g_hat = estimate_gain(Y, estimate_delay(Y, dict).q, dict);
            const auto mp = matching_pursuit(g_hat, dict, cfg.N_B);
            out.push_back({"mp_on_grid", mp.pair.k_tx == kt && mp.pair.k_rx == kr && std::abs(mp.eps_F - 0.004) < 1e-9,
                           "k_tx " + std::to_string(mp.pair.k_tx) + ", k_rx " + std::to_string(mp.pair.k_rx)});

            const LosParams xi{0.003, 0.4, -0.3, 1.5 * cfg.T_s, cplx(0.7, 0.2)};
            const FimResult f = fim(xi, cfg, tx, rx, pss, 1.0);
            const double asym = arma::norm(f.J - f.J.t(), "inf") / arma::norm(f.J, "inf");
            const arma::vec d = 1.0 / arma::sqrt(f.J.diag());
            arma::mat R;
            const bool pd = arma::chol(R, arma::diagmat(d) * f.J * arma::diagmat(d));
            out.push_back({"fim_symmetric_pd", !f.singular && asym < 1e-12 && pd,
                           "asymmetry " + num(asym)});
        }

        {
            const int N_B = 1024;
            arma::cx_vec tone(8);
            for (int m = 0; m < 8; ++m)
                tone(m) = std::polar(1.0, 0.0021 * N_B * m);
            out.push_back(near("cfo_tone", cfo_from_tone(tone, N_B), 0.0021, 1e-12));
        }

        {
            // Queue enumeration against the closed-form mean wait.
            double worst = 0.0;
            for (int n = 1; n <= 20; ++n)
                for (int k = 1; k <= 5; ++k)
                {
                    double s = 0.0;
                    for (int q = 0; q < n; ++q)
                        s += (q / k) * full.T_SS + (q % k + 1) * 1e-3;
                    worst = std::max(worst, std::abs(s / n / mean_csirs_wait(n, k, full.T_SS, 1e-3) - 1.0));
                }
            out.push_back({"latency_enumeration", worst < 1e-13, "max relative error " + num(worst)});
            SystemModelInputs in;
            in.K_R_override = 0;
            out.push_back(near("overhead_no_csirs", overhead(in, full), 0.8192, 1e-12));
            out.push_back(near("complexity_ratio_upa", complexity_ratio(full, 500, 128, 32), 981504.0 / 131072.0, 1e-14));
        }
        return out;
    }
}
