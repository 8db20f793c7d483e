// SPDX-License-Identifier: Apache-2.0

#include "cia/detection.hpp"
#include "cia/fft.hpp"

#include <algorithm>
#include <cmath>

namespace cia
{
    const char *to_string(DetectMode mode)
    {
        switch (mode)
        {
        case DetectMode::PT:
            return "PT";
        case DetectMode::NT:
            return "NT";
        case DetectMode::DIA:
            return "DIA";
        }
        return "?";
    }

    arma::cx_vec pss_correlate(const arma::cx_vec &y, const PssSequence &pss)
    {
        const int P = pss.length();
        const int len = static_cast<int>(y.n_elem);
        if (len < P)
            throw ConfigError("correlation input shorter than the PSS");
        const int n_out = len - P + 1;

        // Overlap-save with a fixed block so results do not depend on the capture length.
        int nfft = 1;
        while (nfft < 8 * P)
            nfft <<= 1;
        const int step = nfft - P + 1;

        arma::cx_vec h(nfft, arma::fill::zeros), H;
        for (int k = 0; k < P; ++k)
            h(k) = pss.time(k);
        fft_forward_raw(h, H);
        // Circular cross-correlation: IFFT(Y . conj(S)).
        H = arma::conj(H);

        arma::cx_vec out(n_out);
        arma::cx_vec blk(nfft), Y, r;
        const double scale = 1.0 / (static_cast<double>(P) * nfft);
        for (int start = 0; start < n_out; start += step)
        {
            blk.zeros();
            const int take = std::min(nfft, len - start);
            blk.head(take) = y.subvec(start, start + take - 1);
            fft_forward_raw(blk, Y);
            Y %= H;
            fft_backward_raw(Y, r);
            const int cnt = std::min(step, n_out - start);
            out.subvec(start, start + cnt - 1) = r.head(cnt) * scale;
        }
        return out;
    }

    cplx pss_correlate_at(const arma::cx_vec &y, const PssSequence &pss, int n)
    {
        const int P = pss.length();
        cplx acc = 0.0;
        for (int k = 0; k < P; ++k)
            acc += y(n + k) * std::conj(pss.time(k));
        return acc / static_cast<double>(P);
    }

    double window_energy(const arma::cx_vec &corr, const FrameConfig &cfg, int offset)
    {
        double acc = 0.0;
        for (int m = 0; m < cfg.M; ++m)
            for (int k = 0; k < cfg.N_c; ++k)
                acc += std::norm(corr(cfg.N_CP + offset + k + m * cfg.N_B));
        return acc / cfg.M;
    }

    DetectionResult detect_pt(const arma::cx_vec &corr, const FrameConfig &cfg, double eta_PT)
    {
        DetectionResult r;
        r.mode = DetectMode::PT;
        r.statistic = window_energy(corr, cfg, 0);
        r.threshold = eta_PT;
        r.decision = r.statistic >= eta_PT ? Hypothesis::H1 : Hypothesis::H0;
        return r;
    }

    std::vector<double> nt_energy_profile(const arma::cx_vec &corr, const FrameConfig &cfg)
    {
        const int span = cfg.eps_T_max + cfg.N_c - 1;
        const int need = cfg.N_CP + span + (cfg.M - 1) * cfg.N_B;
        if (static_cast<int>(corr.n_elem) < need)
            throw ConfigError("correlation output too short for the timing window");

        // Burst-summed power per lag, then a length-N_c running sum.
        std::vector<double> s(span, 0.0);
        for (int m = 0; m < cfg.M; ++m)
        {
            const cplx *c = corr.memptr() + cfg.N_CP + m * cfg.N_B;
            for (int j = 0; j < span; ++j)
                s[j] += std::norm(c[j]);
        }
        std::vector<double> e(cfg.eps_T_max, 0.0);
        for (int n = 0; n < cfg.eps_T_max; ++n)
        {
            double acc = 0.0;
            for (int k = 0; k < cfg.N_c; ++k)
                acc += s[n + k];
            e[n] = acc / cfg.M;
        }
        return e;
    }

    DetectionResult detect_nt(const arma::cx_vec &corr, const FrameConfig &cfg, double eta_NT)
    {
        const auto e = nt_energy_profile(corr, cfg);
        const auto it = std::max_element(e.begin(), e.end()); // first maximum
        DetectionResult r;
        r.mode = DetectMode::NT;
        r.statistic = *it;
        r.threshold = eta_NT;
        r.decision = r.statistic >= eta_NT ? Hypothesis::H1 : Hypothesis::H0;
        if (r.decision == Hypothesis::H1)
            r.eps_T_hat = static_cast<int>(it - e.begin());
        return r;
    }

    DetectionResult detect_dia(const arma::cx_vec &corr, const FrameConfig &cfg, double eta_DIA)
    {
        const int first = cfg.N_CP;
        const int last = std::min<int>(corr.n_elem, cfg.N_CP + cfg.M * cfg.N_B);
        double best = -1.0;
        int best_n = first;
        for (int n = first; n < last; ++n)
        {
            const double v = std::norm(corr(n));
            if (v > best)
            {
                best = v;
                best_n = n;
            }
        }
        DetectionResult r;
        r.mode = DetectMode::DIA;
        r.statistic = best;
        r.threshold = eta_DIA;
        r.decision = best >= eta_DIA ? Hypothesis::H1 : Hypothesis::H0;
        r.m_star = (best_n - cfg.N_CP) / cfg.N_B + 1;
        return r;
    }

    double calibrate_dia_threshold(const std::function<arma::cx_vec(int)> &noise_capture, const PssSequence &pss,
                                   const FrameConfig &cfg, double p_fa, int trials)
    {
        if (!(p_fa > 0.0 && p_fa < 1.0) || trials < 1)
            throw ConfigError("calibration needs 0 < p_fa < 1 and trials >= 1");
        std::vector<double> stats(trials);
        for (int t = 0; t < trials; ++t)
            stats[t] = detect_dia(pss_correlate(noise_capture(t), pss), cfg, 0.0).statistic;
        std::sort(stats.begin(), stats.end());
        const int idx = std::clamp(static_cast<int>(std::ceil((1.0 - p_fa) * trials)) - 1, 0, trials - 1);
        return stats[idx];
    }
}
