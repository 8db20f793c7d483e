// SPDX-License-Identifier: Apache-2.0

#include "cia/theory.hpp"
#include "cia/channel.hpp"
#include "cia/fft.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>

namespace cia
{
    double q_function(double x) { return 0.5 * boost::math::erfc(x / std::sqrt(2.0)); }

    double q_inverse(double p)
    {
        if (!(p > 0.0 && p < 1.0))
            throw ConfigError("Q^-1 needs 0 < p < 1");
        return std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
    }

    int gain_split_K(int eps_T, const FrameConfig &cfg)
    {
        if (eps_T >= cfg.N_B - cfg.P && eps_T < cfg.N_B)
            return cfg.N_B - eps_T;
        return 0;
    }

    namespace
    {
        // sin(n e/2) / sin(e/2), equal to n at e = 0 (mod 2 pi).
        double dirichlet(int n, double e)
        {
            const double s = std::sin(0.5 * e);
            if (std::abs(s) < 1e-12)
                return std::cos(0.5 * e * (n - 1)) >= 0 ? n : -n;
            return std::sin(0.5 * n * e) / s;
        }
    }

    double kappa(int eps_T, double eps_F, const FrameConfig &cfg)
    {
        const int K = gain_split_K(eps_T, cfg);
        const double a = dirichlet(K, eps_F);
        const double b = dirichlet(cfg.P - K, eps_F);
        return (a * a + b * b) / (static_cast<double>(cfg.P) * cfg.P);
    }

    void validate_theory_inputs(const DetectionTheoryInputs &in)
    {
        validate_config(in.cfg);
        if (!(in.p_fa_star > 0.0 && in.p_fa_star < 1.0))
            throw ConfigError("target false-alarm rate must satisfy 0 < P_FA < 1");
        if (!(in.snr >= 0.0))
            throw ConfigError("SNR must be non-negative");
        if (in.mode == DetectMode::NT && in.cfg.eps_T_max < 2)
            throw ConfigError("NT threshold needs eps_T_max >= 2");
    }

    double threshold_factor(const DetectionTheoryInputs &in)
    {
        validate_theory_inputs(in);
        if (in.mode == DetectMode::NT)
        {
            const double qe = q_inverse(1.0 / in.cfg.eps_T_max);
            return qe - in.gumbel * std::log(-std::log(1.0 - in.p_fa_star)) / qe;
        }
        if (in.mode == DetectMode::PT)
            return q_inverse(in.p_fa_star);
        throw ConfigError("no closed-form threshold for the DIA detector");
    }

    double threshold_opt(const DetectionTheoryInputs &in)
    {
        const double P = in.cfg.P, M = in.cfg.M, Nc = in.cfg.N_c;
        return in.noise_power * (Nc / P + std::sqrt(Nc / (M * P * P)) * threshold_factor(in));
    }

    double pmd_theory(const DetectionTheoryInputs &in)
    {
        const double P = in.cfg.P, M = in.cfg.M, Nc = in.cfg.N_c;
        const double xi = threshold_factor(in);
        const double ks = kappa(in.eps_T, in.eps_F, in.cfg) * in.snr;
        const double num = ks - std::sqrt(Nc / (M * P * P)) * xi;
        const double den = std::sqrt(2.0 * ks * ks / M + Nc / (P * P * M));
        return q_function(num / den);
    }

    // ----- Fisher information ----------------------------------------------------

    bool inverse_spd(const arma::mat &J, arma::mat &inv)
    {
        const arma::vec d = J.diag();
        if (arma::any(d <= 0.0) || !d.is_finite())
            return false;
        const arma::vec s = 1.0 / arma::sqrt(d);
        const arma::mat S = arma::diagmat(s) * J * arma::diagmat(s);
        if (arma::rcond(S) < 1e-14)
            return false;
        arma::mat Si;
        if (!arma::inv_sympd(Si, 0.5 * (S + S.t())))
            return false;
        inv = arma::diagmat(s) * Si * arma::diagmat(s);
        return true;
    }

    FimResult fim(const LosParams &xi, const FrameConfig &cfg, const Codebook &cb_tx, const Codebook &cb_rx,
                  const PssSequence &pss, double sigma_n2)
    {
        if (!(sigma_n2 > 0.0))
            throw ConfigError("FIM needs sigma_n^2 > 0");
        if (cb_tx.size() != cfg.M || cb_rx.size() != cfg.M)
            throw ConfigError("codebooks must hold M beams");

        const int M = cfg.M, P = cfg.P;
        const arma::cx_vec u = pss_delay_atom(xi.tau, cfg, pss);
        const arma::cx_vec ud = ifft_unitary(delay_response_derivative(xi.tau, cfg) % pss.freq);

        const ArrayGeometry gt{cb_tx.n_antennas()}, gr{cb_rx.n_antennas()};
        const arma::cx_vec A = cb_rx.beams.t() * steer(gr, xi.phi);
        const arma::cx_vec Ad = cb_rx.beams.t() * steer_derivative(gr, xi.phi);
        const arma::cx_vec B = (steer(gt, xi.theta).t() * cb_tx.beams).st();
        const arma::cx_vec Bd = (steer_derivative(gt, xi.theta).t() * cb_tx.beams).st();

        // Per-sample sums over the symbol; n = m N_B + p.
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        cplx t0 = 0.0, t1 = 0.0;
        for (int p = 0; p < P; ++p)
        {
            const double w = std::norm(u(p));
            s0 += w;
            s1 += p * w;
            s2 += static_cast<double>(p) * p * w;
            const cplx c = std::conj(u(p)) * ud(p);
            t0 += c;
            t1 += static_cast<double>(p) * c;
        }
        const double udn = arma::accu(arma::square(arma::abs(ud)));

        const cplx g = xi.g;
        const double g2 = std::norm(g);
        const cplx jj(0.0, 1.0);

        double ee = 0, et = 0, ep = 0, tt = 0, pp = 0, ab_sum = 0;
        cplx etau = 0, tp = 0, tb = 0, pb = 0;
        double cdq_b = 0;
        for (int m = 0; m < M; ++m)
        {
            const double off = static_cast<double>(m) * cfg.N_B;
            const double cdq = off * s0 + s1;
            const double cd2q = off * off * s0 + 2.0 * off * s1 + s2;
            const double a2 = std::norm(A(m)), b2 = std::norm(B(m));
            const double ab2 = a2 * b2;
            ee += ab2 * cd2q;
            et += cdq * a2 * std::imag(std::conj(B(m)) * Bd(m));
            ep += cdq * b2 * std::imag(std::conj(A(m)) * Ad(m));
            etau += ab2 * (-jj) * (off * t0 + t1);
            cdq_b += ab2 * cdq;
            tt += a2 * std::norm(Bd(m));
            pp += std::norm(Ad(m)) * b2;
            tp += std::conj(A(m) * Bd(m)) * Ad(m) * B(m);
            tb += a2 * std::conj(Bd(m)) * B(m);
            pb += b2 * std::conj(Ad(m)) * A(m);
            ab_sum += ab2;
        }

        arma::mat Phi(6, 6, arma::fill::zeros);
        enum { E = 0, T = 1, F = 2, D = 3, AL = 4, BE = 5 };
        Phi(E, E) = g2 * ee;
        Phi(E, T) = g2 * et;
        Phi(E, F) = g2 * ep;
        Phi(E, D) = g2 * std::real(etau);
        Phi(E, AL) = -g.imag() * cdq_b;
        Phi(E, BE) = g.real() * cdq_b;
        Phi(T, T) = P * g2 * tt;
        Phi(F, F) = P * g2 * pp;
        Phi(T, F) = P * g2 * std::real(tp);
        Phi(T, D) = g2 * std::real(t0 * tb);
        Phi(F, D) = g2 * std::real(t0 * pb);
        Phi(T, AL) = P * std::real(std::conj(g) * tb);
        Phi(T, BE) = P * std::real(jj * std::conj(g) * tb);
        Phi(F, AL) = P * std::real(std::conj(g) * pb);
        Phi(F, BE) = P * std::real(jj * std::conj(g) * pb);
        Phi(D, D) = g2 * ab_sum * udn;
        Phi(D, AL) = std::real(std::conj(g) * ab_sum * std::conj(t0));
        Phi(D, BE) = std::real(jj * std::conj(g) * ab_sum * std::conj(t0));
        Phi(AL, AL) = P * ab_sum;
        Phi(BE, BE) = P * ab_sum;
        Phi = arma::symmatu(Phi);

        FimResult r;
        r.Phi = Phi;
        r.J = (2.0 / sigma_n2) * Phi;
        arma::mat inv;
        if (!inverse_spd(r.J, inv))
        {
            r.singular = true;
            r.crlb_theta = r.crlb_phi = std::numeric_limits<double>::infinity();
            return r;
        }
        r.crlb_theta = inv(T, T);
        r.crlb_phi = inv(F, F);
        return r;
    }

    // ----- latency and overhead -------------------------------------------------

    int SystemModelInputs::K_R(const FrameConfig &cfg) const
    {
        if (K_R_override >= 0)
            return K_R_override;
        if (!(T_R > 0.0))
            throw ConfigError("CSI-RS period T_R must be positive");
        return static_cast<int>(std::floor((cfg.T_SS - cfg.M * cfg.T_B()) / T_R));
    }

    double mean_csirs_wait(int N_UE, int K_R, double T_SS, double T_R)
    {
        if (N_UE < 1)
            throw ConfigError("N_UE must be at least 1");
        if (K_R < 1)
            throw ConfigError("CSI-RS training needs K_R >= 1");
        const int K_F = (N_UE - 1) / K_R;
        const int K_res = N_UE - K_F * K_R;
        double acc = 0.0;
        for (int k = 1; k <= K_F; ++k)
            for (int q = 1; q <= K_R; ++q)
                acc += (k - 1) * T_SS + q * T_R;
        for (int q = 1; q <= K_res; ++q)
            acc += K_F * T_SS + q * T_R;
        return acc / N_UE;
    }

    double latency(const SystemModelInputs &in, const FrameConfig &cfg)
    {
        if (!(in.P_MD >= 0.0 && in.P_MD < 1.0))
            throw ConfigError("latency diverges unless 0 <= P_MD < 1");
        if (in.N_train < 0)
            throw ConfigError("N_train must be non-negative");
        double t = cfg.T_SS * in.P_MD / (1.0 - in.P_MD);
        if (in.N_train > 0)
            t += mean_csirs_wait(in.N_UE, in.K_R(cfg), cfg.T_SS, in.T_R) * in.N_train;
        return t;
    }

    double overhead(const SystemModelInputs &in, const FrameConfig &cfg)
    {
        const double num = cfg.M * in.B_IA * cfg.T_B() + in.K_R(cfg) * in.B_tot * in.T_r;
        return 100.0 * num / (in.B_tot * cfg.T_SS);
    }

    // ----- complexity ---------------------------------------------------------

    ComplexityCounts complexity_counts(const FrameConfig &cfg, int G_d, int G_T, int G_R)
    {
        if (G_d < 1 || G_T < 1 || G_R < 1)
            throw ConfigError("dictionary sizes must be positive");
        using u64 = std::uint64_t;
        ComplexityCounts c;
        c.pss_corr = u64(cfg.P) * u64(cfg.N_B);
        c.detect = u64(cfg.N_B);
        c.delay_est = u64(cfg.P) * u64(G_d) + u64(cfg.P) * u64(cfg.M);
        c.aoa_aod = u64(cfg.M) * u64(G_T) * u64(G_R);
        c.cfo = 2 * u64(cfg.M) * u64(G_T) * u64(G_R);
        return c;
    }

    double complexity_ratio(const FrameConfig &cfg, int G_d, int G_T, int G_R)
    {
        const auto c = complexity_counts(cfg, G_d, G_T, G_R);
        const double num = double(c.pss_corr) + double(cfg.P) * G_d + double(c.aoa_aod + c.cfo);
        return num / double(c.pss_corr);
    }
}
