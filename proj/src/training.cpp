// SPDX-License-Identifier: Apache-2.0

#include "cia/training.hpp"
#include "cia/fft.hpp"

#include <boost/math/tools/minima.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cia
{
    std::vector<double> angle_grid(int G)
    {
        if (G < 1)
            throw ConfigError("angle grid needs G >= 1");
        std::vector<double> g(G);
        for (int k = 0; k < G; ++k)
            g[k] = -pi / 2 + (k + 0.5) * pi / G;
        return g;
    }

    Dictionaries build_dictionaries(const FrameConfig &cfg, const PssSequence &pss, const Codebook &cb_tx, const Codebook &cb_rx,
                                    int G_d, int G_T, int G_R)
    {
        if (G_d < 1 || G_T < 1 || G_R < 1)
            throw ConfigError("dictionary sizes must be positive");
        if (cb_tx.size() != cfg.M || cb_rx.size() != cfg.M)
            throw ConfigError("codebooks must hold M beams");

        Dictionaries dict;
        dict.G_d = G_d;
        dict.G_T = G_T;
        dict.G_R = G_R;
        dict.d = delay_grid(G_d, cfg);
        dict.r = angle_grid(G_R);
        dict.t = angle_grid(G_T);

        dict.delay_atoms.set_size(cfg.P, G_d);
        for (int q = 0; q < G_d; ++q)
            dict.delay_atoms.col(q) = pss_delay_atom(dict.d[q], cfg, pss);

        // Wr(m, k_rx) = w_m^H a_rx(r), Vt(m, k_tx) = a_tx(t)^H v_m
        arma::cx_mat Ar(cb_rx.n_antennas(), G_R), At(cb_tx.n_antennas(), G_T);
        for (int k = 0; k < G_R; ++k)
            Ar.col(k) = steer({cb_rx.n_antennas()}, dict.r[k]);
        for (int k = 0; k < G_T; ++k)
            At.col(k) = steer({cb_tx.n_antennas()}, dict.t[k]);
        const arma::cx_mat Wr = cb_rx.beams.t() * Ar;
        const arma::cx_mat Vt = (At.t() * cb_tx.beams).st();

        dict.angle_atoms.set_size(cfg.M, G_T * G_R);
        for (int kr = 0; kr < G_R; ++kr)
            for (int kt = 0; kt < G_T; ++kt)
                dict.angle_atoms.col(kr * G_T + kt) = Wr.col(kr) % Vt.col(kt);
        return dict;
    }

    arma::cx_mat rearrange(const arma::cx_vec &y, int eps_T_hat, const FrameConfig &cfg)
    {
        const long long last = static_cast<long long>(eps_T_hat) + cfg.N_CP + (cfg.P - 1) + static_cast<long long>(cfg.M - 1) * cfg.N_B;
        if (eps_T_hat < 0 || last >= static_cast<long long>(y.n_elem))
            throw ConfigError("capture too short for the requested timing offset");
        arma::cx_mat Y(cfg.P, cfg.M);
        for (int m = 0; m < cfg.M; ++m)
            Y.col(m) = y.subvec(eps_T_hat + cfg.N_CP + m * cfg.N_B, eps_T_hat + cfg.N_CP + m * cfg.N_B + cfg.P - 1);
        return Y;
    }

    DelayEstimate estimate_delay(const arma::cx_mat &Y, const Dictionaries &dict, DelayRule rule)
    {
        arma::vec score;
        if (rule == DelayRule::burst_energy)
            score = arma::sum(arma::square(arma::abs(dict.delay_atoms.t() * Y)), 1);
        else
            score = arma::abs(dict.delay_atoms.t() * arma::cx_vec(arma::mean(Y, 1)));
        DelayEstimate best;
        double best_score = -1.0;
        for (int q = 0; q < dict.G_d; ++q)
        {
            const double nrm = arma::accu(arma::square(arma::abs(dict.delay_atoms.col(q))));
            const double s = score(q) / nrm;
            if (s > best_score)
            {
                best_score = s;
                best.q = q;
            }
        }
        best.tau = dict.d[best.q];
        return best;
    }

    arma::cx_vec estimate_gain(const arma::cx_mat &Y, int q, const Dictionaries &dict)
    {
        const arma::cx_vec p = dict.delay_atoms.col(q);
        const double nrm = arma::accu(arma::square(arma::abs(p)));
        return (p.t() * Y).st() / nrm;
    }

    double cfo_from_tone(const arma::cx_vec &tone, int N_B)
    {
        const arma::uword M = tone.n_elem;
        if (M < 2)
            throw ConfigError("CFO tone estimate needs at least two bursts");
        cplx acc = 0.0;
        for (arma::uword m = 0; m + 1 < M; ++m)
            acc += std::conj(tone(m)) * tone(m + 1);
        if (acc == cplx(0.0, 0.0))
        {
            if (arma::all(arma::abs(tone) == 0.0))
                throw std::domain_error("CFO tone estimate of an all-zero sequence");
            return 0.0;
        }
        acc /= static_cast<double>(M - 1);
        double a = std::arg(acc);
        if (a <= -pi)
            a += 2.0 * pi;
        return a / N_B;
    }

    namespace
    {
        double norm_factor(const arma::cx_vec &atom, MpNorm norm)
        {
            const double n2 = arma::accu(arma::square(arma::abs(atom)));
            return norm == MpNorm::atom_norm ? std::sqrt(n2) : n2;
        }

        // |sum_m e^{-j eps N_B m} conj(a_m) g_m|
        double rotated_ip(const arma::cx_vec &g_hat, const cplx *a, double eps_F, int N_B)
        {
            const cplx step = std::polar(1.0, -eps_F * N_B);
            cplx rot = 1.0, acc = 0.0;
            for (arma::uword m = 0; m < g_hat.n_elem; ++m)
            {
                acc += rot * std::conj(a[m]) * g_hat(m);
                rot *= step;
            }
            return std::abs(acc);
        }
    }

    double mp_score(const arma::cx_vec &g_hat, const Dictionaries &dict, int k, double eps_F, int N_B, MpNorm norm)
    {
        const arma::cx_vec a = dict.angle_atoms.col(k);
        return rotated_ip(g_hat, a.memptr(), eps_F, N_B) / norm_factor(a, norm);
    }

    MpResult matching_pursuit(const arma::cx_vec &g_hat, const Dictionaries &dict, int N_B, MpNorm norm, MpCfo cfo)
    {
        if (g_hat.n_elem != dict.angle_atoms.n_rows)
            throw ConfigError("gain vector length must equal M");
        const int K = dict.n_angle_atoms();
        const arma::uword M = g_hat.n_elem;
        int Z = 1;
        while (Z < 4 * static_cast<int>(M))
            Z <<= 1;

        MpResult best;
        best.score = -1.0;
        std::vector<double> coarse(static_cast<std::size_t>(K), -1.0), coarse_w(static_cast<std::size_t>(K), 0.0);
        arma::cx_vec tone(M), padded(Z, arma::fill::zeros), spec;
        for (int k = 0; k < K; ++k)
        {
            const cplx *a = dict.angle_atoms.colptr(k);
            double nrm2 = 0.0;
            for (arma::uword m = 0; m < M; ++m)
            {
                tone(m) = std::conj(a[m]) * g_hat(m);
                nrm2 += std::norm(a[m]);
            }
            if (nrm2 == 0.0)
                continue;
            const double nf = norm == MpNorm::atom_norm ? std::sqrt(nrm2) : nrm2;

            double omega = 0.0, mag = 0.0;
            if (cfo == MpCfo::periodogram)
            {
                padded.head(M) = tone;
                fft_forward_raw(padded, spec);
                const arma::uword b = arma::abs(spec).index_max();
                omega = 2.0 * pi * static_cast<double>(b) / Z;
                mag = std::abs(spec(b));
            }
            else
            {
                if (cfo == MpCfo::tone)
                {
                    cplx acc = 0.0;
                    for (arma::uword m = 0; m + 1 < M; ++m)
                        acc += std::conj(tone(m)) * tone(m + 1);
                    omega = acc == cplx(0.0, 0.0) ? 0.0 : std::arg(acc);
                }
                mag = rotated_ip(g_hat, a, omega / N_B, N_B);
            }
            const double s = mag / nf;
            coarse[static_cast<std::size_t>(k)] = s;
            coarse_w[static_cast<std::size_t>(k)] = omega;
            if (s > best.score)
            {
                best.score = s;
                best.k = k;
                best.eps_F = omega / N_B;
            }
        }

        if (cfo == MpCfo::periodogram && best.score >= 0.0)
        {
            // A bin-limited peak can lose up to the scalloping factor, so every atom
            // within that margin of the leader is polished before the final choice.
            const double floor = 0.8 * best.score, half = 2.0 * pi / Z;
            for (int k = 0; k < K; ++k)
            {
                if (coarse[static_cast<std::size_t>(k)] < floor)
                    continue;
                const cplx *a = dict.angle_atoms.colptr(k);
                const double nf = norm_factor(dict.angle_atoms.col(k), norm);
                const double w0 = coarse_w[static_cast<std::size_t>(k)];
                auto neg = [&](double w) { return -rotated_ip(g_hat, a, w / N_B, N_B); };
                const auto [w, f] = boost::math::tools::brent_find_minima(neg, w0 - half, w0 + half, 40);
                if (-f / nf > best.score)
                {
                    best.score = -f / nf;
                    best.k = k;
                    best.eps_F = w / N_B;
                }
            }
        }

        best.pair = unmap_angle_index(best.k, dict.G_T);
        best.theta = dict.t[best.pair.k_tx];
        best.phi = dict.r[best.pair.k_rx];
        // Report the CFO in (-pi/N_B, pi/N_B].
        double w = std::remainder(best.eps_F * N_B, 2.0 * pi);
        if (w <= -pi)
            w += 2.0 * pi;
        best.eps_F = w / N_B;
        return best;
    }

    // ----- single-path model ----------------------------------------------------

    LosModel::LosModel(const FrameConfig &cfg, const PssSequence &pss, const Codebook &cb_tx, const Codebook &cb_rx)
        : cfg_(validate_config(cfg)), pss_(pss), tx_(cb_tx), rx_(cb_rx)
    {
        if (cb_tx.size() != cfg.M || cb_rx.size() != cfg.M)
            throw ConfigError("codebooks must hold M beams");
        if (pss.length() != cfg.P)
            throw ConfigError("PSS length must equal P");
    }

    arma::cx_vec LosModel::unit_response(const LosParams &xi, arma::cx_vec *d_eps, arma::cx_vec *d_theta, arma::cx_vec *d_phi,
                                         arma::cx_vec *d_tau) const
    {
        const int M = cfg_.M, P = cfg_.P;
        const ArrayGeometry gt{tx_.n_antennas()}, gr{rx_.n_antennas()};
        const arma::cx_vec u = pss_delay_atom(xi.tau, cfg_, pss_);
        const arma::cx_vec A = rx_.beams.t() * steer(gr, xi.phi);
        const arma::cx_vec B = (steer(gt, xi.theta).t() * tx_.beams).st();
        arma::cx_vec ud, Ad, Bd;
        if (d_tau)
            ud = ifft_unitary(delay_response_derivative(xi.tau, cfg_) % pss_.freq);
        if (d_phi)
            Ad = rx_.beams.t() * steer_derivative(gr, xi.phi);
        if (d_theta)
            Bd = (steer_derivative(gt, xi.theta).t() * tx_.beams).st();

        const arma::cx_vec q = apply_cfo_matrix(xi.eps_F, P);
        arma::cx_vec x(M * P);
        if (d_eps)
            d_eps->set_size(M * P);
        if (d_theta)
            d_theta->set_size(M * P);
        if (d_phi)
            d_phi->set_size(M * P);
        if (d_tau)
            d_tau->set_size(M * P);

        for (int m = 0; m < M; ++m)
        {
            const double off = static_cast<double>(m) * cfg_.N_B;
            const cplx burst = std::polar(1.0, xi.eps_F * off);
            const cplx ab = A(m) * B(m) * burst;
            for (int p = 0; p < P; ++p)
            {
                const int i = m * P + p;
                const cplx eu = q(p) * u(p);
                x(i) = ab * eu;
                if (d_eps)
                    (*d_eps)(i) = cplx(0.0, off + p) * x(i);
                if (d_theta)
                    (*d_theta)(i) = A(m) * Bd(m) * burst * eu;
                if (d_phi)
                    (*d_phi)(i) = Ad(m) * B(m) * burst * eu;
                if (d_tau)
                    (*d_tau)(i) = ab * q(p) * ud(p);
            }
        }
        return x;
    }

    arma::cx_vec LosModel::evaluate(const LosParams &xi) const { return xi.g * unit_response(xi, nullptr, nullptr, nullptr, nullptr); }

    arma::cx_mat LosModel::jacobian(const LosParams &xi) const
    {
        arma::cx_vec de, dt, dp, dd;
        const arma::cx_vec x1 = unit_response(xi, &de, &dt, &dp, &dd);
        arma::cx_mat Jm(x1.n_elem, 6);
        Jm.col(0) = xi.g * de;
        Jm.col(1) = xi.g * dt;
        Jm.col(2) = xi.g * dp;
        Jm.col(3) = xi.g * dd;
        Jm.col(4) = x1;
        Jm.col(5) = cplx(0.0, 1.0) * x1;
        return Jm;
    }

    cplx LosModel::ls_gain(const arma::cx_vec &y, const LosParams &xi) const
    {
        const arma::cx_vec x1 = unit_response(xi, nullptr, nullptr, nullptr, nullptr);
        const double n2 = arma::accu(arma::square(arma::abs(x1)));
        if (n2 == 0.0)
            return 0.0;
        return arma::cdot(x1, y) / n2;
    }

    // ----- JSON -------------------------------------------------------------------

    std::string to_json(const TrainingEstimate &est)
    {
        nlohmann::ordered_json j;
        j["theta_hat"] = est.theta_hat;
        j["phi_hat"] = est.phi_hat;
        j["tau_hat"] = est.tau_hat;
        j["g_hat"] = {est.g_hat.real(), est.g_hat.imag()};
        j["eps_F_hat"] = est.eps_F_hat;
        j["refined"] = est.refined;
        j["iterations"] = est.iterations;
        j["residual_trace"] = est.residual_trace;
        return j.dump();
    }

    TrainingEstimate training_estimate_from_json(const std::string &text)
    {
        try
        {
            const auto j = nlohmann::json::parse(text);
            TrainingEstimate e;
            e.theta_hat = j.at("theta_hat").get<double>();
            e.phi_hat = j.at("phi_hat").get<double>();
            e.tau_hat = j.at("tau_hat").get<double>();
            const auto g = j.at("g_hat");
            e.g_hat = cplx(g.at(0).get<double>(), g.at(1).get<double>());
            e.eps_F_hat = j.at("eps_F_hat").get<double>();
            e.refined = j.at("refined").get<bool>();
            e.iterations = j.value("iterations", 0);
            e.residual_trace = j.value("residual_trace", std::vector<double>{});
            return e;
        }
        catch (const nlohmann::json::exception &ex)
        {
            throw ConfigError(std::string("training estimate JSON: ") + ex.what());
        }
    }

    // ----- refinement -------------------------------------------------------------

    namespace
    {
        double residual(const arma::cx_vec &y, const LosModel &model, LosParams &xi)
        {
            xi.g = model.ls_gain(y, xi);
            return arma::accu(arma::square(arma::abs(y - model.evaluate(xi))));
        }

        double &slot(LosParams &xi, int k)
        {
            switch (k)
            {
            case 0:
                return xi.tau;
            case 1:
                return xi.eps_F;
            case 2:
                return xi.theta;
            default:
                return xi.phi;
            }
        }

        // Jacobian column for refinement slot k (tau, eps_F, theta, phi).
        constexpr int jac_col[4] = {3, 0, 1, 2};
    }

    LosParams resolve_cfo_branch(const arma::cx_mat &Y, const Dictionaries &dict, const LosModel &model, const LosParams &xi,
                                 double bound, DelayRule rule)
    {
        const FrameConfig &cfg = model.config();
        const arma::cx_vec y = arma::vectorise(Y);
        const double spacing = 2.0 * pi / cfg.N_B;
        const int q_lo = static_cast<int>(std::ceil((-bound - xi.eps_F) / spacing));
        const int q_hi = static_cast<int>(std::floor((bound - xi.eps_F) / spacing));

        LosParams best = xi;
        double best_r = std::numeric_limits<double>::infinity();
        for (int q = std::min(q_lo, 0); q <= std::max(q_hi, 0); ++q)
        {
            LosParams c = xi;
            c.eps_F = xi.eps_F + q * spacing;
            // Undo the in-symbol rotation before ranking delays.
            const arma::cx_vec qinv = arma::conj(apply_cfo_matrix(c.eps_F, cfg.P));
            arma::cx_mat Yc = Y;
            Yc.each_col() %= qinv;
            c.tau = estimate_delay(Yc, dict, rule).tau;
            const double r = residual(y, model, c);
            if (r < best_r)
            {
                best_r = r;
                best = c;
            }
        }
        return best;
    }

    TrainingEstimate refine(const arma::cx_vec &y, const TrainingEstimate &coarse, const LosModel &model, const RefineOptions &opts)
    {
        LosParams xi = coarse.params();
        double r = residual(y, model, xi);
        const double eps0 = opts.eps0 > 0.0 ? opts.eps0 : 1e-12 * arma::accu(arma::square(arma::abs(y)));

        TrainingEstimate out = coarse;
        out.residual_trace = {r};
        out.iterations = 0;

        for (int it = 0; it < opts.max_iters && r > eps0; ++it)
        {
            const double r_start = r;
            for (int k = 0; k < 4; ++k)
            {
                const arma::cx_vec e = y - model.evaluate(xi);
                const arma::cx_vec d = model.jacobian(xi).col(jac_col[k]);
                const double dd = arma::accu(arma::square(arma::abs(d)));
                if (!(dd > 0.0))
                    continue;
                const double step = std::real(arma::cdot(d, e)) / dd;
                for (int h = 0; h <= opts.max_halvings; ++h)
                {
                    LosParams trial = xi;
                    slot(trial, k) += std::ldexp(step, -h);
                    const double rt = residual(y, model, trial);
                    if (rt < r)
                    {
                        xi = trial;
                        r = rt;
                        break;
                    }
                }
            }
            out.residual_trace.push_back(r);
            out.iterations = it + 1;
            if (r_start - r <= opts.rel_tol * r_start)
                break;
        }

        const bool finite = std::isfinite(xi.theta) && std::isfinite(xi.phi) && std::isfinite(xi.tau) && std::isfinite(xi.eps_F) &&
                            std::isfinite(xi.g.real()) && std::isfinite(xi.g.imag()) && std::isfinite(r);
        if (!finite)
        {
            TrainingEstimate bad = coarse;
            bad.refined = false;
            return bad;
        }
        out.theta_hat = xi.theta;
        out.phi_hat = xi.phi;
        out.tau_hat = xi.tau;
        out.eps_F_hat = xi.eps_F;
        out.g_hat = xi.g;
        out.refined = true;
        return out;
    }

    TrainingEstimate train(const arma::cx_vec &capture, int eps_T_hat, const FrameConfig &cfg, const Dictionaries &dict,
                           const LosModel &model, const TrainingOptions &opts)
    {
        const arma::cx_mat Y = rearrange(capture, eps_T_hat, cfg);
        const DelayEstimate de = estimate_delay(Y, dict, opts.delay);
        const arma::cx_vec g_hat = estimate_gain(Y, de.q, dict);
        const MpResult mp = matching_pursuit(g_hat, dict, cfg.N_B, opts.norm, opts.cfo);

        LosParams xi{mp.eps_F, mp.theta, mp.phi, de.tau, 0.0};
        const arma::cx_vec y = arma::vectorise(Y);
        if (opts.cfo_bound > 0.0)
            xi = resolve_cfo_branch(Y, dict, model, xi, opts.cfo_bound, opts.delay);
        xi.g = model.ls_gain(y, xi);

        TrainingEstimate coarse;
        coarse.theta_hat = xi.theta;
        coarse.phi_hat = xi.phi;
        coarse.tau_hat = xi.tau;
        coarse.eps_F_hat = xi.eps_F;
        coarse.g_hat = xi.g;
        coarse.refined = false;
        if (!opts.do_refine)
            return coarse;
        return refine(y, coarse, model, opts.refine);
    }

    int align_training_timing(const arma::cx_vec &corr, const FrameConfig &cfg, int eps_T_hat)
    {
        int best_k = 0;
        double best = -1.0;
        for (int k = 0; k < cfg.N_c; ++k)
        {
            double s = 0.0;
            for (int m = 0; m < cfg.M; ++m)
                s += std::norm(corr(cfg.N_CP + eps_T_hat + k + m * cfg.N_B));
            if (s > best)
            {
                best = s;
                best_k = k;
            }
        }
        return eps_T_hat + std::max(best_k - 1, 0);
    }

    Algorithm1Result run_algorithm1(const arma::cx_vec &capture, const FrameConfig &cfg, const PssSequence &pss,
                                    const Dictionaries &dict, const LosModel &model, double eta_NT, const TrainingOptions &opts)
    {
        Algorithm1Result res;
        const arma::cx_vec corr = pss_correlate(capture, pss);
        res.detection = detect_nt(corr, cfg, eta_NT);
        if (res.detection.decision == Hypothesis::H0)
            return res;
        const int timing = align_training_timing(corr, cfg, *res.detection.eps_T_hat);
        res.training_timing = timing;
        res.estimate = train(capture, timing, cfg, dict, model, opts);
        res.w_star = steer({model.n_rx()}, res.estimate->phi_hat) / std::sqrt(static_cast<double>(model.n_rx()));
        res.v_star = steer({model.n_tx()}, res.estimate->theta_hat) / std::sqrt(static_cast<double>(model.n_tx()));
        return res;
    }

    HierarchicalResult hierarchical_refine(int m_star, const ChannelRealization &chan, const FrameConfig &cfg, int n_train,
                                           int beams_per_csirs, int N_tx, int N_rx, int M_tx, int M_rx)
    {
        if (m_star < 1 || m_star > M_tx * M_rx)
            throw ConfigError("burst index outside the sector schedule");
        if (n_train < 0)
            throw ConfigError("N_train must be non-negative");
        const int split = static_cast<int>(std::lround(std::sqrt(static_cast<double>(beams_per_csirs))));
        if (split < 2 || split * split != beams_per_csirs)
            throw ConfigError("beams_per_csirs must be a square of at least 4");

        const BeamPair pair = burst_to_pair(m_star, M_tx);
        HierarchicalResult res;
        res.tx_region = sector_bounds(pair.tx - 1, M_tx);
        res.rx_region = sector_bounds(pair.rx - 1, M_rx);

        for (int round = 0; round < n_train; ++round)
        {
            const double wt = res.tx_region.width() / split, wr = res.rx_region.width() / split;
            double best = -1.0;
            Sector bt = res.tx_region, br = res.rx_region;
            for (int i = 0; i < split; ++i)
            {
                const Sector st{res.tx_region.lo + i * wt, res.tx_region.lo + (i + 1) * wt};
                const arma::cx_vec v = sector_beam(N_tx, st.lo, st.hi);
                for (int j = 0; j < split; ++j)
                {
                    const Sector sr{res.rx_region.lo + j * wr, res.rx_region.lo + (j + 1) * wr};
                    const double gain = beamformed_gain(chan, sector_beam(N_rx, sr.lo, sr.hi), v, cfg);
                    if (gain > best)
                    {
                        best = gain;
                        bt = st;
                        br = sr;
                    }
                }
            }
            res.tx_region = bt;
            res.rx_region = br;
        }
        res.theta = res.tx_region.center();
        res.phi = res.rx_region.center();
        return res;
    }
}
