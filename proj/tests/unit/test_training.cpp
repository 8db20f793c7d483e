// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "cia/training.hpp"

using namespace cia;

namespace
{
    struct Rig
    {
        FrameConfig cfg;
        PssSequence pss;
        Codebook tx, rx;
        Dictionaries dict;

        explicit Rig(int G_d = 100)
        {
            cfg.M = 16;
            cfg.N_B = 256;
            cfg.eps_T_max = 256;
            pss = gen_zc(default_zc_root, cfg.P);
            auto rng = derive_stream(99, "training-rig", 0).engine();
            tx = gen_pseudorandom(16, cfg.M, rng);
            rx = gen_pseudorandom(8, cfg.M, rng);
            dict = build_dictionaries(cfg, pss, tx, rx, G_d, 32, 16);
        }

        RxCapture capture(const ChannelRealization &chan, const SyncState &sync, bool noise, std::uint64_t seed = 1) const
        {
            auto rng = derive_stream(seed, "training-capture", 0).engine();
            return synth_rx(cfg, chan, tx, rx, sync, pss, rng, {noise});
        }
    };
}

TEST_CASE("Angle grid", "[training]")
{
    const auto g = angle_grid(4);
    REQUIRE(g.size() == 4);
    CHECK(g[0] == Catch::Approx(-3 * pi / 8));
    CHECK(g[1] == Catch::Approx(-pi / 8));
    CHECK(g[3] == Catch::Approx(3 * pi / 8));
    CHECK(map_angle_index(unmap_angle_index(77, 32), 32) == 77);
    CHECK(unmap_angle_index(77, 32).k_rx == 2);
    CHECK(unmap_angle_index(77, 32).k_tx == 13);
}

TEST_CASE("Angle dictionary columns match per-burst effective gains", "[training]")
{
    const Rig rig;
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pick(0, rig.dict.n_angle_atoms() - 1);
    for (int i = 0; i < 5; ++i)
    {
        const int k = pick(rng);
        const AnglePair a = unmap_angle_index(k, rig.dict.G_T);
        const PathComponent path{cplx(1.0, 0.0), rig.dict.t[a.k_tx], rig.dict.r[a.k_rx], 0.0};
        for (int m = 0; m < rig.cfg.M; ++m)
        {
            const cplx g = effective_gain(path, rig.rx.beam(m), rig.tx.beam(m), 0.0, m, rig.cfg);
            CHECK(std::abs(rig.dict.angle_atoms(m, k) - g) < 1e-12);
        }
    }
}

TEST_CASE("Rearrangement indexing", "[training]")
{
    const Rig rig;
    const int len = capture_length(rig.cfg);
    arma::cx_vec y(len);
    for (int n = 0; n < len; ++n)
        y(n) = cplx(n, 0.0);
    const arma::cx_mat Y = rearrange(y, 13, rig.cfg);
    REQUIRE(Y.n_rows == 128);
    REQUIRE(Y.n_cols == 16);
    CHECK(Y(0, 0).real() == 13 + 8);
    CHECK(Y(5, 3).real() == 13 + 8 + 5 + 3 * 256);
    CHECK_THROWS_AS(rearrange(y, len, rig.cfg), ConfigError);
}

TEST_CASE("On-grid delay and gain recovery", "[training]")
{
    const Rig rig;
    const PathComponent path{cplx(0.3, -0.9), 0.25, -0.6, 2 * rig.cfg.T_s};
    const auto cap = rig.capture({{path}, 1.0}, {0, 0.0}, false);
    const arma::cx_mat Y = rearrange(cap.y, 0, rig.cfg);

    const auto de = estimate_delay(Y, rig.dict);
    CHECK(de.q == 50);
    CHECK(de.tau == rig.dict.d[50]);
    CHECK(de.tau == Catch::Approx(2 * rig.cfg.T_s).epsilon(1e-14));
    CHECK(estimate_delay(Y, rig.dict, DelayRule::burst_average).q == 50);

    // Burst gains that cancel in the average leave only the energy rule working.
    arma::cx_mat Yc(rig.cfg.P, rig.cfg.M);
    for (int m = 0; m < rig.cfg.M; ++m)
        Yc.col(m) = rig.dict.delay_atoms.col(70) * (m % 2 ? -1.0 : 1.0);
    CHECK(estimate_delay(Yc, rig.dict).q == 70);
    CHECK(estimate_delay(Yc, rig.dict, DelayRule::burst_average).q != 70);

    const arma::cx_vec g = estimate_gain(Y, de.q, rig.dict);
    for (int m = 0; m < rig.cfg.M; ++m)
        CHECK(std::abs(g(m) - effective_gain(path, rig.rx.beam(m), rig.tx.beam(m), 0.0, m, rig.cfg)) < 1e-9);

    CHECK(arma::norm(estimate_gain(arma::cx_mat(128, 16, arma::fill::zeros), 3, rig.dict)) == 0.0);
}

TEST_CASE("Gain phase advances by N_B eps per burst under CFO", "[training]")
{
    const Rig rig;
    const double eps = 0.004;
    const PathComponent path{cplx(1.0, 0.0), 0.1, 0.2, 0.0};
    const auto cap = rig.capture({{path}, 1.0}, {0, eps}, false);
    const arma::cx_mat Y = rearrange(cap.y, 0, rig.cfg);
    const arma::cx_vec g = estimate_gain(Y, estimate_delay(Y, rig.dict).q, rig.dict);
    for (int m = 0; m + 1 < rig.cfg.M; ++m)
    {
        const cplx a = effective_gain(path, rig.rx.beam(m), rig.tx.beam(m), 0.0, m, rig.cfg);
        const cplx b = effective_gain(path, rig.rx.beam(m + 1), rig.tx.beam(m + 1), 0.0, m + 1, rig.cfg);
        const double adv = std::arg((g(m + 1) / b) / (g(m) / a));
        CHECK(std::remainder(adv - eps * rig.cfg.N_B, 2 * pi) == Catch::Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("CFO from a tone", "[training]")
{
    const int N_B = 1024, M = 8;
    auto tone = [&](double eps) {
        arma::cx_vec t(M);
        for (int m = 0; m < M; ++m)
            t(m) = std::polar(1.0, N_B * eps * m);
        return t;
    };
    CHECK(cfo_from_tone(tone(0.002), N_B) == Catch::Approx(0.002).epsilon(1e-12));
    CHECK(cfo_from_tone(tone((2 * pi + 0.1) / N_B), N_B) == Catch::Approx(0.1 / N_B).epsilon(1e-9));
    CHECK(cfo_from_tone(arma::cx_vec(M, arma::fill::value(cplx(2.0, 1.0))), N_B) == 0.0);
    CHECK(cfo_from_tone(tone(pi / N_B), N_B) == Catch::Approx(pi / N_B));
    CHECK_THROWS_AS(cfo_from_tone(arma::cx_vec(M, arma::fill::zeros), N_B), std::domain_error);
}

TEST_CASE("Matching pursuit recovers on-grid angles", "[training]")
{
    const Rig rig;
    const int kt = 21, kr = 4;
    const PathComponent path{cplx(0.6, 0.8), rig.dict.t[kt], rig.dict.r[kr], 0.0};
    for (double eps : {0.0, 0.008})
    {
        const auto cap = rig.capture({{path}, 1.0}, {0, eps}, false);
        const arma::cx_mat Y = rearrange(cap.y, 0, rig.cfg);
        const arma::cx_vec g = estimate_gain(Y, estimate_delay(Y, rig.dict).q, rig.dict);
        const auto mp = matching_pursuit(g, rig.dict, rig.cfg.N_B);
        CHECK(mp.pair.k_tx == kt);
        CHECK(mp.pair.k_rx == kr);
        CHECK(mp.theta == rig.dict.t[kt]);
        CHECK(mp.phi == rig.dict.r[kr]);
        CHECK(mp.eps_F == Catch::Approx(eps).margin(1e-12));
        CHECK(mp.score == Catch::Approx(mp_score(g, rig.dict, mp.k, mp.eps_F, rig.cfg.N_B)).epsilon(1e-12));

        // A global phase does not change the choice.
        const auto rot = matching_pursuit(g * std::polar(1.0, 2.0), rig.dict, rig.cfg.N_B);
        CHECK(rot.k == mp.k);

        if (eps > 0.0)
        {
            const auto plain = matching_pursuit(g, rig.dict, rig.cfg.N_B, MpNorm::atom_norm, MpCfo::none);
            CHECK(mp_score(g, rig.dict, mp.k, 0.0, rig.cfg.N_B) < mp.score);
            CHECK(plain.score < mp.score);
            // The lag-1 tone rule is exact on-grid as well.
            const auto lag1 = matching_pursuit(g, rig.dict, rig.cfg.N_B, MpNorm::atom_norm, MpCfo::tone);
            CHECK(lag1.k == mp.k);
            CHECK(lag1.eps_F == Catch::Approx(eps).margin(1e-12));
        }
    }
}

TEST_CASE("Model Jacobian matches finite differences", "[training]")
{
    const Rig rig;
    const LosModel model(rig.cfg, rig.pss, rig.tx, rig.rx);
    const LosParams xi{0.003, -0.4, 0.7, 1.3 * rig.cfg.T_s, cplx(0.5, -1.1)};
    const arma::cx_mat D = model.jacobian(xi);
    const double steps[6] = {1e-6 / (rig.cfg.M * rig.cfg.N_B), 1e-6 / 16, 1e-6 / 8, 1e-6 * rig.cfg.T_s, 1e-6, 1e-6};
    for (int c = 0; c < 6; ++c)
    {
        auto shifted = [&](double h) {
            LosParams p = xi;
            switch (c)
            {
            case 0: p.eps_F += h; break;
            case 1: p.theta += h; break;
            case 2: p.phi += h; break;
            case 3: p.tau += h; break;
            case 4: p.g += h; break;
            default: p.g += cplx(0.0, h); break;
            }
            return model.evaluate(p);
        };
        const arma::cx_vec fd = (shifted(steps[c]) - shifted(-steps[c])) / (2 * steps[c]);
        CHECK(arma::norm(fd - D.col(c)) <= 1e-5 * arma::norm(D.col(c)));
    }
}

TEST_CASE("Refinement", "[training]")
{
    const Rig rig;
    const LosModel model(rig.cfg, rig.pss, rig.tx, rig.rx);
    const LosParams truth{0.002, 0.31, -0.47, 0.9 * rig.cfg.T_s, cplx(0.9, 0.4)};
    const arma::cx_vec y = model.evaluate(truth);

    SECTION("truth is a fixed point")
    {
        TrainingEstimate start;
        start.theta_hat = truth.theta;
        start.phi_hat = truth.phi;
        start.tau_hat = truth.tau;
        start.eps_F_hat = truth.eps_F;
        start.g_hat = truth.g;
        const auto out = refine(y, start, model);
        CHECK(out.refined);
        CHECK(out.residual_trace.front() < 1e-20);
        CHECK(out.theta_hat == truth.theta);
        CHECK(out.phi_hat == truth.phi);
    }

    SECTION("perturbed start converges with a non-increasing residual")
    {
        std::mt19937_64 rng(12);
        std::normal_distribution<double> n(0.0, std::sqrt(0.5 * 1e-4));
        arma::cx_vec yn = y;
        for (auto &v : yn)
            v += cplx(n(rng), n(rng));
        TrainingEstimate start;
        start.theta_hat = truth.theta + 0.02;
        start.phi_hat = truth.phi - 0.03;
        start.tau_hat = truth.tau + 0.2 * rig.cfg.T_s;
        start.eps_F_hat = truth.eps_F + 2e-5;
        const auto out = refine(yn, start, model);
        REQUIRE(out.refined);
        for (std::size_t i = 1; i < out.residual_trace.size(); ++i)
            CHECK(out.residual_trace[i] <= out.residual_trace[i - 1]);
        CHECK(out.iterations <= 100);
        CHECK(std::abs(out.theta_hat - truth.theta) < 1e-3);
        CHECK(std::abs(out.phi_hat - truth.phi) < 1e-3);
    }
}

TEST_CASE("End-to-end training of an off-grid path", "[training]")
{
    const Rig rig;
    const LosModel model(rig.cfg, rig.pss, rig.tx, rig.rx);
    // Midway between grid points on both axes.
    const double aod = 0.5 * (rig.dict.t[20] + rig.dict.t[21]);
    const double aoa = 0.5 * (rig.dict.r[5] + rig.dict.r[6]);
    const PathComponent path{std::polar(1.0, 0.4), aod, aoa, 1.5 * rig.cfg.T_s};
    ChannelRealization chan{{path}, 1e-3};
    const auto cap = rig.capture(chan, {0, 0.003}, true, 4);

    TrainingOptions coarse_only;
    coarse_only.do_refine = false;
    const auto coarse = train(cap.y, 0, rig.cfg, rig.dict, model, coarse_only);
    const auto fine = train(cap.y, 0, rig.cfg, rig.dict, model);
    CHECK(fine.refined);
    CHECK_FALSE(coarse.refined);
    CHECK(std::abs(fine.theta_hat - aod) < std::abs(coarse.theta_hat - aod));
    CHECK(std::abs(fine.phi_hat - aoa) < std::abs(coarse.phi_hat - aoa));
    CHECK(std::abs(fine.theta_hat - aod) < 5e-3);
    CHECK(std::abs(fine.phi_hat - aoa) < 5e-3);
    CHECK(fine.eps_F_hat == Catch::Approx(0.003).margin(1e-5));
}

TEST_CASE("Algorithm pipeline", "[training]")
{
    const Rig rig;
    const LosModel model(rig.cfg, rig.pss, rig.tx, rig.rx);
    DetectionTheoryInputs th;
    th.cfg = rig.cfg;
    th.mode = DetectMode::NT;
    const double eta = threshold_opt(th);

    ChannelRealization silent{{{cplx(0.0, 0.0), 0.0, 0.0, 0.0}}, 1.0};
    const auto h0 = run_algorithm1(rig.capture(silent, {30, 0.0}, true, 5).y, rig.cfg, rig.pss, rig.dict, model, eta);
    CHECK(h0.detection.decision == Hypothesis::H0);
    CHECK_FALSE(h0.estimate.has_value());

    const PathComponent path{cplx(1.0, 0.0), 0.35, -0.2, 0.0};
    const auto h1 = run_algorithm1(rig.capture({{path}, 0.01}, {30, 0.0}, true, 6).y, rig.cfg, rig.pss, rig.dict, model, eta);
    REQUIRE(h1.detection.decision == Hypothesis::H1);
    REQUIRE(h1.estimate.has_value());
    CHECK(std::abs(h1.estimate->theta_hat - 0.35) < 5e-3);
    CHECK(std::abs(h1.estimate->phi_hat + 0.2) < 5e-3);
    CHECK(arma::norm(h1.w_star) == Catch::Approx(1.0));
    CHECK(arma::norm(h1.v_star) == Catch::Approx(1.0));
}

TEST_CASE("Training estimate JSON round trip", "[training]")
{
    TrainingEstimate e;
    e.theta_hat = 0.1234567890123;
    e.phi_hat = -1.2;
    e.tau_hat = 3.4e-8;
    e.g_hat = cplx(0.5, -0.25);
    e.eps_F_hat = 1e-3;
    e.refined = true;
    e.iterations = 7;
    e.residual_trace = {3.0, 2.0, 1.5};
    const auto back = training_estimate_from_json(to_json(e));
    CHECK(back.theta_hat == e.theta_hat);
    CHECK(back.phi_hat == e.phi_hat);
    CHECK(back.tau_hat == e.tau_hat);
    CHECK(back.g_hat == e.g_hat);
    CHECK(back.eps_F_hat == e.eps_F_hat);
    CHECK(back.refined);
    CHECK(back.iterations == 7);
    CHECK(back.residual_trace == e.residual_trace);
    CHECK_THROWS_AS(training_estimate_from_json("{\"theta_hat\": 1}"), ConfigError);
}

TEST_CASE("Hierarchical directional refinement", "[training]")
{
    FrameConfig cfg;
    const int M_tx = 16, M_rx = 4;
    const double aod = 0.123, aoa = -0.456;
    ChannelRealization chan{{{cplx(1.0, 0.0), aod, aoa, 0.0}}, 1.0};
    const BeamPair pair{static_cast<int>((aod + pi / 2) / (pi / M_tx)) + 1, static_cast<int>((aoa + pi / 2) / (pi / M_rx)) + 1};
    const int m_star = pair_to_burst(pair, M_tx);

    const auto r0 = hierarchical_refine(m_star, chan, cfg, 0, 4, 128, 32, M_tx, M_rx);
    CHECK(r0.theta == Catch::Approx(sector_bounds(pair.tx - 1, M_tx).center()));
    CHECK(r0.phi == Catch::Approx(sector_bounds(pair.rx - 1, M_rx).center()));

    double wt = r0.tx_region.width(), wr = r0.rx_region.width();
    for (int n = 1; n <= 3; ++n)
    {
        const auto r = hierarchical_refine(m_star, chan, cfg, n, 4, 128, 32, M_tx, M_rx);
        CHECK(r.tx_region.width() == Catch::Approx(wt / 2));
        CHECK(r.rx_region.width() == Catch::Approx(wr / 2));
        CHECK(r.tx_region.lo <= aod);
        CHECK(r.tx_region.hi >= aod);
        CHECK(r.rx_region.lo <= aoa);
        CHECK(r.rx_region.hi >= aoa);
        wt = r.tx_region.width();
        wr = r.rx_region.width();
    }
    CHECK_THROWS_AS(hierarchical_refine(m_star, chan, cfg, 1, 3, 128, 32, M_tx, M_rx), ConfigError);
}
