// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "cia/channel.hpp"
#include "cia/codebook.hpp"

#include <cmath>
#include <set>

using namespace cia;

namespace
{
    FrameConfig small_frame()
    {
        FrameConfig cfg;
        cfg.M = 4;
        cfg.N_B = 256;
        cfg.eps_T_max = 256;
        return cfg;
    }

    // Literal time-domain evaluation of the received samples for integer tap delays.
    arma::cx_vec direct_model(const FrameConfig &cfg, const ChannelRealization &chan, const Codebook &tx, const Codebook &rx,
                              const SyncState &sync, const PssSequence &pss)
    {
        const arma::cx_vec s = assemble_stream(cfg, pss);
        const int len = capture_length(cfg);
        arma::cx_vec y(len, arma::fill::zeros);
        for (int n = 0; n < len; ++n)
        {
            const arma::cx_vec w = rx.beams.col(rx_beam_index(n, cfg));
            for (const auto &p : chan.paths)
            {
                const int d = static_cast<int>(std::lround(p.delay / cfg.T_s));
                const int src = n - d - sync.eps_T;
                if (src < 0 || src >= static_cast<int>(s.n_elem))
                    continue;
                const arma::cx_vec v = tx.beams.col(src / cfg.N_B);
                const arma::cx_mat H = p.gain * steer({rx.n_antennas()}, p.aoa) * steer({tx.n_antennas()}, p.aod).t();
                y(n) += std::polar(1.0, sync.eps_F * n) * arma::cdot(w, H * v) * s(src);
            }
        }
        return y;
    }
}

TEST_CASE("Steering vectors", "[channel]")
{
    const arma::cx_vec a0 = steer({8}, 0.0);
    CHECK(arma::norm(a0 - arma::ones<arma::cx_vec>(8)) == 0.0);
    const arma::cx_vec a2 = steer({2}, pi / 2);
    CHECK(std::abs(a2(1) - cplx(-1.0, 0.0)) < 1e-15);
    for (double ang : {-1.2, 0.3, 1.5})
        CHECK(std::pow(arma::norm(steer({33}, ang)), 2) == Catch::Approx(33.0).epsilon(1e-13));

    const double ang = 0.7, h = 1e-6;
    const arma::cx_vec fd = (steer({16}, ang + h) - steer({16}, ang - h)) / (2 * h);
    CHECK(arma::norm(fd - steer_derivative({16}, ang)) / arma::norm(fd) < 1e-8);
}

TEST_CASE("CFO phase diagonal", "[channel]")
{
    CHECK(arma::norm(apply_cfo_matrix(0.0, 5) - arma::ones<arma::cx_vec>(5)) == 0.0);
    CHECK(arma::norm(apply_cfo_matrix(2 * pi, 5) - arma::ones<arma::cx_vec>(5)) < 1e-13);
    const arma::cx_vec q = apply_cfo_matrix(pi / 2, 2);
    CHECK(std::abs(q(1) - cplx(0.0, 1.0)) < 1e-15);
}

TEST_CASE("Noiseless single path gives the effective-gain scaled PSS", "[channel]")
{
    const FrameConfig cfg = small_frame();
    std::mt19937_64 rng(11);
    const auto tx = gen_pseudorandom(16, cfg.M, rng), rx = gen_pseudorandom(8, cfg.M, rng);
    const auto pss = gen_zc(25, cfg.P);
    ChannelRealization chan{{{cplx(0.6, -0.8), 0.4, -0.9, 0.0}}, 1.0};
    const auto cap = synth_rx(cfg, chan, tx, rx, {0, 0.0}, pss, rng, {false});

    for (int m = 0; m < cfg.M; ++m)
    {
        const cplx g = chan.paths[0].gain * arma::cdot(rx.beams.col(m), steer({8}, -0.9)) *
                       arma::cdot(steer({16}, 0.4), tx.beams.col(m));
        CHECK(std::abs(g - effective_gain(chan.paths[0], rx.beams.col(m), tx.beams.col(m), 0.0, m, cfg)) < 1e-13);
        const arma::cx_vec win = cap.y.subvec(m * cfg.N_B + cfg.N_CP, m * cfg.N_B + cfg.N_CP + cfg.P - 1);
        CHECK(arma::norm(win - g * pss.time) < 1e-12);
        // Burst energy equals |g|^2 P.
        CHECK(std::pow(arma::norm(win), 2) == Catch::Approx(std::norm(g) * cfg.P).epsilon(1e-12));
    }
}

TEST_CASE("Synthesis matches the direct time-domain model for integer taps", "[channel]")
{
    const FrameConfig cfg = small_frame();
    std::mt19937_64 rng(5);
    const auto tx = gen_pseudorandom(8, cfg.M, rng), rx = gen_pseudorandom(4, cfg.M, rng);
    const auto pss = gen_zc(25, cfg.P);
    ChannelRealization chan{{{cplx(1.0, 0.2), 0.3, -0.4, 0.0}, {cplx(-0.3, 0.5), -1.0, 0.8, 3 * cfg.T_s}}, 1.0};

    // eps_T = 200 puts a combiner switch inside each PSS.
    for (const SyncState sync : {SyncState{0, 0.0}, SyncState{37, 0.0123}, SyncState{200, -0.004}})
    {
        const auto cap = synth_rx(cfg, chan, tx, rx, sync, pss, rng, {false});
        const arma::cx_vec ref = direct_model(cfg, chan, tx, rx, sync, pss);
        CHECK(arma::norm(cap.y - ref) < 1e-9 * arma::norm(ref));
    }
}

TEST_CASE("Timing offset delays the noiseless signal", "[channel]")
{
    const FrameConfig cfg = small_frame();
    std::mt19937_64 rng(9);
    const auto tx = gen_pseudorandom(8, cfg.M, rng), rx = gen_pseudorandom(4, cfg.M, rng);
    const auto pss = gen_zc(25, cfg.P);
    ChannelRealization chan{{{cplx(1.0, 0.0), 0.2, 0.1, 1.3 * cfg.T_s}}, 1.0};
    const auto a = synth_rx(cfg, chan, tx, rx, {0, 0.0}, pss, rng, {false});
    const auto b = synth_rx(cfg, chan, tx, rx, {17, 0.0}, pss, rng, {false});
    // The combiner does not switch inside any PSS for these offsets, so the shift is exact.
    const int len = capture_length(cfg) - 17;
    CHECK(arma::norm(b.y.subvec(17, 17 + len - 1) - a.y.subvec(0, len - 1)) < 1e-12);
}

TEST_CASE("CFO only rotates phases", "[channel]")
{
    const FrameConfig cfg = small_frame();
    std::mt19937_64 rng(2);
    const auto tx = gen_pseudorandom(8, cfg.M, rng), rx = gen_pseudorandom(4, cfg.M, rng);
    const auto pss = gen_zc(25, cfg.P);
    ChannelRealization chan{{{cplx(0.5, 0.5), -0.2, 0.6, 2 * cfg.T_s}}, 1.0};
    const auto a = synth_rx(cfg, chan, tx, rx, {40, 0.0}, pss, rng, {false});
    const auto b = synth_rx(cfg, chan, tx, rx, {40, 0.031}, pss, rng, {false});
    CHECK(arma::max(arma::abs(arma::abs(a.y) - arma::abs(b.y))) < 1e-12);
}

TEST_CASE("Noise-only capture has combiner-output variance sigma^2", "[channel]")
{
    const FrameConfig cfg = small_frame();
    std::mt19937_64 rng(21);
    const auto tx = gen_pseudorandom(8, cfg.M, rng), rx = gen_pseudorandom(4, cfg.M, rng);
    const auto pss = gen_zc(25, cfg.P);
    ChannelRealization chan{{{cplx(0.0, 0.0), 0.0, 0.0, 0.0}}, 2.5};
    const auto cap = synth_rx(cfg, chan, tx, rx, {0, 0.0}, pss, rng);
    const double var = arma::mean(arma::square(arma::abs(cap.y)));
    // Sample mean of ~1.4e3 exponentials: 5 sigma is about 13 %.
    CHECK(var == Catch::Approx(2.5).epsilon(0.13));
}

TEST_CASE("Phase noise hook keeps the noiseless magnitude", "[channel]")
{
    const FrameConfig cfg = small_frame();
    std::mt19937_64 rng(4);
    const auto tx = gen_pseudorandom(8, cfg.M, rng), rx = gen_pseudorandom(4, cfg.M, rng);
    const auto pss = gen_zc(25, cfg.P);
    ChannelRealization chan{{{cplx(1.0, 0.0), 0.2, 0.1, 0.0}}, 1.0};
    const auto a = synth_rx(cfg, chan, tx, rx, {0, 0.0}, pss, rng, {false, 0.0});
    const auto b = synth_rx(cfg, chan, tx, rx, {0, 0.0}, pss, rng, {false, 1e-4});
    CHECK(arma::max(arma::abs(arma::abs(a.y) - arma::abs(b.y))) < 1e-12);
    CHECK(arma::norm(a.y - b.y) > 1e-3);
}

TEST_CASE("Channel draws", "[channel]")
{
    FrameConfig cfg;
    std::mt19937_64 rng(1);
    ChannelDrawSpec spec;
    spec.L = 3;
    spec.integer_delays = true;
    spec.relative_power_db = {0.0, -3.0, -10.0};
    for (int t = 0; t < 50; ++t)
    {
        const auto chan = draw_channel(spec, cfg, 2.0, 1.0, rng);
        CHECK(chan.gain_power() == Catch::Approx(2.0).epsilon(1e-12));
        CHECK(std::norm(chan.paths[0].gain) > std::norm(chan.paths[1].gain));
        std::set<double> taps;
        for (const auto &p : chan.paths)
        {
            CHECK(std::abs(p.aod) < pi / 2);
            taps.insert(p.delay);
            CHECK(p.delay / cfg.T_s == Catch::Approx(std::round(p.delay / cfg.T_s)).margin(1e-9));
        }
        CHECK(taps.size() == 3);
    }
    spec.L = 5;
    CHECK_THROWS_AS(draw_channel(spec, cfg, 1.0, 1.0, rng), ConfigError);
}

TEST_CASE("Post-beamforming SNR", "[channel]")
{
    FrameConfig cfg;
    const int Nt = 16, Nr = 8;
    ChannelRealization chan{{{cplx(0.8, 0.6), 0.35, -0.5, 0.0}}, 1.0};
    const arma::cx_vec v = steer({Nt}, 0.35) / std::sqrt(double(Nt));
    const arma::cx_vec w = steer({Nr}, -0.5) / std::sqrt(double(Nr));

    const arma::cx_mat H = chan.paths[0].gain * steer({Nr}, -0.5) * steer({Nt}, 0.35).t();
    const double brute = std::norm(arma::cdot(w, H * v));
    CHECK(beamformed_gain(chan, w, v, cfg) == Catch::Approx(brute).epsilon(1e-12));
    CHECK(brute == Catch::Approx(Nt * Nr).epsilon(1e-12));

    const double s1 = post_bf_snr_db(chan, w, v, cfg, 1.0, 400e6);
    CHECK(post_bf_snr_db(chan, w, v, cfg, 2.0, 400e6) - s1 == Catch::Approx(3.0103).margin(1e-4));

    // A combiner orthogonal to the arrival direction collects nothing.
    arma::cx_vec w_orth = steer({Nr}, std::asin(std::sin(-0.5) + 2.0 / Nr)) / std::sqrt(double(Nr));
    CHECK(s1 - post_bf_snr_db(chan, w_orth, v, cfg, 1.0, 400e6) > 200.0);

    // Fractional delays spread over taps but keep the total energy.
    chan.paths[0].delay = 1.4 * cfg.T_s;
    CHECK(beamformed_gain(chan, w, v, cfg) == Catch::Approx(brute).epsilon(1e-10));
}
