// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "cia/theory.hpp"
#include "cia/training.hpp"

#include <algorithm>

using namespace cia;

// Reference values below come from mpmath / numpy evaluations at 30 digits.

TEST_CASE("Gaussian tail and its inverse", "[theory]")
{
    CHECK(q_function(0.0) == 0.5);
    CHECK(q_inverse(0.5) == Catch::Approx(0.0).margin(1e-15));
    CHECK(q_inverse(0.01) == Catch::Approx(2.32634787404084110).epsilon(1e-12));
    CHECK(q_inverse(1.0 / 1024) == Catch::Approx(3.09726907819878446).epsilon(1e-12));
    CHECK(q_function(std::sqrt(32.0)) == Catch::Approx(7.70862895014e-9).epsilon(1e-9));
    for (double p : {1e-10, 1e-5, 0.2, 0.7, 1 - 1e-10})
        CHECK(q_function(q_inverse(p)) == Catch::Approx(p).epsilon(1e-9));
    CHECK_THROWS(q_inverse(0.0));
    CHECK_THROWS(q_inverse(1.0));
}

TEST_CASE("Gain split and SNR degradation", "[theory]")
{
    FrameConfig cfg;
    CHECK(gain_split_K(0, cfg) == 0);
    CHECK(gain_split_K(170, cfg) == 0);
    CHECK(gain_split_K(960, cfg) == 64);
    CHECK(gain_split_K(895, cfg) == 0);
    CHECK(gain_split_K(896, cfg) == 128);

    const double eps = cfo_from_ppm(5.0, 28e9, cfg.T_s);
    CHECK(eps == Catch::Approx(0.0152716309549503850).epsilon(1e-14));
    CHECK(kappa(0, 0.0, cfg) == 1.0);
    CHECK(kappa(0, eps, cfg) == Catch::Approx(0.719492180711242671).epsilon(1e-12));
    CHECK(kappa(960, eps, cfg) == Catch::Approx(0.461451677409293459).epsilon(1e-12));
    CHECK(kappa(960, 0.0, cfg) == Catch::Approx(0.5).epsilon(1e-14));
    // Direct trigonometric identity at K = 0.
    const double dirichlet = std::sin(cfg.P * eps / 2) / (cfg.P * std::sin(eps / 2));
    CHECK(kappa(0, eps, cfg) == Catch::Approx(dirichlet * dirichlet).epsilon(1e-13));
    CHECK(kappa(0, 1e-12, cfg) == Catch::Approx(1.0).epsilon(1e-12));
    for (int t = 0; t < cfg.N_B; t += 7)
    {
        const double k = kappa(t, eps, cfg);
        CHECK(k > 0.0);
        CHECK(k <= 1.0);
    }
}

TEST_CASE("Thresholds", "[theory]")
{
    DetectionTheoryInputs in;
    in.mode = DetectMode::PT;
    CHECK(threshold_opt(in) == Catch::Approx(0.0357936481914860178).epsilon(1e-12));
    in.p_fa_star = 0.5;
    CHECK(threshold_opt(in) == Catch::Approx(double(in.cfg.N_c) / in.cfg.P).epsilon(1e-14));

    in.p_fa_star = 0.01;
    in.mode = DetectMode::NT;
    CHECK(threshold_factor(in) == Catch::Approx(4.25529621331651353).epsilon(1e-12));
    CHECK(threshold_opt(in) == Catch::Approx(0.0395611254166338155).epsilon(1e-12));
    const double eta = threshold_opt(in);
    in.noise_power = 2.0;
    CHECK(threshold_opt(in) == Catch::Approx(2 * eta).epsilon(1e-14));

    in.mode = DetectMode::DIA;
    CHECK_THROWS(threshold_factor(in));
    in.mode = DetectMode::PT;
    in.p_fa_star = 1.0;
    CHECK_THROWS_AS(validate_theory_inputs(in), ConfigError);
}

TEST_CASE("Miss-detection limits", "[theory]")
{
    DetectionTheoryInputs in;
    in.mode = DetectMode::PT;
    in.snr = 0.0;
    CHECK(pmd_theory(in) == Catch::Approx(0.99).epsilon(1e-12));
    in.snr = 1e9;
    CHECK(pmd_theory(in) == Catch::Approx(q_function(std::sqrt(in.cfg.M / 2.0))).epsilon(1e-4));

    // Monotone in SNR for both modes.
    for (DetectMode mode : {DetectMode::PT, DetectMode::NT})
    {
        in.mode = mode;
        double prev = 1.0;
        for (double db = -30; db <= 10; db += 1)
        {
            in.snr = std::pow(10.0, db / 10);
            const double p = pmd_theory(in);
            CHECK(p <= prev + 1e-15);
            prev = p;
        }
    }
}

TEST_CASE("Fisher information of single-path training", "[theory]")
{
    FrameConfig cfg;
    cfg.M = 8;
    cfg.N_B = 256;
    cfg.eps_T_max = 256;
    std::mt19937_64 rng(6);
    const auto tx = gen_pseudorandom(8, cfg.M, rng), rx = gen_pseudorandom(4, cfg.M, rng);
    const auto pss = gen_zc(25, cfg.P);
    const LosParams xi{0.004, 0.3, -0.5, 1.7 * cfg.T_s, cplx(0.8, -0.4)};

    const auto f1 = fim(xi, cfg, tx, rx, pss, 1.0);
    REQUIRE_FALSE(f1.singular);
    CHECK(arma::norm(f1.Phi - f1.Phi.t(), "inf") <= 1e-12 * arma::norm(f1.Phi, "inf"));
    CHECK(arma::approx_equal(f1.J, 2.0 * f1.Phi, "reldiff", 1e-14));
    // Positive definite after equilibration (raw entries span many decades).
    const arma::vec d = 1.0 / arma::sqrt(f1.J.diag());
    arma::mat R;
    CHECK(arma::chol(R, arma::diagmat(d) * f1.J * arma::diagmat(d)));

    // Closed forms against Re(D^H D) built from the model Jacobian.
    const LosModel model(cfg, pss, tx, rx);
    const arma::cx_mat D = model.jacobian(xi);
    const arma::mat ref = arma::real(D.t() * D);
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b)
            CHECK(std::abs(f1.Phi(a, b) - ref(a, b)) <= 1e-9 * std::sqrt(ref(a, a) * ref(b, b)));

    // Bounds scale linearly with the noise power.
    const auto f3 = fim(xi, cfg, tx, rx, pss, 3.0);
    CHECK(f3.crlb_theta == Catch::Approx(3.0 * f1.crlb_theta).epsilon(1e-10));
    CHECK(f3.crlb_phi == Catch::Approx(3.0 * f1.crlb_phi).epsilon(1e-10));

    arma::mat inv;
    REQUIRE(inverse_spd(f1.J, inv));
    CHECK(f1.crlb_theta == Catch::Approx(inv(1, 1)));
    CHECK(f1.crlb_phi == Catch::Approx(inv(2, 2)));
    CHECK(arma::norm(inv * f1.J - arma::eye(6, 6), "inf") < 1e-6);
}

TEST_CASE("Equilibrated SPD inverse", "[theory]")
{
    arma::mat J = {{4e12, 2e3}, {2e3, 5e-6}};
    arma::mat inv;
    REQUIRE(inverse_spd(J, inv));
    const arma::mat ref = arma::mat{{5e-6, -2e3}, {-2e3, 4e12}} / 1.6e7;
    CHECK(arma::approx_equal(inv, ref, "reldiff", 1e-12));
    arma::mat S = {{1.0, 1.0}, {1.0, 1.0}};
    CHECK_FALSE(inverse_spd(S, inv));
}

namespace
{
    // Discrete-event oracle: users queue in arrival order and each frame grants
    // K_R CSI-RS slots at offsets T_R, 2 T_R, ... from the frame start.
    double enumerate_wait(int N_UE, int K_R, double T_SS, double T_R)
    {
        std::vector<int> queue(N_UE);
        std::iota(queue.begin(), queue.end(), 0);
        std::vector<double> wait(N_UE, 0.0);
        std::size_t head = 0;
        for (int frame = 0; head < queue.size(); ++frame)
            for (int slot = 1; slot <= K_R && head < queue.size(); ++slot)
                wait[queue[head++]] = frame * T_SS + slot * T_R;
        return std::accumulate(wait.begin(), wait.end(), 0.0) / N_UE;
    }
}

TEST_CASE("Latency model", "[theory]")
{
    FrameConfig cfg;
    SystemModelInputs in;
    CHECK(latency(in, cfg) == 0.0);
    in.P_MD = 0.5;
    CHECK(latency(in, cfg) == Catch::Approx(20e-3).epsilon(1e-14));
    in.P_MD = 1.0;
    CHECK_THROWS_AS(latency(in, cfg), ConfigError);

    for (int n = 1; n <= 20; ++n)
        for (int k = 1; k <= 5; ++k)
            CHECK(mean_csirs_wait(n, k, cfg.T_SS, 1e-3) == Catch::Approx(enumerate_wait(n, k, cfg.T_SS, 1e-3)).epsilon(1e-13));

    // Non-decreasing in P_MD, N_train and N_UE.
    in = {};
    in.K_R_override = 3;
    double prev = -1.0;
    for (int n = 1; n <= 30; ++n)
    {
        in.N_UE = n;
        in.N_train = 2;
        const double t = latency(in, cfg);
        CHECK(t >= prev);
        prev = t;
        in.N_train = 3;
        CHECK(latency(in, cfg) >= t);
        in.N_train = 2;
        in.P_MD = 0.1;
        CHECK(latency(in, cfg) >= t);
        in.P_MD = 0.0;
    }
}

TEST_CASE("Overhead model", "[theory]")
{
    FrameConfig cfg;
    SystemModelInputs in;
    in.K_R_override = 0;
    CHECK(overhead(in, cfg) == Catch::Approx(0.8192).epsilon(1e-12));
    in.K_R_override = 1;
    const double o1 = overhead(in, cfg);
    in.K_R_override = 2;
    const double o2 = overhead(in, cfg);
    CHECK(o2 - o1 == Catch::Approx(o1 - 0.8192).epsilon(1e-10));
    FrameConfig slow = cfg;
    slow.T_SS *= 2;
    in.K_R_override = 0;
    CHECK(overhead(in, slow) == Catch::Approx(0.8192 / 2).epsilon(1e-12));
    // K_R from the idle time after the bursts.
    in.K_R_override = -1;
    CHECK(in.K_R(cfg) == static_cast<int>((20e-3 - 64 * 1024 / 57.6e6) / 1e-3));
}

TEST_CASE("Complexity counts", "[theory]")
{
    FrameConfig cfg;
    const auto c = complexity_counts(cfg, 500, 256, 64);
    CHECK(c.pss_corr == 131072);
    CHECK(c.detect == 1024);
    CHECK(c.delay_est == 128u * 500 + 128u * 64);
    CHECK(c.aoa_aod == 64u * 256 * 64);
    CHECK(c.cfo == 2u * 64 * 256 * 64);
    // Planar arrays of 64 and 16 elements with twice as many grid points.
    CHECK(complexity_ratio(cfg, 500, 128, 32) == Catch::Approx(981504.0 / 131072.0).epsilon(1e-14));
    CHECK_THROWS_AS(complexity_counts(cfg, 0, 1, 1), ConfigError);
}
