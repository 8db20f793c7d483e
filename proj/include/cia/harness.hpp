// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo experiment runner. Every trial draws from its own random stream
// keyed by (master seed, purpose, trial index), so results do not depend on the
// number of worker threads.

#ifndef CIA_HARNESS_HPP
#define CIA_HARNESS_HPP

#include "cia/config.hpp"
#include "cia/theory.hpp"

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace cia
{
    struct Scenario
    {
        FrameConfig cfg;

        // Arrays and channel
        int N_tx = 128;
        int N_rx = 32;
        int L = 2;
        std::vector<double> relative_power_db; // empty means equal power
        double angle_limit = pi / 2;
        double noise_power = 1.0;

        // Synchronization
        double cfo_ppm = 5.0; // applied by the *_CFO discovery modes and by training
        double carrier_hz = 28e9;
        std::vector<int> eps_T = {170};

        // Discovery
        std::vector<std::string> modes = {"PT", "NT", "NT_CFO", "DIA"};
        double p_fa = 0.01;
        int M_tx = 16; // DIA sector counts, M_tx * M_rx must equal M
        int M_rx = 4;
        int dia_calibration_trials = 2000;

        // Training
        std::vector<std::pair<int, int>> arrays = {{32, 8}, {128, 32}}; // (N_tx, N_rx)
        int G_d = 500;
        int grid_factor = 2; // G = grid_factor * N per array end
        double training_angle_limit = pi / 3;

        // System model
        std::vector<int> n_ue;
        std::vector<int> K_R = {1, 2, 5};
        std::vector<int> n_train_dia = {1, 2};
        double P_MD = 0.04;
        double T_R = 1e-3;
        double T_r = 17.84e-6;
        double B_IA = 57.6e6;
        double B_tot = 400e6;

        std::vector<double> snr_db;
        int trials = 2000;
        std::uint64_t seed = 1;
    };

    // Keys mirror the field names; lists are comma separated, the SNR axis also accepts lo:step:hi.
    // Keys absent from kv keep their value from base.
    Scenario scenario_from(const KeyValues &kv, const Scenario &base = {});
    std::string scenario_json(const Scenario &sc);
    void validate_scenario(const Scenario &sc);

    std::vector<double> parse_range(const std::string &text);

    struct ResultRow
    {
        double sweep = 0.0;
        std::string metric;
        double sim = 0.0;
        double theory = 0.0; // NaN when no closed form exists
        int trials = 0;
        double ci95 = 0.0;
    };

    // Header sweep,metric,sim,theory,trials,ci95; shortest round-trip numbers, empty theory for NaN.
    void write_csv(std::ostream &out, const std::vector<ResultRow> &rows);
    std::string to_csv(const std::vector<ResultRow> &rows);

    struct Interval
    {
        double lo = 0.0;
        double hi = 1.0;
        double half_width() const { return 0.5 * (hi - lo); }
        bool contains(double x) const { return x >= lo && x <= hi; }
    };

    // Wilson score interval for a proportion p observed over n trials.
    Interval wilson_interval(double p, int n, double z = 1.959963984540054);

    // Runs fn(i) for i in [0, n) on `threads` workers and returns the results in index order.
    template <class F>
    auto parallel_map(int n, int threads, F fn) -> std::vector<decltype(fn(0))>
    {
        std::vector<decltype(fn(0))> out(static_cast<std::size_t>(n));
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (int i = next++; i < n; i = next++)
                out[static_cast<std::size_t>(i)] = fn(i);
        };
        const int t = std::max(1, std::min(threads, n));
        std::vector<std::thread> pool;
        for (int k = 1; k < t; ++k)
            pool.emplace_back(worker);
        worker();
        for (auto &th : pool)
            th.join();
        return out;
    }

    // P_MD per SNR and mode. NT misses include timing estimates outside the
    // window that captures every tap.
    std::vector<ResultRow> run_discovery_sweep(const Scenario &sc, int threads = 1);

    // Coarse and refined angle RMSE with the CRLB as theory, for every array setting.
    std::vector<ResultRow> run_training_sweep(const Scenario &sc, int threads = 1);

    // Latency per N_UE for each K_R: compressive (no CSI-RS rounds) and DIA with
    // n_train_dia rounds, simulated by discrete events and compared with the closed form.
    std::vector<ResultRow> run_latency_overhead(const Scenario &sc, int threads = 1);

    // Mean sqrt(CRLB) of both angles over random LOS draws.
    std::vector<ResultRow> run_crlb_sweep(const Scenario &sc, int threads = 1);

    enum class SelftestMutation
    {
        none,
        gumbel_constant,    // Gumbel scale 0.78 replaced by 0.5
        corrupt_dictionary  // two angle atoms swapped
    };

    struct SelftestCheck
    {
        std::string name;
        bool pass = false;
        std::string detail;
    };

    std::vector<SelftestCheck> run_selftest(SelftestMutation mutation = SelftestMutation::none);
}

#endif
