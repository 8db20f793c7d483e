// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end for the Monte Carlo sweeps.
//
//   cia-sim discover-sweep   --snr -25:2.5:0 --trials 2000 --out results
//   cia-sim training-sweep   --snr -10:5:20 --trials 500
//   cia-sim latency-overhead --config system.cfg
//   cia-sim crlb             --snr -10:5:20
//   cia-sim selftest         [--mutate gumbel|dictionary]
//
// Every sweep writes <out>/<subcommand>.csv and a JSON sidecar with the full scenario.

#include "cia/harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace
{
    struct CommonFlags
    {
        std::string config;
        std::string out = ".";
        std::optional<std::uint64_t> seed;
        std::optional<int> trials;
        int threads = 1;
        std::string snr;
    };

    void add_common(CLI::App *cmd, CommonFlags &f)
    {
        cmd->add_option("--config", f.config, "key = value scenario file")->check(CLI::ExistingFile);
        cmd->add_option("--out", f.out, "output directory");
        cmd->add_option("--seed", f.seed, "master seed");
        cmd->add_option("--trials", f.trials, "trials per sweep point")->check(CLI::PositiveNumber);
        cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
        cmd->add_option("--snr", f.snr, "SNR axis in dB, lo:step:hi or a comma list");
    }

    cia::Scenario load(const CommonFlags &f, cia::Scenario sc)
    {
        if (!f.config.empty())
            sc = cia::scenario_from(cia::read_key_value_file(f.config), sc);
        if (f.seed)
            sc.seed = *f.seed;
        if (f.trials)
            sc.trials = *f.trials;
        if (!f.snr.empty())
            sc.snr_db = cia::parse_range(f.snr);
        cia::validate_scenario(sc);
        return sc;
    }

    int emit(const std::string &name, const CommonFlags &f, const cia::Scenario &sc, const std::vector<cia::ResultRow> &rows)
    {
        namespace fs = std::filesystem;
        fs::create_directories(f.out);
        const fs::path csv = fs::path(f.out) / (name + ".csv");
        const fs::path json = fs::path(f.out) / (name + ".json");
        {
            std::ofstream o(csv);
            cia::write_csv(o, rows);
        }
        {
            std::ofstream o(json);
            o << cia::scenario_json(sc) << '\n';
        }
        cia::write_csv(std::cout, rows);
        std::cerr << "wrote " << csv.string() << " and " << json.string() << '\n';
        return 0;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Compressive initial access link-level simulator"};
    app.require_subcommand(1);

    CommonFlags disc_f, train_f, lat_f, crlb_f;
    auto *disc = app.add_subcommand("discover-sweep", "miss-detection rate versus SNR");
    add_common(disc, disc_f);
    auto *train = app.add_subcommand("training-sweep", "angle RMSE versus SNR with the CRLB");
    add_common(train, train_f);
    auto *lat = app.add_subcommand("latency-overhead", "access latency and overhead versus number of users");
    add_common(lat, lat_f);
    auto *crlb = app.add_subcommand("crlb", "angle CRLB versus SNR");
    add_common(crlb, crlb_f);

    auto *self = app.add_subcommand("selftest", "built-in consistency checks");
    std::string mutate = "none";
    self->add_option("--mutate", mutate, "inject a known fault")->check(CLI::IsMember({"none", "gumbel", "dictionary"}));

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*disc)
        {
            cia::Scenario sc;
            sc.snr_db = cia::parse_range("-25:2.5:0");
            sc = load(disc_f, sc);
            return emit("discover-sweep", disc_f, sc, cia::run_discovery_sweep(sc, disc_f.threads));
        }
        if (*train)
        {
            cia::Scenario sc;
            sc.snr_db = cia::parse_range("-10:5:20");
            sc.trials = 500;
            sc = load(train_f, sc);
            return emit("training-sweep", train_f, sc, cia::run_training_sweep(sc, train_f.threads));
        }
        if (*lat)
        {
            cia::Scenario sc;
            sc.n_ue = {1, 2, 5, 10, 20, 50, 100};
            sc.K_R = {1, 2, 5, 10};
            sc.trials = 10000;
            sc = load(lat_f, sc);
            return emit("latency-overhead", lat_f, sc, cia::run_latency_overhead(sc, lat_f.threads));
        }
        if (*crlb)
        {
            cia::Scenario sc;
            sc.snr_db = cia::parse_range("-10:5:20");
            sc.trials = 200;
            sc = load(crlb_f, sc);
            return emit("crlb", crlb_f, sc, cia::run_crlb_sweep(sc, crlb_f.threads));
        }
        if (*self)
        {
            const auto m = mutate == "gumbel"       ? cia::SelftestMutation::gumbel_constant
                           : mutate == "dictionary" ? cia::SelftestMutation::corrupt_dictionary
                                                    : cia::SelftestMutation::none;
            bool ok = true;
            for (const auto &c : cia::run_selftest(m))
            {
                std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  (" << c.detail << ")\n";
                ok = ok && c.pass;
            }
            std::cout << (ok ? "selftest passed" : "selftest FAILED") << '\n';
            return ok ? 0 : 1;
        }
    }
    catch (const cia::ConfigError &e)
    {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
