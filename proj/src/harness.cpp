// SPDX-License-Identifier: Apache-2.0

#include "cia/harness.hpp"
#include "cia/channel.hpp"
#include "cia/detection.hpp"
#include "cia/training.hpp"

#include <boost/random/normal_distribution.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace cia
{
    namespace
    {
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        constexpr double z95 = 1.959963984540054;

        std::vector<std::string> split(const std::string &s, char sep)
        {
            std::vector<std::string> out;
            std::string cur;
            std::istringstream in(s);
            while (std::getline(in, cur, sep))
            {
                const auto b = cur.find_first_not_of(" \t");
                const auto e = cur.find_last_not_of(" \t");
                if (b != std::string::npos)
                    out.push_back(cur.substr(b, e - b + 1));
            }
            return out;
        }

        std::vector<double> parse_double_list(const std::string &key, const std::string &v)
        {
            std::vector<double> out;
            for (const auto &s : split(v, ','))
                out.push_back(parse_double(key, s));
            return out;
        }

        std::vector<int> parse_int_list(const std::string &key, const std::string &v)
        {
            std::vector<int> out;
            for (const auto &s : split(v, ','))
                out.push_back(static_cast<int>(parse_integer(key, s)));
            return out;
        }

        double deg(double rad) { return rad * 180.0 / pi; }
        double rad(double degv) { return degv * pi / 180.0; }

        std::string array_tag(const std::pair<int, int> &a) { return std::to_string(a.first) + "x" + std::to_string(a.second); }

        // Mean square with a delta-method 95 % half-width on its square root.
        struct RmsAccumulator
        {
            double sum = 0.0, sum2 = 0.0;
            int n = 0;
            void add(double e2)
            {
                sum += e2;
                sum2 += e2 * e2;
                ++n;
            }
            double rms() const { return n ? std::sqrt(sum / n) : nan; }
            double ci95() const
            {
                if (n < 2)
                    return nan;
                const double mean = sum / n;
                const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1));
                const double half_ms = z95 * std::sqrt(var / n);
                return mean > 0.0 ? half_ms / (2.0 * std::sqrt(mean)) : 0.0;
            }
        };
    }

    // ----- scenario -----------------------------------------------------------------

    std::vector<double> parse_range(const std::string &text)
    {
        const auto parts = split(text, ':');
        if (parts.size() == 3)
        {
            const double lo = parse_double("range", parts[0]);
            const double step = parse_double("range", parts[1]);
            const double hi = parse_double("range", parts[2]);
            if (!(step > 0.0) || hi < lo)
                throw ConfigError("range 'lo:step:hi' needs step > 0 and hi >= lo");
            std::vector<double> out;
            const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
            for (int i = 0; i <= n; ++i)
                out.push_back(lo + i * step);
            return out;
        }
        if (text.find(':') != std::string::npos)
            throw ConfigError("range must be 'lo:step:hi' or a comma list");
        return parse_double_list("range", text);
    }

    void validate_scenario(const Scenario &sc)
    {
        validate_config(sc.cfg);
        if (sc.trials < 1)
            throw ConfigError("trials must be at least 1");
        if (sc.N_tx < 1 || sc.N_rx < 1)
            throw ConfigError("array sizes must be positive");
        if (sc.L < 1)
            throw ConfigError("channel needs at least one path (L >= 1)");
        if (sc.L > sc.cfg.N_c)
            throw ConfigError("discovery draws distinct integer taps, so L <= N_c");
        if (!sc.relative_power_db.empty() && static_cast<int>(sc.relative_power_db.size()) != sc.L)
            throw ConfigError("relative_power_db must list one value per path");
        if (!(sc.p_fa > 0.0 && sc.p_fa < 1.0))
            throw ConfigError("p_fa must lie in (0, 1)");
        for (int e : sc.eps_T)
            validate_sync({e, 0.0}, sc.cfg);
        for (const auto &m : sc.modes)
            if (m != "PT" && m != "NT" && m != "DIA" && m != "PT_CFO" && m != "NT_CFO" && m != "DIA_CFO")
                throw ConfigError("unknown discovery mode '" + m + "'");
        if (!(sc.noise_power > 0.0))
            throw ConfigError("noise_power must be positive");
    }

    Scenario scenario_from(const KeyValues &kv, const Scenario &base)
    {
        Scenario sc = base;
        KeyValues frame;
        frame_config_to(base.cfg, frame);
        frame.erase("T_B");
        for (const char *k : {"P", "M", "N_B", "N_CP", "N_c", "T_s", "T_SS", "T_B", "eps_T_max"})
            if (auto it = kv.find(k); it != kv.end())
                frame[k] = it->second;
        sc.cfg = frame_config_from(frame);

        for (const auto &[key, v] : kv)
        {
            if (frame.count(key))
                continue;
            if (key == "N_tx")
                sc.N_tx = static_cast<int>(parse_integer(key, v));
            else if (key == "N_rx")
                sc.N_rx = static_cast<int>(parse_integer(key, v));
            else if (key == "L")
                sc.L = static_cast<int>(parse_integer(key, v));
            else if (key == "relative_power_db")
                sc.relative_power_db = parse_double_list(key, v);
            else if (key == "angle_limit_deg")
                sc.angle_limit = rad(parse_double(key, v));
            else if (key == "noise_power")
                sc.noise_power = parse_double(key, v);
            else if (key == "cfo_ppm")
                sc.cfo_ppm = parse_double(key, v);
            else if (key == "carrier_hz")
                sc.carrier_hz = parse_double(key, v);
            else if (key == "eps_T")
                sc.eps_T = parse_int_list(key, v);
            else if (key == "modes")
                sc.modes = split(v, ',');
            else if (key == "p_fa")
                sc.p_fa = parse_double(key, v);
            else if (key == "M_tx")
                sc.M_tx = static_cast<int>(parse_integer(key, v));
            else if (key == "M_rx")
                sc.M_rx = static_cast<int>(parse_integer(key, v));
            else if (key == "dia_calibration_trials")
                sc.dia_calibration_trials = static_cast<int>(parse_integer(key, v));
            else if (key == "arrays")
            {
                sc.arrays.clear();
                for (const auto &a : split(v, ','))
                {
                    const auto nm = split(a, 'x');
                    if (nm.size() != 2)
                        throw ConfigError("arrays entries must look like 32x8");
                    sc.arrays.emplace_back(static_cast<int>(parse_integer(key, nm[0])), static_cast<int>(parse_integer(key, nm[1])));
                }
            }
            else if (key == "G_d")
                sc.G_d = static_cast<int>(parse_integer(key, v));
            else if (key == "grid_factor")
                sc.grid_factor = static_cast<int>(parse_integer(key, v));
            else if (key == "training_angle_limit_deg")
                sc.training_angle_limit = rad(parse_double(key, v));
            else if (key == "n_ue")
                sc.n_ue = parse_int_list(key, v);
            else if (key == "K_R")
                sc.K_R = parse_int_list(key, v);
            else if (key == "n_train_dia")
                sc.n_train_dia = parse_int_list(key, v);
            else if (key == "P_MD")
                sc.P_MD = parse_double(key, v);
            else if (key == "T_R")
                sc.T_R = parse_double(key, v);
            else if (key == "T_r")
                sc.T_r = parse_double(key, v);
            else if (key == "B_IA")
                sc.B_IA = parse_double(key, v);
            else if (key == "B_tot")
                sc.B_tot = parse_double(key, v);
            else if (key == "snr_db")
                sc.snr_db = parse_range(v);
            else if (key == "trials")
                sc.trials = static_cast<int>(parse_integer(key, v));
            else if (key == "seed")
                sc.seed = static_cast<std::uint64_t>(parse_integer(key, v));
            else
                throw ConfigError("unknown scenario key '" + key + "'");
        }
        validate_scenario(sc);
        return sc;
    }

    std::string scenario_json(const Scenario &sc)
    {
        nlohmann::ordered_json j;
        KeyValues frame;
        frame_config_to(sc.cfg, frame);
        j["frame"] = {{"P", sc.cfg.P},       {"M", sc.cfg.M},       {"N_B", sc.cfg.N_B},   {"N_CP", sc.cfg.N_CP},
                      {"N_c", sc.cfg.N_c},   {"T_s", sc.cfg.T_s},   {"T_SS", sc.cfg.T_SS}, {"T_B", sc.cfg.T_B()},
                      {"eps_T_max", sc.cfg.eps_T_max}};
        j["N_tx"] = sc.N_tx;
        j["N_rx"] = sc.N_rx;
        j["L"] = sc.L;
        j["relative_power_db"] = sc.relative_power_db;
        j["angle_limit_deg"] = deg(sc.angle_limit);
        j["noise_power"] = sc.noise_power;
        j["cfo_ppm"] = sc.cfo_ppm;
        j["carrier_hz"] = sc.carrier_hz;
        j["eps_T"] = sc.eps_T;
        j["modes"] = sc.modes;
        j["p_fa"] = sc.p_fa;
        j["M_tx"] = sc.M_tx;
        j["M_rx"] = sc.M_rx;
        j["dia_calibration_trials"] = sc.dia_calibration_trials;
        std::vector<std::string> arrays;
        for (const auto &a : sc.arrays)
            arrays.push_back(array_tag(a));
        j["arrays"] = arrays;
        j["G_d"] = sc.G_d;
        j["grid_factor"] = sc.grid_factor;
        j["training_angle_limit_deg"] = deg(sc.training_angle_limit);
        j["n_ue"] = sc.n_ue;
        j["K_R"] = sc.K_R;
        j["n_train_dia"] = sc.n_train_dia;
        j["P_MD"] = sc.P_MD;
        j["T_R"] = sc.T_R;
        j["T_r"] = sc.T_r;
        j["B_IA"] = sc.B_IA;
        j["B_tot"] = sc.B_tot;
        j["snr_db"] = sc.snr_db;
        j["trials"] = sc.trials;
        j["seed"] = sc.seed;
        return j.dump(2);
    }

    // ----- output -------------------------------------------------------------------

    void write_csv(std::ostream &out, const std::vector<ResultRow> &rows)
    {
        auto num = [](double x) { return std::isnan(x) ? std::string() : format_double(x); };
        out << "sweep,metric,sim,theory,trials,ci95\n";
        for (const auto &r : rows)
            out << num(r.sweep) << ',' << r.metric << ',' << num(r.sim) << ',' << num(r.theory) << ',' << r.trials << ','
                << num(r.ci95) << '\n';
    }

    std::string to_csv(const std::vector<ResultRow> &rows)
    {
        std::ostringstream ss;
        write_csv(ss, rows);
        return ss.str();
    }

    Interval wilson_interval(double p, int n, double z)
    {
        if (n < 1)
            throw ConfigError("Wilson interval needs n >= 1");
        const double z2 = z * z;
        const double denom = 1.0 + z2 / n;
        const double center = (p + z2 / (2.0 * n)) / denom;
        const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
        return {std::max(0.0, center - half), std::min(1.0, center + half)};
    }

    // ----- discovery ----------------------------------------------------------------

    namespace
    {
        struct ModeSpec
        {
            DetectMode base = DetectMode::PT;
            bool cfo = false;
        };

        ModeSpec parse_mode(const std::string &m)
        {
            ModeSpec s;
            s.cfo = m.size() > 4 && m.substr(m.size() - 4) == "_CFO";
            const std::string b = s.cfo ? m.substr(0, m.size() - 4) : m;
            s.base = b == "PT" ? DetectMode::PT : b == "NT" ? DetectMode::NT : DetectMode::DIA;
            return s;
        }

        ChannelDrawSpec discovery_channel(const Scenario &sc)
        {
            ChannelDrawSpec spec;
            spec.L = sc.L;
            spec.relative_power_db = sc.relative_power_db;
            spec.angle_limit = sc.angle_limit;
            spec.integer_delays = true;
            return spec;
        }

        // First and last occupied tap.
        std::pair<int, int> tap_span(const ChannelRealization &chan, const FrameConfig &cfg)
        {
            int lo = cfg.N_c, hi = 0;
            for (const auto &p : chan.paths)
            {
                const int d = static_cast<int>(std::lround(p.delay / cfg.T_s));
                lo = std::min(lo, d);
                hi = std::max(hi, d);
            }
            return {lo, hi};
        }
    }

    std::vector<ResultRow> run_discovery_sweep(const Scenario &sc, int threads)
    {
        validate_scenario(sc);
        if (sc.snr_db.empty())
            throw ConfigError("discovery sweep needs a non-empty SNR list");
        const FrameConfig &cfg = sc.cfg;
        const PssSequence pss = gen_zc(default_zc_root, cfg.P);
        const double eps_cfo = cfo_from_ppm(sc.cfo_ppm, sc.carrier_hz, cfg.T_s);
        const ChannelDrawSpec spec = discovery_channel(sc);

        DetectionTheoryInputs th;
        th.cfg = cfg;
        th.p_fa_star = sc.p_fa;
        th.noise_power = sc.noise_power;
        th.mode = DetectMode::PT;
        const double eta_pt = threshold_opt(th);
        th.mode = DetectMode::NT;
        const double eta_nt = threshold_opt(th);

        const bool any_dia = std::any_of(sc.modes.begin(), sc.modes.end(), [](const std::string &m) { return parse_mode(m).base == DetectMode::DIA; });
        double eta_dia = nan;
        std::pair<Codebook, Codebook> sectors;
        if (any_dia)
        {
            if (sc.M_tx * sc.M_rx != cfg.M)
                throw ConfigError("DIA needs M_tx * M_rx == M");
            sectors = schedule_codebooks(gen_sector(sc.N_tx, sc.M_tx), gen_sector(sc.N_rx, sc.M_rx));
            const int len = capture_length(cfg);
            auto noise = [&](int t) {
                auto rng = derive_stream(sc.seed, "dia-calibration", static_cast<std::uint64_t>(t)).engine();
                boost::random::normal_distribution<double> g(0.0, std::sqrt(sc.noise_power / 2.0));
                arma::cx_vec y(len);
                for (auto &x : y)
                    x = {g(rng), g(rng)};
                return y;
            };
            eta_dia = calibrate_dia_threshold(noise, pss, cfg, sc.p_fa, sc.dia_calibration_trials);
        }

        std::vector<ResultRow> rows;
        for (double snr_db : sc.snr_db)
        {
            const double snr = std::pow(10.0, snr_db / 10.0);
            for (int eps_T : sc.eps_T)
            {
                // Modes sharing a codebook family and CFO reuse one capture per trial.
                for (int group = 0; group < 4; ++group)
                {
                    const bool dia = group >= 2, cfo = group % 2 == 1;
                    std::vector<std::string> members;
                    for (const auto &m : sc.modes)
                    {
                        const ModeSpec ms = parse_mode(m);
                        if ((ms.base == DetectMode::DIA) == dia && ms.cfo == cfo)
                            members.push_back(m);
                    }
                    if (members.empty())
                        continue;

                    const SyncState sync{eps_T, cfo ? eps_cfo : 0.0};
                    const std::string purpose = std::string("discovery:") + (dia ? "dia" : "compressive") + (cfo ? ":cfo" : "") +
                                                ":snr=" + format_double(snr_db) + ":eT=" + std::to_string(eps_T);

                    auto trial = [&](int t) {
                        auto rng = derive_stream(sc.seed, purpose, static_cast<std::uint64_t>(t)).engine();
                        const ChannelRealization chan = draw_channel(spec, cfg, snr * sc.noise_power, sc.noise_power, rng);
                        Codebook tx, rx;
                        if (dia)
                        {
                            tx = sectors.first;
                            rx = sectors.second;
                        }
                        else
                        {
                            tx = gen_pseudorandom(sc.N_tx, cfg.M, rng);
                            rx = gen_pseudorandom(sc.N_rx, cfg.M, rng);
                        }
                        const RxCapture cap = synth_rx(cfg, chan, tx, rx, sync, pss, rng);
                        const arma::cx_vec corr = pss_correlate(cap.y, pss);
                        std::vector<char> miss;
                        for (const auto &m : members)
                        {
                            const ModeSpec ms = parse_mode(m);
                            if (ms.base == DetectMode::PT)
                                miss.push_back(window_energy(corr, cfg, eps_T) < eta_pt);
                            else if (ms.base == DetectMode::NT)
                            {
                                const DetectionResult r = detect_nt(corr, cfg, eta_nt);
                                // Any window start that still collects every tap counts as acquired.
                                const auto [d_min, d_max] = tap_span(chan, cfg);
                                const bool timed = r.eps_T_hat && *r.eps_T_hat >= eps_T + d_max - (cfg.N_c - 1) &&
                                                   *r.eps_T_hat <= eps_T + d_min;
                                miss.push_back(r.decision == Hypothesis::H0 || !timed);
                            }
                            else
                                miss.push_back(detect_dia(corr, cfg, eta_dia).decision == Hypothesis::H0);
                        }
                        return miss;
                    };
                    const auto results = parallel_map(sc.trials, threads, trial);

                    for (std::size_t i = 0; i < members.size(); ++i)
                    {
                        int misses = 0;
                        for (const auto &r : results)
                            misses += r[i];
                        const double p = static_cast<double>(misses) / sc.trials;
                        const ModeSpec ms = parse_mode(members[i]);
                        double theory = nan;
                        if (ms.base != DetectMode::DIA)
                        {
                            DetectionTheoryInputs in = th;
                            in.mode = ms.base;
                            in.snr = snr;
                            in.eps_F = sync.eps_F;
                            in.eps_T = eps_T;
                            theory = pmd_theory(in);
                        }
                        rows.push_back({snr_db, "pmd_" + members[i] + "_eT" + std::to_string(eps_T), p, theory, sc.trials,
                                        wilson_interval(p, sc.trials).half_width()});
                    }
                }
            }
        }
        return rows;
    }

    // ----- training -------------------------------------------------------------------

    std::vector<ResultRow> run_training_sweep(const Scenario &sc, int threads)
    {
        validate_scenario(sc);
        if (sc.snr_db.empty())
            throw ConfigError("training sweep needs a non-empty SNR list");
        const FrameConfig &cfg = sc.cfg;
        const PssSequence pss = gen_zc(default_zc_root, cfg.P);
        const double eps_F = cfo_from_ppm(sc.cfo_ppm, sc.carrier_hz, cfg.T_s);
        const int eps_T = sc.eps_T.front();

        ChannelDrawSpec spec;
        spec.L = 1;
        spec.angle_limit = sc.training_angle_limit;

        TrainingOptions opts;
        opts.cfo_bound = std::abs(eps_F) * 1.05;

        std::vector<ResultRow> rows;
        for (const auto &arr : sc.arrays)
        {
            const std::string tag = array_tag(arr);
            auto cb_rng = derive_stream(sc.seed, "training-codebook:" + tag, 0).engine();
            const Codebook tx = gen_pseudorandom(arr.first, cfg.M, cb_rng);
            const Codebook rx = gen_pseudorandom(arr.second, cfg.M, cb_rng);
            const Dictionaries dict =
                build_dictionaries(cfg, pss, tx, rx, sc.G_d, sc.grid_factor * arr.first, sc.grid_factor * arr.second);
            const LosModel model(cfg, pss, tx, rx);

            for (double snr_db : sc.snr_db)
            {
                const double snr = std::pow(10.0, snr_db / 10.0);
                const std::string purpose = "training:" + tag + ":snr=" + format_double(snr_db);
                struct Out
                {
                    double e2[4]; // aoa coarse, aod coarse, aoa refined, aod refined
                    double crlb_phi, crlb_theta;
                };
                auto trial = [&](int t) {
                    auto rng = derive_stream(sc.seed, purpose, static_cast<std::uint64_t>(t)).engine();
                    const ChannelRealization chan = draw_channel(spec, cfg, snr * sc.noise_power, sc.noise_power, rng);
                    const PathComponent &p = chan.paths[0];
                    const RxCapture cap = synth_rx(cfg, chan, tx, rx, {eps_T, eps_F}, pss, rng);

                    TrainingOptions coarse_opts = opts;
                    coarse_opts.do_refine = false;
                    const TrainingEstimate coarse = train(cap.y, eps_T, cfg, dict, model, coarse_opts);
                    const arma::cx_vec y = arma::vectorise(rearrange(cap.y, eps_T, cfg));
                    const TrainingEstimate fine = refine(y, coarse, model, opts.refine);

                    const FimResult f = fim({eps_F, p.aod, p.aoa, p.delay, p.gain}, cfg, tx, rx, pss, sc.noise_power);
                    Out o;
                    o.e2[0] = std::pow(coarse.phi_hat - p.aoa, 2);
                    o.e2[1] = std::pow(coarse.theta_hat - p.aod, 2);
                    o.e2[2] = std::pow(fine.phi_hat - p.aoa, 2);
                    o.e2[3] = std::pow(fine.theta_hat - p.aod, 2);
                    o.crlb_phi = f.singular ? nan : f.crlb_phi;
                    o.crlb_theta = f.singular ? nan : f.crlb_theta;
                    return o;
                };
                const auto results = parallel_map(sc.trials, threads, trial);

                RmsAccumulator acc[4];
                double crlb_phi = 0.0, crlb_theta = 0.0;
                int n_crlb = 0;
                for (const auto &o : results)
                {
                    for (int k = 0; k < 4; ++k)
                        acc[k].add(o.e2[k]);
                    if (std::isfinite(o.crlb_phi) && std::isfinite(o.crlb_theta))
                    {
                        crlb_phi += o.crlb_phi;
                        crlb_theta += o.crlb_theta;
                        ++n_crlb;
                    }
                }
                const double b_phi = n_crlb ? std::sqrt(crlb_phi / n_crlb) : nan;
                const double b_theta = n_crlb ? std::sqrt(crlb_theta / n_crlb) : nan;
                const char *names[4] = {"rmse_aoa_coarse_", "rmse_aod_coarse_", "rmse_aoa_refined_", "rmse_aod_refined_"};
                for (int k = 0; k < 4; ++k)
                    rows.push_back({snr_db, names[k] + tag, acc[k].rms(), k % 2 == 0 ? b_phi : b_theta, sc.trials, acc[k].ci95()});
            }
        }
        return rows;
    }

    std::vector<ResultRow> run_crlb_sweep(const Scenario &sc, int threads)
    {
        validate_scenario(sc);
        if (sc.snr_db.empty())
            throw ConfigError("CRLB sweep needs a non-empty SNR list");
        const FrameConfig &cfg = sc.cfg;
        const PssSequence pss = gen_zc(default_zc_root, cfg.P);
        const double eps_F = cfo_from_ppm(sc.cfo_ppm, sc.carrier_hz, cfg.T_s);
        ChannelDrawSpec spec;
        spec.L = 1;
        spec.angle_limit = sc.training_angle_limit;

        std::vector<ResultRow> rows;
        for (const auto &arr : sc.arrays)
        {
            const std::string tag = array_tag(arr);
            auto cb_rng = derive_stream(sc.seed, "training-codebook:" + tag, 0).engine();
            const Codebook tx = gen_pseudorandom(arr.first, cfg.M, cb_rng);
            const Codebook rx = gen_pseudorandom(arr.second, cfg.M, cb_rng);
            for (double snr_db : sc.snr_db)
            {
                const double snr = std::pow(10.0, snr_db / 10.0);
                const std::string purpose = "crlb:" + tag + ":snr=" + format_double(snr_db);
                auto trial = [&](int t) {
                    auto rng = derive_stream(sc.seed, purpose, static_cast<std::uint64_t>(t)).engine();
                    const auto chan = draw_channel(spec, cfg, snr * sc.noise_power, sc.noise_power, rng);
                    const auto &p = chan.paths[0];
                    const FimResult f = fim({eps_F, p.aod, p.aoa, p.delay, p.gain}, cfg, tx, rx, pss, sc.noise_power);
                    return std::pair<double, double>(f.singular ? nan : f.crlb_phi, f.singular ? nan : f.crlb_theta);
                };
                const auto results = parallel_map(sc.trials, threads, trial);
                RmsAccumulator phi, theta;
                for (const auto &[a, b] : results)
                    if (std::isfinite(a) && std::isfinite(b))
                    {
                        phi.add(a);
                        theta.add(b);
                    }
                rows.push_back({snr_db, "crlb_aoa_" + tag, phi.rms(), phi.rms(), phi.n, phi.ci95()});
                rows.push_back({snr_db, "crlb_aod_" + tag, theta.rms(), theta.rms(), theta.n, theta.ci95()});
            }
        }
        return rows;
    }

    // ----- latency and overhead -----------------------------------------------------

    std::vector<ResultRow> run_latency_overhead(const Scenario &sc, int threads)
    {
        validate_scenario(sc);
        if (sc.n_ue.empty())
            throw ConfigError("latency sweep needs a non-empty N_UE list");
        const FrameConfig &cfg = sc.cfg;
        std::vector<ResultRow> rows;

        for (int K_R : sc.K_R)
        {
            SystemModelInputs base;
            base.T_R = sc.T_R;
            base.T_r = sc.T_r;
            base.B_IA = sc.B_IA;
            base.B_tot = sc.B_tot;
            base.P_MD = sc.P_MD;
            base.K_R_override = K_R;
            const std::string kr = "_KR" + std::to_string(K_R);

            std::vector<int> schemes = {0};
            if (K_R > 0)
                schemes.insert(schemes.end(), sc.n_train_dia.begin(), sc.n_train_dia.end());

            for (int N_UE : sc.n_ue)
            {
                for (int n_train : schemes)
                {
                    SystemModelInputs in = base;
                    in.N_UE = N_UE;
                    in.N_train = n_train;
                    const double theory = latency(in, cfg);
                    const std::string name =
                        n_train == 0 ? "latency_compressive" + kr : "latency_dia_n" + std::to_string(n_train) + kr;
                    const std::string purpose = name + ":nue=" + std::to_string(N_UE);

                    // Discrete events: geometric discovery retries, then one CSI-RS grant per
                    // training round at a uniformly random queue position.
                    auto trial = [&](int t) {
                        auto rng = derive_stream(sc.seed, purpose, static_cast<std::uint64_t>(t)).engine();
                        std::uniform_real_distribution<double> uni(0.0, 1.0);
                        double total = 0.0;
                        while (uni(rng) < sc.P_MD)
                            total += cfg.T_SS;
                        std::uniform_int_distribution<int> pos(0, N_UE - 1);
                        for (int r = 0; r < n_train; ++r)
                        {
                            const int q = pos(rng);
                            total += (q / K_R) * cfg.T_SS + (q % K_R + 1) * sc.T_R;
                        }
                        return total;
                    };
                    const auto results = parallel_map(sc.trials, threads, trial);
                    double s = 0.0, s2 = 0.0;
                    for (double v : results)
                    {
                        s += v;
                        s2 += v * v;
                    }
                    const double mean = s / sc.trials;
                    const double var = sc.trials > 1 ? std::max(0.0, (s2 - sc.trials * mean * mean) / (sc.trials - 1)) : 0.0;
                    rows.push_back({double(N_UE), name, mean, theory, sc.trials, z95 * std::sqrt(var / sc.trials)});
                }
                SystemModelInputs in = base;
                in.N_UE = N_UE;
                const double oh = overhead(in, cfg);
                rows.push_back({double(N_UE), "overhead_pct" + kr, oh, oh, 0, 0.0});
            }
        }
        return rows;
    }
}
