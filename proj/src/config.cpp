// SPDX-License-Identifier: Apache-2.0

#include "cia/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cia
{
    FrameConfig validate_config(const FrameConfig &cfg)
    {
        if (cfg.P < 1)
            throw ConfigError("P must be at least 1");
        if (cfg.M < 1)
            throw ConfigError("M must be at least 1");
        if (cfg.N_c < 1)
            throw ConfigError("N_c must be at least 1");
        if (cfg.N_CP <= cfg.N_c)
            throw ConfigError("CP must exceed max excess delay (N_CP > N_c)");
        if (cfg.N_B < cfg.P + cfg.N_CP)
            throw ConfigError("burst must hold the PSS and its CP (N_B >= P + N_CP)");
        if (cfg.eps_T_max < 0 || cfg.eps_T_max > cfg.N_B)
            throw ConfigError("timing window must satisfy 0 <= eps_T_max <= N_B");
        if (!(cfg.T_s > 0.0) || !std::isfinite(cfg.T_s))
            throw ConfigError("T_s must be positive");
        if (!(cfg.T_SS > 0.0) || !std::isfinite(cfg.T_SS))
            throw ConfigError("T_SS must be positive");
        return cfg;
    }

    double ChannelRealization::gain_power() const
    {
        double s = 0.0;
        for (const auto &p : paths)
            s += std::norm(p.gain);
        return s;
    }

    void validate_channel(const ChannelRealization &chan, const FrameConfig &cfg)
    {
        if (chan.paths.empty())
            throw ConfigError("channel needs at least one path (L >= 1)");
        if (!(chan.noise_power >= 0.0))
            throw ConfigError("noise power must be non-negative");
        for (const auto &p : chan.paths)
        {
            if (std::abs(std::sin(p.aod)) > 1.0 || std::abs(std::sin(p.aoa)) > 1.0 || !std::isfinite(p.aod) || !std::isfinite(p.aoa))
                throw ConfigError("path angles must be finite");
            if (p.delay < 0.0 || p.delay >= cfg.N_c * cfg.T_s)
                throw ConfigError("path delay must satisfy 0 <= tau < N_c*T_s");
        }
    }

    void validate_sync(const SyncState &sync, const FrameConfig &cfg)
    {
        if (sync.eps_T < 0 || sync.eps_T > cfg.eps_T_max)
            throw ConfigError("timing offset must satisfy 0 <= eps_T <= eps_T_max");
        if (!std::isfinite(sync.eps_F))
            throw ConfigError("CFO must be finite");
    }

    // ----- random streams ---------------------------------------------------

    namespace
    {
        std::uint64_t fnv1a(std::string_view s)
        {
            std::uint64_t h = 1469598103934665603ull;
            for (unsigned char c : s)
            {
                h ^= c;
                h *= 1099511628211ull;
            }
            return h;
        }
    }

    std::mt19937_64 RngStream::engine() const
    {
        auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x & 0xffffffffu); };
        auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
        std::seed_seq seq{lo(master_seed), hi(master_seed), lo(purpose_hash), hi(purpose_hash), lo(trial_index), hi(trial_index)};
        return std::mt19937_64(seq);
    }

    RngStream derive_stream(std::uint64_t master_seed, std::string_view purpose, std::uint64_t trial_index)
    {
        return RngStream{master_seed, fnv1a(purpose), trial_index};
    }

    // ----- key/value files -------------------------------------------------

    namespace
    {
        std::string trim(std::string_view s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string_view::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r");
            return std::string(s.substr(b, e - b + 1));
        }
    }

    KeyValues parse_key_values(std::string_view text)
    {
        KeyValues kv;
        std::size_t line_no = 0;
        while (!text.empty())
        {
            ++line_no;
            const auto nl = text.find('\n');
            std::string_view line = text.substr(0, nl);
            text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

            if (const auto hash = line.find('#'); hash != std::string_view::npos)
                line = line.substr(0, hash);
            const std::string body = trim(line);
            if (body.empty())
                continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
            const std::string key = trim(std::string_view(body).substr(0, eq));
            const std::string value = trim(std::string_view(body).substr(eq + 1));
            if (key.empty())
                throw ConfigError("line " + std::to_string(line_no) + ": empty key");
            kv[key] = value;
        }
        return kv;
    }

    std::string format_key_values(const KeyValues &kv)
    {
        std::string out;
        for (const auto &[k, v] : kv)
            out += k + " = " + v + "\n";
        return out;
    }

    KeyValues read_key_value_file(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_key_values(ss.str());
    }

    std::string format_double(double x)
    {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof(buf), x);
        return std::string(buf, res.ptr);
    }

    double parse_double(const std::string &key, const std::string &value)
    {
        double x = 0.0;
        const auto res = std::from_chars(value.data(), value.data() + value.size(), x);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size())
            throw ConfigError("key '" + key + "': '" + value + "' is not a number");
        return x;
    }

    long long parse_integer(const std::string &key, const std::string &value)
    {
        long long x = 0;
        const auto res = std::from_chars(value.data(), value.data() + value.size(), x);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size())
            throw ConfigError("key '" + key + "': '" + value + "' is not an integer");
        return x;
    }

    FrameConfig frame_config_from(const KeyValues &kv)
    {
        FrameConfig cfg;
        auto get_int = [&](const char *key, int &dst) {
            if (auto it = kv.find(key); it != kv.end())
                dst = static_cast<int>(parse_integer(key, it->second));
        };
        auto get_dbl = [&](const char *key, double &dst) {
            if (auto it = kv.find(key); it != kv.end())
                dst = parse_double(key, it->second);
        };
        get_int("P", cfg.P);
        get_int("M", cfg.M);
        get_int("N_B", cfg.N_B);
        get_int("N_CP", cfg.N_CP);
        get_int("N_c", cfg.N_c);
        get_dbl("T_s", cfg.T_s);
        get_dbl("T_SS", cfg.T_SS);
        get_int("eps_T_max", cfg.eps_T_max);

        // T_B is derived; when given it has to agree with N_B*T_s.
        if (auto it = kv.find("T_B"); it != kv.end())
        {
            const double t_b = parse_double("T_B", it->second);
            if (std::abs(t_b - cfg.T_B()) > 1e-12 * cfg.T_B())
                throw ConfigError("T_B must equal N_B*T_s");
        }
        return validate_config(cfg);
    }

    void frame_config_to(const FrameConfig &cfg, KeyValues &kv)
    {
        kv["P"] = std::to_string(cfg.P);
        kv["M"] = std::to_string(cfg.M);
        kv["N_B"] = std::to_string(cfg.N_B);
        kv["N_CP"] = std::to_string(cfg.N_CP);
        kv["N_c"] = std::to_string(cfg.N_c);
        kv["T_s"] = format_double(cfg.T_s);
        kv["T_SS"] = format_double(cfg.T_SS);
        kv["T_B"] = format_double(cfg.T_B());
        kv["eps_T_max"] = std::to_string(cfg.eps_T_max);
    }
}
