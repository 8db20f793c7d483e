// SPDX-License-Identifier: Apache-2.0
//
// Shared domain types for the compressive initial-access simulator: frame
// constants, channel realizations, synchronization offsets and the
// deterministic random-stream contract used by every Monte Carlo component.

#ifndef CIA_CONFIG_HPP
#define CIA_CONFIG_HPP

#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cia
{
    using cplx = std::complex<double>;

    inline constexpr double pi = 3.14159265358979323846;

    // Raised for any violated parameter invariant. The message names the invariant.
    class ConfigError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    // Frame and waveform constants. Defaults are the desk-scale reference setup
    // (57.6 MHz sampling, 128-sample PSS, 64 bursts of 1024 samples, 20 ms period).
    struct FrameConfig
    {
        int P = 128;                 // PSS length / subcarriers
        int M = 64;                  // SS bursts per period
        int N_B = 1024;              // samples per burst
        int N_CP = 8;                // cyclic prefix samples
        int N_c = 4;                 // max excess delay taps
        double T_s = 1.0 / 57.6e6;   // sample duration [s]
        double T_SS = 20e-3;         // SS period [s]
        int eps_T_max = 1024;        // timing search window [samples]

        double T_B() const { return N_B * T_s; } // burst duration [s]
        int N() const { return P + N_CP; }       // PSS samples including CP

        bool operator==(const FrameConfig &) const = default;
    };

    // Returns cfg unchanged when all invariants hold, throws ConfigError naming the first violation.
    FrameConfig validate_config(const FrameConfig &cfg);

    // One multipath cluster (single ray per cluster).
    struct PathComponent
    {
        cplx gain{1.0, 0.0}; // complex gain g_l
        double aod = 0.0;    // departure angle theta_l [rad]
        double aoa = 0.0;    // arrival angle phi_l [rad]
        double delay = 0.0;  // excess delay tau_l [s]
    };

    struct ChannelRealization
    {
        std::vector<PathComponent> paths;
        double noise_power = 1.0; // sigma_n^2, linear

        double gain_power() const; // sigma_g^2 = sum |g_l|^2
        double snr() const { return gain_power() / noise_power; }
    };

    void validate_channel(const ChannelRealization &chan, const FrameConfig &cfg);

    struct SyncState
    {
        int eps_T = 0;      // timing offset [samples]
        double eps_F = 0.0; // normalized CFO [rad/sample]
    };

    // Normalized CFO 2*pi*T_s*delta_f.
    inline double normalized_cfo(double delta_f_hz, double T_s) { return 2.0 * pi * T_s * delta_f_hz; }
    inline double cfo_from_ppm(double ppm, double carrier_hz, double T_s) { return normalized_cfo(ppm * 1e-6 * carrier_hz, T_s); }

    void validate_sync(const SyncState &sync, const FrameConfig &cfg);

    // Counter-based substream identifier. Draws depend only on (master_seed, stream_id),
    // never on evaluation order.
    struct RngStream
    {
        std::uint64_t master_seed = 0;
        std::uint64_t purpose_hash = 0;
        std::uint64_t trial_index = 0;

        std::mt19937_64 engine() const;
        bool operator==(const RngStream &) const = default;
    };

    RngStream derive_stream(std::uint64_t master_seed, std::string_view purpose, std::uint64_t trial_index);

    // ----- key/value configuration files --------------------------------------

    // Ordered "key = value" pairs; '#' starts a comment.
    using KeyValues = std::map<std::string, std::string>;

    KeyValues parse_key_values(std::string_view text);
    std::string format_key_values(const KeyValues &kv);
    KeyValues read_key_value_file(const std::string &path);

    // Shortest round-trip decimal representation.
    std::string format_double(double x);
    double parse_double(const std::string &key, const std::string &value);
    long long parse_integer(const std::string &key, const std::string &value);

    // Keys: P, M, N_B, N_CP, N_c, T_s, T_SS, eps_T_max. Missing keys keep the defaults.
    FrameConfig frame_config_from(const KeyValues &kv);
    void frame_config_to(const FrameConfig &cfg, KeyValues &kv);
}

#endif
