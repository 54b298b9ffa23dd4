#ifndef COLTWIN_CHANNELS_HPP
#define COLTWIN_CHANNELS_HPP

#include <array>
#include <cstddef>

namespace coltwin {

// The 16 sensor channels, in emission order. Indices are shared between the
// simulator (writer), the dataset loader, the noise model, and the physics
// loss, so they live in one place.
namespace ch {
constexpr std::size_t liquid_pct_condenser = 0;
constexpr std::size_t condenser_pressure_kpa = 1;
constexpr std::size_t liquid_pct_reboiler = 2;
constexpr std::size_t mass_flow_feed_kg_h = 3;
constexpr std::size_t mass_flow_top_outlet_kg_h = 4;
constexpr std::size_t net_mass_flow_main_kg_h = 5;
constexpr std::size_t hx_frac_reboiler = 6;
constexpr std::size_t hx_frac_top_outlet = 7;
constexpr std::size_t feed_z_hx = 8;
constexpr std::size_t feed_z_tx = 9;
constexpr std::size_t feed_tray_temp_c = 10;
constexpr std::size_t pressure_main_kpa = 11;
constexpr std::size_t pressure_bottom_kpa = 12;
constexpr std::size_t pressure_top_kpa = 13;
constexpr std::size_t reflux_ratio = 14;
constexpr std::size_t duties_kw = 15;
constexpr std::size_t count = 16;
}  // namespace ch

inline constexpr std::array<const char*, ch::count> kChannelNames = {
    "liquid_pct_condenser",   "condenser_pressure_kpa",
    "liquid_pct_reboiler",    "mass_flow_feed_kg_h",
    "mass_flow_top_outlet_kg_h", "net_mass_flow_main_kg_h",
    "hx_frac_reboiler",       "hx_frac_top_outlet",
    "feed_z_hx",              "feed_z_tx",
    "feed_tray_temp_c",       "pressure_main_kpa",
    "pressure_bottom_kpa",    "pressure_top_kpa",
    "reflux_ratio",           "duties_kw",
};

inline constexpr const char* kColTime = "time_s";
inline constexpr const char* kColTargetTx = "target_x_tx";
inline constexpr const char* kColTargetHx = "target_x_hx";
inline constexpr const char* kColCleanTx = "clean_x_tx";
inline constexpr const char* kColCleanHx = "clean_x_hx";

// Model feature vector: the 16 sensors followed by normalized time t/T_max.
namespace feat {
constexpr std::size_t normalized_time = 16;
constexpr std::size_t count = 17;
}  // namespace feat

}  // namespace coltwin

#endif  // COLTWIN_CHANNELS_HPP
