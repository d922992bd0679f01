#include "csmakit/timing.hpp"

#include <cmath>
#include <stdexcept>

namespace csmakit {

int PhyTiming::prop_slots() const {
    return static_cast<int>(std::floor(prop_delay_us / slot_us));
}

double PhyTiming::rx_prop_slots() const { return rx_prop_delay_us / slot_us; }

void PhyTiming::validate() const {
    if (slot_us <= 0.0) {
        throw std::invalid_argument("slot duration must be positive");
    }
    for (double d : {data_us, ack_us, phy_header_us, sifs_us, difs_us, turnaround_us, eifs_us,
                     prop_delay_us, rx_prop_delay_us}) {
        if (d < 0.0) {
            throw std::invalid_argument("durations must be nonnegative");
        }
    }
}

double success_cycle_duration_us(const PhyTiming& t, bool with_propagation) {
    double d = t.data_us + t.ack_us + 2.0 * t.phy_header_us + 2.0 * t.turnaround_us + t.sifs_us +
               t.difs_us;
    if (with_propagation) {
        d += 2.0 * t.rx_prop_delay_us;
    }
    return d;
}

double collision_cycle_duration_us(const PhyTiming& t, bool with_propagation) {
    double d = t.data_us + t.phy_header_us + t.turnaround_us + t.sifs_us + t.difs_us + t.eifs_us;
    if (with_propagation) {
        d += t.prop_delay_us;
    }
    return d;
}

}  // namespace csmakit
