#pragma once

namespace csmakit {

// Channel timing in microseconds. prop_delay_us is the transmitter-to-
// transmitter propagation delay (Delta); rx_prop_delay_us the transmitter-to-
// receiver delay (Delta_r). Collision/success classification uses
// prop_slots() = floor(Delta / sigma); durations keep the exact microsecond
// values.
struct PhyTiming {
    double slot_us = 20.0;        // backoff slot (sigma)
    double data_us = 4112.0;      // payload duration (T_d), 1028 B at 2 Mb/s
    double ack_us = 112.0;        // MAC ACK
    double phy_header_us = 192.0; // PHY preamble + header
    double sifs_us = 10.0;
    double difs_us = 50.0;
    double turnaround_us = 10.0;  // Rx-to-Tx turnaround (T_o)
    double eifs_us = 0.0;         // extra post-collision wait, off by default
    double prop_delay_us = 0.0;   // Delta
    double rx_prop_delay_us = 0.0; // Delta_r

    int prop_slots() const;       // m
    double rx_prop_slots() const; // m_r
    void validate() const;

    static PhyTiming default_80211b() { return PhyTiming{}; }
};

// Duration of the channel-activity part of a successful transmission cycle,
// from the start of the data frame until backoff counting resumes:
// T_d + ACK + 2*PHY + 2*T_o + SIFS + DIFS (+ 2*Delta_r with propagation).
double success_cycle_duration_us(const PhyTiming& timing, bool with_propagation);

// Same for a collision cycle: T_d + PHY + T_o + SIFS + DIFS + EIFS
// (+ Delta with propagation).
double collision_cycle_duration_us(const PhyTiming& timing, bool with_propagation);

}  // namespace csmakit
