#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "hcsim/net.hpp"
#include "hcsim/protocol.hpp"

namespace hcsim {

// Client side of the Hybrid Controller protocol: the only view of the
// machine the agent gets. Mirrors the original controller API (reset, mode
// switches, readout groups, digital outputs) plus the emulator extensions.
class HcClient {
public:
    HcClient(Connection& conn, Dialect dialect) : conn_(conn), dialect_(dialect) {}

    void reset();
    void ic();
    void op();
    void halt();

    void define_group(const std::vector<std::string>& addresses);
    void define_default_group();

    // Single-element read: "g<addr>" -> Value. Checks the echoed id.
    double get_value(const std::string& address);

    // Bulk read of the default group: (x, xdot, phi, phidot).
    std::array<double, 4> get_sim_state();

    // Pulse the acceleration output: direction from `action` (1 = positive),
    // impulse high for `impulse_ms`. Wall-clock wait in the strict dialect,
    // deterministic "!w" advance in the extension dialect.
    void influence(int action, std::uint64_t impulse_ms = 20);

    // Extension dialect only.
    void wait_ms(std::uint64_t ms);
    void disturb(double accel, std::uint64_t ms);
    void seed(std::uint64_t n);

    Dialect dialect() const { return dialect_; }

private:
    Response command_with_reply(const Command& cmd);
    void fire_and_forget(Command::Type type);

    Connection& conn_;
    Dialect dialect_;
};

} // namespace hcsim
