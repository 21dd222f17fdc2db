#pragma once

#include <string>
#include <string_view>

#include "hcsim/emulator.hpp"
#include "hcsim/protocol.hpp"

namespace hcsim {

// One protocol session bound to one emulator: bytes in, response bytes out.
// Mode and digital-output commands are fire-and-forget; queries and
// extension commands each produce exactly one newline-terminated frame.
// Faults are reported as Error frames and never tear the session down.
class Session {
public:
    Session(AnalogEmulator& machine, Dialect dialect)
        : machine_(machine), parser_(dialect) {}

    // Parses and applies `bytes`; returns the concatenated response frames.
    std::string feed(std::string_view bytes);

    // Called by the transport when the peer goes away.
    void on_close();

    AnalogEmulator& machine() { return machine_; }

private:
    std::string apply(const Command& cmd);

    AnalogEmulator& machine_;
    CommandParser parser_;
};

} // namespace hcsim
