#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hcsim {

enum class Dialect {
    Strict,    // the command vocabulary of the real Hybrid Controller
    Extension, // adds '!'-prefixed, '.'-terminated software commands
};

struct Command {
    enum class Type {
        Reset,      // "x"
        Ic,         // "i"
        Op,         // "o"
        Halt,       // "h"
        GetValue,   // "g" + 4-char address
        BulkDefine, // "G" + ';'-separated addresses + "."
        BulkFetch,  // "f"
        DigitalOut, // "D<ch>" set / "d<ch>" clear
        ExtWait,    // "!w<ms>."
        ExtDisturb, // "!d<accel>:<ms>."
        ExtSeed,    // "!s<n>."
    };

    Type type = Type::Reset;
    std::string address;                // GetValue
    std::vector<std::string> addresses; // BulkDefine
    int channel = 0;                    // DigitalOut
    bool level = false;                 // DigitalOut
    std::uint64_t wait_ms = 0;          // ExtWait
    double disturb_accel = 0.0;         // ExtDisturb
    std::uint64_t disturb_ms = 0;       // ExtDisturb
    std::uint64_t seed = 0;             // ExtSeed

    bool operator==(const Command&) const = default;
};

struct Response {
    enum class Type { Value, Bulk, Error };

    Type type = Type::Error;
    double value = 0.0;         // Value
    std::string id;             // Value: echoed element address/type
    std::vector<double> values; // Bulk
    std::string code;           // Error

    bool operator==(const Response&) const = default;

    static Response make_value(double v, std::string id);
    static Response make_bulk(std::vector<double> vs);
    static Response make_error(std::string code);
};

std::string serialize_command(const Command& cmd);

// Value -> "<value><space><id>\n", Bulk -> ';'-joined values + "\n",
// Error -> "? <code>\n". Values are printed with `decimals` fixed places.
std::string serialize_response(const Response& resp, int decimals = 4);

// One newline-terminated line (terminator optional). Anything unparseable
// yields an Error response rather than a silent zero.
Response parse_response(std::string_view line);

// Result of feeding bytes to the incremental parser: either a complete
// command or a parse error (the session answers those with Error frames).
struct ParseEvent {
    bool ok = false;
    Command command; // valid iff ok
    std::string error;
};

// Incremental, resynchronizing parser for the command grammar. Feed bytes
// in arbitrary chunks; complete commands are emitted in arrival order and
// a malformed byte never poisons the commands that follow it.
class CommandParser {
public:
    explicit CommandParser(Dialect dialect = Dialect::Strict) : dialect_(dialect) {}

    std::vector<ParseEvent> feed(std::string_view bytes);

    Dialect dialect() const { return dialect_; }

private:
    enum class State { Idle, Address, BulkDef, DoutChannel, Ext };

    // Handles one byte; returns true if it was consumed.
    bool consume(char c, std::vector<ParseEvent>& out);
    void emit_error(std::vector<ParseEvent>& out, std::string message);
    void finish_bulk_define(std::vector<ParseEvent>& out);
    void finish_ext(std::vector<ParseEvent>& out);

    static constexpr std::size_t kMaxFrame = 256; // bulk/ext length cap

    Dialect dialect_;
    State state_ = State::Idle;
    std::string buffer_;
    bool dout_level_ = false;
};

// The four state-variable addresses in (x, xdot, phi, phidot) order.
const std::vector<std::string>& default_readout_addresses();

} // namespace hcsim
