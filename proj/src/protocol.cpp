#include "hcsim/protocol.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <optional>

namespace hcsim {

namespace {

bool is_addr_digit(char c) {
    return c >= '0' && c <= '9';
}

bool valid_address(std::string_view a) {
    if (a.size() != 4)
        return false;
    for (char c : a)
        if (!is_addr_digit(c))
            return false;
    return true;
}

std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        return std::nullopt;
    return v;
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    if (s.empty())
        return std::nullopt;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        return std::nullopt;
    return v;
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

} // namespace

Response Response::make_value(double v, std::string id) {
    Response r;
    r.type = Type::Value;
    r.value = v;
    r.id = std::move(id);
    return r;
}

Response Response::make_bulk(std::vector<double> vs) {
    Response r;
    r.type = Type::Bulk;
    r.values = std::move(vs);
    return r;
}

Response Response::make_error(std::string code) {
    Response r;
    r.type = Type::Error;
    r.code = std::move(code);
    return r;
}

std::string serialize_command(const Command& cmd) {
    using T = Command::Type;
    switch (cmd.type) {
    case T::Reset:
        return "x";
    case T::Ic:
        return "i";
    case T::Op:
        return "o";
    case T::Halt:
        return "h";
    case T::BulkFetch:
        return "f";
    case T::GetValue:
        return "g" + cmd.address;
    case T::BulkDefine: {
        std::string out = "G";
        for (std::size_t i = 0; i < cmd.addresses.size(); ++i) {
            if (i)
                out += ';';
            out += cmd.addresses[i];
        }
        out += '.';
        return out;
    }
    case T::DigitalOut:
        return std::string(1, cmd.level ? 'D' : 'd') + static_cast<char>('0' + cmd.channel);
    case T::ExtWait:
        return "!w" + std::to_string(cmd.wait_ms) + ".";
    case T::ExtDisturb: {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.17g", cmd.disturb_accel);
        return "!d" + std::string(buf) + ":" + std::to_string(cmd.disturb_ms) + ".";
    }
    case T::ExtSeed:
        return "!s" + std::to_string(cmd.seed) + ".";
    }
    return {};
}

std::string serialize_response(const Response& resp, int decimals) {
    switch (resp.type) {
    case Response::Type::Value:
        return format_fixed(resp.value, decimals) + " " + resp.id + "\n";
    case Response::Type::Bulk: {
        std::string out;
        for (std::size_t i = 0; i < resp.values.size(); ++i) {
            if (i)
                out += ';';
            out += format_fixed(resp.values[i], decimals);
        }
        out += '\n';
        return out;
    }
    case Response::Type::Error:
        return "? " + resp.code + "\n";
    }
    return "\n";
}

Response parse_response(std::string_view line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
        line.remove_suffix(1);

    if (line.rfind("? ", 0) == 0)
        return Response::make_error(std::string(line.substr(2)));

    if (line.empty())
        return Response::make_bulk({});

    const auto space = line.find(' ');
    if (space != std::string_view::npos) {
        const auto value = parse_double(line.substr(0, space));
        const auto id = line.substr(space + 1);
        if (!value || id.empty())
            return Response::make_error("malformed value response");
        Response r = Response::make_value(*value, std::string(id));
        return r;
    }

    std::vector<double> values;
    std::size_t start = 0;
    while (true) {
        const auto sep = line.find(';', start);
        const auto tok = line.substr(start, sep == std::string_view::npos ? sep : sep - start);
        const auto v = parse_double(tok);
        if (!v)
            return Response::make_error("malformed bulk response");
        values.push_back(*v);
        if (sep == std::string_view::npos)
            break;
        start = sep + 1;
    }
    return Response::make_bulk(std::move(values));
}

std::vector<ParseEvent> CommandParser::feed(std::string_view bytes) {
    std::vector<ParseEvent> out;
    for (char c : bytes) {
        // A rejected byte is re-examined as a fresh command start; Idle
        // always consumes, so this terminates.
        while (!consume(c, out)) {
        }
    }
    return out;
}

void CommandParser::emit_error(std::vector<ParseEvent>& out, std::string message) {
    ParseEvent ev;
    ev.ok = false;
    ev.error = std::move(message);
    out.push_back(std::move(ev));
    state_ = State::Idle;
    buffer_.clear();
}

void CommandParser::finish_bulk_define(std::vector<ParseEvent>& out) {
    Command cmd;
    cmd.type = Command::Type::BulkDefine;
    if (!buffer_.empty()) {
        std::size_t start = 0;
        while (true) {
            const auto sep = buffer_.find(';', start);
            const std::string tok =
                buffer_.substr(start, sep == std::string::npos ? sep : sep - start);
            if (!valid_address(tok)) {
                emit_error(out, "malformed address in readout group: '" + tok + "'");
                return;
            }
            cmd.addresses.push_back(tok);
            if (sep == std::string::npos)
                break;
            start = sep + 1;
        }
    }
    state_ = State::Idle;
    buffer_.clear();
    out.push_back(ParseEvent{true, std::move(cmd), {}});
}

void CommandParser::finish_ext(std::vector<ParseEvent>& out) {
    const std::string body = buffer_;
    buffer_.clear();
    state_ = State::Idle;
    if (body.empty()) {
        emit_error(out, "empty extension command");
        return;
    }
    Command cmd;
    const std::string_view arg = std::string_view(body).substr(1);
    switch (body[0]) {
    case 'w': {
        const auto ms = parse_u64(arg);
        if (!ms) {
            emit_error(out, "malformed wait command");
            return;
        }
        cmd.type = Command::Type::ExtWait;
        cmd.wait_ms = *ms;
        break;
    }
    case 'd': {
        const auto colon = arg.find(':');
        if (colon == std::string_view::npos) {
            emit_error(out, "malformed disturb command");
            return;
        }
        const auto accel = parse_double(arg.substr(0, colon));
        const auto ms = parse_u64(arg.substr(colon + 1));
        if (!accel || !ms) {
            emit_error(out, "malformed disturb command");
            return;
        }
        cmd.type = Command::Type::ExtDisturb;
        cmd.disturb_accel = *accel;
        cmd.disturb_ms = *ms;
        break;
    }
    case 's': {
        const auto n = parse_u64(arg);
        if (!n) {
            emit_error(out, "malformed seed command");
            return;
        }
        cmd.type = Command::Type::ExtSeed;
        cmd.seed = *n;
        break;
    }
    default:
        emit_error(out, std::string("unknown extension command '") + body[0] + "'");
        return;
    }
    out.push_back(ParseEvent{true, std::move(cmd), {}});
}

bool CommandParser::consume(char c, std::vector<ParseEvent>& out) {
    switch (state_) {
    case State::Idle: {
        Command cmd;
        switch (c) {
        case ' ':
        case '\t':
        case '\r':
        case '\n':
            return true; // inter-command whitespace
        case 'x':
            cmd.type = Command::Type::Reset;
            break;
        case 'i':
            cmd.type = Command::Type::Ic;
            break;
        case 'o':
            cmd.type = Command::Type::Op;
            break;
        case 'h':
            cmd.type = Command::Type::Halt;
            break;
        case 'f':
            cmd.type = Command::Type::BulkFetch;
            break;
        case 'g':
            state_ = State::Address;
            buffer_.clear();
            return true;
        case 'G':
            state_ = State::BulkDef;
            buffer_.clear();
            return true;
        case 'D':
        case 'd':
            state_ = State::DoutChannel;
            dout_level_ = (c == 'D');
            return true;
        case '!':
            if (dialect_ != Dialect::Extension) {
                emit_error(out, "unknown command byte '!'");
                return true;
            }
            state_ = State::Ext;
            buffer_.clear();
            return true;
        default:
            emit_error(out, std::string("unknown command byte '") + c + "'");
            return true;
        }
        out.push_back(ParseEvent{true, std::move(cmd), {}});
        return true;
    }
    case State::Address: {
        if (!is_addr_digit(c)) {
            emit_error(out, "malformed element address");
            return false; // re-examine c as a fresh command
        }
        buffer_ += c;
        if (buffer_.size() == 4) {
            Command cmd;
            cmd.type = Command::Type::GetValue;
            cmd.address = buffer_;
            buffer_.clear();
            state_ = State::Idle;
            out.push_back(ParseEvent{true, std::move(cmd), {}});
        }
        return true;
    }
    case State::BulkDef: {
        if (c == '.') {
            finish_bulk_define(out);
            return true;
        }
        buffer_ += c;
        if (buffer_.size() > kMaxFrame) {
            emit_error(out, "unterminated readout group definition");
            return true;
        }
        return true;
    }
    case State::DoutChannel: {
        state_ = State::Idle;
        if (c != '0' && c != '1') {
            emit_error(out, "digital output channel must be 0 or 1");
            return false;
        }
        Command cmd;
        cmd.type = Command::Type::DigitalOut;
        cmd.channel = c - '0';
        cmd.level = dout_level_;
        out.push_back(ParseEvent{true, std::move(cmd), {}});
        return true;
    }
    case State::Ext: {
        // In "!d<accel>:<ms>." the first '.' before the ':' is the accel's
        // decimal point, not the frame terminator.
        const bool dot_is_data = !buffer_.empty() && buffer_[0] == 'd' &&
                                 buffer_.find(':') == std::string::npos &&
                                 buffer_.find('.') == std::string::npos &&
                                 buffer_.size() > 1;
        if (c == '.' && !dot_is_data) {
            finish_ext(out);
            return true;
        }
        buffer_ += c;
        if (buffer_.size() > kMaxFrame) {
            emit_error(out, "unterminated extension command");
            return true;
        }
        return true;
    }
    }
    return true;
}

const std::vector<std::string>& default_readout_addresses() {
    static const std::vector<std::string> addrs = {"0223", "0222", "0161", "0160"};
    return addrs;
}

} // namespace hcsim
