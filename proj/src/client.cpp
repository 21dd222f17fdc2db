#include "hcsim/client.hpp"

#include <chrono>
#include <thread>

#include "hcsim/errors.hpp"

namespace hcsim {

void HcClient::fire_and_forget(Command::Type type) {
    Command cmd;
    cmd.type = type;
    conn_.send(serialize_command(cmd));
}

Response HcClient::command_with_reply(const Command& cmd) {
    conn_.send(serialize_command(cmd));
    const Response resp = parse_response(conn_.read_line());
    if (resp.type == Response::Type::Error)
        throw ProtocolError("server error: " + resp.code);
    return resp;
}

void HcClient::reset() {
    fire_and_forget(Command::Type::Reset);
}

void HcClient::ic() {
    fire_and_forget(Command::Type::Ic);
}

void HcClient::op() {
    fire_and_forget(Command::Type::Op);
}

void HcClient::halt() {
    fire_and_forget(Command::Type::Halt);
}

void HcClient::define_group(const std::vector<std::string>& addresses) {
    Command cmd;
    cmd.type = Command::Type::BulkDefine;
    cmd.addresses = addresses;
    conn_.send(serialize_command(cmd)); // silent on success
}

void HcClient::define_default_group() {
    define_group(default_readout_addresses());
}

double HcClient::get_value(const std::string& address) {
    Command cmd;
    cmd.type = Command::Type::GetValue;
    cmd.address = address;
    const Response resp = command_with_reply(cmd);
    if (resp.type != Response::Type::Value)
        throw ProtocolError("expected a value response for g" + address);
    if (resp.id != address)
        throw ProtocolError("value response id '" + resp.id + "' does not match g" + address);
    return resp.value;
}

std::array<double, 4> HcClient::get_sim_state() {
    Command cmd;
    cmd.type = Command::Type::BulkFetch;
    const Response resp = command_with_reply(cmd);
    if (resp.type != Response::Type::Bulk)
        throw ProtocolError("expected a bulk response for f");
    if (resp.values.size() != 4)
        throw ProtocolError("bulk readout arity " + std::to_string(resp.values.size()) +
                            ", expected 4");
    return {resp.values[0], resp.values[1], resp.values[2], resp.values[3]};
}

void HcClient::influence(int action, std::uint64_t impulse_ms) {
    if (action != 0 && action != 1)
        throw UsageError("action must be 0 or 1");

    Command dir;
    dir.type = Command::Type::DigitalOut;
    dir.channel = 0;
    dir.level = (action == 1);
    conn_.send(serialize_command(dir));

    Command pulse;
    pulse.type = Command::Type::DigitalOut;
    pulse.channel = 1;
    pulse.level = true;
    conn_.send(serialize_command(pulse));

    if (dialect_ == Dialect::Extension) {
        wait_ms(impulse_ms);
    } else {
        std::this_thread::sleep_for(std::chrono::milliseconds(impulse_ms));
    }

    pulse.level = false;
    conn_.send(serialize_command(pulse));
}

void HcClient::wait_ms(std::uint64_t ms) {
    if (dialect_ != Dialect::Extension)
        throw UsageError("wait command requires the extension dialect");
    Command cmd;
    cmd.type = Command::Type::ExtWait;
    cmd.wait_ms = ms;
    command_with_reply(cmd);
}

void HcClient::disturb(double accel, std::uint64_t ms) {
    if (dialect_ != Dialect::Extension)
        throw UsageError("disturb command requires the extension dialect");
    Command cmd;
    cmd.type = Command::Type::ExtDisturb;
    cmd.disturb_accel = accel;
    cmd.disturb_ms = ms;
    command_with_reply(cmd);
}

void HcClient::seed(std::uint64_t n) {
    if (dialect_ != Dialect::Extension)
        throw UsageError("seed command requires the extension dialect");
    Command cmd;
    cmd.type = Command::Type::ExtSeed;
    cmd.seed = n;
    command_with_reply(cmd);
}

} // namespace hcsim
