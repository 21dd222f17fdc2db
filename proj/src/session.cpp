#include "hcsim/session.hpp"

#include <chrono>
#include <thread>

#include "hcsim/errors.hpp"

namespace hcsim {

std::string Session::feed(std::string_view bytes) {
    std::string out;
    for (const ParseEvent& ev : parser_.feed(bytes)) {
        if (!ev.ok) {
            out += serialize_response(Response::make_error(ev.error));
            continue;
        }
        out += apply(ev.command);
    }
    return out;
}

void Session::on_close() {
    machine_.set_mode(MachineMode::Halt);
}

std::string Session::apply(const Command& cmd) {
    const int decimals = machine_.config().quantize_decimals;
    try {
        using T = Command::Type;
        switch (cmd.type) {
        case T::Reset:
            machine_.reset();
            return {};
        case T::Ic:
            machine_.set_mode(MachineMode::InitialCondition);
            return {};
        case T::Op:
            machine_.set_mode(MachineMode::Operate);
            return {};
        case T::Halt:
            machine_.set_mode(MachineMode::Halt);
            return {};
        case T::DigitalOut:
            machine_.set_digital_output(cmd.channel, cmd.level);
            return {};
        case T::GetValue: {
            const double v = machine_.read_element(cmd.address);
            return serialize_response(Response::make_value(v, cmd.address), decimals);
        }
        case T::BulkDefine:
            machine_.define_readout_group(cmd.addresses);
            return {};
        case T::BulkFetch:
            return serialize_response(Response::make_bulk(machine_.fetch_readout_group()),
                                      decimals);
        case T::ExtWait: {
            const double seconds = static_cast<double>(cmd.wait_ms) / 1000.0;
            if (machine_.config().clock == ClockMode::Virtual) {
                machine_.advance_time(seconds);
            } else {
                std::this_thread::sleep_for(std::chrono::duration<double>(
                    seconds / machine_.config().speed));
                machine_.catch_up();
            }
            return serialize_response(Response::make_value(machine_.state().t, "time"),
                                      decimals);
        }
        case T::ExtDisturb:
            machine_.inject_disturbance(cmd.disturb_accel,
                                        static_cast<double>(cmd.disturb_ms) / 1000.0);
            return serialize_response(Response::make_value(cmd.disturb_accel, "disturb"),
                                      decimals);
        case T::ExtSeed:
            machine_.reseed(cmd.seed);
            return serialize_response(
                Response::make_value(static_cast<double>(cmd.seed), "seed"), decimals);
        }
    } catch (const std::runtime_error& e) {
        return serialize_response(Response::make_error(e.what()));
    }
    return serialize_response(Response::make_error("unhandled command"));
}

} // namespace hcsim
