#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "hcsim/emulator.hpp"
#include "hcsim/errors.hpp"

using namespace hcsim;

namespace {

EmulatorConfig virtual_cfg() {
    EmulatorConfig cfg;
    cfg.clock = ClockMode::Virtual;
    cfg.phi0_max = 0.0; // exact upright unless a test wants tilt
    return cfg;
}

} // namespace

TEST_CASE("quantize rounds half away from zero") {
    CHECK(quantize(0.123456, 4) == doctest::Approx(0.1235));
    CHECK(quantize(0.12345, 4) == doctest::Approx(0.1235));
    CHECK(quantize(-0.12345, 4) == doctest::Approx(-0.1235));
    CHECK(quantize(1.5, 0) == doctest::Approx(2.0));
    CHECK(quantize(-1.5, 0) == doctest::Approx(-2.0));
}

TEST_CASE("address map defaults") {
    const auto map = ElementAddressMap::defaults();
    CHECK(map.lookup("0223") == Readable::X);
    CHECK(map.lookup("0222") == Readable::XDot);
    CHECK(map.lookup("0161") == Readable::Phi);
    CHECK(map.lookup("0160") == Readable::PhiDot);
    CHECK_THROWS_AS(map.lookup("9999"), AddressError);
}

TEST_CASE("config validation") {
    EmulatorConfig cfg = virtual_cfg();
    cfg.dt = 0.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = virtual_cfg();
    cfg.accel_amplitude = -1.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = virtual_cfg();
    cfg.quantize_decimals = -1;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("IC resets the state; state frozen outside Operate") {
    AnalogEmulator em(virtual_cfg());
    em.set_mode(MachineMode::InitialCondition);
    CHECK(em.state().phi == 0.0);
    CHECK(em.state().t == 0.0);

    em.set_mode(MachineMode::Operate);
    em.set_digital_output(0, true);
    em.set_digital_output(1, true);
    em.advance_time(0.1);
    const double x_dot = em.state().x_dot;
    CHECK(x_dot > 0.0);

    em.set_mode(MachineMode::Halt);
    em.advance_time(0.5); // no-op on state outside Operate
    CHECK(em.state().x_dot == x_dot);
    em.set_mode(MachineMode::Operate);
    CHECK(em.state().x_dot == x_dot); // resume from the frozen state
}

TEST_CASE("successive IC draws independent tilts from the seeded stream") {
    EmulatorConfig cfg = virtual_cfg();
    cfg.phi0_max = 0.05;
    cfg.seed = 9;
    AnalogEmulator em(cfg);
    em.set_mode(MachineMode::InitialCondition);
    const double first = em.state().phi;
    em.set_mode(MachineMode::InitialCondition);
    const double second = em.state().phi;
    CHECK(first != second);

    AnalogEmulator em2(cfg);
    em2.set_mode(MachineMode::InitialCondition);
    CHECK(em2.state().phi == first); // same seed, same stream
}

TEST_CASE("reset clears group and outputs, keeps config") {
    AnalogEmulator em(virtual_cfg());
    em.define_readout_group({"0223", "0161"});
    em.set_digital_output(0, true);
    em.set_digital_output(1, true);
    em.reset();
    CHECK(em.mode() == MachineMode::InitialCondition);
    CHECK_FALSE(em.digital_outputs().direction);
    CHECK_FALSE(em.digital_outputs().impulse);
    CHECK_FALSE(em.has_readout_group());
    CHECK_THROWS_AS(em.fetch_readout_group(), UsageError);
    CHECK(em.config().dt == doctest::Approx(1e-3));
}

TEST_CASE("input follows the digital outputs") {
    AnalogEmulator em(virtual_cfg());
    em.set_mode(MachineMode::Operate);
    CHECK(em.current_input() == 0.0);
    em.set_digital_output(0, true); // direction alone does nothing
    CHECK(em.current_input() == 0.0);
    em.set_digital_output(1, true);
    CHECK(em.current_input() == doctest::Approx(10.0));
    em.set_digital_output(0, false);
    CHECK(em.current_input() == doctest::Approx(-10.0));
    CHECK_THROWS_AS(em.set_digital_output(2, true), ProtocolError);
}

TEST_CASE("20 ms impulse integrates to exactly amplitude * 0.020") {
    AnalogEmulator em(virtual_cfg());
    em.set_mode(MachineMode::InitialCondition);
    em.set_mode(MachineMode::Operate);
    em.set_digital_output(0, true);
    em.set_digital_output(1, true);
    em.advance_time(0.020);
    em.set_digital_output(1, false);
    // With the simplified plant from rest and no damping, x_dot = int u dt.
    CHECK(em.state().x_dot == doctest::Approx(10.0 * 0.020).epsilon(1e-9));
    em.advance_time(0.5);
    CHECK(em.state().x_dot == doctest::Approx(10.0 * 0.020).epsilon(1e-9));
}

TEST_CASE("advance_time step accounting") {
    AnalogEmulator em(virtual_cfg());
    em.set_mode(MachineMode::Operate);
    em.advance_time(0.020);
    CHECK(em.state().t == doctest::Approx(0.020));
    em.advance_time(0.0);
    CHECK(em.state().t == doctest::Approx(0.020));
    em.advance_time(0.0015); // ceil -> 2 steps
    CHECK(em.state().t == doctest::Approx(0.022));
    CHECK_THROWS_AS(em.advance_time(-1.0), UsageError);

    EmulatorConfig rt;
    rt.clock = ClockMode::Realtime;
    AnalogEmulator real(rt);
    CHECK_THROWS_AS(real.advance_time(0.1), UsageError);
}

TEST_CASE("constant input from rest gives x_dot = a*t") {
    AnalogEmulator em(virtual_cfg());
    em.set_mode(MachineMode::Operate);
    em.set_digital_output(0, true);
    em.set_digital_output(1, true);
    em.advance_time(1.0);
    CHECK(em.state().x_dot == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("readout quantization and noise") {
    EmulatorConfig cfg = virtual_cfg();
    AnalogEmulator em(cfg);
    // Freeze a known state by driving then halting.
    em.set_mode(MachineMode::Operate);
    em.set_digital_output(0, true);
    em.set_digital_output(1, true);
    em.advance_time(0.1234);
    em.set_mode(MachineMode::Halt);
    const double truth = em.state().x;
    const double read = em.read_element("0223");
    CHECK(std::abs(read - truth) <= 0.5e-4 + 1e-12);
    CHECK(em.read_element("0223") == read); // sigma=0: repeatable
    CHECK_THROWS_AS(em.read_element("9999"), AddressError);
}

TEST_CASE("noisy readout statistics") {
    EmulatorConfig cfg = virtual_cfg();
    cfg.noise_sigma = 0.01;
    cfg.quantize_decimals = 6; // keep rounding from biasing the std estimate
    cfg.seed = 123;
    AnalogEmulator em(cfg);
    em.set_mode(MachineMode::Halt);
    std::vector<double> reads(10000);
    for (double& r : reads)
        r = em.read_element("0223");
    const double mean = std::accumulate(reads.begin(), reads.end(), 0.0) / reads.size();
    double var = 0.0;
    for (double r : reads)
        var += (r - mean) * (r - mean);
    const double stddev = std::sqrt(var / (reads.size() - 1));
    CHECK(stddev >= 0.008);
    CHECK(stddev <= 0.012);
}

TEST_CASE("readout group define/fetch semantics") {
    AnalogEmulator em(virtual_cfg());
    em.define_readout_group({"0223", "0222", "0161", "0160"});
    const auto values = em.fetch_readout_group();
    REQUIRE(values.size() == 4);
    for (double v : values)
        CHECK(v == 0.0);

    em.define_readout_group({});
    CHECK(em.fetch_readout_group().empty());

    CHECK_THROWS_AS(em.define_readout_group({"0223", "bad"}), AddressError);
    CHECK(em.fetch_readout_group().empty()); // previous (empty) group retained

    em.define_readout_group({"0161", "0223"}); // order preserved
    em.set_mode(MachineMode::Operate);
    em.set_digital_output(0, true);
    em.set_digital_output(1, true);
    em.advance_time(0.5);
    const auto v = em.fetch_readout_group();
    REQUIRE(v.size() == 2);
    CHECK(v[0] == doctest::Approx(quantize(em.state().phi, 4)));
    CHECK(v[1] == doctest::Approx(quantize(em.state().x, 4)));
}

TEST_CASE("fetch in Halt is stable and torn reads cannot happen") {
    AnalogEmulator em(virtual_cfg());
    em.define_readout_group({"0223", "0222"});
    em.set_mode(MachineMode::Operate);
    em.set_digital_output(0, true);
    em.set_digital_output(1, true);
    em.advance_time(0.25);
    em.set_mode(MachineMode::Halt);
    CHECK(em.fetch_readout_group() == em.fetch_readout_group());
}

TEST_CASE("readout scaling divides each signal") {
    EmulatorConfig cfg = virtual_cfg();
    cfg.readout_scale = ReadoutScale{1.0, 2.0, 0.5, 2.0};
    AnalogEmulator em(cfg);
    em.set_mode(MachineMode::Operate);
    em.set_digital_output(0, true);
    em.set_digital_output(1, true);
    em.advance_time(0.4);
    em.set_mode(MachineMode::Halt);
    const SimState& s = em.state();
    em.define_readout_group({"0223", "0222", "0161", "0160"});
    const auto v = em.fetch_readout_group();
    REQUIRE(v.size() == 4);
    CHECK(v[0] == doctest::Approx(quantize(s.x / 1.0, 4)));
    CHECK(v[1] == doctest::Approx(quantize(s.x_dot / 2.0, 4)));
    CHECK(v[2] == doctest::Approx(quantize(s.phi / 0.5, 4)));
    CHECK(v[3] == doctest::Approx(quantize(s.phi_dot / 2.0, 4)));
}

TEST_CASE("disturbance superposes on the action input") {
    AnalogEmulator em(virtual_cfg());
    CHECK_THROWS_AS(em.inject_disturbance(1.0, 0.1), UsageError); // not Operate
    em.set_mode(MachineMode::Operate);

    em.inject_disturbance(2.5, 0.2);
    CHECK(em.current_input() == doctest::Approx(2.5));
    em.advance_time(0.2);
    CHECK(em.state().x_dot == doctest::Approx(2.5 * 0.2).epsilon(1e-9));
    CHECK(em.current_input() == 0.0); // expired
    em.advance_time(0.3);
    CHECK(em.state().x_dot == doctest::Approx(2.5 * 0.2).epsilon(1e-9));

    // Zero-magnitude disturbance leaves the trajectory unchanged.
    AnalogEmulator a(virtual_cfg()), b(virtual_cfg());
    a.set_mode(MachineMode::Operate);
    b.set_mode(MachineMode::Operate);
    b.inject_disturbance(0.0, 0.1);
    a.advance_time(0.5);
    b.advance_time(0.5);
    CHECK(a.state().x == b.state().x);
}

TEST_CASE("virtual runs are reproducible for a fixed seed") {
    EmulatorConfig cfg = virtual_cfg();
    cfg.phi0_max = 0.05;
    cfg.noise_sigma = 1e-3;
    cfg.seed = 77;
    auto run = [&cfg] {
        AnalogEmulator em(cfg);
        em.define_readout_group({"0223", "0222", "0161", "0160"});
        em.set_mode(MachineMode::InitialCondition);
        em.set_mode(MachineMode::Operate);
        std::vector<double> trace;
        for (int i = 0; i < 50; ++i) {
            em.set_digital_output(0, i % 3 == 0);
            em.set_digital_output(1, true);
            em.advance_time(0.020);
            em.set_digital_output(1, false);
            for (double v : em.fetch_readout_group())
                trace.push_back(v);
        }
        return trace;
    };
    CHECK(run() == run());
}

TEST_CASE("reseed makes the tilt stream reproducible mid-life") {
    EmulatorConfig cfg = virtual_cfg();
    cfg.phi0_max = 0.05;
    AnalogEmulator em(cfg);
    em.reseed(5);
    em.set_mode(MachineMode::InitialCondition);
    const double tilt = em.state().phi;
    em.set_mode(MachineMode::InitialCondition);
    em.reseed(5);
    em.set_mode(MachineMode::InitialCondition);
    CHECK(em.state().phi == tilt);
}
