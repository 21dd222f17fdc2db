#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "hcsim/emulator.hpp"
#include "hcsim/session.hpp"

namespace hcsim {

// Byte-stream endpoint as seen by the protocol client.
class Connection {
public:
    virtual ~Connection() = default;

    virtual void send(std::string_view bytes) = 0;

    // Blocks until one newline-terminated line is available (the newline is
    // stripped). Throws TransportError on EOF or transport failure.
    virtual std::string read_line() = 0;
};

// Client wired straight into an in-process emulator session: send() applies
// the bytes synchronously and queues any response frames for read_line().
class InProcessConnection : public Connection {
public:
    explicit InProcessConnection(EmulatorConfig cfg, Dialect dialect = Dialect::Extension);

    void send(std::string_view bytes) override;
    std::string read_line() override;

    AnalogEmulator& machine() { return machine_; }

private:
    AnalogEmulator machine_;
    Session session_;
    std::string pending_;
};

// Blocking TCP client connection.
class TcpConnection : public Connection {
public:
    // `address` is "host:port".
    explicit TcpConnection(const std::string& address);
    ~TcpConnection() override;

    TcpConnection(const TcpConnection&) = delete;
    TcpConnection& operator=(const TcpConnection&) = delete;

    void send(std::string_view bytes) override;
    std::string read_line() override;

private:
    int fd_ = -1;
    std::string buffer_;
};

struct ListenAddress {
    std::string host;
    std::uint16_t port = 0;
};

// Parses "host:port"; throws UsageError on malformed input.
ListenAddress parse_listen_address(const std::string& address);

// Serves exactly one protocol session over TCP. Extra connections arriving
// while a session is active are refused with a "? busy" frame. Prints the
// bound address ("listening on host:port") to stdout so port 0 is usable.
// Returns when the served session's peer disconnects. `stop` (optional)
// aborts the accept loop when set; `bound_port` (optional) receives the
// actual port once listening.
void serve_tcp(const std::string& address, AnalogEmulator& machine, Dialect dialect,
               const std::atomic<bool>* stop = nullptr,
               std::atomic<std::uint16_t>* bound_port = nullptr);

// Serves one session over the given file descriptors until EOF on input.
void serve_fd(int in_fd, int out_fd, AnalogEmulator& machine, Dialect dialect);

// Serves one session over stdin/stdout until EOF.
void serve_stdio(AnalogEmulator& machine, Dialect dialect);

} // namespace hcsim
