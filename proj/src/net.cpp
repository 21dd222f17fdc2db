#include "hcsim/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>

#include "hcsim/errors.hpp"

namespace hcsim {

namespace {

std::string errno_message(const std::string& what) {
    return what + ": " + std::strerror(errno);
}

void write_all(int fd, std::string_view bytes) {
    while (!bytes.empty()) {
        const ssize_t n = ::write(fd, bytes.data(), bytes.size());
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw TransportError(errno_message("write"));
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
}

// Pops one line from `buffer`, reading more from `fd` as needed.
std::string read_line_fd(int fd, std::string& buffer) {
    while (true) {
        const auto nl = buffer.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer.substr(0, nl);
            buffer.erase(0, nl + 1);
            return line;
        }
        char chunk[4096];
        const ssize_t n = ::read(fd, chunk, sizeof(chunk));
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw TransportError(errno_message("read"));
        }
        if (n == 0)
            throw TransportError("connection closed by peer");
        buffer.append(chunk, static_cast<std::size_t>(n));
    }
}

} // namespace

InProcessConnection::InProcessConnection(EmulatorConfig cfg, Dialect dialect)
    : machine_(std::move(cfg)), session_(machine_, dialect) {}

void InProcessConnection::send(std::string_view bytes) {
    pending_ += session_.feed(bytes);
}

std::string InProcessConnection::read_line() {
    const auto nl = pending_.find('\n');
    if (nl == std::string::npos)
        throw TransportError("no pending response frame");
    std::string line = pending_.substr(0, nl);
    pending_.erase(0, nl + 1);
    return line;
}

ListenAddress parse_listen_address(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == address.size())
        throw UsageError("listen address must be host:port, got '" + address + "'");
    ListenAddress out;
    out.host = address.substr(0, colon);
    const char* first = address.data() + colon + 1;
    const char* last = address.data() + address.size();
    unsigned port = 0;
    auto [ptr, ec] = std::from_chars(first, last, port);
    if (ec != std::errc{} || ptr != last || port > 65535)
        throw UsageError("invalid port in listen address '" + address + "'");
    out.port = static_cast<std::uint16_t>(port);
    return out;
}

namespace {

sockaddr_in resolve_ipv4(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1)
        return addr;

    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res)
        throw TransportError("cannot resolve host '" + host + "'");
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    ::freeaddrinfo(res);
    return addr;
}

} // namespace

TcpConnection::TcpConnection(const std::string& address) {
    const ListenAddress parsed = parse_listen_address(address);
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0)
        throw TransportError(errno_message("socket"));
    const sockaddr_in addr = resolve_ipv4(parsed.host, parsed.port);
    if (::connect(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        const std::string msg = errno_message("connect to " + address);
        ::close(fd_);
        fd_ = -1;
        throw TransportError(msg);
    }
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpConnection::~TcpConnection() {
    if (fd_ >= 0)
        ::close(fd_);
}

void TcpConnection::send(std::string_view bytes) {
    write_all(fd_, bytes);
}

std::string TcpConnection::read_line() {
    return read_line_fd(fd_, buffer_);
}

void serve_tcp(const std::string& address, AnalogEmulator& machine, Dialect dialect,
               const std::atomic<bool>* stop, std::atomic<std::uint16_t>* bound_port) {
    const ListenAddress parsed = parse_listen_address(address);

    const int listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd < 0)
        throw TransportError(errno_message("socket"));
    const int one = 1;
    ::setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr = resolve_ipv4(parsed.host, parsed.port);
    if (::bind(listen_fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        const std::string msg = errno_message("bind " + address);
        ::close(listen_fd);
        throw TransportError(msg);
    }
    if (::listen(listen_fd, 4) != 0) {
        const std::string msg = errno_message("listen");
        ::close(listen_fd);
        throw TransportError(msg);
    }

    sockaddr_in bound{};
    socklen_t bound_len = sizeof(bound);
    ::getsockname(listen_fd, reinterpret_cast<sockaddr*>(&bound), &bound_len);
    char host_buf[INET_ADDRSTRLEN] = {};
    ::inet_ntop(AF_INET, &bound.sin_addr, host_buf, sizeof(host_buf));
    std::printf("listening on %s:%u\n", host_buf, ntohs(bound.sin_port));
    std::fflush(stdout);
    if (bound_port)
        bound_port->store(ntohs(bound.sin_port));

    Session session(machine, dialect);
    int client_fd = -1;
    std::string buffer;
    bool served = false;

    while (!(stop && stop->load())) {
        pollfd fds[2];
        fds[0] = {listen_fd, POLLIN, 0};
        nfds_t nfds = 1;
        if (client_fd >= 0) {
            fds[1] = {client_fd, POLLIN, 0};
            nfds = 2;
        }
        const int rc = ::poll(fds, nfds, 200);
        if (rc < 0) {
            if (errno == EINTR)
                continue;
            ::close(listen_fd);
            if (client_fd >= 0)
                ::close(client_fd);
            throw TransportError(errno_message("poll"));
        }

        if (fds[0].revents & POLLIN) {
            const int fd = ::accept(listen_fd, nullptr, nullptr);
            if (fd >= 0) {
                if (client_fd < 0) {
                    client_fd = fd;
                    ::setsockopt(client_fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
                    served = true;
                } else {
                    // Single-session machine: refuse the intruder politely.
                    try {
                        write_all(fd, "? busy\n");
                    } catch (const TransportError&) {
                    }
                    ::close(fd);
                }
            }
        }

        if (client_fd >= 0 && (fds[1].revents & (POLLIN | POLLHUP | POLLERR))) {
            char chunk[4096];
            const ssize_t n = ::read(client_fd, chunk, sizeof(chunk));
            if (n <= 0) {
                ::close(client_fd);
                client_fd = -1;
                session.on_close();
                break; // one session per server invocation
            }
            const std::string responses = session.feed({chunk, static_cast<std::size_t>(n)});
            if (!responses.empty()) {
                try {
                    write_all(client_fd, responses);
                } catch (const TransportError&) {
                    ::close(client_fd);
                    client_fd = -1;
                    session.on_close();
                    break;
                }
            }
        }
        (void)served;
    }

    if (client_fd >= 0) {
        ::close(client_fd);
        session.on_close();
    }
    ::close(listen_fd);
}

void serve_fd(int in_fd, int out_fd, AnalogEmulator& machine, Dialect dialect) {
    Session session(machine, dialect);
    char chunk[4096];
    while (true) {
        const ssize_t n = ::read(in_fd, chunk, sizeof(chunk));
        if (n < 0) {
            if (errno == EINTR)
                continue;
            session.on_close();
            throw TransportError(errno_message("read"));
        }
        if (n == 0)
            break;
        const std::string responses = session.feed({chunk, static_cast<std::size_t>(n)});
        if (!responses.empty())
            write_all(out_fd, responses);
    }
    session.on_close();
}

void serve_stdio(AnalogEmulator& machine, Dialect dialect) {
    serve_fd(STDIN_FILENO, STDOUT_FILENO, machine, dialect);
}

} // namespace hcsim
