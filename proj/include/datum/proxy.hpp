/*
 * Copyright (c) 2026, The datum-guard Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DATUM_PROXY_HPP
#define DATUM_PROXY_HPP

#include "datum/router.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>

namespace datum {

inline sockaddr_in resolve_endpoint(const Endpoint& e)
{
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_DGRAM;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(e.host.c_str(), nullptr, &hints, &res); rc != 0 || res == nullptr) {
        throw Error(ErrorCode::ConfigError, "cannot resolve " + to_string(e) + ": " + ::gai_strerror(rc));
    }
    sockaddr_in addr{};
    std::memcpy(&addr, res->ai_addr, sizeof(addr));
    ::freeaddrinfo(res);
    addr.sin_port = htons(e.port);
    return addr;
}

class UdpSocket {
public:
    UdpSocket() : fd_(::socket(AF_INET, SOCK_DGRAM, 0))
    {
        if (fd_ < 0) {
            throw Error(ErrorCode::BindFailure, std::string("socket: ") + std::strerror(errno));
        }
    }
    explicit UdpSocket(const Endpoint& bind_to) : UdpSocket() { bind(bind_to); }
    UdpSocket(const UdpSocket&) = delete;
    UdpSocket& operator=(const UdpSocket&) = delete;
    UdpSocket(UdpSocket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    ~UdpSocket()
    {
        if (fd_ >= 0) ::close(fd_);
    }

    void bind(const Endpoint& e)
    {
        const sockaddr_in addr = resolve_endpoint(e);
        if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
            throw Error(ErrorCode::BindFailure, "bind " + to_string(e) + ": " + std::strerror(errno));
        }
    }

    [[nodiscard]] std::uint16_t local_port() const
    {
        sockaddr_in addr{};
        socklen_t len = sizeof(addr);
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        return ntohs(addr.sin_port);
    }

    bool send_to(const sockaddr_in& to, std::span<const std::uint8_t> bytes) const
    {
        return ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&to), sizeof(to)) ==
               static_cast<ssize_t>(bytes.size());
    }

    /// Non-blocking when `wait_ms` is 0; returns nullopt on timeout.
    std::optional<std::vector<std::uint8_t>> receive(int wait_ms, sockaddr_in* from = nullptr) const
    {
        pollfd p{fd_, POLLIN, 0};
        if (::poll(&p, 1, wait_ms) <= 0) return std::nullopt;
        std::vector<std::uint8_t> buf(65536);
        sockaddr_in src{};
        socklen_t len = sizeof(src);
        const auto n = ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&src), &len);
        if (n < 0) return std::nullopt;
        buf.resize(static_cast<std::size_t>(n));
        if (from) *from = src;
        return buf;
    }

    [[nodiscard]] int fd() const noexcept { return fd_; }

private:
    int fd_;
};

struct ProxyHooks {
    const std::atomic<bool>* stop = nullptr;
    std::function<void(std::uint16_t gcs_port, std::uint16_t uav_port)> on_ready;
    std::function<void(const Direction&, const Decision&)> on_decision;
    std::function<double()> clock; // seconds; defaults to wall clock
};

struct ProxyResult {
    Router router;
    std::size_t invalid_frames = 0;
    std::size_t socket_errors = 0;
    std::size_t undeliverable = 0; // downlink before any GCS datagram
};

inline double wall_clock_seconds()
{
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

/// Relays until `hooks.stop` becomes true. Both directions share one decision pipeline.
inline ProxyResult run_proxy(const ProxyConfig& config, const ProxyHooks& hooks = {})
{
    validate(config);
    UdpSocket gcs(config.gcs_listen);
    UdpSocket uav(config.uav_bind);
    const sockaddr_in uav_addr = resolve_endpoint(config.uav_endpoint);
    std::optional<sockaddr_in> gcs_peer;

    std::ofstream report;
    if (!config.report_path.empty()) {
        report.open(config.report_path, std::ios::trunc);
        if (!report) {
            throw Error(ErrorCode::ConfigError, "cannot write report log " + config.report_path);
        }
    }
    const auto clock = hooks.clock ? hooks.clock : wall_clock_seconds;
    const CrcExtraLookup lookup = crc_lookup(*config.dialect);
    ProxyResult result{Router(config)};

    if (hooks.on_ready) hooks.on_ready(gcs.local_port(), uav.local_port());

    auto handle = [&](const std::vector<std::uint8_t>& datagram, const Direction& dir, bool uplink) {
        FrameDecoder decoder(lookup);
        decoder.feed(datagram);
        for (;;) {
            auto r = decoder.next();
            if (std::holds_alternative<NeedMoreBytes>(r)) break;
            if (std::holds_alternative<Resync>(r)) {
                ++result.invalid_frames;
                continue;
            }
            const Frame& frame = std::get<Frame>(r);
            const Decision d = result.router.route(dir, frame, clock());
            if (report.is_open() && !d.reports.empty()) {
                write_reports(report, d);
                report.flush();
            }
            if (hooks.on_decision) hooks.on_decision(dir, d);
            if (d.action == Action::Drop) continue;
            const auto bytes = frame_bytes(frame);
            if (uplink) {
                if (!uav.send_to(uav_addr, bytes)) ++result.socket_errors;
            } else if (gcs_peer) {
                if (!gcs.send_to(*gcs_peer, bytes)) ++result.socket_errors;
            } else {
                ++result.undeliverable;
            }
        }
    };

    std::vector<std::uint8_t> buf(65536);
    while (!(hooks.stop && hooks.stop->load())) {
        pollfd fds[2] = {{gcs.fd(), POLLIN, 0}, {uav.fd(), POLLIN, 0}};
        const int n = ::poll(fds, 2, 50);
        if (n < 0) {
            if (errno != EINTR) ++result.socket_errors;
            continue;
        }
        if (n == 0) continue;
        // Drain the GCS side first, then the vehicle side; each socket keeps its arrival order.
        for (int side = 0; side < 2; ++side) {
            if (!(fds[side].revents & POLLIN)) continue;
            sockaddr_in src{};
            socklen_t len = sizeof(src);
            const auto got = ::recvfrom(fds[side].fd, buf.data(), buf.size(), MSG_DONTWAIT,
                                        reinterpret_cast<sockaddr*>(&src), &len);
            if (got < 0) {
                if (errno != EAGAIN && errno != EWOULDBLOCK) ++result.socket_errors;
                continue;
            }
            const std::vector<std::uint8_t> datagram(buf.begin(), buf.begin() + got);
            if (side == 0) {
                gcs_peer = src;
                handle(datagram, config.uplink(), true);
            } else {
                handle(datagram, config.downlink(), false);
            }
        }
    }
    return result;
}

} // namespace datum

#endif
