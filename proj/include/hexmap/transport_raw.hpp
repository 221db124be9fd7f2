#pragma once

#include <string>

#include "hexmap/engine.hpp"

namespace hexmap {

// AF_PACKET transport bound to one interface. Needs CAP_NET_RAW; the
// constructor throws ConfigError with the interface name and errno text
// when the socket cannot be opened, so a plain "permission denied" is
// diagnosable before anything is sent.
class RawTransport : public Transport {
public:
    explicit RawTransport(const std::string& ifname, Family family);
    ~RawTransport() override;

    RawTransport(const RawTransport&) = delete;
    RawTransport& operator=(const RawTransport&) = delete;

    void send_frame(std::span<const uint8_t> frame) override;
    std::optional<std::vector<uint8_t>> receive(uint64_t max_wait_ms) override;

private:
    int fd_ = -1;
    int ifindex_ = 0;
};

} // namespace hexmap
