#include "hexmap/transport_raw.hpp"

#include <cerrno>
#include <cstring>

#include <arpa/inet.h>
#include <net/if.h>
#include <netinet/if_ether.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <linux/if_packet.h>

#include "hexmap/errors.hpp"

namespace hexmap {

namespace {

std::string errno_text(const char* what, const std::string& ifname) {
    std::string msg = std::string(what) + " on interface \"" + ifname +
                      "\": " + std::strerror(errno);
    if (errno == EPERM || errno == EACCES) {
        msg += " (raw sockets need CAP_NET_RAW; run as root or grant the capability)";
    }
    return msg;
}

} // namespace

RawTransport::RawTransport(const std::string& ifname, Family family) {
    uint16_t proto = family == Family::v4 ? ETH_P_IP : ETH_P_IPV6;
    fd_ = ::socket(AF_PACKET, SOCK_RAW, htons(proto));
    if (fd_ < 0) throw ConfigError(errno_text("cannot open packet socket", ifname));

    ifindex_ = static_cast<int>(if_nametoindex(ifname.c_str()));
    if (ifindex_ == 0) {
        ::close(fd_);
        fd_ = -1;
        throw ConfigError("unknown interface \"" + ifname + "\": " + std::strerror(errno));
    }

    sockaddr_ll addr{};
    addr.sll_family = AF_PACKET;
    addr.sll_protocol = htons(proto);
    addr.sll_ifindex = ifindex_;
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        ::close(fd_);
        fd_ = -1;
        throw ConfigError(errno_text("cannot bind packet socket", ifname));
    }
}

RawTransport::~RawTransport() {
    if (fd_ >= 0) ::close(fd_);
}

void RawTransport::send_frame(std::span<const uint8_t> frame) {
    sockaddr_ll addr{};
    addr.sll_family = AF_PACKET;
    addr.sll_ifindex = ifindex_;
    addr.sll_halen = 6;
    std::memcpy(addr.sll_addr, frame.data(), 6); // destination MAC
    for (;;) {
        ssize_t n = ::sendto(fd_, frame.data(), frame.size(), 0,
                             reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
        if (n >= 0) return;
        if (errno == EINTR) continue;
        if (errno == ENOBUFS || errno == EAGAIN) {
            pollfd pfd{fd_, POLLOUT, 0};
            ::poll(&pfd, 1, 10);
            continue;
        }
        throw RuntimeFailure("send failed: " + std::string(std::strerror(errno)));
    }
}

std::optional<std::vector<uint8_t>> RawTransport::receive(uint64_t max_wait_ms) {
    pollfd pfd{fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(max_wait_ms));
    if (rc <= 0) return std::nullopt;

    std::vector<uint8_t> buf(65536 + 14);
    ssize_t n = ::recv(fd_, buf.data(), buf.size(), MSG_DONTWAIT);
    if (n <= 0) return std::nullopt;
    // strip Ethernet; the engine consumes L3 packets
    if (n <= 14) return std::nullopt;
    buf.erase(buf.begin(), buf.begin() + 14);
    buf.resize(static_cast<size_t>(n) - 14);
    return buf;
}

} // namespace hexmap
