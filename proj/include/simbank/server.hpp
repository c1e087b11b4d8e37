#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "simbank/config.hpp"
#include "simbank/protocol.hpp"

namespace simbank {

// Newline-delimited JSON over TCP. Each connection gets its own
// ProtocolSession; sessions never share state, so a malformed client cannot
// disturb another.
class ProtocolServer {
public:
    ProtocolServer(const SimConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {}

    ~ProtocolServer() { stop(); }

    // Binds and listens on `port` (0 picks an ephemeral port) and starts the
    // accept loop. Returns the bound port.
    int start(int port) {
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
        const int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(static_cast<std::uint16_t>(port));
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
            ::close(listen_fd_);
            listen_fd_ = -1;
            throw std::runtime_error("bind() failed on port " + std::to_string(port));
        }
        if (::listen(listen_fd_, 16) != 0) {
            ::close(listen_fd_);
            listen_fd_ = -1;
            throw std::runtime_error("listen() failed");
        }
        socklen_t len = sizeof(addr);
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        bound_port_ = ntohs(addr.sin_port);
        running_ = true;
        accept_thread_ = std::thread([this] { accept_loop(); });
        return bound_port_;
    }

    int port() const { return bound_port_; }

    void stop() {
        if (!running_.exchange(false)) return;
        if (listen_fd_ >= 0) {
            ::shutdown(listen_fd_, SHUT_RDWR);
            ::close(listen_fd_);
            listen_fd_ = -1;
        }
        if (accept_thread_.joinable()) accept_thread_.join();
        std::lock_guard<std::mutex> lock(clients_mutex_);
        for (auto& t : client_threads_) {
            if (t.joinable()) t.join();
        }
        client_threads_.clear();
    }

private:
    void accept_loop() {
        while (running_) {
            const int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) {
                if (!running_) break;
                continue;
            }
            std::lock_guard<std::mutex> lock(clients_mutex_);
            client_threads_.emplace_back([this, fd] { serve_client(fd); });
        }
    }

    void serve_client(int fd) {
        ProtocolSession session(seed_, cfg_);
        std::string buffer;
        char chunk[4096];
        while (running_) {
            const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
            if (n <= 0) break;
            buffer.append(chunk, static_cast<std::size_t>(n));
            std::size_t pos;
            bool closing = false;
            while ((pos = buffer.find('\n')) != std::string::npos) {
                std::string line = buffer.substr(0, pos);
                buffer.erase(0, pos + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                const std::string reply = session.handle_line(line) + "\n";
                if (!send_all(fd, reply)) {
                    closing = true;
                    break;
                }
                if (session.closed()) {
                    closing = true;
                    break;
                }
            }
            if (closing) break;
        }
        ::close(fd);
    }

    static bool send_all(int fd, const std::string& data) {
        std::size_t sent = 0;
        while (sent < data.size()) {
            const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
            if (n <= 0) return false;
            sent += static_cast<std::size_t>(n);
        }
        return true;
    }

    SimConfig cfg_;
    std::uint64_t seed_;
    int listen_fd_ = -1;
    int bound_port_ = 0;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::mutex clients_mutex_;
    std::vector<std::thread> client_threads_;
};

}  // namespace simbank
