#pragma once

#include "twinrt/twinlink/frame.hpp"
#include "twinrt/twinlink/transport.hpp"

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace twinrt::link {

struct NetEndpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 5672;

  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Parses "host:port"; the port may be 0 for listeners.
NetEndpoint parse_endpoint(const std::string& text);

inline constexpr std::size_t kMaxFrameBytes = 1 << 20;

/// Topic broker over TCP speaking line-delimited JSON frames.
///
/// All routing goes through one dispatch lock, so deliveries from one
/// publisher on one topic keep their order at every subscriber. Each
/// connection has its own writer thread; a slow subscriber does not stall
/// routing.
class Broker {
public:
  explicit Broker(NetEndpoint listen);
  ~Broker();

  Broker(const Broker&) = delete;
  Broker& operator=(const Broker&) = delete;

  /// Binds and starts accepting; returns once the socket is listening.
  void start();
  void stop();
  /// Port actually bound (useful when listening on port 0).
  std::uint16_t port() const { return bound_port_; }
  NetEndpoint endpoint() const { return NetEndpoint{listen_.host, bound_port_}; }

  /// start() and block until stop() is called from elsewhere.
  void serve();

  std::size_t connection_count() const;
  std::uint64_t malformed_frames() const { return malformed_.load(); }

private:
  struct Connection;

  void accept_loop();
  void read_loop(const std::shared_ptr<Connection>& conn);
  void handle_line(const std::shared_ptr<Connection>& conn, std::string_view line);
  void drop(const std::shared_ptr<Connection>& conn);

  NetEndpoint listen_;
  std::uint16_t bound_port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread acceptor_;

  mutable std::mutex dispatch_;
  std::list<std::shared_ptr<Connection>> connections_;
  std::uint64_t next_id_ = 1;
  std::atomic<std::uint64_t> malformed_{0};

  std::mutex stop_mutex_;
  std::condition_variable stop_cv_;
};

/// Transport client for Broker. A reader thread buffers Deliver frames;
/// publish() gives up after the write timeout and reports the link down.
class TcpTransport final : public Transport {
public:
  struct Options {
    std::chrono::milliseconds connect_timeout{2000};
    std::chrono::milliseconds write_timeout{200};
  };

  static std::unique_ptr<TcpTransport> connect(const NetEndpoint& broker);
  static std::unique_ptr<TcpTransport> connect(const NetEndpoint& broker, Options options);
  ~TcpTransport() override;

  void subscribe(const Topic& topic) override;
  bool publish(const Topic& topic, const Envelope& envelope) override;
  std::vector<Delivery> drain() override;
  bool wait_for_data(std::chrono::microseconds timeout) override;
  bool link_up() const override { return link_up_.load(); }

  /// Sends a ping and waits for the pong; true once the broker has
  /// processed every frame written before it.
  bool ping(std::chrono::milliseconds timeout);

  void close();

private:
  TcpTransport(int fd, Options options);
  bool write_frame(const BrokerFrame& frame);
  void read_loop();

  int fd_;
  Options options_;
  std::atomic<bool> link_up_{true};
  std::mutex write_mutex_;
  std::thread reader_;

  std::mutex inbox_mutex_;
  std::condition_variable inbox_cv_;
  std::deque<Delivery> inbox_;
  std::uint64_t pongs_ = 0;
};

} // namespace twinrt::link
