#include "twinrt/twinlink/tcp.hpp"

#include "twinrt/log.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace twinrt::link {

namespace {

std::runtime_error sys_error(const std::string& what) {
  return std::runtime_error(what + ": " + std::strerror(errno));
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

addrinfo* resolve(const NetEndpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  auto port = std::to_string(ep.port);
  int rc = ::getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) throw std::runtime_error("cannot resolve " + ep.str() + ": " + ::gai_strerror(rc));
  return res;
}

/// Splits a byte stream into '\n'-terminated lines, discarding oversized ones.
class LineBuffer {
public:
  template <typename Fn> void feed(const char* data, std::size_t n, Fn&& on_line) {
    buf_.append(data, n);
    std::size_t start = 0;
    for (;;) {
      auto nl = buf_.find('\n', start);
      if (nl == std::string::npos) break;
      if (!overflow_) on_line(std::string_view(buf_).substr(start, nl - start));
      overflow_ = false;
      start = nl + 1;
    }
    buf_.erase(0, start);
    if (buf_.size() > kMaxFrameBytes) {
      log()->warn("discarding oversized frame ({} bytes)", buf_.size());
      buf_.clear();
      overflow_ = true;
    }
  }

private:
  std::string buf_;
  bool overflow_ = false;
};

} // namespace

NetEndpoint parse_endpoint(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("endpoint '" + text + "' must be host:port");
  NetEndpoint ep;
  ep.host = text.substr(0, colon);
  auto port_text = text.substr(colon + 1);
  try {
    std::size_t used = 0;
    unsigned long port = std::stoul(port_text, &used);
    if (used != port_text.size() || port > 65535) throw std::invalid_argument("");
    ep.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad port in endpoint '" + text + "'");
  }
  if (ep.host.empty()) ep.host = "127.0.0.1";
  return ep;
}

// ---------------------------------------------------------------------------
// Broker

struct Broker::Connection {
  int fd = -1;
  std::uint64_t id = 0;
  std::set<Topic> topics; // guarded by Broker::dispatch_

  std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::string> outq;
  bool closed = false;

  std::thread reader;
  std::thread writer;
  std::atomic<bool> reader_done{false};
  std::atomic<bool> writer_done{false};

  void send(std::string line) {
    std::lock_guard lock(mutex);
    if (closed) return;
    outq.push_back(std::move(line));
    cv.notify_all();
  }

  void close() {
    {
      std::lock_guard lock(mutex);
      closed = true;
      cv.notify_all();
    }
    ::shutdown(fd, SHUT_RDWR);
  }

  void write_loop() {
    for (;;) {
      std::string line;
      {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return closed || !outq.empty(); });
        if (outq.empty()) break;
        line = std::move(outq.front());
        outq.pop_front();
      }
      if (!send_all(fd, line)) {
        close();
        break;
      }
    }
    writer_done = true;
  }
};

Broker::Broker(NetEndpoint listen) : listen_(std::move(listen)) {}

Broker::~Broker() { stop(); }

void Broker::start() {
  if (running_) return;
  addrinfo* res = resolve(listen_, true);
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (listen_fd_ < 0) {
    ::freeaddrinfo(res);
    throw sys_error("socket");
  }
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(listen_fd_, res->ai_addr, res->ai_addrlen) != 0) {
    ::freeaddrinfo(res);
    auto err = sys_error("bind " + listen_.str());
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw err;
  }
  ::freeaddrinfo(res);
  if (::listen(listen_fd_, 64) != 0) throw sys_error("listen");
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
  log()->info("broker listening on {}", endpoint().str());
}

void Broker::serve() {
  start();
  std::unique_lock lock(stop_mutex_);
  stop_cv_.wait(lock, [&] { return !running_.load(); });
}

void Broker::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();

  std::list<std::shared_ptr<Connection>> conns;
  {
    std::lock_guard lock(dispatch_);
    conns.swap(connections_);
  }
  for (auto& c : conns) c->close();
  for (auto& c : conns) {
    if (c->reader.joinable()) c->reader.join();
    if (c->writer.joinable()) c->writer.join();
    ::close(c->fd);
  }
  std::lock_guard lock(stop_mutex_);
  stop_cv_.notify_all();
}

std::size_t Broker::connection_count() const {
  std::lock_guard lock(dispatch_);
  std::size_t n = 0;
  for (const auto& c : connections_) {
    if (!c->reader_done) ++n;
  }
  return n;
}

void Broker::accept_loop() {
  while (running_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, 100);
    if (!running_) break;

    // reap finished connections
    std::list<std::shared_ptr<Connection>> finished;
    {
      std::lock_guard lock(dispatch_);
      for (auto it = connections_.begin(); it != connections_.end();) {
        if ((*it)->reader_done && (*it)->writer_done) {
          finished.push_back(*it);
          it = connections_.erase(it);
        } else {
          ++it;
        }
      }
    }
    for (auto& c : finished) {
      c->reader.join();
      c->writer.join();
      ::close(c->fd);
    }

    if (rc <= 0 || !(pfd.revents & POLLIN)) continue;
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    set_nodelay(fd);
    auto conn = std::make_shared<Connection>();
    conn->fd = fd;
    {
      std::lock_guard lock(dispatch_);
      conn->id = next_id_++;
      connections_.push_back(conn);
    }
    conn->writer = std::thread([conn] { conn->write_loop(); });
    conn->reader = std::thread([this, conn] { read_loop(conn); });
  }
}

void Broker::read_loop(const std::shared_ptr<Connection>& conn) {
  LineBuffer lines;
  char buf[8192];
  for (;;) {
    ssize_t n = ::recv(conn->fd, buf, sizeof(buf), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    lines.feed(buf, static_cast<std::size_t>(n), [&](std::string_view line) { handle_line(conn, line); });
  }
  drop(conn);
  conn->reader_done = true;
}

void Broker::handle_line(const std::shared_ptr<Connection>& conn, std::string_view line) {
  if (line.empty()) return;
  BrokerFrame parsed = frame::Ping{};
  try {
    parsed = parse_frame(line, FrameOrigin::Client);
  } catch (const MalformedFrame& e) {
    ++malformed_;
    log()->warn("connection {}: malformed frame discarded: {}", conn->id, e.what());
    return;
  }
  if (auto* sub = std::get_if<frame::Subscribe>(&parsed)) {
    std::lock_guard lock(dispatch_);
    conn->topics.insert(sub->topic);
  } else if (auto* pub = std::get_if<frame::Publish>(&parsed)) {
    auto line_out = encode_frame(frame::Deliver{pub->topic, pub->envelope});
    std::lock_guard lock(dispatch_);
    for (auto& c : connections_) {
      if (c->topics.count(pub->topic) != 0) c->send(line_out);
    }
  } else if (std::holds_alternative<frame::Ping>(parsed)) {
    // Queued behind any deliveries already routed to this connection.
    std::lock_guard lock(dispatch_);
    conn->send(encode_frame(frame::Pong{}));
  }
}

void Broker::drop(const std::shared_ptr<Connection>& conn) {
  {
    std::lock_guard lock(dispatch_);
    conn->topics.clear();
  }
  conn->close();
}

// ---------------------------------------------------------------------------
// Client

std::unique_ptr<TcpTransport> TcpTransport::connect(const NetEndpoint& broker) {
  return connect(broker, Options{});
}

std::unique_ptr<TcpTransport> TcpTransport::connect(const NetEndpoint& broker, Options options) {
  addrinfo* res = resolve(broker, false);
  int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw sys_error("socket");
  }
  int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0 && errno != EINPROGRESS) {
    auto err = sys_error("connect " + broker.str());
    ::close(fd);
    throw err;
  }
  if (rc != 0) {
    pollfd pfd{fd, POLLOUT, 0};
    rc = ::poll(&pfd, 1, static_cast<int>(options.connect_timeout.count()));
    int so_error = 0;
    socklen_t len = sizeof(so_error);
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &so_error, &len);
    if (rc <= 0 || so_error != 0) {
      ::close(fd);
      errno = rc == 0 ? ETIMEDOUT : so_error;
      throw sys_error("connect " + broker.str());
    }
  }
  ::fcntl(fd, F_SETFL, flags);
  set_nodelay(fd);
  timeval tv{};
  tv.tv_sec = options.write_timeout.count() / 1000;
  tv.tv_usec = (options.write_timeout.count() % 1000) * 1000;
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  return std::unique_ptr<TcpTransport>(new TcpTransport(fd, options));
}

TcpTransport::TcpTransport(int fd, Options options) : fd_(fd), options_(options) {
  reader_ = std::thread([this] { read_loop(); });
}

TcpTransport::~TcpTransport() { close(); }

void TcpTransport::close() {
  if (fd_ < 0) return;
  ::shutdown(fd_, SHUT_RDWR);
  if (reader_.joinable()) reader_.join();
  ::close(fd_);
  fd_ = -1;
  link_up_ = false;
}

bool TcpTransport::write_frame(const BrokerFrame& frame) {
  if (!link_up_) return false;
  auto line = encode_frame(frame);
  std::lock_guard lock(write_mutex_);
  if (!send_all(fd_, line)) {
    log()->warn("link down: write to broker failed ({})", std::strerror(errno));
    link_up_ = false;
    ::shutdown(fd_, SHUT_RDWR);
    return false;
  }
  return true;
}

void TcpTransport::subscribe(const Topic& topic) {
  if (!write_frame(frame::Subscribe{topic})) throw std::runtime_error("subscribe failed: link down");
}

bool TcpTransport::publish(const Topic& topic, const Envelope& envelope) {
  return write_frame(frame::Publish{topic, envelope});
}

std::vector<Delivery> TcpTransport::drain() {
  std::lock_guard lock(inbox_mutex_);
  std::vector<Delivery> out(std::make_move_iterator(inbox_.begin()), std::make_move_iterator(inbox_.end()));
  inbox_.clear();
  return out;
}

bool TcpTransport::wait_for_data(std::chrono::microseconds timeout) {
  std::unique_lock lock(inbox_mutex_);
  return inbox_cv_.wait_for(lock, timeout, [&] { return !inbox_.empty() || !link_up_; }) && !inbox_.empty();
}

bool TcpTransport::ping(std::chrono::milliseconds timeout) {
  std::uint64_t before;
  {
    std::lock_guard lock(inbox_mutex_);
    before = pongs_;
  }
  if (!write_frame(frame::Ping{})) return false;
  std::unique_lock lock(inbox_mutex_);
  return inbox_cv_.wait_for(lock, timeout, [&] { return pongs_ > before || !link_up_; }) && pongs_ > before;
}

void TcpTransport::read_loop() {
  LineBuffer lines;
  char buf[8192];
  for (;;) {
    ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    lines.feed(buf, static_cast<std::size_t>(n), [&](std::string_view line) {
      if (line.empty()) return;
      try {
        auto frame = parse_frame(line, FrameOrigin::Broker);
        std::lock_guard lock(inbox_mutex_);
        if (auto* d = std::get_if<frame::Deliver>(&frame)) {
          inbox_.push_back(Delivery{d->topic, std::move(d->envelope)});
        } else if (std::holds_alternative<frame::Pong>(frame)) {
          ++pongs_;
        }
        inbox_cv_.notify_all();
      } catch (const MalformedFrame& e) {
        log()->warn("malformed frame from broker discarded: {}", e.what());
      }
    });
  }
  link_up_ = false;
  std::lock_guard lock(inbox_mutex_);
  inbox_cv_.notify_all();
}

} // namespace twinrt::link
