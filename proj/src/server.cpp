#include "tspine/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "tspine/error.hpp"

namespace tspine {

int default_port() {
  if (const char* env = std::getenv("TSPINE_PORT")) {
    char* end = nullptr;
    const long p = std::strtol(env, &end, 10);
    if (end && *end == '\0' && p > 0 && p < 65535) return static_cast<int>(p);
  }
  return 8765;
}

namespace {

struct Client {
  int fd = -1;
  std::string in;
  std::string out;
};

int listen_on(const std::string& host, int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw ParameterError("port", std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw ParameterError("host", "invalid IPv4 address " + host);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 8) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd);
    throw ParameterError("port", "cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
  }
  return fd;
}

// Publishes immutable snapshot text from the loop to the HTTP thread.
class SnapshotBox {
 public:
  void publish(std::string text) {
    auto p = std::make_shared<const std::string>(std::move(text));
    std::lock_guard lock(mu_);
    current_ = std::move(p);
  }
  std::shared_ptr<const std::string> get() const {
    std::lock_guard lock(mu_);
    return current_;
  }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const std::string> current_;
};

}  // namespace

SessionCore serve_session(const Robot& robot, const ServerOptions& options, std::atomic<bool>& stop,
                          const std::function<void()>& on_ready) {
  SessionCore core(robot, options.session);
  const int lfd = listen_on(options.host, options.port);

  SnapshotBox box;
  box.publish(core.snapshot().dump());
  httplib::Server http;
  http.Get("/snapshot", [&box](const httplib::Request&, httplib::Response& res) {
    res.set_content(*box.get(), "application/json");
  });
  if (!http.bind_to_port(options.host, options.port + 1)) {
    ::close(lfd);
    throw ParameterError("port", "cannot bind snapshot endpoint on port " + std::to_string(options.port + 1));
  }
  std::thread http_thread([&http] { http.listen_after_bind(); });
  http.wait_until_ready();
  if (on_ready) on_ready();

  std::map<int, Client> clients;  // keyed by connection id
  auto send = [&](const std::vector<Outbound>& msgs) {
    for (const auto& m : msgs) {
      auto it = clients.find(m.connection);
      if (it != clients.end()) it->second.out += m.message.dump() + "\n";
    }
  };
  auto drop = [&](int conn) {
    ::close(clients[conn].fd);
    clients.erase(conn);
    core.disconnect(conn);
  };

  const auto period = std::chrono::duration<double>(1.0 / options.session.tick_hz);
  auto next_tick = std::chrono::steady_clock::now() + std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
  while (!stop.load() && (options.max_ticks < 0 || core.ticks() < options.max_ticks)) {
    std::vector<pollfd> fds{{lfd, POLLIN, 0}};
    std::vector<int> order;
    for (auto& [id, c] : clients) {
      fds.push_back({c.fd, static_cast<short>(POLLIN | (c.out.empty() ? 0 : POLLOUT)), 0});
      order.push_back(id);
    }
    int wait_ms = 0;
    if (options.realtime) {
      const auto left = next_tick - std::chrono::steady_clock::now();
      wait_ms = std::max(0, static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(left).count()));
    }
    ::poll(fds.data(), fds.size(), std::min(wait_ms, 50));

    if (fds[0].revents & POLLIN) {
      const int cfd = ::accept(lfd, nullptr, nullptr);
      if (cfd >= 0) clients[core.connect()] = Client{cfd, {}, {}};
    }
    for (std::size_t k = 1; k < fds.size(); ++k) {
      const int id = order[k - 1];
      if (!clients.count(id)) continue;
      Client& c = clients[id];
      if (fds[k].revents & (POLLERR | POLLHUP | POLLNVAL) && !(fds[k].revents & POLLIN)) {
        drop(id);
        continue;
      }
      if (fds[k].revents & POLLIN) {
        char buf[4096];
        const ssize_t n = ::recv(c.fd, buf, sizeof buf, 0);
        if (n <= 0) {
          drop(id);
          continue;
        }
        c.in.append(buf, static_cast<std::size_t>(n));
        for (std::size_t pos; (pos = c.in.find('\n')) != std::string::npos;) {
          std::string line = c.in.substr(0, pos);
          c.in.erase(0, pos + 1);
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (!line.empty()) send(core.receive(id, line));
        }
      }
      if ((fds[k].revents & POLLOUT) && !c.out.empty()) {
        const ssize_t n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
        if (n < 0) {
          drop(id);
          continue;
        }
        c.out.erase(0, static_cast<std::size_t>(n));
      }
    }

    if (!options.realtime || std::chrono::steady_clock::now() >= next_tick) {
      send(core.tick());
      box.publish(core.snapshot().dump());
      next_tick += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
      if (std::chrono::steady_clock::now() > next_tick + std::chrono::seconds(1))
        next_tick = std::chrono::steady_clock::now();  // fell far behind: don't burst
    }
  }

  // Flush what is queued before closing.
  for (auto& [id, c] : clients) {
    while (!c.out.empty()) {
      const ssize_t n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
      if (n <= 0) break;
      c.out.erase(0, static_cast<std::size_t>(n));
    }
    ::shutdown(c.fd, SHUT_WR);
    ::close(c.fd);
  }
  ::close(lfd);
  http.stop();
  http_thread.join();
  return core;
}

}  // namespace tspine
