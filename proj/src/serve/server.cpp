#include "prefnet/serve/server.hpp"

#include <deque>
#include <iostream>
#include <set>
#include <thread>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "prefnet/core/errors.hpp"

namespace prefnet::serve {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

class WsConnection;

// Subscribers per session id.
class Hub {
 public:
  void join(const std::string& id, const std::shared_ptr<WsConnection>& c) {
    std::lock_guard lock(mutex_);
    subs_[id].insert(c);
  }
  void leave(const std::string& id, const std::shared_ptr<WsConnection>& c) {
    std::lock_guard lock(mutex_);
    auto it = subs_.find(id);
    if (it == subs_.end()) return;
    it->second.erase(c);
    if (it->second.empty()) subs_.erase(it);
  }
  std::vector<std::shared_ptr<WsConnection>> subscribers(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = subs_.find(id);
    if (it == subs_.end()) return {};
    return {it->second.begin(), it->second.end()};
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::set<std::shared_ptr<WsConnection>>> subs_;
};

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, std::shared_ptr<Session> session, Hub& hub)
      : ws_(std::move(socket)), session_(std::move(session)), hub_(hub) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
  }

  // Thread-safe; serialized on the connection's strand.
  void send(std::string text, bool close_after = false) {
    net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text), close_after]() mutable {
      self->queue_.push_back(std::move(text));
      self->close_after_ = self->close_after_ || close_after;
      if (self->queue_.size() == 1) self->write_next();
    });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    hub_.join(session_->id(), shared_from_this());
    nlohmann::json hello{{"version", kProtocolVersion}, {"type", "hello"}, {"session", session_->id()}};
    hello["state"] = session_->state();
    send(hello.dump());
    read_next();
  }

  void read_next() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      hub_.leave(session_->id(), shared_from_this());
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    nlohmann::json reply;
    try {
      reply = session_->submit(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
      reply = {{"version", kProtocolVersion}, {"type", "ack"}, {"ok", false},
               {"session", session_->id()},   {"error", std::string("malformed JSON: ") + e.what()}};
    }
    send(reply.dump());
    read_next();
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()), beast::bind_front_handler(&WsConnection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      hub_.leave(session_->id(), shared_from_this());
      queue_.clear();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) {
      write_next();
    } else if (close_after_) {
      hub_.leave(session_->id(), shared_from_this());
      ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<Session> session_;
  Hub& hub_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  bool close_after_ = false;
};

using Response = http::response<http::string_body>;

Response json_response(const http::request<http::string_body>& req, http::status status, const nlohmann::json& body) {
  Response res{status, req.version()};
  res.set(http::field::content_type, "application/json");
  res.keep_alive(req.keep_alive());
  if (status != http::status::no_content) res.body() = body.dump();
  res.prepare_payload();
  return res;
}

nlohmann::json error_body(const std::string& message) {
  return {{"version", kProtocolVersion}, {"error", message}};
}

}  // namespace

struct Server::Impl {
  Impl(const std::string& address, std::uint16_t port)
      : acceptor(net::make_strand(ioc)),
        manager([this](const std::string& id, const nlohmann::json& frame) { broadcast(id, frame); }) {
    tcp::endpoint endpoint{net::ip::make_address(address), port};
    acceptor.open(endpoint.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen(net::socket_base::max_listen_connections);
  }

  void broadcast(const std::string& id, const nlohmann::json& frame, bool close_after = false) {
    const auto text = frame.dump();
    for (auto& c : hub.subscribers(id)) c->send(text, close_after);
  }

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpConnection>(std::move(socket), *this)->run();
      accept();
    });
  }

  Response handle(const http::request<http::string_body>& req) {
    const std::string target(req.target());
    try {
      if (target == "/sessions") {
        if (req.method() != http::verb::post) return json_response(req, http::status::method_not_allowed, error_body("use POST"));
        nlohmann::json body;
        try {
          body = nlohmann::json::parse(req.body());
        } catch (const nlohmann::json::parse_error& e) {
          return json_response(req, http::status::bad_request, error_body(std::string("malformed JSON: ") + e.what()));
        }
        auto session = manager.create(body);
        return json_response(req, http::status::created, session->state());
      }
      const std::string prefix = "/sessions/";
      if (target.rfind(prefix, 0) == 0) {
        const std::string id = target.substr(prefix.size());
        if (req.method() == http::verb::get) {
          auto session = manager.get(id);
          if (!session) return json_response(req, http::status::not_found, error_body("no session " + id));
          return json_response(req, http::status::ok, session->state());
        }
        if (req.method() == http::verb::delete_) {
          if (!manager.remove(id)) return json_response(req, http::status::not_found, error_body("no session " + id));
          broadcast(id, {{"version", kProtocolVersion}, {"type", "terminal"}, {"session", id}, {"reason", "deleted"}},
                    true);
          return json_response(req, http::status::no_content, nullptr);
        }
        return json_response(req, http::status::method_not_allowed, error_body("use GET or DELETE"));
      }
      return json_response(req, http::status::not_found, error_body("unknown endpoint " + target));
    } catch (const std::exception& e) {
      return json_response(req, http::status::bad_request, error_body(e.what()));
    }
  }

  class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
   public:
    HttpConnection(tcp::socket&& socket, Impl& impl) : stream_(std::move(socket)), impl_(impl) {}

    void run() {
      net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpConnection::read, shared_from_this()));
    }

   private:
    void read() {
      req_ = {};
      stream_.expires_after(std::chrono::seconds(30));
      http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
      if (ec) {
        stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        return;
      }
      if (websocket::is_upgrade(req_)) {
        const std::string target(req_.target());
        const std::string prefix = "/session/";
        std::shared_ptr<Session> session;
        if (target.rfind(prefix, 0) == 0) session = impl_.manager.get(target.substr(prefix.size()));
        if (!session) {
          write(json_response(req_, http::status::not_found, error_body("no session for " + target)));
          return;
        }
        stream_.expires_never();
        std::make_shared<WsConnection>(stream_.release_socket(), session, impl_.hub)->run(std::move(req_));
        return;
      }
      write(impl_.handle(req_));
    }

    void write(Response res) {
      res_ = std::make_shared<Response>(std::move(res));
      http::async_write(stream_, *res_, beast::bind_front_handler(&HttpConnection::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!res_->keep_alive()) {
        stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        return;
      }
      read();
    }

    beast::tcp_stream stream_;
    Impl& impl_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    std::shared_ptr<Response> res_;
  };

  net::io_context ioc;
  tcp::acceptor acceptor;
  Hub hub;
  SessionManager manager;
  std::thread background;
};

Server::Server(std::string address, std::uint16_t port) : impl_(std::make_unique<Impl>(address, port)) {
  impl_->accept();
}

Server::~Server() { stop(); }

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

SessionManager& Server::sessions() { return impl_->manager; }

void Server::run() { impl_->ioc.run(); }

void Server::start() {
  impl_->background = std::thread([this] { impl_->ioc.run(); });
}

void Server::stop() {
  impl_->manager.stop_all();
  impl_->ioc.stop();
  if (impl_->background.joinable()) impl_->background.join();
}

}  // namespace prefnet::serve
