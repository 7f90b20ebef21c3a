#include "bedsim/server.hpp"

#include <array>
#include <chrono>
#include <csignal>
#include <deque>
#include <set>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace bedsim::service {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

using protocol::Message;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

protocol::ErrorReply to_reply(const Error& e) {
  switch (e.code()) {
    case ErrorCode::GateRejected: return {"gate_rejected", e.what(), e.weight_kgf()};
    case ErrorCode::NoContact: return {"no_contact", e.what(), std::nullopt};
    case ErrorCode::NoBody:
    case ErrorCode::Validation:
    case ErrorCode::Config: return {"invalid_profile", e.what(), std::nullopt};
    case ErrorCode::Io: break;
  }
  return {"internal", e.what(), std::nullopt};
}

}  // namespace

// ---------------------------------------------------------------------------
// Simulation

Simulation::Simulation(const Scenario& scenario) : scenario_(scenario) {
  scenario_.validate();
  loop_ = LoopState{Plant::settle(scenario_.profile, scenario_.plant, scenario_.sensor,
                                  scenario_.travel_max_mm),
                    {}, scenario_.seed, 0};
  loop_.control.mode = scenario_.mode;
}

Message Simulation::activate_with(FirmnessMode mode, std::string_view request_type) {
  try {
    const PressureMap readings = loop_.readings();
    loop_.control = request_type == "set_mode"
                        ? set_mode(loop_.control, mode, readings, scenario_.control)
                        : activate(readings, mode, scenario_.control);
    return protocol::Ack{std::string(request_type)};
  } catch (const Error& e) {
    // A failed mode change leaves the mattress passive; a failed activate changes nothing.
    if (request_type == "set_mode") loop_.control = deactivate(loop_.control);
    return to_reply(e);
  }
}

Message Simulation::handle(const Message& request) {
  using namespace protocol;
  return std::visit(
      overloaded{
          [&](const Hello&) -> Message { return Ack{"hello"}; },
          [&](const GetStatus&) -> Message { return status(); },
          [&](const Activate& m) -> Message { return activate_with(m.mode, "activate"); },
          [&](const SetMode& m) -> Message { return activate_with(m.mode, "set_mode"); },
          [&](const Deactivate&) -> Message {
            loop_.control = deactivate(loop_.control);
            return Ack{"deactivate"};
          },
          [&](const LoadBody& m) -> Message {
            try {
              BodyProfile profile = std::holds_alternative<std::string>(m.body)
                                        ? builtin_profile(std::get<std::string>(m.body))
                                        : std::get<BodyProfile>(m.body);
              if (!profile.spec().same_shape(loop_.plant.profile.spec())) {
                throw Error(ErrorCode::Validation, "profile grid does not match the mattress");
              }
              loop_.plant = Plant::settle(std::move(profile), scenario_.plant, scenario_.sensor,
                                          scenario_.travel_max_mm);
              loop_.control = deactivate(loop_.control);
              return Ack{"load_body"};
            } catch (const Error& e) {
              return to_reply(e);
            }
          },
          [&](const Subscribe&) -> Message { return Ack{"subscribe"}; },
          [&](const Unsubscribe&) -> Message { return Ack{"unsubscribe"}; },
          [&](const auto&) -> Message {
            return ErrorReply{"bad_request",
                              "'" + std::string(type_name(request)) + "' is not a client request",
                              std::nullopt};
          },
      },
      request);
}

TickRecord Simulation::step() {
  for (const auto& p : scenario_.perturbations) {
    if (p.tick == loop_.tick) apply_perturbation(loop_, p);
  }
  TickRecord rec;
  loop_ = tick(loop_, scenario_.control, &rec);
  return rec;
}

protocol::Status Simulation::status() const {
  const ControlState& c = loop_.control;
  protocol::Status s;
  s.weight_kgf = c.active ? c.weight_kgf : total_weight(loop_.readings());
  s.mode = c.mode;
  s.active = c.active;
  s.converged = c.active && c.converged;
  s.tick = loop_.tick;
  s.excluded_count = c.active ? static_cast<std::int64_t>(c.excluded.count()) : 0;
  s.target_kgf = c.active ? c.target_kgf : 0.0;
  return s;
}

protocol::Snapshot Simulation::snapshot() const {
  const PressureMap readings = loop_.readings();
  protocol::Snapshot s;
  s.tick = loop_.tick;
  s.pressures = readings.grid();
  s.extensions = loop_.plant.bank.extension_mm;
  if (loop_.control.active) {
    s.support = BinaryMap(readings.spec());
    for (std::size_t i = 0; i < readings.values().size(); ++i) {
      s.support.set_index(i, loop_.control.controls(i));
    }
  } else {
    s.support = binarize(readings, scenario_.control.threshold_kgf);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Sessions

class Session;

class Server::Impl {
 public:
  Impl(const Scenario& scenario, ServeOptions options);

  void run();
  void stop_now();
  void enqueue(const std::shared_ptr<Session>& session, Message request);
  void enqueue_error(const std::shared_ptr<Session>& session, protocol::ErrorReply error);
  void closed(const std::shared_ptr<Session>& session) { sessions_.erase(session); }

  net::io_context ioc{1};
  std::uint16_t port = 0;
  std::uint16_t ws_port = 0;

 private:
  struct Pending {
    std::weak_ptr<Session> session;
    Message request;
    bool decode_failed = false;
  };

  void bind(tcp::acceptor& acceptor, std::uint16_t requested, std::uint16_t& bound);
  void do_accept(tcp::acceptor& acceptor, bool websocket);
  void schedule_tick();
  void on_tick();
  void drain_queue();
  void publish();

  Simulation sim_;
  ServeOptions opts_;
  tcp::acceptor stream_acceptor_{ioc};
  tcp::acceptor ws_acceptor_{ioc};
  net::steady_timer timer_{ioc};
  net::signal_set signals_{ioc};
  std::set<std::shared_ptr<Session>> sessions_;
  std::deque<Pending> queue_;
  Clock::time_point next_tick_;
  bool stopping_ = false;
};

class Session : public std::enable_shared_from_this<Session> {
 public:
  explicit Session(Server::Impl& server) : server_(server) {}
  virtual ~Session() = default;

  virtual void start() = 0;
  virtual void close() = 0;

  // Server shutdown: later read errors must not cut the close handshake short.
  void shutdown() {
    if (dead_) return;
    dead_ = true;
    close();
  }

  // Control replies are never dropped.
  void send(std::string frame) {
    replies_.push_back(std::make_shared<const std::string>(std::move(frame)));
    pump();
  }
  // Latest wins: an unsent snapshot is replaced by a newer one.
  void offer_snapshot(std::shared_ptr<const std::string> frame) {
    pending_snapshot_ = std::move(frame);
    pump();
  }

  std::optional<double> rate_hz;
  Clock::time_point last_snapshot{};

 protected:
  void on_frame(std::string_view frame) {
    if (frame.empty() || frame == "\r") return;
    try {
      server_.enqueue(shared_from_this(), protocol::decode(frame));
    } catch (const protocol::DecodeError& e) {
      server_.enqueue_error(shared_from_this(), e.reply());
    }
  }
  void write_done(const beast::error_code& ec) {
    writing_ = false;
    if (ec) {
      fail();
      return;
    }
    pump();
  }
  void fail() {
    if (dead_) return;
    dead_ = true;
    close();
    server_.closed(shared_from_this());
  }
  bool writing() const noexcept { return writing_; }
  bool dead() const noexcept { return dead_; }
  virtual void async_send(std::shared_ptr<const std::string> frame) = 0;

  Server::Impl& server_;

 private:
  void pump() {
    if (writing_ || dead_) return;
    std::shared_ptr<const std::string> next;
    if (!replies_.empty()) {
      next = std::move(replies_.front());
      replies_.pop_front();
    } else if (pending_snapshot_) {
      next = std::move(pending_snapshot_);
    } else {
      return;
    }
    writing_ = true;
    async_send(std::move(next));
  }

  std::deque<std::shared_ptr<const std::string>> replies_;
  std::shared_ptr<const std::string> pending_snapshot_;
  bool writing_ = false;
  bool dead_ = false;
};

class StreamSession : public Session {
 public:
  StreamSession(Server::Impl& server, tcp::socket socket)
      : Session(server), socket_(std::move(socket)) {}

  void start() override { do_read(); }

  void close() override {
    beast::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
    socket_.close(ec);
  }

 private:
  void do_read() {
    socket_.async_read_some(net::buffer(buf_), [self = shared_from_this(), this](
                                                   const beast::error_code& ec, std::size_t n) {
      if (ec) {
        fail();
        return;
      }
      for (std::size_t i = 0; i < n && !dead(); ++i) {
        const char ch = buf_[i];
        if (ch == '\n') {
          if (!discarding_) on_frame(line_);
          line_.clear();
          discarding_ = false;
        } else if (!discarding_) {
          line_.push_back(ch);
          if (line_.size() > protocol::kMaxFrameBytes) {
            server_.enqueue_error(shared_from_this(),
                                  {"frame_too_large", "frame exceeds 65536 bytes", std::nullopt});
            line_.clear();
            discarding_ = true;
          }
        }
      }
      if (!dead()) do_read();
    });
  }

  void async_send(std::shared_ptr<const std::string> frame) override {
    net::async_write(socket_, net::buffer(*frame),
                     [self = shared_from_this(), this, frame](const beast::error_code& ec, std::size_t) {
                       write_done(ec);
                     });
  }

  tcp::socket socket_;
  std::array<char, 4096> buf_{};
  std::string line_;
  bool discarding_ = false;
};

class WebSocketSession : public Session {
 public:
  WebSocketSession(Server::Impl& server, tcp::socket socket)
      : Session(server), ws_(std::move(socket)) {}

  void start() override {
    websocket::stream_base::timeout t;
    t.handshake_timeout = std::chrono::seconds(5);
    t.idle_timeout = websocket::stream_base::none();
    t.keep_alive_pings = false;
    ws_.set_option(t);
    ws_.read_message_max(4 * protocol::kMaxFrameBytes);
    ws_.async_accept([self = shared_from_this(), this](const beast::error_code& ec) {
      if (ec) {
        fail();
        return;
      }
      accepted_ = true;
      do_read();
    });
  }

  void close() override {
    if (!accepted_ || !ws_.is_open()) {
      beast::error_code ec;
      beast::get_lowest_layer(ws_).socket().close(ec);
    } else if (writing()) {
      close_after_write_ = true;
    } else {
      ws_.async_close(websocket::close_code::normal,
                      [self = shared_from_this(), this](const beast::error_code&) {
                        beast::error_code ec;
                        beast::get_lowest_layer(ws_).socket().close(ec);
                      });
    }
  }

 private:
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this(), this](const beast::error_code& ec, std::size_t) {
      if (ec) {
        fail();
        return;
      }
      const std::string text = beast::buffers_to_string(buffer_.data());
      buffer_.consume(buffer_.size());
      on_frame(text);
      if (!dead()) do_read();
    });
  }

  void async_send(std::shared_ptr<const std::string> frame) override {
    // Same frame as the stream transport, minus the line terminator.
    std::size_t len = frame->size();
    if (len && (*frame)[len - 1] == '\n') --len;
    ws_.text(true);
    ws_.async_write(net::buffer(frame->data(), len),
                    [self = shared_from_this(), this, frame](const beast::error_code& ec, std::size_t) {
                      write_done(ec);
                      if (close_after_write_) {
                        close_after_write_ = false;
                        close();
                      }
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  bool accepted_ = false;
  bool close_after_write_ = false;
};

// ---------------------------------------------------------------------------
// Server

Server::Impl::Impl(const Scenario& scenario, ServeOptions options)
    : sim_(scenario), opts_(std::move(options)) {
  bind(stream_acceptor_, opts_.port, port);
  bind(ws_acceptor_, opts_.ws_port, ws_port);
}

void Server::Impl::bind(tcp::acceptor& acceptor, std::uint16_t requested, std::uint16_t& bound) {
  try {
    const tcp::endpoint ep(net::ip::make_address(opts_.address), requested);
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen();
    bound = acceptor.local_endpoint().port();
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::Io, "cannot listen on " + opts_.address + ":" + std::to_string(requested) +
                                   ": " + e.code().message());
  }
}

void Server::Impl::do_accept(tcp::acceptor& acceptor, bool websocket) {
  acceptor.async_accept([this, &acceptor, websocket](const beast::error_code& ec, tcp::socket socket) {
    if (stopping_) return;
    if (!ec) {
      std::shared_ptr<Session> s;
      if (websocket) {
        s = std::make_shared<WebSocketSession>(*this, std::move(socket));
      } else {
        s = std::make_shared<StreamSession>(*this, std::move(socket));
      }
      sessions_.insert(s);
      s->start();
    }
    do_accept(acceptor, websocket);
  });
}

void Server::Impl::run() {
  do_accept(stream_acceptor_, false);
  do_accept(ws_acceptor_, true);
  if (opts_.handle_signals) {
    signals_.add(SIGINT);
    signals_.add(SIGTERM);
    signals_.async_wait([this](const beast::error_code& ec, int) {
      if (!ec) stop_now();
    });
  }
  next_tick_ = Clock::now();
  schedule_tick();
  ioc.run();
}

void Server::Impl::stop_now() {
  if (stopping_) return;
  stopping_ = true;
  beast::error_code ec;
  stream_acceptor_.close(ec);
  ws_acceptor_.close(ec);
  timer_.cancel();
  signals_.cancel(ec);
  auto sessions = std::move(sessions_);
  sessions_.clear();
  for (const auto& s : sessions) s->shutdown();
}

void Server::Impl::enqueue(const std::shared_ptr<Session>& session, Message request) {
  queue_.push_back({session, std::move(request), false});
}

void Server::Impl::enqueue_error(const std::shared_ptr<Session>& session, protocol::ErrorReply error) {
  queue_.push_back({session, std::move(error), true});
}

void Server::Impl::schedule_tick() {
  if (stopping_) return;
  if (opts_.fast) {
    net::post(ioc, [this] { on_tick(); });
    return;
  }
  next_tick_ += std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(sim_.control_config().tick_dt_s));
  timer_.expires_at(next_tick_);
  timer_.async_wait([this](const beast::error_code& ec) {
    if (!ec) on_tick();
  });
}

void Server::Impl::on_tick() {
  if (stopping_) return;
  drain_queue();
  sim_.step();
  publish();
  schedule_tick();
}

void Server::Impl::drain_queue() {
  std::deque<Pending> pending;
  pending.swap(queue_);
  const double tick_rate = 1.0 / sim_.control_config().tick_dt_s;
  for (auto& p : pending) {
    auto session = p.session.lock();
    Message reply;
    if (p.decode_failed) {
      reply = std::move(p.request);
    } else {
      if (session) {
        if (const auto* sub = std::get_if<protocol::Subscribe>(&p.request)) {
          session->rate_hz = std::min(sub->rate_hz, tick_rate);
          session->last_snapshot = Clock::time_point{};
        } else if (std::holds_alternative<protocol::Unsubscribe>(p.request)) {
          session->rate_hz.reset();
        }
      }
      reply = sim_.handle(p.request);
    }
    if (session) session->send(protocol::encode(reply));
  }
}

void Server::Impl::publish() {
  const auto now = Clock::now();
  std::shared_ptr<const std::string> frame;
  for (const auto& s : sessions_) {
    if (!s->rate_hz) continue;
    const auto period = std::chrono::duration<double>(1.0 / *s->rate_hz);
    if (s->last_snapshot != Clock::time_point{} && now - s->last_snapshot < period) continue;
    if (!frame) frame = std::make_shared<const std::string>(protocol::encode(sim_.snapshot()));
    s->last_snapshot = now;
    s->offer_snapshot(frame);
  }
}

Server::Server(const Scenario& scenario, ServeOptions options)
    : impl_(std::make_unique<Impl>(scenario, std::move(options))) {}

Server::~Server() = default;

std::uint16_t Server::port() const { return impl_->port; }
std::uint16_t Server::ws_port() const { return impl_->ws_port; }

void Server::run() { impl_->run(); }

void Server::stop() {
  net::post(impl_->ioc, [impl = impl_.get()] { impl->stop_now(); });
}

}  // namespace bedsim::service
