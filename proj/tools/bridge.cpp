#include "bridge.hpp"

#include <chrono>
#include <deque>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "json.hpp"
#include "tega/tega.h"

namespace tega_bridge {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

struct TrialDeleter {
  void operator()(tega_trial* t) const { tega_trial_destroy(t); }
};

std::string take(char* s) {
  std::string out = s ? s : "";
  tega_string_free(s);
  return out;
}

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, const Options& options, std::function<void()> on_close)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        options_(options),
        on_close_(std::move(on_close)) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

 private:
  void log(const std::string& msg) {
    if (options_.log) *options_.log << "[bridge] " << msg << '\n';
  }

  void on_accept(beast::error_code ec) {
    if (ec) return finish("handshake failed: " + ec.message());
    tega_trial* raw = nullptr;
    if (tega_trial_create(options_.trial_config_json.c_str(), &raw) != TEGA_OK) {
      return finish(std::string("cannot start trial: ") + tega_last_error());
    }
    trial_.reset(raw);
    char* hello = nullptr;
    tega_trial_hello(trial_.get(), &hello);
    enqueue(take(hello));
    dt_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(tega_trial_dt(trial_.get())));
    next_tick_ = std::chrono::steady_clock::now() + dt_;
    read();
    schedule_tick();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      if (!closing_) finish("client gone: " + ec.message());
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    handle_client_message(text);
    read();
  }

  void handle_client_message(const std::string& text) {
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
      log("dropping malformed client message");
      return;
    }
    if (msg.contains("seq") && msg["seq"].is_number_unsigned()) {
      const auto seq = msg["seq"].get<std::uint64_t>();
      if (seq <= client_seq_) log("client sequence number did not increase");
      client_seq_ = seq;
    }
    const std::string type = msg.value("type", std::string());
    if (type != "activation") {
      log("ignoring client message of type '" + type + "'");
      return;
    }
    if (!msg.contains("value") || !msg["value"].is_number()) {
      log("activation message without numeric value");
      return;
    }
    if (trial_ && tega_trial_post_activation(trial_.get(), msg["value"].get<double>()) != TEGA_OK) {
      log(std::string("activation rejected: ") + tega_last_error());
    }
  }

  void schedule_tick() {
    if (options_.realtime) {
      timer_.expires_at(next_tick_);
    } else {
      timer_.expires_after(std::chrono::steady_clock::duration::zero());
    }
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->tick();
    });
  }

  void tick() {
    if (closing_) return;
    // Without a wall clock, let the client drain what was already sent.
    if (!options_.realtime && queue_.size() > 64) {
      timer_.expires_after(std::chrono::milliseconds(1));
      timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
        if (!ec) self->tick();
      });
      return;
    }
    char* lines = nullptr;
    if (tega_trial_step(trial_.get(), &lines) != TEGA_OK) {
      return finish(std::string("trial step failed: ") + tega_last_error());
    }
    std::istringstream in(take(lines));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) enqueue(line);
    }
    if (tega_trial_done(trial_.get())) {
      done_ = true;
      maybe_close();
      return;
    }
    next_tick_ += dt_;
    schedule_tick();
  }

  void enqueue(std::string msg) {
    queue_.push_back(std::move(msg));
    if (!writing_) write_next();
  }

  void write_next() {
    if (queue_.empty()) {
      writing_ = false;
      maybe_close();
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return self->finish("write failed: " + ec.message());
                      self->queue_.pop_front();
                      self->write_next();
                    });
  }

  void maybe_close() {
    if (!done_ || writing_ || closing_) return;
    closing_ = true;
    ws_.async_close(websocket::close_code::normal,
                    [self = shared_from_this()](beast::error_code) { self->finish("session complete"); });
  }

  void finish(const std::string& why) {
    if (finished_) return;
    finished_ = true;
    closing_ = true;
    log(why);
    timer_.cancel();
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).close(ignored);
    if (on_close_) on_close_();
  }

  websocket::stream<tcp::socket> ws_;
  asio::steady_timer timer_;
  const Options& options_;
  std::function<void()> on_close_;
  std::unique_ptr<tega_trial, TrialDeleter> trial_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::chrono::steady_clock::duration dt_{};
  std::chrono::steady_clock::time_point next_tick_{};
  std::uint64_t client_seq_ = 0;
  bool writing_ = false;
  bool done_ = false;
  bool closing_ = false;
  bool finished_ = false;
};

}  // namespace

void serve(const Options& options) {
  // Fail early on a configuration the library rejects.
  char* resolved = nullptr;
  if (tega_config_resolve(options.trial_config_json.c_str(), &resolved) != TEGA_OK) {
    throw std::runtime_error(std::string("invalid trial configuration: ") + tega_last_error());
  }
  tega_string_free(resolved);

  asio::io_context io;
  tcp::acceptor acceptor(io);
  const tcp::endpoint endpoint(asio::ip::make_address(options.address), options.port);
  acceptor.open(endpoint.protocol());
  acceptor.set_option(asio::socket_base::reuse_address(true));
  acceptor.bind(endpoint);
  acceptor.listen();
  if (options.log) {
    *options.log << "[bridge] listening on ws://" << options.address << ':'
                 << acceptor.local_endpoint().port() << '\n';
  }
  if (options.on_listening) options.on_listening(acceptor.local_endpoint().port());

  int started = 0;
  int closed = 0;
  std::function<void()> accept_next = [&] {
    acceptor.async_accept([&](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      ++started;
      std::make_shared<Session>(std::move(socket), options, [&] {
        ++closed;
        if (options.max_sessions > 0 && closed >= options.max_sessions) {
          beast::error_code ignored;
          acceptor.close(ignored);
        }
      })->start();
      if (options.max_sessions == 0 || started < options.max_sessions) accept_next();
    });
  };
  accept_next();
  io.run();
}

}  // namespace tega_bridge
