#include "rlink/service.hpp"

#include "rlink/wire.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>

namespace rlink::service {

void AdmissionGate::acquire() {
    std::unique_lock lock(mu_);
    const std::uint64_t ticket = next_ticket_++;
    cv_.wait(lock, [&] { return ticket == now_serving_ && active_ < limit_; });
    ++now_serving_;
    ++active_;
    high_water_ = std::max(high_water_, active_);
    lock.unlock();
    // The next ticket may be admissible right away.
    cv_.notify_all();
}

void AdmissionGate::release() {
    {
        std::lock_guard lock(mu_);
        --active_;
    }
    cv_.notify_all();
}

std::size_t AdmissionGate::active() const {
    std::lock_guard lock(mu_);
    return active_;
}

std::size_t AdmissionGate::high_water_mark() const {
    std::lock_guard lock(mu_);
    return high_water_;
}

// ---------------------------------------------------------------------------

namespace {

HttpReply json_reply(int status, const wire::json& body) { return {status, body.dump()}; }

HttpReply error_reply(int status, ErrorCode code, std::string_view message) {
    return json_reply(status, {{"error", wire::error_to_json(code, message)}});
}

}  // namespace

Service::Service(ServiceOptions options)
    : options_(std::move(options)), gate_(options_.max_concurrent_requests), server_(std::make_unique<httplib::Server>()) {
    const std::size_t threads = std::max(options_.http_threads, options_.max_concurrent_requests + 1);
    server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };

    const auto send = [](httplib::Response& res, const HttpReply& r) {
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    server_->Post("/link", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, handle_link(req.body));
    });
    server_->Get("/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, handle_health()); });
    server_->Get("/info", [this, send](const httplib::Request&, httplib::Response& res) { send(res, handle_info()); });
}

Service::~Service() { stop(); }

void Service::set_linker(std::shared_ptr<const Linker> linker) {
    std::lock_guard lock(linker_mu_);
    linker_ = std::move(linker);
}

std::shared_ptr<const Linker> Service::linker() const {
    std::lock_guard lock(linker_mu_);
    return linker_;
}

HttpReply Service::handle_link(const std::string& body) {
    const auto lk = linker();
    if (!lk) return error_reply(503, ErrorCode::ServiceUnreachable, "dataset is still loading");

    wire::LinkRequest req;
    try {
        req = wire::parse_link_request(body);
    } catch (const Error& e) {
        return error_reply(400, e.code(), e.what());
    }

    std::vector<LinkOutcome> outcomes;
    {
        AdmissionGate::Ticket ticket(gate_);
        outcomes = lk->link_batch(req.queries, options_.workers_per_request, req.options);
    }
    const bool empty_name = std::any_of(outcomes.begin(), outcomes.end(), [](const LinkOutcome& o) {
        return o.error == ErrorCode::EmptyQueryName;
    });
    const wire::ResponseMeta meta{lk->config().dataset_id, lk->config().digest()};
    return json_reply(empty_name ? 422 : 200, wire::link_response(outcomes, meta, req.timing));
}

HttpReply Service::handle_health() const {
    if (!linker()) return json_reply(503, {{"status", "loading"}});
    return json_reply(200, {{"status", "ok"}});
}

HttpReply Service::handle_info() const {
    wire::json j = {{"ready", false},
                    {"max_concurrent_requests", gate_.limit()},
                    {"workers_per_request", options_.workers_per_request},
                    {"active_requests", gate_.active()},
                    {"high_water_mark", gate_.high_water_mark()}};
    if (const auto lk = linker()) {
        j["ready"] = true;
        j["dataset"] = lk->config().dataset_id;
        j["records"] = lk->store().size();
        j["band_config"] = lk->config().band.to_string();
        j["config_digest"] = lk->config().digest();
    }
    return json_reply(200, j);
}

int Service::bind() {
    if (port_ >= 0) return port_;
    port_ = options_.port == 0 ? server_->bind_to_any_port(options_.host)
                               : (server_->bind_to_port(options_.host, options_.port) ? options_.port : -1);
    if (port_ < 0) {
        throw Error(ErrorCode::IoError, "cannot bind " + options_.host + ":" + std::to_string(options_.port));
    }
    return port_;
}

void Service::start() {
    bind();
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void Service::run() {
    bind();
    spdlog::info("listening on {}:{}", options_.host, port_);
    server_->listen_after_bind();
}

void Service::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace rlink::service
