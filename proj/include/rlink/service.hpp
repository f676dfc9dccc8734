#pragma once

#include "rlink/pipeline.hpp"

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace rlink::service {

/// Counting semaphore that admits waiters strictly in arrival order and
/// records the largest number ever admitted at once.
class AdmissionGate {
public:
    explicit AdmissionGate(std::size_t limit) : limit_(limit) {}

    void acquire();
    void release();

    std::size_t active() const;
    std::size_t high_water_mark() const;
    std::size_t limit() const noexcept { return limit_; }

    /// Holds one admission for its lifetime.
    class Ticket {
    public:
        explicit Ticket(AdmissionGate& g) : gate_(g) { gate_.acquire(); }
        ~Ticket() { gate_.release(); }
        Ticket(const Ticket&) = delete;
        Ticket& operator=(const Ticket&) = delete;

    private:
        AdmissionGate& gate_;
    };

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::size_t limit_;
    std::size_t active_ = 0;
    std::size_t high_water_ = 0;
    std::uint64_t next_ticket_ = 0;
    std::uint64_t now_serving_ = 0;
};

struct ServiceOptions {
    std::string host = "127.0.0.1";
    /// 0 binds an ephemeral port.
    int port = 0;
    std::size_t max_concurrent_requests = 8;
    std::size_t workers_per_request = 4;
    /// Connection threads; requests beyond the admission limit wait in the gate.
    std::size_t http_threads = 32;
};

struct HttpReply {
    int status = 200;
    std::string body;
};

/// Batch linkage over HTTP: POST /link, GET /health, GET /info.
class Service {
public:
    explicit Service(ServiceOptions options);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Makes the service ready; until then /link and /health answer 503.
    void set_linker(std::shared_ptr<const Linker> linker);

    HttpReply handle_link(const std::string& body);
    HttpReply handle_health() const;
    HttpReply handle_info() const;

    /// Binds the listening socket and returns the port.
    int bind();
    /// Serves on a background thread (binding first if needed).
    void start();
    /// Serves on the calling thread until stop().
    void run();
    /// Stops accepting and waits for in-flight requests.
    void stop();

    int port() const noexcept { return port_; }
    const AdmissionGate& gate() const noexcept { return gate_; }

private:
    std::shared_ptr<const Linker> linker() const;

    ServiceOptions options_;
    AdmissionGate gate_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = -1;
    mutable std::mutex linker_mu_;
    std::shared_ptr<const Linker> linker_;
};

}  // namespace rlink::service
