#pragma once

#include <memory>
#include <string>

#include "arramon/service/session.h"

namespace httplib {
class Server;
}

namespace arramon {

/// JSON-over-HTTP front end for a SessionManager. Endpoints are listed in
/// docs/formats.md. Retries carrying the same request id (body field
/// "request_id" or header X-Request-Id) return the first reply.
class HttpServer {
  public:
    explicit HttpServer(std::shared_ptr<SessionManager> sessions);
    ~HttpServer();

    /// Binds to `port` (0 picks a free one) and returns the bound port, or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    bool listen();
    void stop();
    void wait_until_ready() const;

  private:
    void routes();

    std::shared_ptr<SessionManager> sessions_;
    std::unique_ptr<httplib::Server> server_;
};

} // namespace arramon
