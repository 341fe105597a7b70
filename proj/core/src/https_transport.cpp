#include "civicrank/error.hpp"
#include "civicrank/wikiclient.hpp"

#include <httplib.h>

namespace civicrank {

namespace {

class HttplibTransport final : public HttpTransport {
public:
    HttplibTransport(std::string user_agent, std::chrono::seconds timeout)
        : user_agent_(std::move(user_agent)), timeout_(timeout) {}

    HttpResponse get(const std::string& url) override {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) throw validation_error("bad_url", url);
        const auto path_start = url.find('/', scheme_end + 3);
        const std::string origin = url.substr(0, path_start);
        const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(origin);
        client.set_connection_timeout(timeout_);
        client.set_read_timeout(timeout_);
        client.set_follow_location(true);
        auto res = client.Get(path, {{"User-Agent", user_agent_}, {"Accept", "application/json"}});
        if (!res) throw Error(ErrorKind::retriable, "connection_failed", httplib::to_string(res.error()));
        return {res->status, res->body};
    }

private:
    std::string user_agent_;
    std::chrono::seconds timeout_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_https_transport(std::string user_agent, std::chrono::seconds timeout) {
    return std::make_unique<HttplibTransport>(std::move(user_agent), timeout);
}

}  // namespace civicrank
