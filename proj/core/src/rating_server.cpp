#include "civicrank/rating_server.hpp"

#include "civicrank/error.hpp"

#include <httplib.h>

#include <unordered_map>

namespace civicrank {

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& detail) {
    send_json(res, status, {{"error", code}, {"detail", detail}});
}

int status_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::not_found: return 404;
        case ErrorKind::validation: return 400;
        default: return 500;
    }
}

nlohmann::json progress_json(const Progress& p) {
    return {{"respondent_id", p.respondent_id}, {"rated", p.rated}, {"total", p.total}, {"fraction", p.fraction()}};
}

nlohmann::json items_json(const std::vector<InstrumentItem>& items) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& i : items) out.push_back({{"key", i.key}, {"label", i.label}});
    return out;
}

std::string query(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) throw validation_error("missing_parameter", name);
    return req.get_param_value(name);
}

}  // namespace

struct RatingServer::Impl {
    RatingStore& store;
    std::unordered_map<std::string, const Article*> articles;
    ServiceOptions options;
    httplib::Server server;
    int port = -1;

    Impl(RatingStore& s, const Corpus& corpus, ServiceOptions o) : store(s), options(std::move(o)) {
        for (const auto& a : corpus.articles) articles.emplace(a.id, &a);
        routes();
    }

    template <typename F>
    httplib::Server::Handler guarded(F f) {
        return [f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const Error& e) {
                send_error(res, status_for(e), e.code(), e.detail());
            } catch (const nlohmann::json::exception& e) {
                send_error(res, 400, "bad_json", e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "internal", e.what());
            }
        };
    }

    nlohmann::json card(const std::string& id) const {
        const auto it = articles.find(id);
        if (it == articles.end()) throw Error(ErrorKind::not_found, "unknown_article", id);
        return article_card(*it->second);
    }

    static nlohmann::json outcome_json(const SubmitOutcome& o) {
        nlohmann::json j;
        j["status"] = o.status == SubmitOutcome::Status::accepted ? "accepted" : "duplicate";
        return j;
    }

    static void send_rejection(httplib::Response& res, const SubmitOutcome& o) {
        nlohmann::json j{{"error", o.error}, {"detail", o.error == "not_in_plan" ? "pair is not in the plan" : "invalid scores"}};
        auto& fields = j["fields"] = nlohmann::json::array();
        for (const auto& [field, reason] : o.fields) fields.push_back({{"field", field}, {"reason", reason}});
        send_json(res, 400, j);
    }

    void routes() {
        server.set_payload_max_length(1 << 20);

        server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"status", "ok"}});
        });

        server.Get("/api/instrument", guarded([this](const httplib::Request&, httplib::Response& res) {
            const auto& spec = store.instrument();
            nlohmann::json j = spec;
            j["rating_items"] = items_json(spec.rating_items());
            send_json(res, 200, j);
        }));

        server.Get("/api/assignment", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto rid = query(req, "respondent_id");
            const auto next = store.next_assignment(rid);
            nlohmann::json j{{"respondent_id", rid}, {"progress", progress_json(store.progress(rid))}};
            if (next) {
                j["status"] = "assignment";
                j["card"] = card(*next);
                j["items"] = items_json(store.instrument().rating_items());
            } else {
                j["status"] = "done";
                j["battery_pending"] = !store.has_battery(rid);
            }
            send_json(res, 200, j);
        }));

        server.Get("/api/progress", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, progress_json(store.progress(query(req, "respondent_id"))));
        }));

        server.Get(R"(/api/articles/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, card(req.matches[1].str()));
        }));

        server.Post("/api/ratings", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            RatingResponse r;
            r.respondent_id = body.at("respondent_id").get<std::string>();
            r.article_id = body.at("article_id").get<std::string>();
            r.scores = body.at("scores").get<std::map<std::string, int>>();
            r.submitted_at = body.value("submitted_at", std::string());
            const auto o = store.submit(std::move(r));
            if (o.status == SubmitOutcome::Status::rejected) return send_rejection(res, o);
            auto j = outcome_json(o);
            j["progress"] = progress_json(store.progress(o.stored.respondent_id));
            send_json(res, o.status == SubmitOutcome::Status::accepted ? 201 : 200, j);
        }));

        server.Post("/api/battery", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            BatteryResponse b;
            b.respondent_id = body.at("respondent_id").get<std::string>();
            b.scores = body.at("scores").get<std::map<std::string, int>>();
            b.submitted_at = body.value("submitted_at", std::string());
            const auto o = store.submit_battery(std::move(b));
            if (o.status == SubmitOutcome::Status::rejected) return send_rejection(res, o);
            send_json(res, o.status == SubmitOutcome::Status::accepted ? 201 : 200, outcome_json(o));
        }));

        if (!options.static_dir.empty()) {
            if (!server.set_mount_point("/", options.static_dir.string())) {
                throw io_error("bad_static_dir", options.static_dir.string());
            }
        }
        const auto threads = options.threads;
        server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    }
};

RatingServer::RatingServer(RatingStore& store, const Corpus& corpus, ServiceOptions options)
    : impl_(std::make_unique<Impl>(store, corpus, std::move(options))) {}

RatingServer::~RatingServer() { stop(); }

int RatingServer::bind() {
    auto& s = impl_->server;
    if (impl_->options.port == 0) {
        impl_->port = s.bind_to_any_port(impl_->options.host);
    } else {
        impl_->port = s.bind_to_port(impl_->options.host, impl_->options.port) ? impl_->options.port : -1;
    }
    if (impl_->port < 0) {
        throw io_error("bind_failed", impl_->options.host + ":" + std::to_string(impl_->options.port));
    }
    return impl_->port;
}

void RatingServer::run() { impl_->server.listen_after_bind(); }

void RatingServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace civicrank
