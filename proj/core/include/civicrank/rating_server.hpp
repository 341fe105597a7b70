#pragma once

#include "civicrank/corpus.hpp"
#include "civicrank/rating_store.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace civicrank {

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::filesystem::path static_dir;  // optional UI assets served at /
    std::size_t threads = 8;
};

// JSON API for the rating UI:
//   GET  /api/assignment?respondent_id=R
//   POST /api/ratings
//   GET  /api/progress?respondent_id=R
//   GET  /api/articles/{id}
//   GET  /api/instrument
//   POST /api/battery
//   GET  /healthz
// Errors are {"error": code, "detail": text}, with "fields" for score problems.
class RatingServer {
public:
    RatingServer(RatingStore& store, const Corpus& corpus, ServiceOptions options);
    ~RatingServer();

    RatingServer(const RatingServer&) = delete;
    RatingServer& operator=(const RatingServer&) = delete;

    // Binds the socket and returns the actual port.
    int bind();
    // Blocks until stop() is called.
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace civicrank
