#pragma once

#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "reclab/serve.hpp"

namespace reclab {

inline nlohmann::json fetch_response_json(const FetchResponse& response) {
  nlohmann::json j;
  j["version"] = 1;
  j["fetch_id"] = response.fetch_id;
  j["source"] = to_string(response.list.source);
  j["fallback_used"] = response.list.fallback_used;
  j["k"] = response.list.request.k;
  auto& entries = j["entries"] = nlohmann::json::array();
  for (const auto& e : response.list.entries)
    entries.push_back({{"item", e.item}, {"score", e.score}});
  return j;
}

// Routes:
//   GET  /recommend/item/{domain}/{item}?k=6
//   GET  /recommend/user/{domain}/{user}?k=6
//   POST /click                {"fetch_id": "...", "item": "...", "domain": "..."}
//   GET  /stats?window=3600
//   GET  /health
class HttpServer {
 public:
  explicit HttpServer(FetchService& service) : service_(service) { wire(); }

  // Binds to an ephemeral port and serves until stop(); returns the port.
  int start(const std::string& host) {
    const int port = server_.bind_to_any_port(host);
    if (port <= 0) throw std::runtime_error("cannot bind " + host);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port;
  }

  void start(const std::string& host, int port) {
    if (!server_.bind_to_port(host, port))
      throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  ~HttpServer() { stop(); }

 private:
  void wire() {
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"version":1,"status":"ok"})", "application/json");
    });

    auto recommend = [this](RecRequest::Subject kind) {
      return [this, kind](const httplib::Request& req, httplib::Response& res) {
        RecRequest request;
        request.domain = req.path_params.at("domain");
        request.subject_kind = kind;
        request.subject_id = req.path_params.at("subject");
        if (req.has_param("k")) {
          try {
            request.k = std::stoi(req.get_param_value("k"));
          } catch (const std::exception&) {
            request.k = 0;
          }
          if (request.k < 1) {
            res.status = 400;
            res.set_content(R"({"version":1,"error":"k must be a positive integer"})",
                            "application/json");
            return;
          }
        }
        const std::string viewer = req.has_param("user") ? req.get_param_value("user") : "-";
        try {
          FetchResponse response = service_.fetch(request, viewer);
          res.set_content(fetch_response_json(response).dump(), "application/json");
        } catch (const UnknownDomainError& e) {
          res.status = 404;
          nlohmann::json j{{"version", 1}, {"error", e.what()}};
          res.set_content(j.dump(), "application/json");
        }
      };
    };
    server_.Get("/recommend/item/:domain/:subject", recommend(RecRequest::Subject::Item));
    server_.Get("/recommend/user/:domain/:subject", recommend(RecRequest::Subject::User));

    server_.Post("/click", [this](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.contains("fetch_id") || !body.contains("item")) {
        res.status = 400;
        res.set_content(R"({"version":1,"error":"expected fetch_id and item"})",
                        "application/json");
        return;
      }
      const bool accepted =
          service_.record_click(body["fetch_id"].get<std::string>(),
                                body["item"].get<std::string>(), body.value("domain", ""),
                                body.value("user", "-"));
      if (!accepted) {
        res.status = 409;
        res.set_content(R"({"version":1,"accepted":false})", "application/json");
        return;
      }
      res.set_content(R"({"version":1,"accepted":true})", "application/json");
    });

    server_.Get("/stats", [this](const httplib::Request& req, httplib::Response& res) {
      std::int64_t window = 0;
      if (req.has_param("window")) {
        try {
          window = std::stoll(req.get_param_value("window"));
        } catch (const std::exception&) {
          res.status = 400;
          res.set_content(R"({"version":1,"error":"bad window"})", "application/json");
          return;
        }
      }
      nlohmann::json j = to_json(service_.stats(window));
      j["version"] = 1;
      res.set_content(j.dump(), "application/json");
    });
  }

  FetchService& service_;
  httplib::Server server_;
  std::thread thread_;
};

}  // namespace reclab
