#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace reclab {

enum class EventKind { View, Fetch, Click };

enum class AlgorithmTag { WebsiteTrend, CategoryTrend, ContentBased, CfItem, CfUser };

inline const char* to_string(AlgorithmTag t) {
  switch (t) {
    case AlgorithmTag::WebsiteTrend: return "website_trend";
    case AlgorithmTag::CategoryTrend: return "category_trend";
    case AlgorithmTag::ContentBased: return "content_based";
    case AlgorithmTag::CfItem: return "cf_item";
    case AlgorithmTag::CfUser: return "cf_user";
  }
  return "unknown";
}

inline std::optional<AlgorithmTag> parse_algorithm_tag(std::string_view s) {
  if (s == "website_trend") return AlgorithmTag::WebsiteTrend;
  if (s == "category_trend") return AlgorithmTag::CategoryTrend;
  if (s == "content_based") return AlgorithmTag::ContentBased;
  if (s == "cf_item") return AlgorithmTag::CfItem;
  if (s == "cf_user") return AlgorithmTag::CfUser;
  return std::nullopt;
}

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::View: return "view";
    case EventKind::Fetch: return "fetch";
    case EventKind::Click: return "click";
  }
  return "unknown";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
  if (s == "view") return EventKind::View;
  if (s == "fetch") return EventKind::Fetch;
  if (s == "click") return EventKind::Click;
  return std::nullopt;
}

// One row of the interaction log. Views come from tracking; fetch/click rows
// are written by the serving layer and carry the producing algorithm, the
// fetch id that ties a click back to its box, and the fallback flag.
struct InteractionEvent {
  std::int64_t ts = 0;
  std::string user;
  std::string item;
  std::string domain;
  EventKind kind = EventKind::View;
  std::optional<AlgorithmTag> algorithm;  // present iff kind != View
  std::optional<std::string> fetch_id;    // serving-layer rows only
  std::optional<bool> fallback;           // serving-layer rows only

  bool valid() const {
    if (ts <= 0 || user.empty() || item.empty() || domain.empty()) return false;
    const bool has_alg = algorithm.has_value();
    return (kind == EventKind::View) ? !has_alg : has_alg;
  }
};

struct ItemDocument {
  std::string item;
  std::string domain;
  std::string url;
  std::string title;
  std::string body;
  std::int64_t published_at = 0;
  std::int64_t views = 0;
};

inline std::string to_json_line(const InteractionEvent& e) {
  nlohmann::json j;
  j["ts"] = e.ts;
  j["user"] = e.user;
  j["item"] = e.item;
  j["domain"] = e.domain;
  j["kind"] = to_string(e.kind);
  if (e.algorithm) j["alg"] = to_string(*e.algorithm);
  if (e.fetch_id) j["fetch_id"] = *e.fetch_id;
  if (e.fallback) j["fb"] = *e.fallback;
  return j.dump();
}

// Returns nullopt for malformed lines; unknown keys are tolerated so the
// serving log (a superset of this format) ingests cleanly.
inline std::optional<InteractionEvent> parse_event_line(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  InteractionEvent e;
  try {
    if (!j.contains("ts") || !j["ts"].is_number_integer()) return std::nullopt;
    e.ts = j["ts"].get<std::int64_t>();
    for (const char* key : {"user", "item", "domain", "kind"})
      if (!j.contains(key) || !j[key].is_string()) return std::nullopt;
    e.user = j["user"].get<std::string>();
    e.item = j["item"].get<std::string>();
    e.domain = j["domain"].get<std::string>();
    auto kind = parse_event_kind(j["kind"].get<std::string>());
    if (!kind) return std::nullopt;
    e.kind = *kind;
    if (j.contains("alg")) {
      if (!j["alg"].is_string()) return std::nullopt;
      auto tag = parse_algorithm_tag(j["alg"].get<std::string>());
      if (!tag) return std::nullopt;
      e.algorithm = *tag;
    }
    if (j.contains("fetch_id") && j["fetch_id"].is_string())
      e.fetch_id = j["fetch_id"].get<std::string>();
    if (j.contains("fb") && j["fb"].is_boolean()) e.fallback = j["fb"].get<bool>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  if (!e.valid()) return std::nullopt;
  return e;
}

struct EventStore {
  std::vector<InteractionEvent> events;  // sorted by ts, input order on ties
  std::size_t skipped = 0;
};

inline EventStore ingest_events(std::istream& in) {
  EventStore store;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto e = parse_event_line(line);
    if (e) {
      store.events.push_back(std::move(*e));
    } else {
      ++store.skipped;
    }
  }
  if (in.bad()) throw std::runtime_error("event source unreadable");
  std::stable_sort(store.events.begin(), store.events.end(),
                   [](const InteractionEvent& a, const InteractionEvent& b) { return a.ts < b.ts; });
  return store;
}

inline EventStore ingest_events_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open event file: " + path);
  return ingest_events(in);
}

inline std::string to_json_line(const ItemDocument& d) {
  nlohmann::json j;
  j["item"] = d.item;
  j["domain"] = d.domain;
  j["url"] = d.url;
  j["title"] = d.title;
  j["body"] = d.body;
  j["published_at"] = d.published_at;
  j["views"] = d.views;
  return j.dump();
}

inline std::optional<ItemDocument> parse_document_line(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  ItemDocument d;
  try {
    for (const char* key : {"item", "domain"})
      if (!j.contains(key) || !j[key].is_string()) return std::nullopt;
    d.item = j["item"].get<std::string>();
    d.domain = j["domain"].get<std::string>();
    d.url = j.value("url", std::string{});
    d.title = j.value("title", std::string{});
    d.body = j.value("body", std::string{});
    d.published_at = j.value("published_at", std::int64_t{0});
    d.views = j.value("views", std::int64_t{0});
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  if (d.item.empty() || d.domain.empty() || d.views < 0) return std::nullopt;
  return d;
}

struct DocumentStore {
  std::vector<ItemDocument> docs;
  std::size_t skipped = 0;
};

inline DocumentStore ingest_documents(std::istream& in) {
  DocumentStore store;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto d = parse_document_line(line);
    if (d) {
      store.docs.push_back(std::move(*d));
    } else {
      ++store.skipped;
    }
  }
  if (in.bad()) throw std::runtime_error("document source unreadable");
  return store;
}

inline DocumentStore ingest_documents_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open document file: " + path);
  return ingest_documents(in);
}

}  // namespace reclab
