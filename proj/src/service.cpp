#include "lfkit/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fmt/format.h>

#include <mutex>

#include "httplib.h"
#include "json.hpp"
#include "lfkit/dataset_io.hpp"

namespace lfkit {

using nlohmann::json;
using nlohmann::ordered_json;

std::filesystem::path LogLock::path_for(const std::filesystem::path& log) {
  auto p = log;
  p += ".lock";
  return p;
}

LogLock::LogLock(const std::filesystem::path& log) : path_(path_for(log)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
  if (fd < 0) {
    throw Error(ErrorKind::io_error,
                fmt::format("decision log {} is locked by another session ({})", log.string(),
                            path_.string()));
  }
  const auto pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

LogLock::~LogLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

bool LogLock::held(const std::filesystem::path& log) {
  return std::filesystem::exists(path_for(log));
}

std::string error_body(const std::string& error, const std::string& message) {
  ordered_json j;
  j["error"] = error;
  j["message"] = message;
  return j.dump();
}

namespace {

HttpResponse json_response(int status, const ordered_json& j) { return {status, j.dump(), "application/json"}; }

HttpResponse error_response(int status, const std::string& error, const std::string& message) {
  return {status, error_body(error, message), "application/json"};
}

bool safe_relative(const std::string& rel) {
  if (rel.empty() || rel.front() == '/') return false;
  for (const auto& part : std::filesystem::path(rel)) {
    if (part == "..") return false;
  }
  return true;
}

std::string content_type_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".pgm" || ext == ".ppm") return "image/x-portable-anymap";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

HttpResponse serve_file(const std::filesystem::path& root, const std::string& rel) {
  if (root.empty()) return error_response(404, "not_found", "no directory configured");
  if (!safe_relative(rel)) return error_response(404, "not_found", "bad path");
  const auto path = root / rel;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return error_response(404, "not_found", rel);
  return {200, read_file(path), content_type_for(path)};
}

}  // namespace

AdjudicationService::AdjudicationService(std::vector<AdjudicationItem> items, DecisionLog log,
                                         std::filesystem::path image_root,
                                         std::filesystem::path static_dir)
    : items_(std::move(items)),
      log_(std::move(log)),
      image_root_(std::move(image_root)),
      static_dir_(std::move(static_dir)) {
  for (std::size_t i = 0; i < items_.size(); ++i) index_[items_[i].item_id] = i;
  apply_decisions(items_, log_);
}

AdjudicationService::~AdjudicationService() = default;

HttpResponse AdjudicationService::list_items(const std::map<std::string, std::string>& query) const {
  std::shared_lock lock(mutex_);
  auto get = [&](const char* key) -> std::optional<std::string> {
    const auto it = query.find(key);
    if (it == query.end() || it->second.empty()) return std::nullopt;
    return it->second;
  };
  const auto status = get("status");
  if (status && *status != "pending" && *status != "decided" && *status != "all") {
    return error_response(422, "invalid_query", "status must be pending, decided or all");
  }
  const auto kind_text = get("kind");
  std::optional<ItemKind> kind;
  if (kind_text) {
    kind = parse_item_kind(*kind_text);
    if (!kind) return error_response(422, "invalid_query", "unknown kind " + *kind_text);
  }
  std::size_t page = 1, page_size = 50;
  try {
    if (auto p = get("page")) page = std::stoul(*p);
    if (auto p = get("page_size")) page_size = std::stoul(*p);
  } catch (const std::exception&) {
    return error_response(422, "invalid_query", "page and page_size must be positive integers");
  }
  if (page == 0 || page_size == 0 || page_size > 1000) {
    return error_response(422, "invalid_query", "page >= 1 and 1 <= page_size <= 1000");
  }
  std::vector<const AdjudicationItem*> matched;
  for (const auto& item : items_) {
    if (status && *status != "all" && to_string(item.status) != *status) continue;
    if (kind && item.kind != *kind) continue;
    matched.push_back(&item);
  }
  ordered_json j;
  ordered_json arr = ordered_json::array();
  const std::size_t begin = (page - 1) * page_size;
  for (std::size_t i = begin; i < matched.size() && i < begin + page_size; ++i) {
    arr.push_back(item_to_json(*matched[i], false));
  }
  j["items"] = std::move(arr);
  j["total"] = matched.size();
  j["page"] = page;
  j["page_size"] = page_size;
  j["pages"] = (matched.size() + page_size - 1) / page_size;
  return json_response(200, j);
}

HttpResponse AdjudicationService::get_item(const std::string& item_id) const {
  std::shared_lock lock(mutex_);
  const auto it = index_.find(item_id);
  if (it == index_.end()) return error_response(404, "not_found", "unknown item " + item_id);
  return json_response(200, item_to_json(items_[it->second], true));
}

HttpResponse AdjudicationService::post_decision(const std::string& item_id, const std::string& body) {
  std::unique_lock lock(mutex_);
  const auto it = index_.find(item_id);
  if (it == index_.end()) return error_response(404, "not_found", "unknown item " + item_id);
  auto& item = items_[it->second];
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("decision") || !j.at("decision").is_string()) {
    return error_response(400, "bad_request", "body must be an object with a string decision");
  }
  const auto decision = j.at("decision").get<std::string>();
  const bool override_flag = j.contains("override") && j.at("override").is_boolean() && j.at("override").get<bool>();
  const std::string annotator =
      j.contains("annotator") && j.at("annotator").is_string() ? j.at("annotator").get<std::string>() : "";
  if (!is_allowed(item, decision)) {
    ordered_json e;
    e["error"] = "invalid_decision";
    e["message"] = fmt::format("{} is not a valid {} decision", decision, to_string(item.kind));
    e["allowed_values"] = allowed_values(item);
    return json_response(422, e);
  }
  if (item.status == ItemStatus::decided && !override_flag) {
    ordered_json e;
    e["error"] = "already_decided";
    e["message"] = "item is decided; resend with override to replace the decision";
    e["decision"] = item.decision ? json(*item.decision) : json(nullptr);
    return json_response(409, e);
  }
  DecisionEntry entry{item_id, decision, utc_timestamp_now(), annotator, override_flag};
  try {
    log_.append(entry);
  } catch (const Error& err) {
    return error_response(500, "io_error", err.what());
  }
  item.status = ItemStatus::decided;
  item.decision = decision;
  item.decided_at = entry.timestamp;
  item.decided_by = annotator;
  return json_response(200, item_to_json(item, true));
}

HttpResponse AdjudicationService::summary() const {
  std::shared_lock lock(mutex_);
  ordered_json by_kind;
  for (auto k : {ItemKind::race_no_majority, ItemKind::gender_tie, ItemKind::dob_review}) {
    by_kind[std::string(to_string(k))] = {{"pending", 0}, {"decided", 0}};
  }
  std::size_t pending = 0, decided = 0;
  for (const auto& item : items_) {
    auto& slot = by_kind[std::string(to_string(item.kind))][std::string(to_string(item.status))];
    slot = slot.get<std::size_t>() + 1;
    (item.status == ItemStatus::pending ? pending : decided) += 1;
  }
  ordered_json j;
  j["total"] = items_.size();
  j["pending"] = pending;
  j["decided"] = decided;
  j["by_kind"] = by_kind;
  j["log_entries"] = log_.entries().size();
  j["log_hash"] = log_.hash();
  return json_response(200, j);
}

HttpResponse AdjudicationService::image(const std::string& relative) const {
  return serve_file(image_root_, relative);
}

HttpResponse AdjudicationService::static_file(const std::string& relative) const {
  return serve_file(static_dir_, relative.empty() ? "index.html" : relative);
}

std::string AdjudicationService::log_hash() const {
  std::shared_lock lock(mutex_);
  return log_.hash();
}

void AdjudicationService::mount() {
  server_ = std::make_unique<httplib::Server>();
  auto& s = *server_;
  auto reply = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  s.Get("/items", [this, reply](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> q;
    for (const auto& [k, v] : req.params) q[k] = v;
    reply(res, list_items(q));
  });
  s.Get(R"(/items/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_item(req.matches[1]));
  });
  s.Post(R"(/items/([^/]+)/decision)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, post_decision(req.matches[1], req.body));
  });
  s.Get("/summary", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, summary()); });
  s.Get(R"(/images/(.+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, image(req.matches[1]));
  });
  s.Get(R"(/(.*))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, static_file(req.matches[1]));
  });
}

int AdjudicationService::bind(const std::string& host, int port) {
  mount();
  if (port == 0) {
    const int chosen = server_->bind_to_any_port(host);
    if (chosen < 0) throw Error(ErrorKind::io_error, "cannot bind " + host);
    return chosen;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error(ErrorKind::io_error, fmt::format("cannot bind {}:{}", host, port));
  }
  return port;
}

void AdjudicationService::run() {
  if (!server_) throw Error(ErrorKind::config_error, "service is not bound");
  server_->listen_after_bind();
}

void AdjudicationService::wait_until_ready() const {
  if (server_) server_->wait_until_ready();
}

void AdjudicationService::serve(const std::string& host, int port) {
  bind(host, port);
  run();
}

void AdjudicationService::stop() {
  if (server_) server_->stop();
}

}  // namespace lfkit
