#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "lfkit/adjudication.hpp"

namespace httplib {
class Server;
}

namespace lfkit {

// Exclusive marker `<log>.lock` held while a write session is open. The cleaner
// refuses to run while it exists.
class LogLock {
 public:
  static std::filesystem::path path_for(const std::filesystem::path& log);

  // Throws io_error when another session holds the lock.
  explicit LogLock(const std::filesystem::path& log);
  ~LogLock();
  LogLock(const LogLock&) = delete;
  LogLock& operator=(const LogLock&) = delete;

  static bool held(const std::filesystem::path& log);

 private:
  std::filesystem::path path_;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Queue state plus the decision log. Handlers are plain functions of their
// inputs so they can be exercised without a socket; serve() mounts them.
class AdjudicationService {
 public:
  AdjudicationService(std::vector<AdjudicationItem> items, DecisionLog log,
                      std::filesystem::path image_root = {}, std::filesystem::path static_dir = {});
  ~AdjudicationService();

  HttpResponse list_items(const std::map<std::string, std::string>& query) const;
  HttpResponse get_item(const std::string& item_id) const;
  HttpResponse post_decision(const std::string& item_id, const std::string& body);
  HttpResponse summary() const;
  HttpResponse image(const std::string& relative) const;
  HttpResponse static_file(const std::string& relative) const;

  // Binds host:port (port 0 picks a free one) and blocks until stop().
  void serve(const std::string& host, int port);
  // Binds first; returns the chosen port. Serving starts with run().
  int bind(const std::string& host, int port);
  void run();
  void wait_until_ready() const;
  void stop();

  std::string log_hash() const;

 private:
  void mount();

  std::vector<AdjudicationItem> items_;
  std::map<std::string, std::size_t> index_;
  DecisionLog log_;
  std::filesystem::path image_root_;
  std::filesystem::path static_dir_;
  mutable std::shared_mutex mutex_;
  std::unique_ptr<httplib::Server> server_;
};

std::string error_body(const std::string& error, const std::string& message);

}  // namespace lfkit
