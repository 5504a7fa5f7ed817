#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dejaboom/profiles.hpp"
#include "dejaboom/session.hpp"

namespace dejaboom {

enum class BusyPolicy { Queue, Reject };

struct ServiceConfig {
  std::filesystem::path data_dir;      // worlds/, rules/, prompts/
  std::filesystem::path sessions_dir;  // SessionStore directory
  // Root for {"path": ...} log references in analysis requests.
  std::filesystem::path log_root;
  // Designer walkthrough logs (source id, path) for G0.
  std::vector<std::pair<std::string, std::filesystem::path>> designer_logs;
  std::map<std::string, ProviderProfile> providers = default_provider_profiles();
  BusyPolicy busy = BusyPolicy::Queue;
  SessionOptions session_options;
  int retry_after_seconds = 5;
};

// Designer logs found in `dir`, sorted by file name, source id = stem.
std::vector<std::pair<std::string, std::filesystem::path>> designer_logs_in(const std::filesystem::path& dir);

// HTTP/JSON front end over sessions and the analysis pipeline.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Returns the bound port, or -1.
  int bind(const std::string& host, int port = 0);
  // Blocks until stop().
  void serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dejaboom
