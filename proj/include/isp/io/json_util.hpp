#pragma once

#include <set>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace isp::io {

// Reads fields from a JSON object and rejects keys that were never asked for.
class StrictReader {
 public:
  StrictReader(const nlohmann::json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw std::invalid_argument(context_ + ": expected a JSON object");
  }

  template <class T>
  void get(const char* key, T& field) {
    known_.insert(key);
    if (!j_.contains(key)) return;
    try {
      field = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(context_ + "." + key + ": " + e.what());
    }
  }

  const nlohmann::json* sub(const char* key) {
    known_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!known_.count(key)) throw std::invalid_argument(context_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string context_;
  std::set<std::string> known_;
};

}  // namespace isp::io
