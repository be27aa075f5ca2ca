#pragma once

#include <spdlog/sinks/base_sink.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <random>
#include <string>

namespace srh::testing {

/// Counts warnings emitted through the default logger while alive.
class WarningCounter {
  public:
    WarningCounter() {
        previous_ = spdlog::default_logger();
        sink_ = std::make_shared<Sink>();
        auto logger = std::make_shared<spdlog::logger>("capture", sink_);
        logger->set_level(spdlog::level::warn);
        spdlog::set_default_logger(logger);
    }
    ~WarningCounter() { spdlog::set_default_logger(previous_); }

    int count() const { return sink_->count.load(); }

  private:
    struct Sink : spdlog::sinks::base_sink<std::mutex> {
        std::atomic<int> count{0};

      protected:
        void sink_it_(const spdlog::details::log_msg &msg) override {
            if (msg.level >= spdlog::level::warn) {
                ++count;
            }
        }
        void flush_() override {}
    };

    std::shared_ptr<spdlog::logger> previous_;
    std::shared_ptr<Sink> sink_;
};

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string &stem) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (stem + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path &path() const { return path_; }

  private:
    std::filesystem::path path_;
};

} // namespace srh::testing
