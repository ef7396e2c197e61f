#pragma once

#include <spdlog/spdlog.h>

#include <memory>

namespace nsnh::log {

/// Library logger. Level comes from NONSMOOTH_NH_LOG (error|warn|info|debug),
/// default warn. Output goes to stderr so it never mixes with artifacts.
std::shared_ptr<spdlog::logger> get();

template <typename Fmt, typename... Args>
void warn(const Fmt& fmt, Args&&... args) {
  auto& lg = *get();
  if (lg.should_log(spdlog::level::warn)) {
    lg.warn(fmt::format(fmt::runtime(fmt), std::forward<Args>(args)...));
  }
}

template <typename Fmt, typename... Args>
void info(const Fmt& fmt, Args&&... args) {
  auto& lg = *get();
  if (lg.should_log(spdlog::level::info)) {
    lg.info(fmt::format(fmt::runtime(fmt), std::forward<Args>(args)...));
  }
}

template <typename Fmt, typename... Args>
void debug(const Fmt& fmt, Args&&... args) {
  auto& lg = *get();
  if (lg.should_log(spdlog::level::debug)) {
    lg.debug(fmt::format(fmt::runtime(fmt), std::forward<Args>(args)...));
  }
}

}  // namespace nsnh::log
