#include "nsnh/common.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

#include <cstdlib>
#include <mutex>
#include <string>

#include "nsnh/log.hpp"

namespace nsnh {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NotOnBoundary: return "NotOnBoundary";
    case ErrorKind::SingularKKT: return "SingularKKT";
    case ErrorKind::ConstraintDriftExceeded: return "ConstraintDriftExceeded";
    case ErrorKind::ZenoSuspected: return "ZenoSuspected";
    case ErrorKind::TrivialRootOnly: return "TrivialRootOnly";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DegenerateContact: return "DegenerateContact";
    case ErrorKind::MissingGenerators: return "MissingGenerators";
    case ErrorKind::LayoutMismatch: return "LayoutMismatch";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::UnknownScenario: return "UnknownScenario";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "Unknown";
}

SimError::SimError(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

namespace log {

std::shared_ptr<spdlog::logger> get() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> logger;
  std::call_once(once, [] {
    logger = spdlog::stderr_color_mt("nsnh");
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("NONSMOOTH_NH_LOG")) {
      const std::string s(env);
      if (s == "error") level = spdlog::level::err;
      else if (s == "warn") level = spdlog::level::warn;
      else if (s == "info") level = spdlog::level::info;
      else if (s == "debug") level = spdlog::level::debug;
    }
    logger->set_level(level);
    logger->set_pattern("[%l] %v");
  });
  return logger;
}

}  // namespace log
}  // namespace nsnh
