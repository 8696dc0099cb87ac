#include "fingan/error.hpp"

#include <iostream>
#include <mutex>

#include "fingan/log.hpp"

namespace fingan {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnparseableNumeric: return "UnparseableNumeric";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::DegenerateClass: return "DegenerateClass";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptyMinority: return "EmptyMinority";
    case ErrorCode::InvalidOneHot: return "InvalidOneHot";
    case ErrorCode::NoDiscreteColumns: return "NoDiscreteColumns";
    case ErrorCode::SolverStall: return "SolverStall";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UndefinedMetric: return "UndefinedMetric";
    case ErrorCode::NotATree: return "NotATree";
    case ErrorCode::Serialization: return "Serialization";
  }
  return "Unknown";
}

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

LogSink& sink() {
  static LogSink s = [](std::string_view level, std::string_view message) {
    std::cerr << "fingan: " << level << ": " << message << '\n';
  };
  return s;
}

void emit(std::string_view level, const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(level, message);
}

}  // namespace

void set_log_sink(LogSink s) {
  std::lock_guard lock(sink_mutex());
  sink() = std::move(s);
}

void log_warning(const std::string& message) { emit("warning", message); }
void log_info(const std::string& message) { emit("info", message); }

}  // namespace fingan
