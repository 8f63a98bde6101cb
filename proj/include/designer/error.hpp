#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace designer {

enum class ErrorCode {
  malformed_field,
  invalid_argument,
  provider_unavailable,
  content_refusal,
  budget_exceeded,
  dimension_mismatch,
  zero_vector,
  empty_index,
  unparseable_score,
  unparseable_classifier_output,
  unscored_document,
  no_mermaid_block,
  invalid_mermaid,
  parse_failure,
  id_out_of_range,
  empty_response,
  missing_embedding,
  missing_input_store,
  config_mismatch,
  io_error,
  injected_kill,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::malformed_field: return "malformed-field";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::provider_unavailable: return "provider-unavailable";
    case ErrorCode::content_refusal: return "content-refusal";
    case ErrorCode::budget_exceeded: return "budget-exceeded";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::zero_vector: return "zero-vector";
    case ErrorCode::empty_index: return "empty-index";
    case ErrorCode::unparseable_score: return "unparseable-score";
    case ErrorCode::unparseable_classifier_output: return "unparseable-classifier-output";
    case ErrorCode::unscored_document: return "unscored-document";
    case ErrorCode::no_mermaid_block: return "no-mermaid-block";
    case ErrorCode::invalid_mermaid: return "invalid-mermaid";
    case ErrorCode::parse_failure: return "parse-failure";
    case ErrorCode::id_out_of_range: return "id-out-of-range";
    case ErrorCode::empty_response: return "empty-response";
    case ErrorCode::missing_embedding: return "missing-embedding";
    case ErrorCode::missing_input_store: return "missing-input-store";
    case ErrorCode::config_mismatch: return "config-mismatch";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::injected_kill: return "injected-kill";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
/// `raw` keeps the offending LLM completion (if any) so callers can
/// quarantine it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string raw = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        raw_(std::move(raw)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& raw() const noexcept { return raw_; }

 private:
  ErrorCode code_;
  std::string raw_;
};

}  // namespace designer
