#pragma once

#include <stdexcept>
#include <string>

namespace tcr {

enum class ErrorKind {
  invalid_argument,
  dimension,
  degenerate_vector,
  degenerate_input,
  domain,
  config,
  capacity,
  empty_input,
  missing_embedding,
  format,
  io,
  remote_embed,
  protocol,
  provider,
  generator_unavailable,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define TCR_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message) : Error(Kind, message) {} \
  }

TCR_DEFINE_ERROR(InvalidArgumentError, ErrorKind::invalid_argument);
TCR_DEFINE_ERROR(DimensionError, ErrorKind::dimension);
TCR_DEFINE_ERROR(DegenerateVectorError, ErrorKind::degenerate_vector);
TCR_DEFINE_ERROR(DegenerateInputError, ErrorKind::degenerate_input);
TCR_DEFINE_ERROR(DomainError, ErrorKind::domain);
TCR_DEFINE_ERROR(ConfigError, ErrorKind::config);
TCR_DEFINE_ERROR(CapacityError, ErrorKind::capacity);
TCR_DEFINE_ERROR(EmptyInputError, ErrorKind::empty_input);
TCR_DEFINE_ERROR(MissingEmbeddingError, ErrorKind::missing_embedding);
TCR_DEFINE_ERROR(FormatError, ErrorKind::format);
TCR_DEFINE_ERROR(IoError, ErrorKind::io);
TCR_DEFINE_ERROR(ProtocolError, ErrorKind::protocol);
TCR_DEFINE_ERROR(ProviderError, ErrorKind::provider);
TCR_DEFINE_ERROR(GeneratorUnavailableError, ErrorKind::generator_unavailable);

#undef TCR_DEFINE_ERROR

// status is the HTTP status, or 0 when no response was received
class RemoteEmbedError : public Error {
 public:
  RemoteEmbedError(int status, const std::string& message)
      : Error(ErrorKind::remote_embed, message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace tcr
