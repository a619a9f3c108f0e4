#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vecsynth {

/// Argument outside an operation's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Homogeneous divide by (near) zero in a projective map.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input field (attention mass, target luminance, region spread) is
/// degenerate for the requested computation.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// SVG or JSON input that the reader does not accept. `offset` is the
/// byte position in the source document, or npos when not applicable.
class ParseError : public std::runtime_error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit ParseError(const std::string& what, std::size_t offset = npos)
      : std::runtime_error(offset == npos ? what : what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Failure of a pluggable backend (layout generator, guidance source).
/// `stage` names the pipeline stage; `iteration` is 1-based, 0 if unused.
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& stage, const std::string& what, int iteration = 0)
      : std::runtime_error(stage + (iteration > 0 ? " (iteration " + std::to_string(iteration) + ")" : std::string()) +
                           ": " + what),
        stage_(stage),
        iteration_(iteration) {}

  const std::string& stage() const noexcept { return stage_; }
  int iteration() const noexcept { return iteration_; }

 private:
  std::string stage_;
  int iteration_;
};

}  // namespace vecsynth
