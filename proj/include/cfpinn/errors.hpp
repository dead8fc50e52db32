#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cfpinn {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An input variable reachable from an evaluated node has no binding.
class UnboundVariable : public Error {
  public:
    explicit UnboundVariable(std::uint32_t node)
        : Error("unbound input variable at node " + std::to_string(node)), node_{node}
    {}
    [[nodiscard]] auto node() const noexcept -> std::uint32_t { return node_; }

  private:
    std::uint32_t node_;
};

/// An operand fell outside the domain of a primitive (log of a non-positive
/// value, division by zero, ...).
class DomainError : public Error {
  public:
    DomainError(std::uint32_t node, std::string const& what)
        : Error("domain error at node " + std::to_string(node) + ": " + what), node_{node}
    {}
    [[nodiscard]] auto node() const noexcept -> std::uint32_t { return node_; }

  private:
    std::uint32_t node_;
};

class NotAVariable : public Error {
  public:
    using Error::Error;
};

/// A NodeRef was used with a graph other than the one that produced it, or
/// points past the end of the graph.
class InvalidNode : public Error {
  public:
    using Error::Error;
};

class ShapeMismatch : public Error {
  public:
    using Error::Error;
};

class LengthMismatch : public Error {
  public:
    using Error::Error;
};

class EmptyInput : public Error {
  public:
    using Error::Error;
};

class ZeroReference : public Error {
  public:
    using Error::Error;
};

class MissingTargets : public Error {
  public:
    using Error::Error;
};

class NonFiniteGradient : public Error {
  public:
    using Error::Error;
};

class NonFiniteObjective : public Error {
  public:
    using Error::Error;
};

class InvalidConfig : public Error {
  public:
    using Error::Error;
};

class SchemaVersionMismatch : public Error {
  public:
    using Error::Error;
};

class CorruptFile : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace cfpinn
