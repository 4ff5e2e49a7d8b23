#pragma once

#include <stdexcept>
#include <string>

namespace trajcraft {

// Contract violations on caller-supplied values. The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

class ShapeError : public ValidationError {
 public:
  explicit ShapeError(const std::string& what) : ValidationError("shape error: " + what) {}
};

class InvalidDepthError : public ValidationError {
 public:
  explicit InvalidDepthError(const std::string& what) : ValidationError("invalid depth: " + what) {}
};

class BehindCameraError : public ValidationError {
 public:
  explicit BehindCameraError(const std::string& what) : ValidationError("behind camera: " + what) {}
};

class OverlapError : public ValidationError {
 public:
  explicit OverlapError(const std::string& what) : ValidationError("overlap error: " + what) {}
};

// Malformed files on disk (bad manifest, truncated depth payload, ...). Exit code 2.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error("format error: " + what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error("i/o error: " + what) {}
};

}  // namespace trajcraft
