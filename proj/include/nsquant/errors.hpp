#pragma once

#include <stdexcept>
#include <string>

namespace nsquant {

// Operational failures (bad data windows, impossible designs). The CLI maps
// these to exit code 3; input/parsing problems are reported separately.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

class empty_window_error : public numerical_error {
 public:
  explicit empty_window_error(const std::string& what) : numerical_error(what) {}
};

class window_too_small_error : public numerical_error {
 public:
  explicit window_too_small_error(const std::string& what) : numerical_error(what) {}
};

class degenerate_basis_error : public numerical_error {
 public:
  explicit degenerate_basis_error(const std::string& what) : numerical_error(what) {}
};

}  // namespace nsquant
