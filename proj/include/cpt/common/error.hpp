// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace cpt {

// Base for every error raised by the library. Subsystems derive from it so
// callers can catch broadly or narrowly.
class Error : public std::runtime_error
{
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data: bad geometry, inconsistent buffers, invalid layouts.
class StructuralError : public Error
{
 public:
  using Error::Error;
};

} // namespace cpt
