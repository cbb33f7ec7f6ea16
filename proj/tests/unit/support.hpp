#pragma once

#include <doctest.h>

#include <functional>

#include "spineseg/error.hpp"

namespace support {

// Code of the spineseg::Error thrown by f; fails the test if none is thrown.
inline spineseg::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const spineseg::Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return spineseg::ErrorCode::kIo;
}

}  // namespace support
