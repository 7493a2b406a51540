#pragma once

#include <charconv>
#include <string>
#include <system_error>

#include "fusereg/errors.hpp"

namespace fusereg {

// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw numeric_error("format_double: conversion failed");
  return std::string(buf, p);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw data_error(context + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace fusereg
