#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fbias {

// p == ell was passed where an unramified prime is required.
class RamifiedPrime : public std::domain_error {
 public:
  explicit RamifiedPrime(std::uint64_t p)
      : std::domain_error("prime " + std::to_string(p) +
                          " is ramified (p == ell); its Euler factor is 1"),
        prime_(p) {}
  std::uint64_t prime() const noexcept { return prime_; }

 private:
  std::uint64_t prime_;
};

// A residue-field table larger than the configured cap was requested.
class TableCapExceeded : public std::runtime_error {
 public:
  TableCapExceeded(std::uint64_t required, std::uint64_t cap)
      : std::runtime_error("residue field table needs " + std::to_string(required) +
                           " entries but the cap is " + std::to_string(cap) +
                           "; raise the cap (--table-cap) or lower --x-max"),
        required_(required),
        cap_(cap) {}
  std::uint64_t required() const noexcept { return required_; }
  std::uint64_t cap() const noexcept { return cap_; }

 private:
  std::uint64_t required_;
  std::uint64_t cap_;
};

// An exact identity that must hold by construction failed.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace fbias
