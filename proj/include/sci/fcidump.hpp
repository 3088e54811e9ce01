// fcidump.hpp
//
// Molpro-style FCIDUMP reader and writer. Indices in the file are 1-based
// spatial orbitals; ORBSYM is read and ignored.
#ifndef SCI_FCIDUMP_HPP
#define SCI_FCIDUMP_HPP

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "sci/configuration.hpp"
#include "sci/integrals.hpp"

namespace sci {

class FcidumpError : public std::runtime_error {
 public:
  FcidumpError(std::size_t line, const std::string& what)
      : std::runtime_error("FCIDUMP line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct Fcidump {
  IntegralStore integrals;
  OrbitalSpace space;
};

Fcidump parse_fcidump(std::istream& in);
Fcidump read_fcidump(const std::string& path);

/// Writes every canonical integral with round-trip precision.
void write_fcidump(std::ostream& out, const IntegralStore& ints, const OrbitalSpace& space);

}  // namespace sci

#endif  // SCI_FCIDUMP_HPP
