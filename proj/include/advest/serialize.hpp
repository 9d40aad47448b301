#pragma once

#include <cstdint>
#include <cstring>
#include <deque>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace advest {

/// Little-endian binary writer for checkpoints. Doubles are stored bit-exact.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void i64(std::int64_t v) { raw(&v, sizeof v); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void vec_f64(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void vec_i64(const std::vector<std::int64_t>& v) {
    u64(v.size());
    for (std::int64_t x : v) i64(x);
  }
  void deque_f64(const std::deque<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void deque_u8(const std::deque<char>& v) {
    u64(v.size());
    for (char x : v) u8(static_cast<std::uint8_t>(x));
  }
  void raw(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data),
               static_cast<std::streamsize>(n));
    if (!out_) throw std::runtime_error("checkpoint write failed");
  }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string str() {
    std::string s(checked_size(), '\0');
    raw(s.data(), s.size());
    return s;
  }
  std::vector<double> vec_f64() {
    std::vector<double> v(checked_size());
    for (double& x : v) x = f64();
    return v;
  }
  std::vector<std::int64_t> vec_i64() {
    std::vector<std::int64_t> v(checked_size());
    for (std::int64_t& x : v) x = i64();
    return v;
  }
  std::deque<double> deque_f64() {
    std::deque<double> v(checked_size());
    for (double& x : v) x = f64();
    return v;
  }
  std::deque<char> deque_u8() {
    std::deque<char> v(checked_size());
    for (char& x : v) x = static_cast<char>(u8());
    return v;
  }
  void raw(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw std::runtime_error("checkpoint truncated or corrupt");
  }

 private:
  std::size_t checked_size() {
    const std::uint64_t n = u64();
    if (n > (std::uint64_t{1} << 32))
      throw std::runtime_error("checkpoint field size implausible");
    return static_cast<std::size_t>(n);
  }
  std::istream& in_;
};

}  // namespace advest
