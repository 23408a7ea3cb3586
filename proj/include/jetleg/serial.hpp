#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "jetleg/errors.hpp"

namespace jetleg::serial {

// Little-endian binary stream helpers. All numeric payloads are written as
// raw 64-bit IEEE doubles / fixed-width integers so that save -> load is
// bit-exact on the platforms we target.

class Writer {
 public:
  explicit Writer(const std::string& path)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open for writing: " + path);
  }

  void u8(uint8_t v) { raw(&v, 1); }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
  void i64(int64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }

  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void vec(const Eigen::VectorXd& v) {
    u64(static_cast<uint64_t>(v.size()));
    raw(v.data(), sizeof(double) * v.size());
  }
  void mat(const Eigen::MatrixXd& m) {
    u64(static_cast<uint64_t>(m.rows()));
    u64(static_cast<uint64_t>(m.cols()));
    raw(m.data(), sizeof(double) * m.size());
  }

  void raw(const void* p, size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw Error("write failure");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw CorruptFile("cannot open for reading: " + path);
  }

  uint8_t u8() { uint8_t v; raw(&v, 1); return v; }
  uint32_t u32() { uint32_t v; raw(&v, 4); return v; }
  uint64_t u64() { uint64_t v; raw(&v, 8); return v; }
  int64_t i64() { int64_t v; raw(&v, 8); return v; }
  double f64() { double v; raw(&v, 8); return v; }

  std::string str() {
    const uint64_t n = u64();
    if (n > (1ull << 30)) throw CorruptFile("string length out of range");
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  Eigen::VectorXd vec() {
    const uint64_t n = u64();
    if (n > (1ull << 28)) throw CorruptFile("vector length out of range");
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    raw(v.data(), sizeof(double) * n);
    return v;
  }
  Eigen::MatrixXd mat() {
    const uint64_t r = u64(), c = u64();
    if (r > (1u << 20) || c > (1u << 20)) throw CorruptFile("matrix shape out of range");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    raw(m.data(), sizeof(double) * m.size());
    return m;
  }

  void raw(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) throw CorruptFile("truncated file");
  }

  bool at_eof() {
    return in_.peek() == std::char_traits<char>::eof();
  }

 private:
  std::ifstream in_;
};

}  // namespace jetleg::serial
